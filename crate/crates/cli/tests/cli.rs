use std::process::{Command, Output};

fn tracekit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tracekit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn records(o: &Output) -> (csv::StringRecord, Vec<csv::StringRecord>) {
    let text = stdout(o);
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().clone();
    (header, r.records().map(|x| x.unwrap()).collect())
}

fn field(header: &csv::StringRecord, row: &csv::StringRecord, name: &str) -> String {
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    row[i].to_string()
}

#[test]
fn estimate_orthogonal_full_rank_is_exact() {
    let o = tracekit(&["estimate", "--matrix", "identity:8", "--estimator", "orthogonal", "--k", "8", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (h, rows) = records(&o);
    assert_eq!(field(&h, &rows[0], "value"), "8.0");
    assert!(stderr(&o).contains("8.0"));
}

#[test]
fn bench_variance_gaussian_spike() {
    let o = tracekit(&[
        "bench-variance", "--matrix", "diag-spike:16", "--estimator", "gaussian", "--k", "1", "--trials", "1000000",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (h, rows) = records(&o);
    assert_eq!(rows.len(), 1);
    let var: f64 = field(&h, &rows[0], "variance").parse().unwrap();
    assert!((1.9..=2.1).contains(&var), "{var}");
    let cols: Vec<&str> = h.iter().collect();
    assert_eq!(
        cols,
        ["estimator_id", "matrix_id", "n", "k", "trials", "seed", "mean", "variance", "stderr_mean", "stderr_var", "success_rate", "epsilon"]
    );
}

#[test]
fn game_without_queries_is_a_coin_flip() {
    let o = tracekit(&["game", "--game", "6", "--epsilon", "0.2", "--n", "10000", "--k", "0", "--trials", "10000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (h, rows) = records(&o);
    let cols: Vec<&str> = h.iter().collect();
    assert_eq!(
        cols,
        ["game", "n", "k", "epsilon", "delta", "trials", "success_rate", "stderr", "analytic_ceiling", "seed"]
    );
    let rate: f64 = field(&h, &rows[0], "success_rate").parse().unwrap();
    assert!((rate - 0.5).abs() <= 0.02, "{rate}");
}

#[test]
fn validation_failures_exit_2_with_named_constraints() {
    let o = tracekit(&["estimate", "--matrix", "identity:8", "--estimator", "orthogonal", "--k", "9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("k ≤ n required"));
    let o = tracekit(&["game", "--epsilon", "0.5", "--k", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("epsilon ∈ (0, 1/3)"));
    let o = tracekit(&["estimate", "--matrix", "identity:4", "--estimator", "sobol", "--k", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown estimator `sobol`"));
    let o = tracekit(&["estimate", "--matrix", "triangle:4", "--estimator", "gaussian", "--k", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("triangle:4"));
    let o = tracekit(&["estimate", "--matrix", "identity:4", "--k", "1", "--out", "/no/such/dir/r.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("does not exist"));
    let o = tracekit(&["game", "--k", "20", "--n", "10", "--trials", "10"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("k ≤ n required") && e.contains("trials"), "{e}");
    let o = tracekit(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_3() {
    let o = tracekit(&["estimate", "--matrix", "identity:4", "--k", "1", "--out", "/dev/full"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("/dev/full"));
}

#[test]
fn output_is_independent_of_worker_count() {
    for args in [
        &["bench-variance", "--matrix", "family:8", "--estimator", "sym:orthogonal", "--k", "3", "--trials", "3000"][..],
        &["game", "--epsilon", "0.1", "--k", "12", "--trials", "4000", "--distinguisher", "all"][..],
        &["game", "--game", "5", "--epsilon", "0.2", "--n", "50", "--k", "4", "--trials", "2000"][..],
        &["haar-check", "--n", "6", "--trials", "500"][..],
    ] {
        let one = tracekit(&[args, &["--workers", "1"]].concat());
        let four = tracekit(&[args, &["--workers", "4"]].concat());
        let again = tracekit(&[args, &["--workers", "1"]].concat());
        assert_eq!(one.status.code(), Some(0), "{}", stderr(&one));
        assert_eq!(one.stdout, four.stdout, "{args:?}");
        assert_eq!(one.stdout, again.stdout, "{args:?}");
    }
}

#[test]
fn sweep_rows_reproduce_in_isolation() {
    let o = tracekit(&["sweep", "--epsilon", "0.1,0.2", "--k", "3", "--n", "500", "--trials", "2000", "--delta", "0.1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("analytic k*"));
    let (h, rows) = records(&o);
    assert_eq!(rows.len(), 6);
    let order: Vec<(String, String)> = rows.iter().map(|r| (field(&h, r, "epsilon"), field(&h, r, "k"))).collect();
    assert_eq!(order[0], ("0.1".into(), "1".into()));
    assert_eq!(order[5], ("0.2".into(), "3".into()));
    let single = tracekit(&["game", "--epsilon", "0.2", "--k", "2", "--n", "500", "--trials", "2000", "--delta", "0.1"]);
    let (_, one) = records(&single);
    assert_eq!(one[0], rows[4]);
}

#[test]
fn family_rows_reproduce_in_isolation() {
    let fam = tracekit(&["bench-variance", "--matrix", "family:6", "--estimator", "rademacher", "--k", "2", "--trials", "500", "--seed", "11"]);
    assert_eq!(fam.status.code(), Some(0), "{}", stderr(&fam));
    let (h, rows) = records(&fam);
    assert_eq!(rows.len(), 7);
    for row in &rows {
        let id = field(&h, row, "matrix_id");
        let solo = tracekit(&["bench-variance", "--matrix", &id, "--estimator", "rademacher", "--k", "2", "--trials", "500", "--seed", "11"]);
        let (_, r) = records(&solo);
        assert_eq!(&r[0], row, "{id}");
    }
}

#[test]
fn config_file_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"command": "bench-epsdelta", "matrix_spec": "diag-flat:9", "estimator_spec": "unit", "k": 3, "trials": 2000, "epsilon": 0.5, "seed": 5}"#,
    )
    .unwrap();
    let out = dir.path().join("r.json");
    let from_file = tracekit(&["bench-epsdelta", "--config", cfg.to_str().unwrap(), "--format", "json", "--out", out.to_str().unwrap()]);
    assert_eq!(from_file.status.code(), Some(0), "{}", stderr(&from_file));
    assert!(from_file.stdout.is_empty());
    let flags = tracekit(&[
        "bench-epsdelta", "--matrix", "diag-flat:9", "--estimator", "unit", "--k", "3", "--trials", "2000", "--epsilon", "0.5",
        "--seed", "5", "--format", "json",
    ]);
    assert_eq!(std::fs::read(&out).unwrap(), flags.stdout);
    let v: serde_json::Value = serde_json::from_slice(&flags.stdout).unwrap();
    let rate = v[0]["success_rate"].as_f64().unwrap();
    assert!(rate > 0.0 && rate <= 1.0);
    assert_eq!(v[0]["epsilon"].as_f64(), Some(0.5));
}

#[test]
fn configured_estimator_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mix.json");
    std::fs::write(
        &path,
        r#"{"n": 4, "branches": [{"probability": 1.0, "angles": [1.5707963267948966], "weights": [2.0, 2.0]}]}"#,
    )
    .unwrap();
    let spec = format!("configured:{}", path.display());
    let o = tracekit(&["bench-variance", "--matrix", "diag-spike:4", "--estimator", &spec, "--trials", "5000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (h, rows) = records(&o);
    let mean: f64 = field(&h, &rows[0], "mean").parse().unwrap();
    assert!((mean - 1.0).abs() < 0.1, "{mean}");
    let o = tracekit(&["bench-variance", "--matrix", "diag-spike:5", "--estimator", &spec, "--trials", "100"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn haar_check_reports_orthogonality() {
    let o = tracekit(&["haar-check", "--n", "10", "--trials", "3000", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v[0]["max_orthogonality_defect"].as_f64().unwrap() < 1e-12);
    assert!(v[0]["ks_p_value"].as_f64().unwrap() > 0.001);
    assert!(v[0]["trace_mean"].as_f64().unwrap().abs() < 0.1);
}
