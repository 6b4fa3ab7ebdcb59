#![allow(dead_code)]

/// Composite Simpson rule with `m` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let m = m + m % 2;
    let h = (b - a) / m as f64;
    let mut acc = f(a) + f(b);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

pub fn normal_pdf(x: f64, var: f64) -> f64 {
    (-(x * x) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// Variance of `(n/k)Σ yᵢᵀAyᵢ` over `k` Haar-orthogonal unit vectors, from the
/// second and mixed fourth moments of Haar columns:
/// `E[(yᵀAy)²] = (tr² + 2‖A‖²)/(n(n+2))`,
/// `E[(y₁ᵀAy₁)(y₂ᵀAy₂)] = ((n+1)tr² − 2‖A‖²)/((n−1)n(n+2))`.
pub fn orthogonal_variance(trace: f64, fro2: f64, n: usize, k: usize) -> f64 {
    let nf = n as f64;
    let kf = k as f64;
    let single = (trace * trace + 2.0 * fro2) / (nf * (nf + 2.0));
    let mixed = if n > 1 {
        ((nf + 1.0) * trace * trace - 2.0 * fro2) / ((nf - 1.0) * nf * (nf + 2.0))
    } else {
        0.0
    };
    let w = nf / kf;
    w * w * (kf * single + kf * (kf - 1.0) * mixed) - trace * trace
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn sample_variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}
