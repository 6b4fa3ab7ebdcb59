//! Seeded generation of every random object the estimators and games use.
//!
//! All randomness flows through [`RandomSource`], a ChaCha8 stream addressed
//! by `(seed, stream_id)`. Parallel trial runners derive one child stream per
//! trial index, so results never depend on how trials are scheduled.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::dense::{axpy, dot, norm, OrthogonalMatrix, SquareMatrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Deterministic random stream identified by `(seed, stream_id)`.
///
/// Not shareable between workers; each worker derives its own stream.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RandomSource {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RandomSource {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn provenance(&self) -> (u64, u64) {
        (self.seed, self.stream_id)
    }

    /// Child stream for trial `index`, a pure function of `(seed, stream_id, index)`.
    pub fn derive(&self, index: u64) -> RandomSource {
        let child_seed = splitmix64(self.seed ^ splitmix64(self.stream_id ^ 0xA5A5_5A5A_DEAD_BEEF));
        RandomSource::new(child_seed, index)
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        // 53 random mantissa bits
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn coin(&mut self) -> bool {
        self.rng.next_u32() & 1 == 1
    }

    pub fn chi_squared(&mut self, dof: f64) -> f64 {
        ChiSquared::new(dof)
            .expect("positive degrees of freedom")
            .sample(&mut self.rng)
    }
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// `k` unit query vectors, optionally tagged with their pairwise angles
/// (upper triangle, row-major: `θ₁₂, θ₁₃, …, θ₂₃, …`).
#[derive(Debug, Clone, PartialEq)]
pub struct QueryTuple<T> {
    pub vectors: Vec<Vec<T>>,
    pub pairwise_angles: Option<Vec<T>>,
}

impl<T: Scalar> QueryTuple<T> {
    pub fn k(&self) -> usize {
        self.vectors.len()
    }

    pub fn max_norm_defect(&self) -> T {
        self.vectors
            .iter()
            .map(|v| (norm(v) - T::one()).abs())
            .fold(T::zero(), T::max)
    }

    /// `max_{i<j} |⟨yᵢ, yⱼ⟩|`
    pub fn max_cross_product(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.vectors.len() {
            for j in (i + 1)..self.vectors.len() {
                worst = worst.max(dot(&self.vectors[i], &self.vectors[j]).abs());
            }
        }
        worst
    }
}

fn require_dim(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n", "dimension must be at least 1"));
    }
    Ok(())
}

pub fn rademacher_vector<T: Scalar>(n: usize, rng: &mut RandomSource) -> Result<Vec<T>> {
    require_dim(n)?;
    Ok(fill_rademacher(n, rng))
}

pub(crate) fn fill_rademacher<T: Scalar>(n: usize, rng: &mut RandomSource) -> Vec<T> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let bits = rng.next_u64();
        for b in 0..64.min(n - out.len()) {
            out.push(if (bits >> b) & 1 == 1 { T::one() } else { -T::one() });
        }
    }
    out
}

pub fn gaussian_vector<T: Scalar>(n: usize, variance: T, rng: &mut RandomSource) -> Result<Vec<T>> {
    require_dim(n)?;
    if !(variance > T::zero()) {
        return Err(Error::invalid("variance", "must be positive"));
    }
    let sd = variance.sqrt();
    Ok((0..n).map(|_| sd * T::of(rng.standard_normal())).collect())
}

pub(crate) fn standard_gaussian<T: Scalar>(n: usize, rng: &mut RandomSource) -> Vec<T> {
    (0..n).map(|_| T::of(rng.standard_normal())).collect()
}

pub fn uniform_unit_vector<T: Scalar>(n: usize, rng: &mut RandomSource) -> Result<Vec<T>> {
    require_dim(n)?;
    loop {
        let mut g: Vec<T> = standard_gaussian(n, rng);
        let len = norm(&g);
        if len > T::pivot_floor() {
            g.iter_mut().for_each(|x| *x = *x / len);
            return Ok(g);
        }
    }
}

/// Orthogonalizes `v` against the unit rows in `basis`, twice, and normalizes.
/// Returns `None` when the residual falls below the degenerate-pivot floor.
fn orthonormalize_against<T: Scalar>(mut v: Vec<T>, basis: &[Vec<T>]) -> Option<Vec<T>> {
    for _ in 0..2 {
        for b in basis {
            let c = dot(&v, b);
            axpy(-c, b, &mut v);
        }
    }
    let len = norm(&v);
    if !(len > T::pivot_floor()) {
        return None;
    }
    v.iter_mut().for_each(|x| *x = *x / len);
    Some(v)
}

/// `k` random orthogonal unit vectors: the rows of a Gaussian `k × n` matrix
/// after Gram-Schmidt with re-orthogonalization. Degenerate rows are redrawn.
pub fn orthogonal_tuple<T: Scalar>(n: usize, k: usize, rng: &mut RandomSource) -> Result<QueryTuple<T>> {
    require_dim(n)?;
    if k == 0 || k > n {
        return Err(Error::invalid("k", format!("need 1 ≤ k ≤ n, got k = {k}, n = {n}")));
    }
    let mut rows: Vec<Vec<T>> = Vec::with_capacity(k);
    while rows.len() < k {
        let g = standard_gaussian(n, rng);
        if let Some(y) = orthonormalize_against(g, &rows) {
            rows.push(y);
        }
    }
    Ok(QueryTuple {
        vectors: rows,
        pairwise_angles: None,
    })
}

/// Haar-distributed `n × n` orthogonal matrix (rows of a full orthogonal tuple).
pub fn haar_orthogonal_matrix<T: Scalar>(n: usize, rng: &mut RandomSource) -> Result<OrthogonalMatrix<T>> {
    let tuple = orthogonal_tuple(n, n, rng)?;
    Ok(OrthogonalMatrix::from_trusted(SquareMatrix::from_rows(
        &tuple.vectors,
    )?))
}

/// Two unit vectors at angle `theta`: `(y₁, y₁ cos θ + y₂ sin θ)` for a random orthonormal pair.
pub fn angled_pair<T: Scalar>(n: usize, theta: T, rng: &mut RandomSource) -> Result<(Vec<T>, Vec<T>)> {
    if n < 2 {
        return Err(Error::invalid("n", "an angled pair needs n ≥ 2"));
    }
    let mut tuple = orthogonal_tuple::<T>(n, 2, rng)?;
    let y2 = tuple.vectors.pop().unwrap();
    let y1 = tuple.vectors.pop().unwrap();
    let (s, c) = theta.sin_cos();
    let mut x2: Vec<T> = y1.iter().map(|&a| a * c).collect();
    axpy(s, &y2, &mut x2);
    Ok((y1, x2))
}

/// First `cols` coordinates of the first `rows` rows of a Haar orthogonal `n × n` matrix,
/// sampled in `O(rows · (cols + rows))` work.
///
/// The trailing `n − cols` Gaussian coordinates only enter Gram-Schmidt through
/// their inner products, so they are replaced by their lower-triangular LQ factor
/// (Bartlett decomposition: `χ` diagonal with `n − cols − i` degrees of freedom,
/// standard normal below the diagonal). The result is exact in distribution.
pub fn haar_row_prefixes<T: Scalar>(
    n: usize,
    rows: usize,
    cols: usize,
    rng: &mut RandomSource,
) -> Result<Vec<Vec<T>>> {
    require_dim(n)?;
    if rows == 0 || rows > n || cols > n {
        return Err(Error::invalid(
            "rows/cols",
            format!("need 1 ≤ rows ≤ n and cols ≤ n, got rows = {rows}, cols = {cols}, n = {n}"),
        ));
    }
    let tail = n - cols;
    if tail < rows {
        let full = orthogonal_tuple::<T>(n, rows, rng)?;
        return Ok(full.vectors.into_iter().map(|mut v| {
            v.truncate(cols);
            v
        }).collect());
    }
    let width = cols + rows;
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(rows);
    while basis.len() < rows {
        let i = basis.len();
        let mut g: Vec<T> = standard_gaussian(cols, rng);
        g.resize(width, T::zero());
        for j in 0..i {
            g[cols + j] = T::of(rng.standard_normal());
        }
        g[cols + i] = T::of(rng.chi_squared((tail - i) as f64).sqrt());
        if let Some(y) = orthonormalize_against(g, &basis) {
            basis.push(y);
        }
    }
    Ok(basis
        .into_iter()
        .map(|mut v| {
            v.truncate(cols);
            v
        })
        .collect())
}
