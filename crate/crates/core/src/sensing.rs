//! Problem instances `y = Ax + v`: sensing matrices, sparse signals and
//! bounded noise.
//!
//! All randomness comes from [`ChaCha8Rng`], a counter-based stream cipher
//! generator whose output is specified bit-for-bit, so a `(parameters, seed)`
//! pair produces the same instance on every platform. Independent streams for
//! trials and components are derived with [`stream_seed`].

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm2, DenseMatrix};

/// The generator used for every random draw in the crate.
pub type LabRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> LabRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent seed: `seed ⊕ hash(tags)`. Streams depend only on
/// the tag values, never on evaluation order.
pub fn stream_seed(seed: u64, tags: &[u64]) -> u64 {
    let h = tags
        .iter()
        .fold(0x6A09_E667_F3BC_C908_u64, |h, &t| mix64(h ^ mix64(t)));
    seed ^ h
}

/// A sparse vector: sorted support plus aligned nonzero values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseSignal {
    dimension: usize,
    support: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSignal {
    pub fn new(dimension: usize, support: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::validation("signal dimension must be positive"));
        }
        if support.len() != values.len() {
            return Err(Error::validation(format!(
                "{} support indices but {} values",
                support.len(),
                values.len()
            )));
        }
        if let Some(&i) = support.iter().find(|&&i| i >= dimension) {
            return Err(Error::Index {
                index: i,
                len: dimension,
            });
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::validation("support must be strictly increasing"));
        }
        if values.iter().any(|v| *v == 0.0 || !v.is_finite()) {
            return Err(Error::validation("signal values must be finite and nonzero"));
        }
        Ok(Self {
            dimension,
            support,
            values,
        })
    }

    /// Keeps the nonzero entries of a dense vector.
    pub fn from_dense(x: &[f64]) -> Result<Self> {
        let (support, values) = x
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i, *v))
            .unzip();
        Self::new(x.len(), support, values)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `|supp(x)|`.
    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    /// `min_{i∈Ω} |x_i|`, `None` for the zero signal.
    pub fn min_magnitude(&self) -> Option<f64> {
        self.values.iter().map(|v| v.abs()).reduce(f64::min)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.dimension];
        for (&i, &v) in self.support.iter().zip(&self.values) {
            x[i] = v;
        }
        x
    }

    /// Values restricted to `subset` (which must lie in the support), in the
    /// order given.
    pub fn restrict(&self, subset: &[usize]) -> Result<Vec<f64>> {
        subset
            .iter()
            .map(|i| {
                self.support
                    .binary_search(i)
                    .map(|p| self.values[p])
                    .map_err(|_| Error::validation(format!("index {i} is not in the support")))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    None,
    /// Uniform in the ball `‖v‖₂ ≤ ε`.
    L2Ball,
    /// Uniform on the sphere `‖v‖₂ = ε`.
    L2Sphere,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub epsilon: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self {
            kind: NoiseKind::None,
            epsilon: 0.0,
            seed: 0,
        }
    }

    pub fn sphere(epsilon: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::L2Sphere,
            epsilon,
            seed,
        }
    }

    pub fn ball(epsilon: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::L2Ball,
            epsilon,
            seed,
        }
    }

    /// Draws `v ∈ R^m` with `‖v‖₂ ≤ ε`.
    pub fn sample(&self, m: usize) -> Result<Vec<f64>> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::validation(format!(
                "noise epsilon must be finite and non-negative, got {}",
                self.epsilon
            )));
        }
        if self.kind == NoiseKind::None || self.epsilon == 0.0 || m == 0 {
            return Ok(vec![0.0; m]);
        }
        let mut rng = rng_from_seed(self.seed);
        let mut dir: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let mut nrm = norm2(&dir);
        while nrm == 0.0 {
            dir.iter_mut().for_each(|d| *d = rng.sample(StandardNormal));
            nrm = norm2(&dir);
        }
        let radius = match self.kind {
            NoiseKind::L2Ball => {
                let u: f64 = rng.random();
                self.epsilon * u.powf(1.0 / m as f64)
            }
            _ => self.epsilon,
        };
        let mut v: Vec<f64> = dir.iter().map(|d| d / nrm * radius).collect();
        // rounding can land one ulp outside the ball
        let shrink = 1.0 - f64::EPSILON;
        let strict = self.kind == NoiseKind::L2Ball;
        loop {
            let n = norm2(&v);
            if n < self.epsilon || (!strict && n == self.epsilon) {
                break;
            }
            v.iter_mut().for_each(|x| *x *= shrink);
        }
        Ok(v)
    }
}

/// `y = A x + v`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub matrix: DenseMatrix,
    pub signal: SparseSignal,
    pub noise: Vec<f64>,
    pub measurement: Vec<f64>,
}

impl ProblemInstance {
    /// Assembles an instance, checking every dimension.
    pub fn from_parts(
        matrix: DenseMatrix,
        signal: SparseSignal,
        noise: Vec<f64>,
        measurement: Vec<f64>,
    ) -> Result<Self> {
        if matrix.cols() != signal.dimension() {
            return Err(Error::validation("matrix columns must equal signal dimension"));
        }
        if noise.len() != matrix.rows() || measurement.len() != matrix.rows() {
            return Err(Error::validation("noise and measurement must have one entry per row"));
        }
        Ok(Self {
            matrix,
            signal,
            noise,
            measurement,
        })
    }

    /// Largest elementwise gap between `y` and `Ax + v`.
    pub fn reconstruction_error(&self) -> f64 {
        let ax = self
            .matrix
            .mul_vec(&self.signal.to_dense())
            .expect("dimensions checked at construction");
        ax.iter()
            .zip(&self.noise)
            .zip(&self.measurement)
            .map(|((a, v), y)| (a + v - y).abs())
            .fold(0.0, f64::max)
    }
}

pub fn generate_measurement(
    a: &DenseMatrix,
    x: &SparseSignal,
    noise: &NoiseSpec,
) -> Result<ProblemInstance> {
    if a.cols() != x.dimension() {
        return Err(Error::validation(format!(
            "matrix has {} columns but signal dimension is {}",
            a.cols(),
            x.dimension()
        )));
    }
    let v = noise.sample(a.rows())?;
    let mut y = a.mul_vec(&x.to_dense())?;
    y.iter_mut().zip(&v).for_each(|(yi, vi)| *yi += vi);
    Ok(ProblemInstance {
        matrix: a.clone(),
        signal: x.clone(),
        noise: v,
        measurement: y,
    })
}

/// `m×n` matrix with i.i.d. `N(0, 1/m)` entries, optionally rescaled to unit
/// column norms. Entries are drawn column by column from one stream.
pub fn gaussian_sensing_matrix(
    m: usize,
    n: usize,
    seed: u64,
    normalize_columns: bool,
) -> Result<DenseMatrix> {
    if m == 0 || n == 0 {
        return Err(Error::validation("matrix dimensions must be positive"));
    }
    let mut rng = rng_from_seed(seed);
    let scale = 1.0 / (m as f64).sqrt();
    let data = (0..m * n)
        .map(|_| rng.sample::<f64, _>(StandardNormal) * scale)
        .collect();
    let mut a = DenseMatrix::from_col_major(m, n, data)?;
    if normalize_columns {
        a.scale_columns_to_unit_norm();
    }
    Ok(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignPattern {
    Random,
    Positive,
}

/// K-sparse signal with a uniformly drawn support and magnitudes uniform in
/// `[min_mag, min_mag × dynamic_range]`.
pub fn random_sparse_signal(
    n: usize,
    k: usize,
    min_mag: f64,
    dynamic_range: f64,
    seed: u64,
    signs: SignPattern,
) -> Result<SparseSignal> {
    if k == 0 || k > n {
        return Err(Error::validation(format!(
            "sparsity must satisfy 1 <= K <= n, got K = {k}, n = {n}"
        )));
    }
    if !(min_mag > 0.0 && min_mag.is_finite()) {
        return Err(Error::validation("min_mag must be positive and finite"));
    }
    if !(dynamic_range >= 1.0 && dynamic_range.is_finite()) {
        return Err(Error::validation("dynamic_range must be at least 1"));
    }
    let mut rng = rng_from_seed(seed);
    let mut support = index::sample(&mut rng, n, k).into_vec();
    support.sort_unstable();
    let values = (0..k)
        .map(|_| {
            let u: f64 = rng.random();
            let mag = (min_mag * (1.0 + (dynamic_range - 1.0) * u)).max(min_mag);
            match signs {
                SignPattern::Positive => mag,
                SignPattern::Random => {
                    if rng.random::<bool>() {
                        mag
                    } else {
                        -mag
                    }
                }
            }
        })
        .collect();
    SparseSignal::new(n, support, values)
}

/// The 3×3 diagonal worked example: `A = diag(√(1+δ), √(1−δ), √(1+δ))`,
/// `x = (1, 1, 0)` and `S = {0}`.
#[derive(Debug, Clone)]
pub struct Lemma1Example {
    pub matrix: DenseMatrix,
    pub signal: SparseSignal,
    pub subset: Vec<usize>,
}

pub fn lemma1_example_instance(delta: f64) -> Result<Lemma1Example> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::validation(format!(
            "delta must lie in [0, 1), got {delta}"
        )));
    }
    let hi = (1.0 + delta).sqrt();
    let lo = (1.0 - delta).sqrt();
    Ok(Lemma1Example {
        matrix: DenseMatrix::from_diag(&[hi, lo, hi])?,
        signal: SparseSignal::new(3, vec![0, 1], vec![1.0, 1.0])?,
        subset: vec![0],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_noiseless_measurement() {
        let a = DenseMatrix::identity(4);
        let x = SparseSignal::new(4, vec![0], vec![1.0]).unwrap();
        let inst = generate_measurement(&a, &x, &NoiseSpec::none()).unwrap();
        assert_eq!(inst.measurement, vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(inst.reconstruction_error(), 0.0);
    }

    #[test]
    fn worked_example_measurement() {
        let ex = lemma1_example_instance(0.5).unwrap();
        let inst = generate_measurement(&ex.matrix, &ex.signal, &NoiseSpec::none()).unwrap();
        assert!((inst.measurement[0] - 1.5_f64.sqrt()).abs() < 1e-15);
        assert!((inst.measurement[1] - 0.5_f64.sqrt()).abs() < 1e-15);
        assert_eq!(inst.measurement[2], 0.0);
    }

    #[test]
    fn worked_example_shapes() {
        let ex = lemma1_example_instance(0.0).unwrap();
        assert_eq!(ex.matrix, DenseMatrix::identity(3));
        assert_eq!(ex.signal.support(), &[0, 1]);
        assert_eq!(ex.subset, vec![0]);
        let ex = lemma1_example_instance(0.5).unwrap();
        assert_eq!(ex.matrix[(1, 1)], 0.5_f64.sqrt());
        assert!(lemma1_example_instance(1.0).is_err());
        assert!(lemma1_example_instance(-0.1).is_err());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = DenseMatrix::identity(3);
        let x = SparseSignal::new(4, vec![0], vec![1.0]).unwrap();
        assert!(matches!(
            generate_measurement(&a, &x, &NoiseSpec::none()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn sphere_noise_has_exact_norm() {
        for seed in 0..1000 {
            let v = NoiseSpec::sphere(0.1, seed).sample(16).unwrap();
            let n = norm2(&v);
            assert!((n - 0.1).abs() <= 1e-12);
            assert!(n <= 0.1);
        }
    }

    #[test]
    fn ball_noise_strictly_inside() {
        for seed in 0..1000 {
            let v = NoiseSpec::ball(0.2, seed).sample(5).unwrap();
            assert!(norm2(&v) < 0.2);
        }
    }

    #[test]
    fn normalized_columns_have_unit_norm() {
        let a = gaussian_sensing_matrix(7, 11, 9, true).unwrap();
        for j in 0..11 {
            assert!((norm2(a.column(j)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_matrix_is_deterministic() {
        let a = gaussian_sensing_matrix(6, 9, 42, false).unwrap();
        let b = gaussian_sensing_matrix(6, 9, 42, false).unwrap();
        assert_eq!(a, b);
        let c = gaussian_sensing_matrix(6, 9, 43, false).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn gaussian_sample_statistics() {
        let (m, n) = (64, 128);
        let a = gaussian_sensing_matrix(m, n, 2024, false).unwrap();
        let len = (m * n) as f64;
        let mean = a.as_slice().iter().sum::<f64>() / len;
        let var = a.as_slice().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (len - 1.0);
        assert!(mean.abs() < 4.0 / len.sqrt());
        assert!((var - 1.0 / m as f64).abs() < 0.1 / m as f64);
    }

    #[test]
    fn full_support_constant_magnitude() {
        let x = random_sparse_signal(5, 5, 2.5, 1.0, 1, SignPattern::Positive).unwrap();
        assert_eq!(x.support(), &[0, 1, 2, 3, 4]);
        assert!(x.values().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn min_magnitude_respected() {
        for seed in 0..1000 {
            let x = random_sparse_signal(20, 5, 1.0, 3.0, seed, SignPattern::Random).unwrap();
            assert!(x.min_magnitude().unwrap() >= 1.0);
            assert_eq!(x.sparsity(), 5);
        }
        assert!(random_sparse_signal(3, 4, 1.0, 1.0, 0, SignPattern::Random).is_err());
    }

    #[test]
    fn support_is_uniform() {
        // n = 6, K = 2: 15 supports, each with probability 1/15.
        let draws = 50_000;
        let mut counts = std::collections::HashMap::new();
        for seed in 0..draws {
            let x = random_sparse_signal(6, 2, 1.0, 1.0, seed, SignPattern::Positive).unwrap();
            *counts.entry(x.support().to_vec()).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 15);
        let p = 1.0 / 15.0;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        let mut chi2 = 0.0;
        for &c in counts.values() {
            let dev = c as f64 - draws as f64 * p;
            assert!(dev.abs() < 5.0 * sigma, "count {c}");
            chi2 += dev * dev / (draws as f64 * p);
        }
        // 14 degrees of freedom; 99.9th percentile is about 36.1
        assert!(chi2 < 36.1, "chi2 = {chi2}");
    }

    #[test]
    fn signal_validation() {
        assert!(SparseSignal::new(3, vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(SparseSignal::new(3, vec![0], vec![0.0]).is_err());
        assert!(SparseSignal::new(3, vec![3], vec![1.0]).is_err());
        let x = SparseSignal::from_dense(&[0.0, -2.0, 0.0, 0.5]).unwrap();
        assert_eq!(x.support(), &[1, 3]);
        assert_eq!(x.min_magnitude(), Some(0.5));
    }

    #[test]
    fn stream_seeds_differ() {
        let a = stream_seed(7, &[0, 1]);
        let b = stream_seed(7, &[1, 0]);
        let c = stream_seed(7, &[0, 2]);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, stream_seed(7, &[0, 1]));
    }
}
