//! Randomized checks of four supporting inequalities with exactly computed
//! RICs. Checks are numbered as in [`LemmaViolation::lemma`]:
//!
//! 1. projected correlations: the in-support/off-support gap after projecting
//!    out a partial support;
//! 2. `δ_k` is non-decreasing in `k`;
//! 3. `‖A_Sᵀz‖² ≤ (1 + δ_k)‖z‖²` for `|S| ≤ k`;
//! 4. `(1−δ)‖x‖² ≤ ‖P⊥_{S1} A_{S2∖S1} x‖² ≤ (1+δ)‖x‖²` with `δ = δ_{|S1∪S2|}`.

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dot, projection_residual, DenseMatrix};
use crate::rip::{exact_ric, verify_lemma1_with_delta};
use crate::sensing::{
    gaussian_sensing_matrix, lemma1_example_instance, random_sparse_signal, rng_from_seed,
    stream_seed, SignPattern,
};

/// A margin below `-LEMMA_TOL` counts as a violation.
pub const LEMMA_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaSweepDims {
    pub m: usize,
    pub n: usize,
    /// Largest sparsity tested; RICs are computed up to order `max_k + 1`.
    pub max_k: usize,
    /// Row count for every odd instance. Square-ish matrices almost never
    /// have `δ_{K+1} < 1` for `K = 3`, which leaves the projected-correlation check idle there.
    pub tall_m: Option<usize>,
}

impl Default for LemmaSweepDims {
    fn default() -> Self {
        Self {
            m: 12,
            n: 18,
            max_k: 3,
            tall_m: Some(40),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaViolation {
    /// 1 to 4.
    pub lemma: u8,
    pub instance: usize,
    pub margin: f64,
    pub detail: String,
    #[serde(skip)]
    pub matrix: DenseMatrix,
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaSweepReport {
    pub instances: usize,
    /// Number of individual inequality checks per lemma.
    pub checks: [usize; 4],
    /// Smallest observed margin per lemma (`+∞` if never checked).
    pub min_margin: [f64; 4],
    pub violations: Vec<LemmaViolation>,
    /// `(δ, observed projected-correlation margin, (√2 − 1)·δ)` on the diagonal example.
    pub worked_example: Vec<(f64, f64, f64)>,
    /// Largest `δ_k` seen on the identity instance (should be 0).
    pub identity_max_delta: f64,
}

impl LemmaSweepReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

struct Sweep {
    report: LemmaSweepReport,
}

impl Sweep {
    fn record(&mut self, lemma: u8, instance: usize, margin: f64, a: &DenseMatrix, detail: impl FnOnce() -> String) {
        let l = (lemma - 1) as usize;
        self.report.checks[l] += 1;
        self.report.min_margin[l] = self.report.min_margin[l].min(margin);
        if margin < -LEMMA_TOL || margin.is_nan() {
            self.report.violations.push(LemmaViolation {
                lemma,
                instance,
                margin,
                detail: detail(),
                matrix: a.clone(),
            });
        }
    }

    fn check_matrix(&mut self, a: &DenseMatrix, instance: usize, max_k: usize, seed: u64) -> Result<Vec<f64>> {
        let mut rng = rng_from_seed(seed);
        let top = (max_k + 1).min(a.cols());
        // deltas[k] = δ_k, deltas[0] unused
        let mut deltas = vec![0.0];
        for k in 1..=top {
            deltas.push(exact_ric(a, k)?.delta);
        }

        // monotonicity in the order
        for k in 1..top {
            let margin = deltas[k + 1] - deltas[k];
            self.record(2, instance, margin, a, || format!("delta_{} > delta_{}", k, k + 1));
        }

        // projected correlations on a random signal, every proper subset of its support
        let k = rng.random_range(1..=max_k.min(a.cols() - 1));
        let x = random_sparse_signal(a.cols(), k, 1.0, 3.0, rng.random(), SignPattern::Random)?;
        let delta = deltas[k + 1];
        if delta < 1.0 {
            for mask in 0..(1u32 << k) - 1 {
                let s: Vec<usize> = (0..k)
                    .filter(|b| mask & (1 << b) != 0)
                    .map(|b| x.support()[b])
                    .collect();
                let c = verify_lemma1_with_delta(a, &x, &s, delta)?;
                self.record(1, instance, c.margin(), a, || {
                    format!("support {:?}, S {:?}: lhs {} < rhs {}", x.support(), s, c.lhs, c.rhs)
                });
            }
        }

        // ‖A_Sᵀz‖² ≤ (1 + δ_k)‖z‖² for |S| ≤ k
        let k = rng.random_range(1..=top);
        let size = rng.random_range(1..=k);
        let s = sorted_sample(&mut rng, a.cols(), size);
        let z: Vec<f64> = (0..a.rows()).map(|_| rng.sample(StandardNormal)).collect();
        let zz = dot(&z, &z);
        let lhs: f64 = s.iter().map(|&j| dot(a.column(j), &z).powi(2)).sum();
        let margin = ((1.0 + deltas[k]) * zz - lhs) / zz;
        self.record(3, instance, margin, a, || format!("S {s:?} with k = {k}"));

        // (1−δ)‖x‖² ≤ ‖P⊥_{S1} A_{S2∖S1} x‖² ≤ (1+δ)‖x‖², δ = δ_{|S1∪S2|}
        let u = rng.random_range(1..=top);
        let union = sorted_sample(&mut rng, a.cols(), u);
        let s1_size = rng.random_range(0..u);
        let mut s1: Vec<usize> = index::sample(&mut rng, u, s1_size)
            .into_iter()
            .map(|p| union[p])
            .collect();
        s1.sort_unstable();
        let diff: Vec<usize> = union.iter().copied().filter(|i| !s1.contains(i)).collect();
        let delta = deltas[u];
        if delta < 1.0 {
            let xv: Vec<f64> = (0..diff.len()).map(|_| rng.sample(StandardNormal)).collect();
            let w = projection_residual(
                &a.submatrix_columns(&s1)?,
                &a.submatrix_columns(&diff)?.mul_vec(&xv)?,
            )?;
            let xx = dot(&xv, &xv);
            let ratio = dot(&w, &w) / xx;
            let margin = (ratio - (1.0 - delta)).min((1.0 + delta) - ratio);
            self.record(4, instance, margin, a, || {
                format!("S1 {s1:?}, S2 \\ S1 {diff:?}: ratio {ratio}, delta {delta}")
            });
        }
        Ok(deltas)
    }
}

fn sorted_sample(rng: &mut impl Rng, n: usize, k: usize) -> Vec<usize> {
    let mut v = index::sample(rng, n, k).into_vec();
    v.sort_unstable();
    v
}

pub fn lemma_sweep(seed: u64, instances: usize) -> Result<LemmaSweepReport> {
    lemma_sweep_with(seed, instances, LemmaSweepDims::default())
}

/// Runs all four lemma checks on `instances` random column-normalized Gaussian
/// matrices, plus an identity instance and the worked example at
/// `δ ∈ {0.1, 0.3, 0.5}`.
pub fn lemma_sweep_with(seed: u64, instances: usize, dims: LemmaSweepDims) -> Result<LemmaSweepReport> {
    if instances == 0 {
        return Err(Error::validation("instances must be at least 1"));
    }
    if dims.max_k == 0 || dims.max_k + 1 > dims.n || dims.m == 0 || dims.tall_m == Some(0) {
        return Err(Error::validation("need 1 <= max_k < n and m >= 1"));
    }
    let mut sweep = Sweep {
        report: LemmaSweepReport {
            instances,
            checks: [0; 4],
            min_margin: [f64::INFINITY; 4],
            violations: Vec::new(),
            worked_example: Vec::new(),
            identity_max_delta: 0.0,
        },
    };

    for i in 0..instances {
        let m = match dims.tall_m {
            Some(t) if i % 2 == 1 => t,
            _ => dims.m,
        };
        let a = gaussian_sensing_matrix(m, dims.n, stream_seed(seed, &[i as u64, 0]), true)?;
        sweep.check_matrix(&a, i, dims.max_k, stream_seed(seed, &[i as u64, 1]))?;
    }

    let ident = DenseMatrix::identity(dims.m.max(dims.max_k + 1));
    let deltas = sweep.check_matrix(&ident, instances, dims.max_k, stream_seed(seed, &[u64::MAX]))?;
    sweep.report.identity_max_delta = deltas.iter().copied().fold(0.0, f64::max);

    for delta in [0.1, 0.3, 0.5] {
        let ex = lemma1_example_instance(delta)?;
        let d3 = exact_ric(&ex.matrix, 3)?.delta;
        let c = verify_lemma1_with_delta(&ex.matrix, &ex.signal, &ex.subset, d3)?;
        sweep.record(1, instances + 1, c.margin(), &ex.matrix, || {
            format!("worked example at delta {delta}")
        });
        sweep
            .report
            .worked_example
            .push((delta, c.margin(), (2f64.sqrt() - 1.0) * delta));
    }
    Ok(sweep.report)
}
