//! Exact restricted isometry constants and the support-recovery condition
//! checks built on them.
//!
//! `δ_K` is computed by brute force over every `K`-column subset: for each
//! subset `S` the extreme eigenvalues of `A_SᵀA_S` are found with Jacobi
//! sweeps and `δ_K = max_S max(λ_max − 1, 1 − λ_min)`. This is exponential in
//! `K`, so every call is guarded by an explicit subset budget.

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{
    jacobi_extremes_in_place, norm2, norm_inf, projection_residual, validate_index_set, DenseMatrix,
    EigExtremes,
};
use crate::sensing::SparseSignal;

/// Largest number of subsets [`exact_ric`] will enumerate.
pub const DEFAULT_RIC_BUDGET: u128 = 2_000_000;

/// Slack allowed when deciding whether the projected-correlation inequality holds.
pub const LEMMA1_TOL: f64 = 1e-10;

/// `C(n, k)` without overflow for the sizes used here.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Exact `δ_K` together with the subset that attains it.
#[derive(Debug, Clone, PartialEq)]
pub struct RicReport {
    pub order: usize,
    pub delta: f64,
    /// Lexicographically smallest maximizing subset.
    pub witness_subset: Vec<usize>,
    pub witness_lambda: EigExtremes,
    pub subsets_examined: u128,
}

#[derive(Serialize, Deserialize)]
struct RicReportRecord {
    order: usize,
    delta: f64,
    witness: Vec<usize>,
    lambda_min: f64,
    lambda_max: f64,
    subsets_examined: u128,
}

impl Serialize for RicReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RicReportRecord {
            order: self.order,
            delta: self.delta,
            witness: self.witness_subset.clone(),
            lambda_min: self.witness_lambda.lambda_min,
            lambda_max: self.witness_lambda.lambda_max,
            subsets_examined: self.subsets_examined,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RicReport {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = RicReportRecord::deserialize(d)?;
        Ok(RicReport {
            order: r.order,
            delta: r.delta,
            witness_subset: r.witness,
            witness_lambda: EigExtremes {
                lambda_min: r.lambda_min,
                lambda_max: r.lambda_max,
                iterations_used: 0,
            },
            subsets_examined: r.subsets_examined,
        })
    }
}

fn ric_of(e: &EigExtremes) -> f64 {
    (e.lambda_max - 1.0).max(1.0 - e.lambda_min).max(0.0)
}

#[derive(Debug, Clone)]
struct Best {
    delta: f64,
    subset: Vec<usize>,
    lambda: EigExtremes,
    examined: u128,
}

impl Best {
    fn merge(self, other: Best) -> Best {
        let examined = self.examined + other.examined;
        let take_other = other.delta > self.delta
            || (other.delta == self.delta && other.subset < self.subset);
        let mut winner = if take_other { other } else { self };
        winner.examined = examined;
        winner
    }
}

pub fn exact_ric(a: &DenseMatrix, k: usize) -> Result<RicReport> {
    exact_ric_with_budget(a, k, DEFAULT_RIC_BUDGET)
}

/// Exhaustive `δ_K`. Fails with [`Error::Capacity`] when `C(n, K)` exceeds
/// `budget`; there is no approximate fallback.
pub fn exact_ric_with_budget(a: &DenseMatrix, k: usize, budget: u128) -> Result<RicReport> {
    let n = a.cols();
    if k == 0 || k > n {
        return Err(Error::validation(format!(
            "RIC order must satisfy 1 <= K <= {n}, got {k}"
        )));
    }
    let total = binomial(n, k);
    if total > budget {
        return Err(Error::Capacity {
            n,
            k,
            subsets: total,
            budget,
        });
    }
    let gram = a.gram();
    let best = enumerate(&gram, n, k);
    debug_assert_eq!(best.examined, total);
    Ok(RicReport {
        order: k,
        delta: best.delta,
        witness_subset: best.subset,
        witness_lambda: best.lambda,
        subsets_examined: best.examined,
    })
}

#[cfg(feature = "parallel")]
fn enumerate(gram: &DenseMatrix, n: usize, k: usize) -> Best {
    use rayon::prelude::*;
    (k - 1..n)
        .into_par_iter()
        .map(|top| scan_with_top(gram, k, top))
        .reduce_with(Best::merge)
        .expect("at least one subset")
}

#[cfg(not(feature = "parallel"))]
fn enumerate(gram: &DenseMatrix, n: usize, k: usize) -> Best {
    (k - 1..n)
        .map(|top| scan_with_top(gram, k, top))
        .reduce(Best::merge)
        .expect("at least one subset")
}

/// All `k`-subsets whose largest element is `top`, in colexicographic order.
/// The sub-Gram buffer is refreshed only in the rows and columns whose index
/// changed since the previous subset.
fn scan_with_top(gram: &DenseMatrix, k: usize, top: usize) -> Best {
    let r = k - 1;
    let mut subset: Vec<usize> = (0..r).chain(std::iter::once(top)).collect();
    let mut sub = vec![0.0; k * k];
    let mut work = vec![0.0; k * k];
    let mut dirty = k; // rows/columns 0..dirty need refilling
    let mut best: Option<Best> = None;
    let mut examined: u128 = 0;

    loop {
        for i in 0..dirty {
            for j in 0..k {
                let v = gram[(subset[i], subset[j])];
                sub[j * k + i] = v;
                sub[i * k + j] = v;
            }
        }
        work.copy_from_slice(&sub);
        let lambda = jacobi_extremes_in_place(&mut work, k);
        let delta = ric_of(&lambda);
        examined += 1;
        let better = match &best {
            None => true,
            // colex order is not lexicographic, so ties must compare subsets
            Some(b) => delta > b.delta || (delta == b.delta && subset < b.subset),
        };
        if better {
            best = Some(Best {
                delta,
                subset: subset.clone(),
                lambda,
                examined: 0,
            });
        }

        // colex successor of subset[0..r] within [0, top)
        let mut j = 0;
        loop {
            if j == r {
                let mut b = best.expect("at least one subset");
                b.examined = examined;
                return b;
            }
            let limit = if j + 1 < r { subset[j + 1] } else { top };
            if subset[j] + 1 < limit {
                subset[j] += 1;
                for (i, s) in subset.iter_mut().enumerate().take(j) {
                    *s = i;
                }
                dirty = j + 1;
                break;
            }
            j += 1;
        }
    }
}

/// `1/√(K+1)`: the sharp upper bound on `δ_{K+1}`.
pub fn sharp_ric_bound(k: usize) -> f64 {
    1.0 / ((k + 1) as f64).sqrt()
}

/// `2ε / (1 − √(K+1)·δ_{K+1})`, defined only while `δ_{K+1} < 1/√(K+1)`.
pub fn min_magnitude_bound(delta_k1: f64, k: usize, epsilon: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::validation("K must be at least 1"));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::validation("epsilon must be finite and non-negative"));
    }
    if !(delta_k1 >= 0.0) {
        return Err(Error::validation(format!("delta must be non-negative, got {delta_k1}")));
    }
    let denom = 1.0 - ((k + 1) as f64).sqrt() * delta_k1;
    if delta_k1 >= sharp_ric_bound(k) || denom <= 0.0 {
        return Err(Error::Domain(format!(
            "delta_(K+1) = {delta_k1} is not below 1/sqrt(K+1) = {}",
            sharp_ric_bound(k)
        )));
    }
    Ok(2.0 * epsilon / denom)
}

fn inf_as_null<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

/// Outcome of checking the RIC bound and the minimum-magnitude bound for one
/// `(A, x, ε)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionVerdict {
    pub order: usize,
    pub delta_k1: f64,
    pub ric_ok: bool,
    pub ric_bound: f64,
    pub min_mag_ok: bool,
    /// `+∞` (serialized as `null`) when the RIC bound fails.
    #[serde(serialize_with = "inf_as_null")]
    pub min_mag_bound: f64,
    pub min_magnitude: f64,
    pub overall: bool,
}

/// Evaluates both strict inequalities with no tolerance.
pub fn verdict_from_delta(
    delta_k1: f64,
    k: usize,
    min_magnitude: f64,
    epsilon: f64,
) -> Result<ConditionVerdict> {
    if k == 0 {
        return Err(Error::validation("K must be at least 1"));
    }
    let ric_bound = sharp_ric_bound(k);
    let ric_ok = delta_k1 < ric_bound;
    let min_mag_bound = if ric_ok {
        match min_magnitude_bound(delta_k1, k, epsilon) {
            Ok(b) => b,
            Err(Error::Domain(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        }
    } else {
        f64::INFINITY
    };
    let min_mag_ok = min_mag_bound.is_finite() && min_magnitude > min_mag_bound;
    Ok(ConditionVerdict {
        order: k,
        delta_k1,
        ric_ok,
        ric_bound,
        min_mag_ok,
        min_mag_bound,
        min_magnitude,
        overall: ric_ok && min_mag_ok,
    })
}

pub fn check_theorem1_conditions(
    a: &DenseMatrix,
    x: &SparseSignal,
    epsilon: f64,
) -> Result<ConditionVerdict> {
    check_theorem1_conditions_with_budget(a, x, epsilon, DEFAULT_RIC_BUDGET)
}

/// Computes `δ_{K+1}` exactly with `K = |supp(x)|` and checks both conditions.
pub fn check_theorem1_conditions_with_budget(
    a: &DenseMatrix,
    x: &SparseSignal,
    epsilon: f64,
    budget: u128,
) -> Result<ConditionVerdict> {
    if a.cols() != x.dimension() {
        return Err(Error::validation("matrix columns must equal signal dimension"));
    }
    let k = x.sparsity();
    let min_mag = x
        .min_magnitude()
        .ok_or_else(|| Error::validation("signal has empty support"))?;
    if k + 1 > a.cols() {
        return Err(Error::validation(format!(
            "need |supp(x)| + 1 <= n, got {} + 1 > {}",
            k,
            a.cols()
        )));
    }
    let ric = exact_ric_with_budget(a, k + 1, budget)?;
    verdict_from_delta(ric.delta, k, min_mag, epsilon)
}

/// Both sides of the projected-correlation inequality for one `(A, x, S)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma1Check {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// The `δ_{|Ω|+1}` used for the right-hand side.
    pub delta: f64,
}

impl Lemma1Check {
    pub fn margin(&self) -> f64 {
        self.lhs - self.rhs
    }
}

/// Projected-correlation check with `δ_{|Ω|+1}` computed exactly.
pub fn verify_lemma1(a: &DenseMatrix, x: &SparseSignal, subset: &[usize]) -> Result<Lemma1Check> {
    let order = x.sparsity() + 1;
    if order > a.cols() {
        return Err(Error::validation("need |supp(x)| + 1 <= n"));
    }
    let ric = exact_ric(a, order)?;
    verify_lemma1_with_delta(a, x, subset, ric.delta)
}

/// Projected-correlation check with a caller-supplied `δ_{|Ω|+1}`:
///
/// ```text
/// ‖A_{Ω∖S}ᵀ P⊥_S A_{Ω∖S} x_{Ω∖S}‖_∞ − ‖A_{Ωᶜ}ᵀ P⊥_S A_{Ω∖S} x_{Ω∖S}‖_∞
///     ≥ (1 − √(|Ω|−|S|+1)·δ) ‖x_{Ω∖S}‖₂ / √(|Ω|−|S|)
/// ```
pub fn verify_lemma1_with_delta(
    a: &DenseMatrix,
    x: &SparseSignal,
    subset: &[usize],
    delta: f64,
) -> Result<Lemma1Check> {
    if a.cols() != x.dimension() {
        return Err(Error::validation("matrix columns must equal signal dimension"));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::validation(format!(
            "the inequality needs 0 <= delta < 1, got {delta}"
        )));
    }
    let s = validate_index_set(subset, a.cols())?;
    let omega = x.support();
    if s.iter().any(|i| omega.binary_search(i).is_err()) {
        return Err(Error::validation("S must be a subset of supp(x)"));
    }
    if s.len() >= omega.len() {
        return Err(Error::validation("need |S| < |supp(x)|"));
    }
    let rest: Vec<usize> = omega.iter().copied().filter(|i| s.binary_search(i).is_err()).collect();
    let complement: Vec<usize> = (0..a.cols()).filter(|i| omega.binary_search(i).is_err()).collect();

    let x_rest = x.restrict(&rest)?;
    let a_rest = a.gather_columns(&rest);
    let z = a_rest.mul_vec(&x_rest)?;
    let w = projection_residual(&a.gather_columns(&s), &z)?;

    let inside = norm_inf(&a_rest.tr_mul_vec(&w)?);
    let outside = norm_inf(&a.gather_columns(&complement).tr_mul_vec(&w)?);
    let lhs = inside - outside;

    let diff = (omega.len() - s.len()) as f64;
    let rhs = (1.0 - (diff + 1.0).sqrt() * delta) * norm2(&x_rest) / diff.sqrt();
    Ok(Lemma1Check {
        lhs,
        rhs,
        holds: lhs >= rhs - LEMMA1_TOL,
        delta,
    })
}

/// Side-by-side comparison with the previously best known RIC condition,
/// `δ_{K+1} < (√(4K+1) − 1)/(2K)` with its minimum-magnitude requirement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub k: usize,
    pub delta_k1: f64,
    pub epsilon: f64,
    pub chang_wu_ric_bound: f64,
    pub sharp_ric_bound: f64,
    /// `None` when its denominator is non-positive, i.e. that condition
    /// gives no guarantee at this `δ`.
    pub chang_wu_min_mag: Option<f64>,
    /// `None` when `δ ≥ 1/√(K+1)`.
    pub sharp_min_mag: Option<f64>,
    /// `(√(4K+1) − 1)/(2K) < 1/√(K+1)`.
    pub ric_bound_improved: bool,
    /// Old min-magnitude requirement `≥` the sharp one; `None` if the sharp
    /// one is undefined.
    pub min_mag_weaker: Option<bool>,
    /// Old requirement strictly larger.
    pub min_mag_strictly_weaker: Option<bool>,
}

pub fn comparison_report(k: usize, delta_k1: f64, epsilon: f64) -> Result<ComparisonReport> {
    if k == 0 {
        return Err(Error::validation("K must be at least 1"));
    }
    if !(0.0..1.0).contains(&delta_k1) {
        return Err(Error::validation(format!("delta must lie in [0, 1), got {delta_k1}")));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::validation("epsilon must be finite and non-negative"));
    }
    let kf = k as f64;
    let chang_wu_ric_bound = ((4.0 * kf + 1.0).sqrt() - 1.0) / (2.0 * kf);
    let sharp = sharp_ric_bound(k);

    let cw_denom = 1.0 - delta_k1 - (1.0 - delta_k1).sqrt() * kf.sqrt() * delta_k1;
    let chang_wu_min_mag =
        (cw_denom > 0.0).then(|| ((1.0 + delta_k1).sqrt() + 1.0) * epsilon / cw_denom);
    let sharp_min_mag = min_magnitude_bound(delta_k1, k, epsilon).ok();

    // an undefined old requirement means no guarantee at all, i.e. +∞
    let (weak, strict) = match sharp_min_mag {
        None => (None, None),
        Some(ours) => {
            let theirs = chang_wu_min_mag.unwrap_or(f64::INFINITY);
            (Some(theirs >= ours), Some(theirs > ours))
        }
    };
    Ok(ComparisonReport {
        k,
        delta_k1,
        epsilon,
        chang_wu_ric_bound,
        sharp_ric_bound: sharp,
        chang_wu_min_mag,
        sharp_min_mag,
        ric_bound_improved: chang_wu_ric_bound < sharp,
        min_mag_weaker: weak,
        min_mag_strictly_weaker: strict,
    })
}
