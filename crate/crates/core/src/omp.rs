//! Orthogonal Matching Pursuit with a per-iteration trace.
//!
//! Each iteration correlates the residual with every column (one `Aᵀr`
//! product), takes the column of largest absolute correlation (smallest index
//! on ties), appends it to an incremental Householder QR and refits. The
//! residual `r^k = P⊥_{S_k} y` comes straight out of the factorization.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm_inf, DenseMatrix, IncrementalQr};
use crate::sensing::{ProblemInstance, SparseSignal};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Stop after exactly this many selections.
    MaxIterations(usize),
    /// Stop as soon as `‖r^k‖₂ ≤ ε` (checked before the first iteration too).
    ResidualAtMost(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    RuleMet,
    BudgetExhausted,
    RankFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmpIterationRecord {
    /// 1-based iteration number.
    pub k: usize,
    pub selected_index: usize,
    /// `|⟨r^{k−1}, A_s⟩|` for the selected column.
    pub correlation: f64,
    /// `‖r^k‖₂`.
    pub residual_norm: f64,
    pub in_true_support: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmpResult {
    /// Selected indices, ascending.
    pub recovered_support: Vec<usize>,
    /// Least-squares fit on the selected columns; exact zeros are dropped.
    pub estimate: SparseSignal,
    pub trace: Vec<OmpIterationRecord>,
    pub stopped_by: StopReason,
}

impl OmpResult {
    /// Marks each trace entry with whether its index lies in `support`.
    pub fn annotate_truth(&mut self, support: &[usize]) {
        for rec in &mut self.trace {
            rec.in_true_support = Some(support.contains(&rec.selected_index));
        }
    }

    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    /// Selection order.
    pub fn selected(&self) -> Vec<usize> {
        self.trace.iter().map(|r| r.selected_index).collect()
    }

    /// Writes the trace as CSV: `k,selected_index,correlation,residual_norm,in_true_support`.
    pub fn write_trace_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,selected_index,correlation,residual_norm,in_true_support")?;
        for r in &self.trace {
            let truth = match r.in_true_support {
                Some(true) => "true",
                Some(false) => "false",
                None => "",
            };
            writeln!(
                w,
                "{},{},{:e},{:e},{}",
                r.k, r.selected_index, r.correlation, r.residual_norm, truth
            )?;
        }
        Ok(())
    }
}

/// Runs OMP until `rule` is met, the hard budget of `min(m, n)` iterations is
/// spent, or a refit loses rank. Rank failure is reported through
/// [`StopReason::RankFailure`] with the trace up to that point, not as an error.
pub fn omp_run(a: &DenseMatrix, y: &[f64], rule: StopRule) -> Result<OmpResult> {
    let (m, n) = a.shape();
    if y.len() != m {
        return Err(Error::validation(format!(
            "measurement length {} does not match {m} rows",
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("measurement contains non-finite entries"));
    }
    let budget = m.min(n);
    match rule {
        StopRule::MaxIterations(k) if k == 0 || k > budget => {
            return Err(Error::validation(format!(
                "iteration count must satisfy 1 <= K <= min(m, n) = {budget}, got {k}"
            )))
        }
        StopRule::ResidualAtMost(eps) if !(eps >= 0.0 && eps.is_finite()) => {
            return Err(Error::validation(format!(
                "residual threshold must be finite and non-negative, got {eps}"
            )))
        }
        _ => {}
    }

    let mut qr = IncrementalQr::new(y);
    let mut residual = y.to_vec();
    let mut selected: Vec<usize> = Vec::new();
    let mut in_set = vec![false; n];
    let mut trace = Vec::new();

    let rule_met = |iters: usize, rnorm: f64| match rule {
        StopRule::MaxIterations(k) => iters >= k,
        StopRule::ResidualAtMost(eps) => rnorm <= eps,
    };

    let stopped_by = if matches!(rule, StopRule::ResidualAtMost(_)) && rule_met(0, qr.residual_norm())
    {
        StopReason::RuleMet
    } else {
        loop {
            if trace.len() == budget {
                break StopReason::BudgetExhausted;
            }
            let corr = a.tr_mul_vec(&residual)?;
            let mut best: Option<(usize, f64)> = None;
            for (i, c) in corr.iter().enumerate() {
                if in_set[i] {
                    continue;
                }
                let c = c.abs();
                if best.is_none_or(|(_, b)| c > b) {
                    best = Some((i, c));
                }
            }
            let (s, c) = best.expect("budget keeps at least one column free");
            if qr.push_column(a.column(s)).is_err() {
                break StopReason::RankFailure;
            }
            selected.push(s);
            in_set[s] = true;
            residual = qr.residual();
            let rnorm = qr.residual_norm();
            trace.push(OmpIterationRecord {
                k: trace.len() + 1,
                selected_index: s,
                correlation: c,
                residual_norm: rnorm,
                in_true_support: None,
            });
            if rule_met(trace.len(), rnorm) {
                break StopReason::RuleMet;
            }
        }
    };

    let coef = qr.coefficients();
    let mut pairs: Vec<(usize, f64)> = selected.iter().copied().zip(coef).collect();
    pairs.sort_by_key(|p| p.0);
    let recovered_support: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let (support, values): (Vec<usize>, Vec<f64>) =
        pairs.into_iter().filter(|p| p.1 != 0.0).unzip();
    Ok(OmpResult {
        recovered_support,
        estimate: SparseSignal::new(n, support, values)?,
        trace,
        stopped_by,
    })
}

/// Strongest in-support versus strongest off-support correlation with a
/// residual: `(max_{i∈Ω∖S} |A_iᵀr|, max_{j∉Ω} |A_jᵀr|)`. A correct greedy
/// pick is guaranteed when the first exceeds the second.
pub fn selection_margin(
    a: &DenseMatrix,
    residual: &[f64],
    omega: &[usize],
    subset: &[usize],
) -> Result<(f64, f64)> {
    let n = a.cols();
    let omega = crate::linalg::validate_index_set(omega, n)?;
    let s = crate::linalg::validate_index_set(subset, n)?;
    if s.iter().any(|i| omega.binary_search(i).is_err()) {
        return Err(Error::validation("S must be a subset of omega"));
    }
    if omega.len() == n {
        return Err(Error::validation("omega must be a proper subset of the columns"));
    }
    let corr = a.tr_mul_vec(residual)?;
    let inner: Vec<f64> = omega
        .iter()
        .filter(|i| s.binary_search(i).is_err())
        .map(|&i| corr[i])
        .collect();
    if inner.is_empty() {
        return Err(Error::validation("omega \\ S is empty"));
    }
    let outer: Vec<f64> = (0..n)
        .filter(|i| omega.binary_search(i).is_err())
        .map(|j| corr[j])
        .collect();
    Ok((norm_inf(&inner), norm_inf(&outer)))
}

/// One row of [`residual_bound_probe`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualBoundEntry {
    pub k: usize,
    pub residual_norm: f64,
    /// Lower bound `√(1−δ)·min|x_i| − ε` for `k < |Ω|`, upper bound `ε` at `k = |Ω|`.
    pub bound: f64,
    pub is_upper_bound: bool,
    /// Signed slack; non-negative when the bound holds exactly.
    pub margin: f64,
    pub holds: bool,
}

/// Slack used by the residual bound checks.
pub const RESIDUAL_BOUND_TOL: f64 = 1e-9;

/// Checks the residual sandwich along a correct trace: `‖r^k‖₂` stays above
/// `√(1−δ_{K+1})·min|x_i| − ε` before the last support index is picked and
/// drops to at most `ε` right after it.
pub fn residual_bound_probe(
    instance: &ProblemInstance,
    result: &OmpResult,
    delta_k1: f64,
    epsilon: f64,
) -> Result<Vec<ResidualBoundEntry>> {
    let omega = instance.signal.support();
    let x_min = instance
        .signal
        .min_magnitude()
        .ok_or_else(|| Error::validation("signal has empty support"))?;
    if !(0.0..1.0).contains(&delta_k1) {
        return Err(Error::validation("delta must lie in [0, 1)"));
    }
    if result.trace.len() < omega.len() {
        return Err(Error::validation(format!(
            "trace has {} iterations, support has {}",
            result.trace.len(),
            omega.len()
        )));
    }
    let lower = (1.0 - delta_k1).sqrt() * x_min - epsilon;
    result.trace[..omega.len()]
        .iter()
        .map(|rec| {
            if !omega.contains(&rec.selected_index) || rec.in_true_support == Some(false) {
                return Err(Error::validation(format!(
                    "iteration {} selected {} outside the true support",
                    rec.k, rec.selected_index
                )));
            }
            let last = rec.k == omega.len();
            let (bound, margin) = if last {
                (epsilon, epsilon - rec.residual_norm)
            } else {
                (lower, rec.residual_norm - lower)
            };
            Ok(ResidualBoundEntry {
                k: rec.k,
                residual_norm: rec.residual_norm,
                bound,
                is_upper_bound: last,
                margin,
                holds: margin >= -RESIDUAL_BOUND_TOL,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::{generate_measurement, lemma1_example_instance, NoiseSpec};

    #[test]
    fn identity_single_iteration() {
        let a = DenseMatrix::identity(5);
        let y = [0.0, 0.0, 3.0, 0.0, 0.0];
        let r = omp_run(&a, &y, StopRule::ResidualAtMost(0.0)).unwrap();
        assert_eq!(r.recovered_support, vec![2]);
        assert_eq!(r.estimate.values(), &[3.0]);
        assert_eq!(r.iterations(), 1);
        assert_eq!(r.stopped_by, StopReason::RuleMet);
    }

    #[test]
    fn small_measurement_stops_before_first_iteration() {
        let a = DenseMatrix::identity(3);
        let r = omp_run(&a, &[0.01, 0.0, 0.0], StopRule::ResidualAtMost(0.1)).unwrap();
        assert!(r.recovered_support.is_empty());
        assert_eq!(r.estimate.sparsity(), 0);
        assert_eq!(r.stopped_by, StopReason::RuleMet);
    }

    #[test]
    fn worked_example_recovers_in_two_iterations() {
        let ex = lemma1_example_instance(0.5).unwrap();
        let inst = generate_measurement(&ex.matrix, &ex.signal, &NoiseSpec::none()).unwrap();
        let r = omp_run(&ex.matrix, &inst.measurement, StopRule::MaxIterations(2)).unwrap();
        assert_eq!(r.recovered_support, vec![0, 1]);
        assert_eq!(r.selected(), vec![0, 1]);
        for v in r.estimate.values() {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn ties_pick_smallest_index() {
        let a = DenseMatrix::identity(4);
        let r = omp_run(&a, &[1.0, 0.0, 1.0, 1.0], StopRule::MaxIterations(1)).unwrap();
        assert_eq!(r.selected(), vec![0]);
    }

    #[test]
    fn duplicate_column_is_a_rank_failure() {
        let a = DenseMatrix::from_rows(&[[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        // after column 0 the residual is e2; column 2 is chosen, then only the
        // duplicate of column 0 remains
        let r = omp_run(&a, &[1.0, 0.5], StopRule::ResidualAtMost(0.0)).unwrap();
        assert_eq!(r.stopped_by, StopReason::RuleMet);

        let a = DenseMatrix::from_rows(&[[1.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
            .unwrap();
        let r = omp_run(&a, &[1.0, 1.0, 0.5], StopRule::ResidualAtMost(0.0)).unwrap();
        assert_eq!(r.stopped_by, StopReason::RankFailure);
        assert_eq!(r.recovered_support, vec![0, 2]);
    }

    #[test]
    fn budget_exhaustion() {
        let a = DenseMatrix::from_rows(&[[1.0, 0.0, 0.6], [0.0, 1.0, 0.8]]).unwrap();
        let r = omp_run(&a, &[1.0, 1.0], StopRule::ResidualAtMost(0.0)).unwrap();
        // two orthonormal picks reproduce y exactly, so the rule is met at the budget
        assert_eq!(r.iterations(), 2);
        let r = omp_run(&a, &[1.0, 1.0], StopRule::ResidualAtMost(-1.0));
        assert!(r.is_err());
    }

    #[test]
    fn invalid_rules() {
        let a = DenseMatrix::identity(3);
        assert!(omp_run(&a, &[1.0, 0.0, 0.0], StopRule::MaxIterations(0)).is_err());
        assert!(omp_run(&a, &[1.0, 0.0, 0.0], StopRule::MaxIterations(4)).is_err());
        assert!(omp_run(&a, &[1.0, 0.0], StopRule::MaxIterations(1)).is_err());
    }

    #[test]
    fn selection_margin_examples() {
        let ex = lemma1_example_instance(0.5).unwrap();
        let (l, r) = selection_margin(&ex.matrix, &[0.0; 3], &[0, 1], &[]).unwrap();
        assert_eq!((l, r), (0.0, 0.0));
        let y = ex.matrix.mul_vec(&ex.signal.to_dense()).unwrap();
        let (l, r) = selection_margin(&ex.matrix, &y, &[0, 1], &[]).unwrap();
        assert!((l - 1.5).abs() < 1e-15);
        assert_eq!(r, 0.0);
        assert!(selection_margin(&ex.matrix, &y, &[0, 1], &[0, 1]).is_err());
        assert!(selection_margin(&ex.matrix, &y, &[0, 1, 2], &[]).is_err());
    }

    #[test]
    fn residual_probe_on_worked_example() {
        let ex = lemma1_example_instance(0.5).unwrap();
        let inst = generate_measurement(&ex.matrix, &ex.signal, &NoiseSpec::none()).unwrap();
        let mut r = omp_run(&ex.matrix, &inst.measurement, StopRule::MaxIterations(2)).unwrap();
        r.annotate_truth(inst.signal.support());
        let probe = residual_bound_probe(&inst, &r, 0.5, 0.0).unwrap();
        assert_eq!(probe.len(), 2);
        assert!((probe[0].bound - 0.5_f64.sqrt()).abs() < 1e-15);
        assert!(probe[0].residual_norm >= 0.5_f64.sqrt() - 1e-12);
        assert!(probe.iter().all(|e| e.holds));
        assert!(probe[1].residual_norm < 1e-12);
    }

    #[test]
    fn residual_probe_rejects_wrong_trace() {
        let ex = lemma1_example_instance(0.5).unwrap();
        let inst = generate_measurement(&ex.matrix, &ex.signal, &NoiseSpec::none()).unwrap();
        let r = omp_run(&ex.matrix, &[0.0, 0.0, 1.0], StopRule::MaxIterations(2)).unwrap();
        assert!(residual_bound_probe(&inst, &r, 0.5, 0.0).is_err());
    }

    #[test]
    fn trace_csv_header() {
        let a = DenseMatrix::identity(2);
        let mut r = omp_run(&a, &[0.0, 2.0], StopRule::MaxIterations(1)).unwrap();
        r.annotate_truth(&[1]);
        let mut buf = Vec::new();
        r.write_trace_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let mut lines = s.lines();
        assert_eq!(
            lines.next(),
            Some("k,selected_index,correlation,residual_norm,in_true_support")
        );
        assert_eq!(lines.next(), Some("1,1,2e0,0e0,true"));
    }
}
