//! Seeded Monte Carlo harnesses.
//!
//! Every trial draws its matrix, signal and noise from streams derived from
//! `(master_seed, cell index, trial index)`, so results do not depend on how
//! trials are scheduled. Trials inside a cell may run on a worker pool of
//! `parallelism` threads; rows are always reduced in trial order.

mod config;
mod lemmas;
mod sharpness;
mod table;

pub use config::{Cell, Ensemble, ExperimentConfig, MinMagPolicy};
pub use lemmas::{lemma_sweep, lemma_sweep_with, LemmaSweepDims, LemmaSweepReport, LemmaViolation};
pub use sharpness::{
    equicorrelated_gram, sharpness_probe, FailureInstance, ProbeOutcome, DELTA_MATCH_TOL,
};
pub use table::{ExperimentRow, ExperimentTable, CSV_HEADER};

use std::path::Path;

use crate::error::{Error, Result};
use crate::io;
use crate::linalg::DenseMatrix;
use crate::omp::{omp_run, OmpResult, StopReason, StopRule};
use crate::rip::{
    binomial, exact_ric_with_budget, min_magnitude_bound, verdict_from_delta, ConditionVerdict,
    RicReport,
};
use crate::sensing::{
    gaussian_sensing_matrix, generate_measurement, lemma1_example_instance, random_sparse_signal,
    stream_seed, NoiseSpec, ProblemInstance, SparseSignal,
};

const STREAM_MATRIX: u64 = 0;
const STREAM_SIGNAL: u64 = 1;
const STREAM_NOISE: u64 = 2;

/// Runs `f(0..count)` on `parallelism` threads and returns results in index order.
pub(crate) fn run_indexed<T, F>(parallelism: usize, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if parallelism > 1 {
            use rayon::prelude::*;
            if let Ok(pool) = rayon::ThreadPoolBuilder::new()
                .num_threads(parallelism)
                .build()
            {
                return pool.install(|| (0..count).into_par_iter().map(f).collect());
            }
        }
    }
    let _ = parallelism;
    (0..count).map(f).collect()
}

/// The stopping rule used for a cell: `‖r‖ ≤ ε`, or exactly `K` iterations
/// when `ε = 0` (a floating-point residual never reaches exactly zero).
pub fn stop_rule_for(k: usize, epsilon: f64) -> StopRule {
    if epsilon == 0.0 {
        StopRule::MaxIterations(k)
    } else {
        StopRule::ResidualAtMost(epsilon)
    }
}

/// One fully drawn trial.
#[derive(Debug, Clone)]
pub struct Trial {
    pub instance: ProblemInstance,
    pub ric: Option<RicReport>,
    pub verdict: Option<ConditionVerdict>,
    pub result: OmpResult,
}

impl Trial {
    pub fn support_recovered(&self) -> bool {
        self.result.recovered_support == self.instance.signal.support()
    }

    /// Support recovered in exactly `|supp(x)|` iterations.
    pub fn exact_recovery(&self) -> bool {
        self.support_recovered() && self.result.iterations() == self.instance.signal.sparsity()
    }
}

fn draw_matrix(cfg: &ExperimentConfig, cell: &Cell, trial: usize, seed: u64) -> Result<DenseMatrix> {
    match cfg.ensemble {
        Ensemble::GaussianNormalized => gaussian_sensing_matrix(cell.m, cell.n, seed, true),
        Ensemble::GaussianRaw => gaussian_sensing_matrix(cell.m, cell.n, seed, false),
        Ensemble::Lemma1Family => {
            let delta = cfg.delta_grid[trial % cfg.delta_grid.len()];
            Ok(lemma1_example_instance(delta)?.matrix)
        }
    }
}

fn draw_signal(
    cfg: &ExperimentConfig,
    cell: &Cell,
    min_mag: f64,
    seed: u64,
) -> Result<SparseSignal> {
    match cfg.ensemble {
        Ensemble::Lemma1Family => {
            // the worked example keeps its support {0, 1}
            let x = random_sparse_signal(2, 2, min_mag, cfg.dynamic_range, seed, cfg.signs)?;
            SparseSignal::new(3, vec![0, 1], x.values().to_vec())
        }
        _ => random_sparse_signal(cell.n, cell.k, min_mag, cfg.dynamic_range, seed, cfg.signs),
    }
}

/// Draws and solves one trial. `need_ric` forces the exact RIC (budget errors
/// propagate); otherwise it is computed only when `check_conditions` is set
/// and the budget allows.
pub fn run_trial(
    cfg: &ExperimentConfig,
    cell_index: usize,
    cell: &Cell,
    trial: usize,
    need_ric: bool,
) -> Result<Trial> {
    let seed = |stream| stream_seed(cfg.master_seed, &[cell_index as u64, trial as u64, stream]);
    let a = draw_matrix(cfg, cell, trial, seed(STREAM_MATRIX))?;

    let within_budget = binomial(a.cols(), cell.k + 1) <= cfg.ric_budget;
    let ric = if need_ric || (cfg.check_conditions && within_budget) {
        Some(exact_ric_with_budget(&a, cell.k + 1, cfg.ric_budget)?)
    } else {
        None
    };

    let min_mag = match cfg.min_mag {
        MinMagPolicy::Fixed(v) => v,
        MinMagPolicy::TheoremBound { margin_factor } => ric
            .as_ref()
            .and_then(|r| min_magnitude_bound(r.delta, cell.k, cell.epsilon).ok())
            .filter(|b| *b > 0.0)
            .map_or(cfg.fallback_min_mag, |b| margin_factor * b),
    };
    let x = draw_signal(cfg, cell, min_mag, seed(STREAM_SIGNAL))?;
    let noise = NoiseSpec {
        kind: cfg.noise,
        epsilon: cell.epsilon,
        seed: seed(STREAM_NOISE),
    };
    let instance = generate_measurement(&a, &x, &noise)?;
    let verdict = match &ric {
        Some(r) => Some(verdict_from_delta(
            r.delta,
            cell.k,
            x.min_magnitude().expect("K >= 1"),
            cell.epsilon,
        )?),
        None => None,
    };
    let mut result = omp_run(&a, &instance.measurement, stop_rule_for(cell.k, cell.epsilon))?;
    result.annotate_truth(x.support());
    Ok(Trial {
        instance,
        ric,
        verdict,
        result,
    })
}

/// A trial where the conditions held but recovery failed.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub cell: Cell,
    pub trial: usize,
    pub data: Trial,
}

impl Counterexample {
    /// Writes the instance files plus `verdict.json` and `trace.csv`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        io::write_instance(dir, &self.data.instance)?;
        if let Some(v) = &self.data.verdict {
            std::fs::write(dir.join("verdict.json"), serde_json::to_string_pretty(v)?)?;
        }
        let f = std::fs::File::create(dir.join("trace.csv"))?;
        self.data.result.write_trace_csv(std::io::BufWriter::new(f))
    }
}

fn summarize(cell: &Cell, trials: &[Trial], conditions_evaluated: bool) -> ExperimentRow {
    let count = trials.len();
    let recovered = trials.iter().filter(|t| t.support_recovered()).count();
    let held: Vec<&Trial> = trials
        .iter()
        .filter(|t| t.verdict.as_ref().is_some_and(|v| v.overall))
        .collect();
    let held_ok = held.iter().filter(|t| t.exact_recovery()).count();
    let iters: usize = trials.iter().map(|t| t.result.iterations()).sum();
    ExperimentRow {
        m: cell.m,
        n: cell.n,
        k: cell.k,
        epsilon: cell.epsilon,
        trials: count,
        exact_support_rate: recovered as f64 / count as f64,
        conditions_held_count: conditions_evaluated.then_some(held.len()),
        conditional_success_rate: (conditions_evaluated && !held.is_empty())
            .then(|| held_ok as f64 / held.len() as f64),
        mean_iterations: iters as f64 / count as f64,
        rank_failures: trials
            .iter()
            .filter(|t| t.result.stopped_by == StopReason::RankFailure)
            .count(),
    }
}

/// Runs the recovery-guarantee sweep without touching the filesystem and
/// returns the table together with every counterexample found.
pub fn theorem1_validation_report(
    cfg: &ExperimentConfig,
) -> Result<(ExperimentTable, Vec<Counterexample>)> {
    cfg.validate()?;
    for cell in cfg.cells() {
        let subsets = binomial(cell.n, cell.k + 1);
        if subsets > cfg.ric_budget {
            return Err(Error::Capacity {
                n: cell.n,
                k: cell.k + 1,
                subsets,
                budget: cfg.ric_budget,
            });
        }
    }
    let mut table = ExperimentTable::default();
    let mut counterexamples = Vec::new();
    for (ci, cell) in cfg.cells().iter().enumerate() {
        let trials: Vec<Trial> = run_indexed(cfg.parallelism, cfg.trials, |t| {
            run_trial(cfg, ci, cell, t, true)
        })
        .into_iter()
        .collect::<Result<_>>()?;
        for (t, trial) in trials.iter().enumerate() {
            let held = trial.verdict.as_ref().is_some_and(|v| v.overall);
            if held && !trial.exact_recovery() {
                counterexamples.push(Counterexample {
                    cell: *cell,
                    trial: t,
                    data: trial.clone(),
                });
            }
        }
        table.rows.push(summarize(cell, &trials, true));
    }
    Ok((table, counterexamples))
}

/// Checks the recovery guarantee over every cell: among trials whose exact
/// `δ_{K+1}` and minimum magnitude satisfy the conditions, OMP must return the
/// true support in exactly `K` iterations. Any counterexample is written under
/// `cfg.failure_dir` and the call fails with [`Error::GuaranteeViolation`].
pub fn theorem1_validation(cfg: &ExperimentConfig) -> Result<ExperimentTable> {
    let (table, counterexamples) = theorem1_validation_report(cfg)?;
    if counterexamples.is_empty() {
        return Ok(table);
    }
    for c in &counterexamples {
        let dir = cfg.failure_dir.join(format!(
            "m{}_n{}_k{}_eps{}_trial{}",
            c.cell.m, c.cell.n, c.cell.k, c.cell.epsilon, c.trial
        ));
        c.save(&dir)?;
    }
    Err(Error::GuaranteeViolation(format!(
        "{} counterexample(s) to the recovery guarantee written to {}",
        counterexamples.len(),
        cfg.failure_dir.display()
    )))
}

/// Unconditioned exact-support-recovery rates per cell. Conditions are
/// evaluated only where `check_conditions` is set and `C(n, K+1)` fits the
/// RIC budget; elsewhere those columns are left empty.
pub fn phase_table(cfg: &ExperimentConfig) -> Result<ExperimentTable> {
    cfg.validate()?;
    let mut table = ExperimentTable::default();
    for (ci, cell) in cfg.cells().iter().enumerate() {
        let evaluated = cfg.check_conditions && binomial(cell.n, cell.k + 1) <= cfg.ric_budget;
        let trials: Vec<Trial> = run_indexed(cfg.parallelism, cfg.trials, |t| {
            run_trial(cfg, ci, cell, t, false)
        })
        .into_iter()
        .collect::<Result<_>>()?;
        table.rows.push(summarize(cell, &trials, evaluated));
    }
    Ok(table)
}
