//! `omplab` command-line front end.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand};
use omplab::experiments::{
    lemma_sweep, phase_table, sharpness_probe, theorem1_validation, ExperimentConfig,
    ExperimentTable, ProbeOutcome,
};
use omplab::rip::{check_theorem1_conditions_with_budget, exact_ric_with_budget, DEFAULT_RIC_BUDGET};
use omplab::{io, omp_run, Error, Result, StopRule};
use serde_json::json;

#[derive(Parser)]
#[command(name = "omplab", version, about = "Orthogonal Matching Pursuit with exact RIC checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact restricted isometry constant of a given order.
    Ric {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        order: usize,
        /// Largest number of column subsets to enumerate.
        #[arg(long, default_value_t = DEFAULT_RIC_BUDGET)]
        budget: u128,
    },
    /// Run OMP on a measurement vector.
    #[command(group(ArgGroup::new("rule").required(true).args(["max_iter", "eps"])))]
    Omp {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        measurement: PathBuf,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
        /// Write the per-iteration trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Ground-truth signal used to fill `in_true_support`.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Check the RIC and minimum-magnitude conditions for a signal.
    Check {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        signal: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = DEFAULT_RIC_BUDGET)]
        budget: u128,
    },
    /// Monte Carlo check of the recovery guarantee; fails on any counterexample.
    #[command(name = "validate-theorem1")]
    ValidateTheorem1 {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `parallelism` from the config file.
        #[arg(long)]
        parallelism: Option<usize>,
    },
    /// Unconditioned support-recovery rates per cell.
    Phase {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        parallelism: Option<usize>,
    },
    /// Search for an OMP failure with a prescribed RIC at or above the sharp bound.
    Sharpness {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        budget: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Randomized checks of the supporting lemmas.
    Lemmas {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        instances: usize,
        /// Where offending matrices are written if a check fails.
        #[arg(long, default_value = "lemma_violations")]
        violations_dir: PathBuf,
    },
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn load_config(path: &Path, parallelism: Option<usize>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(path)?;
    if let Some(p) = parallelism {
        cfg.parallelism = p;
    }
    Ok(cfg)
}

fn write_table(table: &ExperimentTable, out: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(out)?);
    table.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Ric { matrix, order, budget } => {
            let a = io::read_matrix(matrix)?;
            print_json(&exact_ric_with_budget(&a, order, budget)?)
        }
        Command::Omp {
            matrix,
            measurement,
            max_iter,
            eps,
            trace,
            truth,
        } => {
            let a = io::read_matrix(matrix)?;
            let y = io::read_vector(measurement)?;
            let rule = match (max_iter, eps) {
                (Some(k), _) => StopRule::MaxIterations(k),
                (None, Some(e)) => StopRule::ResidualAtMost(e),
                (None, None) => unreachable!("clap enforces the rule group"),
            };
            let mut result = omp_run(&a, &y, rule)?;
            if let Some(path) = truth {
                result.annotate_truth(io::read_signal(path)?.support());
            }
            if let Some(path) = trace {
                result.write_trace_csv(BufWriter::new(File::create(path)?))?;
            }
            print_json(&result)
        }
        Command::Check {
            matrix,
            signal,
            eps,
            budget,
        } => {
            let a = io::read_matrix(matrix)?;
            let x = io::read_signal(signal)?;
            print_json(&check_theorem1_conditions_with_budget(&a, &x, eps, budget)?)
        }
        Command::ValidateTheorem1 {
            config,
            out,
            parallelism,
        } => {
            let cfg = load_config(&config, parallelism)?;
            let table = theorem1_validation(&cfg)?;
            write_table(&table, &out)
        }
        Command::Phase {
            config,
            out,
            parallelism,
        } => {
            let cfg = load_config(&config, parallelism)?;
            write_table(&phase_table(&cfg)?, &out)
        }
        Command::Sharpness {
            k,
            t,
            budget,
            seed,
            out,
        } => match sharpness_probe(k, t, budget, seed)? {
            ProbeOutcome::Found(f) => {
                f.save(&out)?;
                print_json(&json!({
                    "found": true,
                    "k": f.k,
                    "t": f.target_t,
                    "verified_delta": f.verified_delta,
                    "sharp_bound": f.sharp_bound,
                    "selected": f.omp_trace.selected(),
                    "support": f.signal.support(),
                    "candidates_tried": f.candidates_tried,
                    "dir": out,
                }))
            }
            ProbeOutcome::NotFound { candidates } => print_json(&json!({
                "found": false,
                "k": k,
                "t": t,
                "candidates_tried": candidates,
            })),
        },
        Command::Lemmas {
            seed,
            instances,
            violations_dir,
        } => {
            let report = lemma_sweep(seed, instances)?;
            print_json(&report)?;
            if report.passed() {
                return Ok(());
            }
            for (i, v) in report.violations.iter().enumerate() {
                let dir = violations_dir.join(format!("lemma{}_{i}", v.lemma));
                std::fs::create_dir_all(&dir)?;
                io::write_matrix(dir.join(io::MATRIX_FILE), &v.matrix)?;
                std::fs::write(dir.join("violation.json"), serde_json::to_string_pretty(v)?)?;
            }
            Err(Error::GuaranteeViolation(format!(
                "{} lemma violation(s) written to {}",
                report.violations.len(),
                violations_dir.display()
            )))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
