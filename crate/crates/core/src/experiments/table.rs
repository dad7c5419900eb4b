use std::io::Write;

use serde::Serialize;

use super::config::Cell;
use crate::error::Result;

pub const CSV_HEADER: &str = "m,n,K,epsilon,trials,exact_support_rate,conditions_held_count,conditional_success_rate,mean_iterations,rank_failures";

/// Aggregated results for one cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub epsilon: f64,
    pub trials: usize,
    pub exact_support_rate: f64,
    /// `None` when conditions were not evaluated for this cell.
    pub conditions_held_count: Option<usize>,
    /// `None` when no trial satisfied the conditions.
    pub conditional_success_rate: Option<f64>,
    pub mean_iterations: f64,
    pub rank_failures: usize,
}

impl ExperimentRow {
    pub fn cell(&self) -> Cell {
        Cell {
            m: self.m,
            n: self.n,
            k: self.k,
            epsilon: self.epsilon,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExperimentTable {
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentTable {
    pub fn total_trials(&self) -> usize {
        self.rows.iter().map(|r| r.trials).sum()
    }

    pub fn total_conditions_held(&self) -> usize {
        self.rows.iter().filter_map(|r| r.conditions_held_count).sum()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.rows {
            let opt = |v: Option<String>| v.unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                r.m,
                r.n,
                r.k,
                r.epsilon,
                r.trials,
                r.exact_support_rate,
                opt(r.conditions_held_count.map(|c| c.to_string())),
                opt(r.conditional_success_rate.map(|c| c.to_string())),
                r.mean_iterations,
                r.rank_failures
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}
