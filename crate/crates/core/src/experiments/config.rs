use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rip::DEFAULT_RIC_BUDGET;
use crate::sensing::{NoiseKind, SignPattern};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    /// `N(0, 1/m)` entries, columns rescaled to unit norm.
    GaussianNormalized,
    /// `N(0, 1/m)` entries.
    GaussianRaw,
    /// The 3×3 diagonal worked example, `δ` cycling through `delta_grid`.
    Lemma1Family,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MinMagPolicy {
    /// `margin_factor × 2ε/(1 − √(K+1)·δ_{K+1})`, needs `margin_factor > 1`.
    TheoremBound { margin_factor: f64 },
    Fixed(f64),
}

/// A Monte Carlo sweep: the Cartesian product of `m × n × k × epsilon`
/// cells, each run for `trials` independent trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub m: Vec<usize>,
    pub n: Vec<usize>,
    pub k: Vec<usize>,
    pub epsilon: Vec<f64>,
    pub trials: usize,
    pub min_mag: MinMagPolicy,
    /// Minimum magnitude used whenever the theorem bound is zero or undefined.
    pub fallback_min_mag: f64,
    pub dynamic_range: f64,
    pub signs: SignPattern,
    pub noise: NoiseKind,
    pub ensemble: Ensemble,
    pub delta_grid: Vec<f64>,
    pub master_seed: u64,
    pub parallelism: usize,
    pub ric_budget: u128,
    /// Phase tables only: compute exact RICs where the budget allows.
    pub check_conditions: bool,
    /// Where counterexamples to the recovery guarantee are written.
    pub failure_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            m: vec![16],
            n: vec![24],
            k: vec![2],
            epsilon: vec![0.05],
            trials: 200,
            min_mag: MinMagPolicy::TheoremBound {
                margin_factor: 1.01,
            },
            fallback_min_mag: 1.0,
            dynamic_range: 4.0,
            signs: SignPattern::Random,
            noise: NoiseKind::L2Sphere,
            ensemble: Ensemble::GaussianNormalized,
            delta_grid: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            master_seed: 0,
            parallelism: 1,
            ric_budget: DEFAULT_RIC_BUDGET,
            check_conditions: true,
            failure_dir: PathBuf::from("theorem1_counterexamples"),
        }
    }
}

/// One `(m, n, K, ε)` combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub epsilon: f64,
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(m={}, n={}, K={}, eps={})", self.m, self.n, self.k, self.epsilon)
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::validation(format!("bad value `{s}` for `{key}`")))
        })
        .collect()
}

/// `a,b,c`, `a..b` (exclusive) or `a..=b`.
fn parse_usize_list(key: &str, value: &str) -> Result<Vec<usize>> {
    let v = value.trim();
    let range = |lo: &str, hi: &str, inclusive: bool| -> Result<Vec<usize>> {
        let lo: usize = lo.trim().parse().map_err(|_| Error::validation(format!("bad range for `{key}`")))?;
        let hi: usize = hi.trim().parse().map_err(|_| Error::validation(format!("bad range for `{key}`")))?;
        Ok(if inclusive { (lo..=hi).collect() } else { (lo..hi).collect() })
    };
    if let Some((lo, hi)) = v.split_once("..=") {
        range(lo, hi, true)
    } else if let Some((lo, hi)) = v.split_once("..") {
        range(lo, hi, false)
    } else {
        parse_list(key, v)
    }
}

fn parse_one<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::validation(format!("bad value `{}` for `{key}`", value.trim())))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(Error::validation(format!("bad boolean `{other}` for `{key}`"))),
    }
}

impl ExperimentConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            Error::Validation(message) => Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                message,
            },
            other => other,
        })
    }

    /// Parses `key = value` lines on top of the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut margin_factor = 1.01;
        let mut fixed: Option<f64> = None;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::validation(format!("line {}: expected `key = value`", ln + 1))
            })?;
            let key = key.trim();
            match key {
                "m" => cfg.m = parse_usize_list(key, value)?,
                "n" => cfg.n = parse_usize_list(key, value)?,
                "k" | "K" => cfg.k = parse_usize_list(key, value)?,
                "epsilon" => cfg.epsilon = parse_list(key, value)?,
                "trials" => cfg.trials = parse_one(key, value)?,
                "min_mag" => {
                    fixed = match value.trim() {
                        "theorem" | "theorem_bound" => None,
                        v => Some(parse_one(key, v)?),
                    }
                }
                "margin_factor" => margin_factor = parse_one(key, value)?,
                "fallback_min_mag" => cfg.fallback_min_mag = parse_one(key, value)?,
                "dynamic_range" => cfg.dynamic_range = parse_one(key, value)?,
                "signs" => {
                    cfg.signs = match value.trim() {
                        "random" => SignPattern::Random,
                        "positive" => SignPattern::Positive,
                        v => return Err(Error::validation(format!("unknown sign pattern `{v}`"))),
                    }
                }
                "noise" => {
                    cfg.noise = match value.trim() {
                        "none" => NoiseKind::None,
                        "ball" | "l2_ball" => NoiseKind::L2Ball,
                        "sphere" | "l2_sphere" => NoiseKind::L2Sphere,
                        v => return Err(Error::validation(format!("unknown noise kind `{v}`"))),
                    }
                }
                "ensemble" => {
                    cfg.ensemble = match value.trim() {
                        "gaussian_normalized" => Ensemble::GaussianNormalized,
                        "gaussian_raw" => Ensemble::GaussianRaw,
                        "lemma1_family" => Ensemble::Lemma1Family,
                        v => return Err(Error::validation(format!("unknown ensemble `{v}`"))),
                    }
                }
                "delta_grid" => cfg.delta_grid = parse_list(key, value)?,
                "master_seed" | "seed" => cfg.master_seed = parse_one(key, value)?,
                "parallelism" => cfg.parallelism = parse_one(key, value)?,
                "ric_budget" => cfg.ric_budget = parse_one(key, value)?,
                "check_conditions" => cfg.check_conditions = parse_bool(key, value)?,
                "failure_dir" => cfg.failure_dir = PathBuf::from(value.trim()),
                other => return Err(Error::validation(format!("unknown key `{other}`"))),
            }
        }
        cfg.min_mag = match fixed {
            Some(v) => MinMagPolicy::Fixed(v),
            None => MinMagPolicy::TheoremBound { margin_factor },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::validation(msg.to_string()));
        if self.k.is_empty() || self.epsilon.is_empty() {
            return bad("k and epsilon lists must be non-empty");
        }
        if self.ensemble != Ensemble::Lemma1Family && (self.m.is_empty() || self.n.is_empty()) {
            return bad("m and n lists must be non-empty");
        }
        if self.trials == 0 {
            return bad("trials must be positive");
        }
        if self.parallelism == 0 {
            return bad("parallelism must be positive");
        }
        if self.epsilon.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
            return bad("epsilon values must be finite and non-negative");
        }
        match self.min_mag {
            MinMagPolicy::TheoremBound { margin_factor } if !(margin_factor > 1.0) => {
                return bad("margin_factor must exceed 1");
            }
            MinMagPolicy::Fixed(v) if !(v > 0.0 && v.is_finite()) => {
                return bad("fixed min_mag must be positive");
            }
            _ => {}
        }
        if !(self.fallback_min_mag > 0.0 && self.fallback_min_mag.is_finite()) {
            return bad("fallback_min_mag must be positive");
        }
        if !(self.dynamic_range >= 1.0) {
            return bad("dynamic_range must be at least 1");
        }
        if self.ensemble == Ensemble::Lemma1Family {
            if self.k.iter().any(|&k| k != 2) {
                return bad("the lemma1_family ensemble has K = 2");
            }
            if self.delta_grid.is_empty() || self.delta_grid.iter().any(|d| !(0.0..1.0).contains(d)) {
                return bad("delta_grid must be non-empty with values in [0, 1)");
            }
        }
        for cell in self.cells() {
            if cell.k == 0 || cell.k + 1 > cell.n || cell.k > cell.m {
                return Err(Error::validation(format!(
                    "cell {cell} needs 1 <= K, K + 1 <= n and K <= m"
                )));
            }
        }
        Ok(())
    }

    /// Cells in row-major order over `m, n, k, epsilon`.
    pub fn cells(&self) -> Vec<Cell> {
        let (ms, ns) = match self.ensemble {
            Ensemble::Lemma1Family => (vec![3], vec![3]),
            _ => (self.m.clone(), self.n.clone()),
        };
        let mut out = Vec::new();
        for &m in &ms {
            for &n in &ns {
                for &k in &self.k {
                    for &epsilon in &self.epsilon {
                        out.push(Cell { m, n, k, epsilon });
                    }
                }
            }
        }
        out
    }
}
