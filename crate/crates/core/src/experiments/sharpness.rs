//! Search for instances at or above the sharp RIC bound where OMP fails.
//!
//! The search family has `K + 1` columns: `K` mutually orthogonal support
//! columns with squared norm `1 − s`, and one off-support column with squared
//! norm `1 + s` whose inner product with every support column is
//! `γ(1 − s)/K`. For `x = (1, …, 1)` on the support, every support column
//! correlates with `y` at `1 − s` and the off-support column at `γ(1 − s)`, so
//! the first greedy pick is wrong as soon as `γ > 1` (and on ties, since the
//! off-support column sits at the smaller index). The Gram spectrum is
//! `{1 − s (K−1 times), 1 ± √(s² + γ²(1−s)²/K)}`, hence
//! `δ_{K+1} = √(s² + γ²(1−s)²/K)`, which equals `1/√(K+1)` at
//! `s = 1/(K+1), γ = 1`. Any target `t` is hit by solving for `γ`.
//!
//! Every candidate is certified independently: `δ_{K+1}` by exhaustive
//! enumeration and the failure by running OMP.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::linalg::{DenseMatrix, IncrementalQr};
use crate::omp::{omp_run, OmpResult, StopRule};
use crate::rip::{exact_ric, sharp_ric_bound};
use crate::sensing::{rng_from_seed, SparseSignal};

/// A found instance must have `|δ_{K+1} − t|` at most this.
pub const DELTA_MATCH_TOL: f64 = 1e-6;
/// Smallest excess over a tie applied to `γ`, so the wrong pick is strict.
const GAMMA_NUDGE: f64 = 1e-9;

const FAILURE_JSON: &str = "failure.json";

/// A certified failure: `δ_{K+1}(A)` within [`DELTA_MATCH_TOL`] of the target
/// and noiseless OMP with `K` iterations missing `supp(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FailureInstance {
    pub k: usize,
    pub target_t: f64,
    pub matrix: DenseMatrix,
    pub signal: SparseSignal,
    pub verified_delta: f64,
    pub sharp_bound: f64,
    pub omp_trace: OmpResult,
    pub candidates_tried: usize,
}

#[derive(Serialize, Deserialize)]
struct FailureRecord {
    k: usize,
    target_t: f64,
    verified_delta: f64,
    sharp_bound: f64,
    candidates_tried: usize,
    omp_trace: OmpResult,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProbeOutcome {
    Found(Box<FailureInstance>),
    NotFound { candidates: usize },
}

impl ProbeOutcome {
    pub fn instance(&self) -> Option<&FailureInstance> {
        match self {
            ProbeOutcome::Found(f) => Some(f),
            ProbeOutcome::NotFound { .. } => None,
        }
    }
}

/// Gram matrix of the search family with the off-support column first.
pub fn equicorrelated_gram(k: usize, s: f64, gamma: f64) -> DenseMatrix {
    let mut g = DenseMatrix::zeros(k + 1, k + 1);
    let c = 1.0 - s;
    let b = gamma * c / k as f64;
    g[(0, 0)] = 1.0 + s;
    for i in 1..=k {
        g[(i, i)] = c;
        g[(0, i)] = b;
        g[(i, 0)] = b;
    }
    g
}

/// `γ` giving `δ_{K+1} = t` for a given `s`, if real.
fn gamma_for(k: usize, s: f64, t: f64) -> Option<f64> {
    let g2 = (t * t - s * s) * k as f64 / ((1.0 - s) * (1.0 - s));
    (g2 > 0.0).then(|| g2.sqrt())
}

/// Upper Cholesky factor `R` with `RᵀR = G`, so `R` has Gram matrix `G`.
fn gram_factor(g: &DenseMatrix) -> Option<DenseMatrix> {
    let n = g.rows();
    let mut r = DenseMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let mut s = g[(i, j)];
            for p in 0..i {
                s -= r[(p, i)] * r[(p, j)];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                r[(i, i)] = s.sqrt();
            } else {
                r[(i, j)] = s / r[(i, i)];
            }
        }
    }
    Some(r)
}

/// Orthonormal `rows × cols` matrix from a seeded Gaussian draw.
fn random_isometry(rng: &mut impl Rng, rows: usize, cols: usize) -> Result<DenseMatrix> {
    let mut q = DenseMatrix::zeros(rows, cols);
    for j in 0..cols {
        loop {
            let col: Vec<f64> = (0..rows).map(|_| rng.sample(StandardNormal)).collect();
            let mut qr = IncrementalQr::new(&col);
            for p in 0..j {
                qr.push_column(q.column(p))?;
            }
            let r = qr.residual();
            let nrm = crate::linalg::norm2(&r);
            if nrm > 1e-3 {
                for (i, v) in r.iter().enumerate() {
                    q[(i, j)] = v / nrm;
                }
                break;
            }
        }
    }
    Ok(q)
}

fn certify(
    k: usize,
    t: f64,
    matrix: DenseMatrix,
    signal: SparseSignal,
    candidates_tried: usize,
) -> Result<Option<FailureInstance>> {
    let ric = exact_ric(&matrix, k + 1)?;
    if (ric.delta - t).abs() > DELTA_MATCH_TOL {
        return Ok(None);
    }
    let y = matrix.mul_vec(&signal.to_dense())?;
    let mut trace = omp_run(&matrix, &y, StopRule::MaxIterations(k))?;
    trace.annotate_truth(signal.support());
    let first_wrong = trace
        .trace
        .first()
        .is_some_and(|r| r.in_true_support == Some(false));
    if !first_wrong || trace.recovered_support == signal.support() {
        return Ok(None);
    }
    Ok(Some(FailureInstance {
        k,
        target_t: t,
        matrix,
        signal,
        verified_delta: ric.delta,
        sharp_bound: sharp_ric_bound(k),
        omp_trace: trace,
        candidates_tried,
    }))
}

/// Looks for `(A, x)` with `δ_{K+1}(A) = t` (within [`DELTA_MATCH_TOL`]) on
/// which noiseless OMP picks a wrong index first. Candidate 0 is the balanced
/// member of the family; later candidates randomize `s`, embed the columns
/// in a random subspace of up to `K + 3` dimensions and shuffle the column
/// order. Returns [`ProbeOutcome::NotFound`] once `search_budget` candidates
/// are spent.
pub fn sharpness_probe(k: usize, t: f64, search_budget: usize, seed: u64) -> Result<ProbeOutcome> {
    if k < 2 {
        return Err(Error::validation("the sharpness probe needs K >= 2"));
    }
    let bound = sharp_ric_bound(k);
    if !(t >= bound && t < 1.0) {
        return Err(Error::validation(format!(
            "t must satisfy 1/sqrt(K+1) = {bound} <= t < 1, got {t}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    for cand in 0..search_budget {
        let s = if cand == 0 {
            1.0 / (k + 1) as f64
        } else {
            rng.random_range(0.0..t)
        };
        let Some(gamma) = gamma_for(k, s, t) else {
            continue;
        };
        let gamma = if gamma <= 1.0 + GAMMA_NUDGE {
            // only a (near-)tie is reachable: nudge past it
            if (gamma - 1.0).abs() > 1e-6 {
                continue;
            }
            1.0 + GAMMA_NUDGE
        } else {
            gamma
        };
        let Some(base) = gram_factor(&equicorrelated_gram(k, s, gamma)) else {
            continue;
        };

        let (matrix, order) = if cand == 0 {
            (base, (0..=k).collect::<Vec<_>>())
        } else {
            let rows = k + 1 + rng.random_range(0..3);
            let embedded = random_isometry(&mut rng, rows, k + 1)?.matmul(&base)?;
            let mut order: Vec<usize> = (0..=k).collect();
            order.shuffle(&mut rng);
            (embedded.gather_columns(&order), order)
        };
        // column j of `matrix` is family column order[j]; family column 0 is off-support
        let support: Vec<usize> = (0..=k).filter(|&j| order[j] != 0).collect();
        let signal = SparseSignal::new(k + 1, support, vec![1.0; k])?;
        if let Some(found) = certify(k, t, matrix, signal, cand + 1)? {
            return Ok(ProbeOutcome::Found(Box::new(found)));
        }
    }
    Ok(ProbeOutcome::NotFound {
        candidates: search_budget,
    })
}

impl FailureInstance {
    /// Writes `A.mat`, `x.sig`, `failure.json` and `trace.csv` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        io::write_matrix(dir.join(io::MATRIX_FILE), &self.matrix)?;
        io::write_signal(dir.join(io::SIGNAL_FILE), &self.signal)?;
        let record = FailureRecord {
            k: self.k,
            target_t: self.target_t,
            verified_delta: self.verified_delta,
            sharp_bound: self.sharp_bound,
            candidates_tried: self.candidates_tried,
            omp_trace: self.omp_trace.clone(),
        };
        std::fs::write(dir.join(FAILURE_JSON), serde_json::to_string_pretty(&record)?)?;
        let f = std::fs::File::create(dir.join("trace.csv"))?;
        self.omp_trace.write_trace_csv(std::io::BufWriter::new(f))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let record: FailureRecord =
            serde_json::from_str(&std::fs::read_to_string(dir.join(FAILURE_JSON))?)?;
        Ok(Self {
            k: record.k,
            target_t: record.target_t,
            matrix: io::read_matrix(dir.join(io::MATRIX_FILE))?,
            signal: io::read_signal(dir.join(io::SIGNAL_FILE))?,
            verified_delta: record.verified_delta,
            sharp_bound: record.sharp_bound,
            omp_trace: record.omp_trace,
            candidates_tried: record.candidates_tried,
        })
    }

    /// Recomputes `δ_{K+1}` and the OMP trace from the stored matrix and
    /// signal and checks them against the stored claims.
    pub fn reverify(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::GuaranteeViolation(msg));
        if self.signal.sparsity() != self.k || self.matrix.cols() != self.signal.dimension() {
            return fail("stored signal does not match K or the matrix".into());
        }
        let ric = exact_ric(&self.matrix, self.k + 1)?;
        if (ric.delta - self.verified_delta).abs() > 1e-12 {
            return fail(format!(
                "recomputed delta {} differs from stored {}",
                ric.delta, self.verified_delta
            ));
        }
        if (ric.delta - self.target_t).abs() > DELTA_MATCH_TOL {
            return fail(format!("delta {} is not within tolerance of t = {}", ric.delta, self.target_t));
        }
        if ric.delta < self.sharp_bound - 1e-10 {
            return fail("delta is below the sharp bound".into());
        }
        let y = self.matrix.mul_vec(&self.signal.to_dense())?;
        let trace = omp_run(&self.matrix, &y, StopRule::MaxIterations(self.k))?;
        if trace.recovered_support == self.signal.support() {
            return fail("OMP recovers the support on reload".into());
        }
        if trace.selected() != self.omp_trace.selected() {
            return fail("reloaded OMP trace differs from the stored one".into());
        }
        Ok(())
    }
}
