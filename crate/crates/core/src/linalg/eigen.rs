use serde::{Deserialize, Serialize};

use super::DenseMatrix;
use crate::error::{Error, Result};

/// Sweeps stop once the off-diagonal Frobenius norm falls below this.
pub const JACOBI_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;
const SYMMETRY_TOL: f64 = 1e-12;

/// Extreme eigenvalues of a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigExtremes {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Jacobi sweeps performed.
    pub iterations_used: usize,
}

/// Full eigendecomposition; `values` ascending, `vectors` column `j` pairs with `values[j]`.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
    pub sweeps: usize,
}

fn check_symmetric(g: &DenseMatrix) -> Result<()> {
    if g.rows() != g.cols() || g.rows() == 0 {
        return Err(Error::validation(format!(
            "expected a non-empty square matrix, got {}x{}",
            g.rows(),
            g.cols()
        )));
    }
    if !g.is_symmetric(SYMMETRY_TOL) {
        return Err(Error::validation("matrix is not symmetric"));
    }
    Ok(())
}

pub fn sym_eig_extremes(g: &DenseMatrix) -> Result<EigExtremes> {
    check_symmetric(g)?;
    let mut work = g.as_slice().to_vec();
    Ok(jacobi_extremes_in_place(&mut work, g.rows()))
}

/// Eigenvalues in ascending order.
pub fn sym_eig_values(g: &DenseMatrix) -> Result<Vec<f64>> {
    check_symmetric(g)?;
    let n = g.rows();
    let mut work = g.as_slice().to_vec();
    jacobi(&mut work, n, None);
    let mut values: Vec<f64> = (0..n).map(|i| work[i * n + i]).collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

pub fn sym_eig(g: &DenseMatrix) -> Result<SymEigen> {
    check_symmetric(g)?;
    let n = g.rows();
    let mut work = g.as_slice().to_vec();
    let mut v = DenseMatrix::identity(n).as_slice().to_vec();
    let sweeps = jacobi(&mut work, n, Some(&mut v));

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| work[a * n + a].total_cmp(&work[b * n + b]));
    let values = order.iter().map(|&i| work[i * n + i]).collect();
    let cols: Vec<&[f64]> = order.iter().map(|&i| &v[i * n..(i + 1) * n]).collect();
    Ok(SymEigen {
        values,
        vectors: DenseMatrix::from_columns(n, &cols)?,
        sweeps,
    })
}

/// Extremes of a symmetric column-major `n×n` buffer, destroying it.
/// No symmetry check: callers build the buffer symmetric.
pub(crate) fn jacobi_extremes_in_place(work: &mut [f64], n: usize) -> EigExtremes {
    let sweeps = jacobi(work, n, None);
    let (lo, hi) = (0..n)
        .map(|i| work[i * n + i])
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| {
            (lo.min(d), hi.max(d))
        });
    EigExtremes {
        lambda_min: lo,
        lambda_max: hi,
        iterations_used: sweeps,
    }
}

fn off_norm(a: &[f64], n: usize) -> (f64, f64) {
    let mut off = 0.0;
    let mut total = 0.0;
    for j in 0..n {
        for i in 0..n {
            let x = a[j * n + i] * a[j * n + i];
            total += x;
            if i != j {
                off += x;
            }
        }
    }
    (off.sqrt(), total.sqrt())
}

/// Cyclic Jacobi; returns the number of sweeps. `v`, when given, accumulates
/// the rotations (start it at the identity).
fn jacobi(a: &mut [f64], n: usize, mut v: Option<&mut Vec<f64>>) -> usize {
    let mut sweeps = 0;
    loop {
        let (off, fro) = off_norm(a, n);
        if off < JACOBI_TOL || off <= f64::EPSILON * fro || sweeps == MAX_SWEEPS {
            return sweeps;
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[q * n + p];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // A ← A J (columns p, q)
                for k in 0..n {
                    let akp = a[p * n + k];
                    let akq = a[q * n + k];
                    a[p * n + k] = c * akp - s * akq;
                    a[q * n + k] = s * akp + c * akq;
                }
                // A ← Jᵀ A (rows p, q)
                for k in 0..n {
                    let apk = a[k * n + p];
                    let aqk = a[k * n + q];
                    a[k * n + p] = c * apk - s * aqk;
                    a[k * n + q] = s * apk + c * aqk;
                }
                a[q * n + p] = 0.0;
                a[p * n + q] = 0.0;

                if let Some(v) = v.as_deref_mut() {
                    for k in 0..n {
                        let vkp = v[p * n + k];
                        let vkq = v[q * n + k];
                        v[p * n + k] = c * vkp - s * vkq;
                        v[q * n + k] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
}
