use super::{axpy, dot, norm2, DenseMatrix};
use crate::error::{Error, Result};

/// Default relative rank tolerance: a factorization is rejected once the
/// smallest |R_jj| drops to or below `RANK_TOL` times the largest.
pub const RANK_TOL: f64 = 1e-10;

/// Householder QR of a growing column set, carrying `Qᵀy` along.
///
/// Columns are appended one at a time; each append costs `O(m·k)` for `k`
/// columns already factored. The reflectors are stored in compact form so the
/// residual `y − A_S x̂` can be rebuilt as `Q [0; (Qᵀy)_{k..}]`, which keeps it
/// orthogonal to the factored columns to working precision.
#[derive(Debug, Clone)]
pub struct IncrementalQr {
    m: usize,
    tol: f64,
    vs: Vec<Vec<f64>>,
    betas: Vec<f64>,
    r_cols: Vec<Vec<f64>>,
    qty: Vec<f64>,
}

impl IncrementalQr {
    pub fn new(y: &[f64]) -> Self {
        Self::with_tol(y, RANK_TOL)
    }

    pub fn with_tol(y: &[f64], tol: f64) -> Self {
        Self {
            m: y.len(),
            tol,
            vs: Vec::new(),
            betas: Vec::new(),
            r_cols: Vec::new(),
            qty: y.to_vec(),
        }
    }

    /// Number of columns factored so far.
    pub fn len(&self) -> usize {
        self.r_cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_cols.is_empty()
    }

    pub fn diag(&self) -> impl Iterator<Item = f64> + '_ {
        self.r_cols.iter().enumerate().map(|(j, c)| c[j])
    }

    /// Appends a column. On rank failure the factorization is left untouched.
    pub fn push_column(&mut self, col: &[f64]) -> Result<()> {
        if col.len() != self.m {
            return Err(Error::validation(format!(
                "column length {} does not match {} rows",
                col.len(),
                self.m
            )));
        }
        let k = self.len();
        if k == self.m {
            return Err(Error::Singular { column: k, diag: 0.0 });
        }
        let mut w = col.to_vec();
        for (j, (v, &beta)) in self.vs.iter().zip(&self.betas).enumerate() {
            reflect(v, beta, &mut w[j..]);
        }

        let tail = &w[k..];
        let sigma = norm2(tail);
        let alpha = if tail[0] >= 0.0 { -sigma } else { sigma };

        let max_diag = self.diag().fold(sigma, |m, d| m.max(d.abs()));
        let (min_pos, min_diag) = self
            .diag()
            .map(f64::abs)
            .chain(std::iter::once(sigma))
            .enumerate()
            .fold((0, f64::INFINITY), |(p, m), (i, d)| if d < m { (i, d) } else { (p, m) });
        if max_diag == 0.0 || min_diag <= self.tol * max_diag {
            return Err(Error::Singular {
                column: min_pos,
                diag: min_diag,
            });
        }

        let mut v = tail.to_vec();
        v[0] -= alpha;
        let beta = 2.0 / dot(&v, &v);
        reflect(&v, beta, &mut self.qty[k..]);

        let mut r = w[..k].to_vec();
        r.push(alpha);
        self.r_cols.push(r);
        self.vs.push(v);
        self.betas.push(beta);
        Ok(())
    }

    /// Least-squares coefficients, in the order the columns were pushed.
    pub fn coefficients(&self) -> Vec<f64> {
        let k = self.len();
        let mut c = self.qty[..k].to_vec();
        for i in (0..k).rev() {
            let mut s = c[i];
            for j in i + 1..k {
                s -= self.r_cols[j][i] * c[j];
            }
            c[i] = s / self.r_cols[i][i];
        }
        c
    }

    /// `‖y − A_S x̂‖₂`.
    pub fn residual_norm(&self) -> f64 {
        norm2(&self.qty[self.len()..])
    }

    /// `y − A_S x̂`, i.e. `P⊥_S y`.
    pub fn residual(&self) -> Vec<f64> {
        let k = self.len();
        let mut z = vec![0.0; self.m];
        z[k..].copy_from_slice(&self.qty[k..]);
        for j in (0..k).rev() {
            reflect(&self.vs[j], self.betas[j], &mut z[j..]);
        }
        z
    }
}

/// `w ← (I − β v vᵀ) w`.
#[inline]
fn reflect(v: &[f64], beta: f64, w: &mut [f64]) {
    let s = beta * dot(v, w);
    if s != 0.0 {
        axpy(-s, v, w);
    }
}

fn factor(a_s: &DenseMatrix, y: &[f64], tol: f64) -> Result<IncrementalQr> {
    if y.len() != a_s.rows() {
        return Err(Error::validation(format!(
            "measurement length {} does not match {} rows",
            y.len(),
            a_s.rows()
        )));
    }
    let mut qr = IncrementalQr::with_tol(y, tol);
    for j in 0..a_s.cols() {
        qr.push_column(a_s.column(j))?;
    }
    Ok(qr)
}

/// `argmin_x ‖y − A_S x‖₂` via Householder QR.
pub fn least_squares(a_s: &DenseMatrix, y: &[f64]) -> Result<Vec<f64>> {
    least_squares_with_tol(a_s, y, RANK_TOL)
}

pub fn least_squares_with_tol(a_s: &DenseMatrix, y: &[f64], tol: f64) -> Result<Vec<f64>> {
    Ok(factor(a_s, y, tol)?.coefficients())
}

/// `P⊥_S y = y − A_S (A_SᵀA_S)⁻¹A_Sᵀ y`. An empty `A_S` returns `y` unchanged.
pub fn projection_residual(a_s: &DenseMatrix, y: &[f64]) -> Result<Vec<f64>> {
    if a_s.cols() == 0 {
        if y.len() != a_s.rows() {
            return Err(Error::validation("measurement length does not match rows"));
        }
        return Ok(y.to_vec());
    }
    Ok(factor(a_s, y, RANK_TOL)?.residual())
}
