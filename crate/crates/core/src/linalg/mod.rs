//! Dense linear-algebra kernels.
//!
//! Everything here works on small column-major matrices (Gram matrices of at
//! most a few dozen columns, sensing matrices up to a few hundred rows), so the
//! kernels favour robustness and determinism over blocking or SIMD.

mod eigen;
mod qr;

pub(crate) use eigen::jacobi_extremes_in_place;
pub use eigen::{sym_eig, sym_eig_extremes, sym_eig_values, EigExtremes, SymEigen, JACOBI_TOL};
pub use qr::{least_squares, least_squares_with_tol, projection_residual, IncrementalQr, RANK_TOL};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Real matrix stored in column-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Result<Self> {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m.check_finite()?;
        Ok(m)
    }

    /// Builds a matrix from column-major data.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::validation(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        let m = Self { rows, cols, data };
        m.check_finite()?;
        Ok(m)
    }

    /// Builds a matrix from a slice of rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = Self::zeros(nrows, ncols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != ncols {
                return Err(Error::validation(format!(
                    "row {i} has {} entries, expected {ncols}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m.check_finite()?;
        Ok(m)
    }

    /// Builds a matrix from a list of equally sized columns.
    pub fn from_columns<C: AsRef<[f64]>>(rows: usize, columns: &[C]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * columns.len());
        for (j, c) in columns.iter().enumerate() {
            let c = c.as_ref();
            if c.len() != rows {
                return Err(Error::validation(format!(
                    "column {j} has {} entries, expected {rows}",
                    c.len()
                )));
            }
            data.extend_from_slice(c);
        }
        Self::from_col_major(rows, columns.len(), data)
    }

    fn check_finite(&self) -> Result<()> {
        if let Some(pos) = self.data.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "non-finite entry at ({}, {})",
                pos % self.rows.max(1),
                pos / self.rows.max(1)
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Column-major backing storage.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub(crate) fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self[(i, j)]).collect()
    }

    /// Returns `A_S`: the columns listed in `subset`, in ascending index order.
    pub fn submatrix_columns(&self, subset: &[usize]) -> Result<DenseMatrix> {
        let sorted = validate_index_set(subset, self.cols)?;
        Ok(self.gather_columns(&sorted))
    }

    /// Column gather without sorting or validation. Callers guarantee the
    /// indices are in range.
    pub(crate) fn gather_columns(&self, idx: &[usize]) -> DenseMatrix {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for &j in idx {
            data.extend_from_slice(self.column(j));
        }
        DenseMatrix {
            rows: self.rows,
            cols: idx.len(),
            data,
        }
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::validation(format!(
                "vector length {} does not match {} columns",
                x.len(),
                self.cols
            )));
        }
        let mut out = vec![0.0; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                axpy(xj, self.column(j), &mut out);
            }
        }
        Ok(out)
    }

    /// `Aᵀ y`, one dot product per column.
    pub fn tr_mul_vec(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows {
            return Err(Error::validation(format!(
                "vector length {} does not match {} rows",
                y.len(),
                self.rows
            )));
        }
        Ok((0..self.cols).map(|j| dot(self.column(j), y)).collect())
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::validation(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let col = self.mul_vec(other.column(j))?;
            out.column_mut(j).copy_from_slice(&col);
        }
        Ok(out)
    }

    /// `AᵀA`, exactly symmetric (the upper triangle is mirrored).
    pub fn gram(&self) -> DenseMatrix {
        let n = self.cols;
        let mut g = DenseMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..=j {
                let v = dot(self.column(i), self.column(j));
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    pub fn scale_columns_to_unit_norm(&mut self) {
        for j in 0..self.cols {
            let col = self.column_mut(j);
            let nrm = norm2(col);
            if nrm > 0.0 {
                col.iter_mut().for_each(|v| *v /= nrm);
            }
        }
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

/// Checks that `subset` holds distinct indices below `len` and returns it sorted.
pub fn validate_index_set(subset: &[usize], len: usize) -> Result<Vec<usize>> {
    if let Some(&bad) = subset.iter().find(|&&i| i >= len) {
        return Err(Error::Index { index: bad, len });
    }
    let mut sorted = subset.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::validation(format!(
            "duplicate index in subset {subset:?}"
        )));
    }
    Ok(sorted)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm, scaled to avoid overflow on large entries.
pub fn norm2(v: &[f64]) -> f64 {
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let ssq: f64 = v.iter().map(|x| (x / scale) * (x / scale)).sum();
    scale * ssq.sqrt()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn submatrix_of_identity() {
        let a = DenseMatrix::identity(3);
        let s = a.submatrix_columns(&[0, 2]).unwrap();
        assert_eq!(s.shape(), (3, 2));
        assert_eq!(s.column(0), &[1.0, 0.0, 0.0]);
        assert_eq!(s.column(1), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn submatrix_sorts_and_matches_elementwise_copy() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data: Vec<f64> = (0..40).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = DenseMatrix::from_col_major(5, 8, data).unwrap();
        let s = a.submatrix_columns(&[6, 1, 4]).unwrap();
        for (jj, &j) in [1usize, 4, 6].iter().enumerate() {
            for i in 0..5 {
                assert_eq!(s[(i, jj)], a[(i, j)]);
            }
        }
    }

    #[test]
    fn submatrix_errors() {
        let a = DenseMatrix::identity(3);
        assert!(matches!(
            a.submatrix_columns(&[3]),
            Err(Error::Index { index: 3, len: 3 })
        ));
        assert!(matches!(
            a.submatrix_columns(&[1, 1]),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn rejects_non_finite() {
        assert!(DenseMatrix::from_col_major(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(DenseMatrix::from_rows(&[[1.0, f64::INFINITY]]).is_err());
    }

    #[test]
    fn gram_is_symmetric() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0, 0.5], [0.0, -1.0, 3.0]]).unwrap();
        let g = a.gram();
        assert!(g.is_symmetric(0.0));
        assert_eq!(g[(1, 2)], 2.0 * 0.5 + -3.0);
    }

    #[test]
    fn norm2_handles_scale() {
        assert_eq!(norm2(&[3.0, 4.0]), 5.0);
        assert_eq!(norm2(&[]), 0.0);
        assert!((norm2(&[3e200, 4e200]) - 5e200).abs() < 1e186);
    }
}
