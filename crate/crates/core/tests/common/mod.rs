//! Test-side oracles, written without touching the library's kernels.
#![allow(dead_code)]

use omplab::DenseMatrix;

/// Plain row-major copy, so oracles never use the library's accessors
/// beyond reading entries.
pub fn to_rows(a: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..a.rows()).map(|i| (0..a.cols()).map(|j| a[(i, j)]).collect()).collect()
}

/// Number of eigenvalues of symmetric `g` strictly below `x`, by counting
/// negative pivots of an LDLᵀ factorization of `g − xI` (Sylvester inertia).
pub fn count_below(g: &[Vec<f64>], x: f64) -> usize {
    let n = g.len();
    let mut m: Vec<Vec<f64>> = g.to_vec();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] -= x;
    }
    let mut neg = 0;
    for p in 0..n {
        let mut d = m[p][p];
        if d == 0.0 {
            d = -1e-300;
        }
        if d < 0.0 {
            neg += 1;
        }
        for i in p + 1..n {
            let f = m[i][p] / d;
            for j in p + 1..n {
                m[i][j] -= f * m[p][j];
            }
        }
    }
    neg
}

/// The `idx`-th smallest eigenvalue (0-based) by bisection on the inertia count.
pub fn eig_bisect(g: &[Vec<f64>], idx: usize) -> f64 {
    let n = g.len();
    // Gershgorin interval
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r: f64 = (0..n).filter(|&j| j != i).map(|j| g[i][j].abs()).sum();
        lo = lo.min(g[i][i] - r);
        hi = hi.max(g[i][i] + r);
    }
    lo -= 1.0;
    hi += 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if count_below(g, mid) > idx {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-15 * (1.0 + hi.abs().max(lo.abs())) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Eigenvalues of a symmetric matrix of order at most 3 from the roots of
/// its characteristic polynomial, ascending.
pub fn charpoly_eigs(g: &[Vec<f64>]) -> Vec<f64> {
    match g.len() {
        1 => vec![g[0][0]],
        2 => {
            let (a, b, d) = (g[0][0], g[0][1], g[1][1]);
            let mean = 0.5 * (a + d);
            let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            vec![mean - rad, mean + rad]
        }
        3 => {
            // trigonometric solution for real symmetric 3×3
            let p1 = g[0][1].powi(2) + g[0][2].powi(2) + g[1][2].powi(2);
            let q = (g[0][0] + g[1][1] + g[2][2]) / 3.0;
            let p2 = (g[0][0] - q).powi(2) + (g[1][1] - q).powi(2) + (g[2][2] - q).powi(2) + 2.0 * p1;
            let p = (p2 / 6.0).sqrt();
            if p == 0.0 {
                return vec![q; 3];
            }
            let b: Vec<Vec<f64>> = (0..3)
                .map(|i| (0..3).map(|j| (g[i][j] - if i == j { q } else { 0.0 }) / p).collect())
                .collect();
            let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
                - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
                + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
            let r = (det / 2.0).clamp(-1.0, 1.0);
            let phi = r.acos() / 3.0;
            let e1 = q + 2.0 * p * phi.cos();
            let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
            let e2 = 3.0 * q - e1 - e3;
            let mut v = vec![e1, e2, e3];
            v.sort_by(f64::total_cmp);
            v
        }
        _ => panic!("charpoly oracle handles order <= 3"),
    }
}

fn combos(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    combos(n, k)
}

/// `A_SᵀA_S` formed by a direct double loop over rows.
pub fn sub_gram(a: &[Vec<f64>], s: &[usize]) -> Vec<Vec<f64>> {
    s.iter()
        .map(|&i| s.iter().map(|&j| a.iter().map(|row| row[i] * row[j]).sum()).collect())
        .collect()
}

/// Independent `δ_K`: explicit loop over lexicographic subsets, sub-Gram by
/// row sums, eigenvalues from the characteristic polynomial (`K ≤ 3`) or
/// inertia bisection. Returns `(delta, witness)`.
pub fn ric_oracle(a: &DenseMatrix, k: usize) -> (f64, Vec<usize>) {
    let rows = to_rows(a);
    let mut best = (-1.0, Vec::new());
    for s in subsets(a.cols(), k) {
        let g = sub_gram(&rows, &s);
        let (lo, hi) = if k <= 3 {
            let e = charpoly_eigs(&g);
            (e[0], e[k - 1])
        } else {
            (eig_bisect(&g, 0), eig_bisect(&g, k - 1))
        };
        let d = (hi - 1.0).max(1.0 - lo).max(0.0);
        if d > best.0 {
            best = (d, s);
        }
    }
    best
}

/// Solves `M z = b` by Gaussian elimination with partial pivoting.
pub fn solve(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for p in 0..n {
        let piv = (p..n).max_by(|&i, &j| m[i][p].abs().total_cmp(&m[j][p].abs())).unwrap();
        m.swap(p, piv);
        b.swap(p, piv);
        for i in p + 1..n {
            let f = m[i][p] / m[p][p];
            for j in p..n {
                m[i][j] -= f * m[p][j];
            }
            b[i] -= f * b[p];
        }
    }
    let mut z = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * z[j]).sum();
        z[i] = (b[i] - s) / m[i][i];
    }
    z
}

/// Least squares on columns `s` via the normal equations; returns the
/// coefficients and the residual norm.
pub fn ls_oracle(a: &DenseMatrix, y: &[f64], s: &[usize]) -> (Vec<f64>, f64) {
    let rows = to_rows(a);
    let g = sub_gram(&rows, s);
    let rhs: Vec<f64> = s.iter().map(|&j| rows.iter().zip(y).map(|(r, yi)| r[j] * yi).sum()).collect();
    let z = solve(g, rhs);
    let res: f64 = rows
        .iter()
        .zip(y)
        .map(|(r, yi)| {
            let fit: f64 = s.iter().zip(&z).map(|(&j, c)| r[j] * c).sum();
            (yi - fit).powi(2)
        })
        .sum();
    (z, res.sqrt())
}
