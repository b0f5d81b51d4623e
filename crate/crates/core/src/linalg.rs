//! Small dense complex linear-algebra helpers built on nalgebra.
//!
//! Subspaces of ℂᴺ are passed around as matrices whose columns span them.
//! Rank decisions use the scale-aware tolerance `N · ε_mach · σ_max`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Converts a real matrix to a complex one.
pub fn complexify(m: &DMatrix<f64>) -> CMat {
    m.map(c)
}

/// SVD of `m` with singular values sorted in decreasing order.
///
/// When `m` has fewer columns than rows it is padded with zero columns so the
/// returned left factor is a full unitary `nrows × nrows` matrix.
pub fn full_left_svd(m: &CMat) -> (CMat, Vec<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (CMat::zeros(0, 0), Vec::new());
    }
    let padded = if m.ncols() < n {
        let mut p = CMat::zeros(n, n);
        p.view_mut((0, 0), (n, m.ncols())).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let mut u_sorted = CMat::zeros(n, u.ncols());
    for (dst, &src) in order.iter().enumerate() {
        u_sorted.set_column(dst, &u.column(src));
    }
    let sv_sorted = order.iter().map(|&i| sv[i]).collect();
    (u_sorted, sv_sorted)
}

/// Singular values in decreasing order. Empty for empty matrices.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn rank_tolerance(dim: usize, sigma_max: f64) -> f64 {
    dim.max(1) as f64 * f64::EPSILON * sigma_max
}

/// Numerical rank with the default scale-aware tolerance.
pub fn rank(m: &CMat) -> usize {
    let sv = singular_values(m);
    let Some(&smax) = sv.first() else { return 0 };
    if smax == 0.0 {
        return 0;
    }
    let tol = rank_tolerance(m.nrows().max(m.ncols()), smax);
    sv.iter().filter(|&&s| s > tol).count()
}

/// Orthonormal basis of the column range of `m`.
pub fn orthonormal_range(m: &CMat) -> CMat {
    let n = m.nrows();
    if n == 0 || m.ncols() == 0 {
        return CMat::zeros(n, 0);
    }
    let r = rank(m);
    let (u, _) = full_left_svd(m);
    u.columns(0, r).into_owned()
}

/// Orthonormal basis of the Hermitian orthogonal complement of the column
/// range of `m` (an `nrows × (nrows - rank)` matrix).
pub fn orthogonal_complement(m: &CMat) -> CMat {
    let n = m.nrows();
    if m.ncols() == 0 {
        return CMat::identity(n, n);
    }
    let r = rank(m);
    let (u, _) = full_left_svd(m);
    u.columns(r, n - r).into_owned()
}

/// Scales each row to unit ∞-norm; zero rows are left alone.
pub fn row_equilibrate(m: &CMat) -> CMat {
    let mut out = m.clone();
    for mut row in out.row_iter_mut() {
        let norm = row.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if norm > 0.0 {
            row /= c(norm);
        }
    }
    out
}

/// Extreme singular values `(σ_min, σ_max)` of a square matrix; `(0, 0)` if empty.
pub fn extreme_singular_values(m: &CMat) -> (f64, f64) {
    let sv = singular_values(m);
    match (sv.last(), sv.first()) {
        (Some(&lo), Some(&hi)) if m.nrows() == m.ncols() => (lo, hi),
        (_, Some(&hi)) => (0.0, hi),
        _ => (0.0, 0.0),
    }
}

/// Moore–Penrose pseudo-inverse of a full-column-rank matrix.
pub fn left_inverse(m: &CMat) -> Option<CMat> {
    let gram = m.adjoint() * m;
    gram.try_inverse().map(|g| g * m.adjoint())
}

pub fn block_diag(diag: &[Complex64]) -> CMat {
    CMat::from_diagonal(&CVec::from_column_slice(diag))
}

/// Largest imaginary part magnitude of the entries.
pub fn max_imag(m: &CMat) -> f64 {
    m.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
}

/// Indices of a maximal linearly independent set of columns of a real
/// matrix, found by Gaussian elimination with column pivoting.
pub fn independent_columns(m: &DMatrix<f64>, tol: f64) -> Vec<usize> {
    let mut a = m.clone();
    let (rows, cols) = a.shape();
    let mut chosen = Vec::new();
    let mut remaining: Vec<usize> = (0..cols).collect();
    let mut pivot_row = 0;
    while pivot_row < rows && !remaining.is_empty() {
        // pick the remaining column with the largest entry in the active rows
        let mut best = None;
        let mut best_val = tol;
        for (pos, &j) in remaining.iter().enumerate() {
            for i in pivot_row..rows {
                if a[(i, j)].abs() > best_val {
                    best_val = a[(i, j)].abs();
                    best = Some((pos, i));
                }
            }
        }
        let Some((pos, i)) = best else { break };
        let j = remaining.remove(pos);
        a.swap_rows(pivot_row, i);
        let pivot = a[(pivot_row, j)];
        for r in (pivot_row + 1)..rows {
            let f = a[(r, j)] / pivot;
            if f != 0.0 {
                for k in 0..cols {
                    let v = a[(pivot_row, k)];
                    a[(r, k)] -= f * v;
                }
            }
        }
        chosen.push(j);
        pivot_row += 1;
    }
    chosen.sort_unstable();
    chosen
}
