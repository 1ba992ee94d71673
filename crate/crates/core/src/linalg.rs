//! Small dense linear-algebra helpers layered over `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type RMat = DMatrix<f64>;
pub type CMat = DMatrix<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Eigen-decomposition of a real symmetric matrix, eigenvalues ascending.
pub fn sym_eigen(m: &RMat) -> (Vec<f64>, RMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), RMat::zeros(0, 0));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .total_cmp(&eig.eigenvalues[b])
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = RMat::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Eigen-decomposition of a complex Hermitian matrix, eigenvalues ascending.
pub fn herm_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .total_cmp(&eig.eigenvalues[b])
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMat::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// `m^{-1/2}` for a symmetric positive-definite matrix.
pub fn inv_sqrt_spd(m: &RMat, min_eig: f64, what: &str) -> Result<RMat> {
    let (w, v) = sym_eigen(m);
    if let Some(&lo) = w.first() {
        if lo < min_eig {
            return Err(Error::Numerical(format!(
                "{what}: near-linear dependence (smallest eigenvalue {lo:.3e})"
            )));
        }
    }
    let d = RMat::from_diagonal(&DVector::from_iterator(
        w.len(),
        w.iter().map(|x| 1.0 / x.sqrt()),
    ));
    Ok(&v * d * v.transpose())
}

/// Inverse of a symmetric positive-definite matrix via its eigenbasis.
pub fn inv_spd(m: &RMat, what: &str) -> Result<RMat> {
    let (w, v) = sym_eigen(m);
    if let Some(&lo) = w.first() {
        if lo <= 1e-14 * w.last().copied().unwrap_or(1.0).abs().max(1.0) {
            return Err(Error::Numerical(format!("{what}: matrix is singular")));
        }
    }
    let d = RMat::from_diagonal(&DVector::from_iterator(w.len(), w.iter().map(|x| 1.0 / x)));
    Ok(&v * d * v.transpose())
}

/// `exp(i * h)` for Hermitian `h`.
pub fn expi_hermitian(h: &CMat) -> CMat {
    let (w, v) = herm_eigen(h);
    let d = CMat::from_diagonal(&DVector::from_iterator(
        w.len(),
        w.iter().map(|&x| C64::from_polar(1.0, x)),
    ));
    &v * d * v.adjoint()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMat::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

/// Largest absolute entry.
pub fn max_abs(m: &RMat) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn max_abs_c(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.norm()))
}

/// `‖mᵀ s m − I‖_max`.
pub fn orthonormality_error(m: &RMat, s: &RMat) -> f64 {
    let g = m.transpose() * s * m;
    max_abs(&(g - RMat::identity(m.ncols(), m.ncols())))
}

/// Flip each column so its largest-magnitude component is positive.
/// Ties go to the lowest row index.
pub fn fix_column_signs(m: &mut RMat) {
    for j in 0..m.ncols() {
        let mut best = 0usize;
        for i in 0..m.nrows() {
            if m[(i, j)].abs() > m[(best, j)].abs() + 1e-12 {
                best = i;
            }
        }
        if m[(best, j)] < 0.0 {
            for i in 0..m.nrows() {
                m[(i, j)] = -m[(i, j)];
            }
        }
    }
}

/// Orthonormal basis (columns) of the complement of the span of the
/// orthonormal columns `c` in `R^n`.
pub fn orthogonal_complement(c: &RMat) -> RMat {
    let n = c.nrows();
    let k = c.ncols();
    let proj = RMat::identity(n, n) - c * c.transpose();
    let (w, v) = sym_eigen(&proj);
    // eigenvalues of a projector are 0 (k times) then 1 (n - k times)
    let mut out = RMat::zeros(n, n - k);
    for (col, j) in (k..n).enumerate() {
        debug_assert!((w[j] - 1.0).abs() < 1e-6);
        out.set_column(col, &v.column(j));
    }
    out
}

/// Real symmetric generalized problem `H v = E S v` via canonical
/// orthogonalization: directions of `S` with eigenvalue below
/// `rel_threshold * max` are dropped. Returns ascending eigenvalues.
pub fn canonical_generalized_eigenvalues(h: &RMat, s: &RMat, rel_threshold: f64) -> Result<Vec<f64>> {
    let (w, v) = sym_eigen(s);
    let smax = w.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let keep: Vec<usize> = (0..w.len()).filter(|&i| w[i] > rel_threshold * smax).collect();
    if keep.is_empty() {
        return Err(Error::Numerical("empty retained subspace".into()));
    }
    let x = RMat::from_fn(s.nrows(), keep.len(), |i, j| v[(i, keep[j])] / w[keep[j]].sqrt());
    let hr = x.transpose() * h * &x;
    Ok(sym_eigen(&hr).0)
}
