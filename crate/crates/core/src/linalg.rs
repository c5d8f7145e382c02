//! Dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

pub const J: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Unit-modulus complex number with the given phase.
#[inline]
pub fn cis(phase: f64) -> C64 {
    C64::from_polar(1.0, phase)
}

/// Hermitian eigendecomposition with eigenvalues sorted in descending order.
///
/// Returns `(eigenvalues, eigenvectors)` where column `k` of the second matrix
/// pairs with entry `k` of the first.
pub fn hermitian_eigh_desc(m: &CMat) -> (RVec, CMat) {
    let n = m.nrows();
    // symmetrize before handing to the solver
    let h = (m + m.adjoint()).scale(0.5);
    let eig = nalgebra::SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = RVec::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vecs = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// Inverse of a Hermitian positive definite matrix via Cholesky.
pub fn hpd_inverse(m: &CMat) -> Result<CMat> {
    let h = (m + m.adjoint()).scale(0.5);
    h.cholesky()
        .map(|ch| ch.inverse())
        .ok_or_else(|| Error::Singular("matrix is not positive definite".into()))
}

/// Largest singular value.
pub fn spectral_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Element-wise product `a ⊙ b`.
pub fn hadamard(a: &CMat, b: &CMat) -> Result<CMat> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "hadamard of {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(a.component_mul(b))
}

/// Real quadratic form `Re(xᴴ M x)`.
pub fn quad_form(x: &CVec, m: &CMat) -> f64 {
    x.dotc(&(m * x)).re
}

/// Complex quadratic form `xᴴ M x` (imaginary part kept for diagnostics).
pub fn quad_form_c(x: &CVec, m: &CMat) -> C64 {
    x.dotc(&(m * x))
}

/// Outer product `a bᴴ`.
pub fn outer(a: &CVec, b: &CVec) -> CMat {
    a * b.adjoint()
}

/// Block-diagonal matrix from square blocks.
pub fn block_diag(blocks: &[CMat]) -> CMat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        out.view_mut((r0, c0), b.shape()).copy_from(b);
        r0 += b.nrows();
        c0 += b.ncols();
    }
    out
}

/// Stack vectors vertically.
pub fn vstack(parts: &[CVec]) -> CVec {
    let n: usize = parts.iter().map(|p| p.len()).sum();
    let mut out = CVec::zeros(n);
    let mut off = 0;
    for p in parts {
        out.rows_mut(off, p.len()).copy_from(p);
        off += p.len();
    }
    out
}

/// Relative difference `|a-b| / max(|a|,|b|,floor)`.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    (a - b).abs() / scale
}

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigh_sorted_and_reconstructs() {
        let a = CMat::from_row_slice(
            2,
            2,
            &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(3.0, 0.0)],
        );
        let (vals, vecs) = hermitian_eigh_desc(&a);
        assert!(vals[0] >= vals[1]);
        let lam = CMat::from_diagonal(&vals.map(|v| c(v, 0.0)));
        let rec = &vecs * lam * vecs.adjoint();
        assert!((rec - a).norm() < 1e-12);
    }

    #[test]
    fn block_diag_layout() {
        let a = CMat::from_element(1, 1, c(1.0, 0.0));
        let b = CMat::from_element(2, 2, c(2.0, 0.0));
        let d = block_diag(&[a, b]);
        assert_eq!(d.shape(), (3, 3));
        assert_eq!(d[(0, 1)], c(0.0, 0.0));
        assert_eq!(d[(2, 2)], c(2.0, 0.0));
    }

    #[test]
    fn hadamard_rejects_mismatch() {
        let a = CMat::zeros(2, 2);
        let b = CMat::zeros(3, 3);
        assert!(hadamard(&a, &b).is_err());
    }
}
