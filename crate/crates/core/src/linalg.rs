//! Small dense helpers for Hermitian matrices and restricted inverses.

use nalgebra::linalg::SymmetricEigen;
use num_complex::Complex64;

use crate::{CMat, CVec, Error, Result};

pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(hermitize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

pub fn spectral_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

pub fn min_singular_value(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().min()
}

/// Orthogonal projector `V V^dagger` onto the span of orthonormal columns.
pub fn projector(basis: &CMat) -> CMat {
    basis * basis.adjoint()
}

/// Inverse of `X` restricted to the span of the orthonormal columns of `V`,
/// returned as an operator on the full space: `V (V^dagger X V)^-1 V^dagger`.
pub fn restricted_inverse(basis: &CMat, x: &CMat) -> Result<CMat> {
    let n = x.nrows();
    if basis.ncols() == 0 {
        return Ok(CMat::zeros(n, n));
    }
    let compressed = basis.adjoint() * x * basis;
    let inv = compressed.try_inverse().ok_or_else(|| Error::Numerical("compressed block is singular".into()))?;
    Ok(basis * inv * basis.adjoint())
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn from_real_diagonal(values: &[f64]) -> CMat {
    let n = values.len();
    CMat::from_fn(n, n, |i, j| if i == j { Complex64::new(values[i], 0.0) } else { Complex64::new(0.0, 0.0) })
}

/// Columns of `m` selected by index.
pub fn select_columns(m: &CMat, cols: &[usize]) -> CMat {
    let mut out = CMat::zeros(m.nrows(), cols.len());
    for (k, &c) in cols.iter().enumerate() {
        out.set_column(k, &m.column(c));
    }
    out
}

pub fn vector_norm(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Condition number estimate in the 1-norm from an explicit inverse.
pub fn condition_1(m: &CMat, inv: &CMat) -> f64 {
    norm_1(m) * norm_1(inv)
}

pub fn norm_1(m: &CMat) -> f64 {
    (0..m.ncols()).map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
