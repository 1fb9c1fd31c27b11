//! Dense complex linear algebra used by the estimators.
//!
//! Decompositions are delegated to `faer`; this module adapts them to plain
//! `Vec`-based inputs and outputs.
//!
//! The matrices here are small, so decompositions run single-threaded; the
//! bench harness parallelizes across trials instead. This also keeps results
//! independent of the calling thread, which a shared pool would not.

use std::sync::Once;

use faer::{Mat, Par};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = Mat<Complex64>;

fn sequential() {
    static INIT: Once = Once::new();
    INIT.call_once(|| faer::set_global_parallelism(Par::Seq));
}

/// Square Hankel matrix `H[p][q] = samples[p + q]` (0-based) from the first
/// `2n − 1` samples.
pub fn hankel(samples: &[Complex64], n: usize) -> Result<CMat> {
    if n == 0 {
        return Err(Error::Validation("pencil size must be at least 1".into()));
    }
    let needed = 2 * n - 1;
    if samples.len() < needed {
        return Err(Error::InsufficientSamples { needed, got: samples.len() });
    }
    Ok(Mat::from_fn(n, n, |p, q| samples[p + q]))
}

pub struct Svd {
    pub u: CMat,
    /// Non-increasing.
    pub s: Vec<f64>,
    pub v: CMat,
}

/// Full SVD `A = U·diag(s)·V^H`.
pub fn svd(a: &CMat) -> Result<Svd> {
    sequential();
    let d = a
        .svd()
        .map_err(|e| Error::EigenSolverFailure(format!("SVD did not converge: {e:?}")))?;
    Ok(Svd {
        u: d.U().to_owned(),
        s: d.S().column_vector().iter().map(|z| z.re).collect(),
        v: d.V().to_owned(),
    })
}

/// Thin SVD of a tall or wide matrix.
pub fn thin_svd(a: &CMat) -> Result<Svd> {
    sequential();
    let d = a
        .thin_svd()
        .map_err(|e| Error::EigenSolverFailure(format!("SVD did not converge: {e:?}")))?;
    Ok(Svd {
        u: d.U().to_owned(),
        s: d.S().column_vector().iter().map(|z| z.re).collect(),
        v: d.V().to_owned(),
    })
}

/// Eigenvalues and right eigenvectors (as columns) of a square matrix.
pub fn eig(a: &CMat) -> Result<(Vec<Complex64>, CMat)> {
    sequential();
    let e = a
        .eigen()
        .map_err(|e| Error::EigenSolverFailure(format!("eigendecomposition failed: {e:?}")))?;
    let values: Vec<Complex64> = e.S().column_vector().iter().copied().collect();
    Ok((values, e.U().to_owned()))
}

pub fn frobenius(a: &CMat) -> f64 {
    let mut sum = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            sum += a[(i, j)].norm_sqr();
        }
    }
    sum.sqrt()
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `A·v`.
pub fn mat_vec(a: &CMat, v: &[Complex64]) -> Vec<Complex64> {
    debug_assert_eq!(a.ncols(), v.len());
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)] * v[j]).sum())
        .collect()
}

/// `u^H·A·u`.
pub fn quad_form(a: &CMat, u: &[Complex64]) -> Complex64 {
    mat_vec(a, u).iter().zip(u).map(|(au, ui)| ui.conj() * au).sum()
}

pub fn column(a: &CMat, j: usize) -> Vec<Complex64> {
    (0..a.nrows()).map(|i| a[(i, j)]).collect()
}

/// Leading `k` columns.
pub fn leading_columns(a: &CMat, k: usize) -> CMat {
    Mat::from_fn(a.nrows(), k, |i, j| a[(i, j)])
}

pub fn sub(a: &CMat, b: &CMat) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] - b[(i, j)])
}
