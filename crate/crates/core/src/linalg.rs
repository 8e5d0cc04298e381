//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::{CMatrix, CVector, Complex64};

const SVD_EPS: f64 = 1e-15;
const SVD_MAX_ITER: usize = 10_000;

/// Left singular vectors and singular values (descending) of `m`, economy size.
///
/// `mode` is only used to label a convergence failure.
pub fn left_singular(m: &CMatrix, mode: usize) -> Result<(CMatrix, Vec<f64>)> {
    let rank = m.nrows().min(m.ncols());
    if rank == 0 {
        return Ok((CMatrix::zeros(m.nrows(), 0), Vec::new()));
    }
    // Wide unfoldings are far cheaper to decompose through their adjoint.
    let (u, s) = if m.ncols() > m.nrows() {
        let svd = m
            .adjoint()
            .try_svd(false, true, SVD_EPS, SVD_MAX_ITER)
            .ok_or(Error::SvdNonConvergence { mode })?;
        let vt = svd.v_t.expect("right vectors requested");
        (vt.adjoint(), svd.singular_values)
    } else {
        let svd = m
            .clone()
            .try_svd(true, false, SVD_EPS, SVD_MAX_ITER)
            .ok_or(Error::SvdNonConvergence { mode })?;
        (svd.u.expect("left vectors requested"), svd.singular_values)
    };
    Ok((u, s.iter().copied().collect()))
}

/// Singular values of `m` in descending order.
pub fn singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    let svd = m
        .clone()
        .try_svd(false, false, SVD_EPS, SVD_MAX_ITER)
        .ok_or_else(|| Error::Numeric("SVD did not converge".into()))?;
    Ok(svd.singular_values.iter().copied().collect())
}

/// SVD-based least squares solution of `a x = b`.
///
/// Fails when `a` is numerically rank deficient (relative tolerance `rcond`).
pub fn lstsq(a: &CMatrix, b: &CMatrix, rcond: f64) -> Result<CMatrix> {
    if a.nrows() < a.ncols() {
        return Err(Error::Numeric(format!(
            "underdetermined least squares ({}x{})",
            a.nrows(),
            a.ncols()
        )));
    }
    let svd = a
        .clone()
        .try_svd(true, true, SVD_EPS, SVD_MAX_ITER)
        .ok_or_else(|| Error::Numeric("SVD did not converge".into()))?;
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= rcond * smax {
        return Err(Error::Numeric(format!(
            "rank-deficient least squares (sigma_min/sigma_max = {:.3e})",
            if smax > 0.0 { smin / smax } else { 0.0 }
        )));
    }
    svd.solve(b, 0.0).map_err(|e| Error::Numeric(e.to_string()))
}

/// Residual Frobenius norm of the least-squares fit of `b` by the columns of `a`.
///
/// Rank-deficient `a` returns `None`.
pub fn lstsq_residual(a: &CMatrix, b: &CMatrix, rcond: f64) -> Option<f64> {
    let x = lstsq(a, b, rcond).ok()?;
    Some((b - a * x).norm())
}

/// Frobenius norm of `m - I`, maximum entry magnitude.
pub fn max_abs_deviation_from_identity(m: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((m[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Column vector from a slice.
pub fn cvec(values: &[Complex64]) -> CVector {
    CVector::from_column_slice(values)
}

/// Real part of a complex matrix.
pub fn real_part(m: &CMatrix) -> DMatrix<f64> {
    m.map(|z| z.re)
}

/// Median of a non-empty sample (mean of the two central values for even length).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty sample");
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
