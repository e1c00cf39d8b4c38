//! Small dense linear-algebra helpers shared by the public modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub(crate) const EIGEN_FLOOR: f64 = 1e-300;

pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub(crate) fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

pub(crate) fn asymmetry(m: &DMatrix<f64>) -> f64 {
    max_abs_diff(m, &m.transpose())
}

pub(crate) fn require_square(m: &DMatrix<f64>) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

/// Returns the half order `n` of a square even-order matrix.
pub(crate) fn require_even_square(m: &DMatrix<f64>) -> Result<usize> {
    let order = require_square(m)?;
    if order == 0 || order % 2 != 0 {
        return Err(Error::Dimension(format!(
            "expected a 2n x 2n matrix, got {order}x{order}"
        )));
    }
    Ok(order / 2)
}

pub(crate) fn require_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidParameter("matrix has non-finite entries".into()))
    }
}

/// Symmetry check relative to the matrix scale.
pub(crate) fn require_symmetric(m: &DMatrix<f64>, tol: f64) -> Result<()> {
    require_square(m)?;
    require_finite(m)?;
    let asym = asymmetry(m);
    if asym > tol * max_abs(m).max(1.0) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    Ok(())
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted
/// ascending and each eigenvector's largest-magnitude entry made positive.
pub(crate) fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        let pivot = col
            .iter()
            .copied()
            .fold(0.0_f64, |acc, v| if v.abs() > acc.abs() + 1e-12 { v } else { acc });
        if pivot < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(dst, &col);
    }
    (values, vectors)
}

pub(crate) fn min_sym_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Applies `f` to the spectrum of a symmetric matrix.
pub(crate) fn sym_function(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let (values, vectors) = sym_eigen(m);
    let scaled = DMatrix::from_diagonal(&values.map(f));
    symmetrize(&(&vectors * scaled * vectors.transpose()))
}

pub(crate) fn require_spd(m: &DMatrix<f64>, tol: f64) -> Result<()> {
    require_symmetric(m, tol)?;
    let min = min_sym_eigenvalue(m);
    if !(min > 0.0) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
    }
    Ok(())
}

fn checked_spectrum(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let (values, vectors) = sym_eigen(m);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > EIGEN_FLOOR) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
    }
    Ok((values, vectors))
}

pub(crate) fn spd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (values, vectors) = checked_spectrum(m)?;
    let d = DMatrix::from_diagonal(&values.map(f64::sqrt));
    Ok(symmetrize(&(&vectors * d * vectors.transpose())))
}

pub(crate) fn spd_inv_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (values, vectors) = checked_spectrum(m)?;
    let d = DMatrix::from_diagonal(&values.map(|v| 1.0 / v.sqrt()));
    Ok(symmetrize(&(&vectors * d * vectors.transpose())))
}

pub(crate) fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (values, vectors) = checked_spectrum(m)?;
    let d = DMatrix::from_diagonal(&values.map(|v| 1.0 / v));
    Ok(symmetrize(&(&vectors * d * vectors.transpose())))
}

pub(crate) fn inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    require_square(m)?;
    let inv = m.clone().try_inverse().ok_or(Error::Singular)?;
    if inv.iter().all(|v| v.is_finite()) {
        Ok(inv)
    } else {
        Err(Error::Singular)
    }
}

/// Splits a 2n x 2n matrix into its four n x n blocks.
pub(crate) fn blocks(
    m: &DMatrix<f64>,
) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let n = m.nrows() / 2;
    (
        m.view((0, 0), (n, n)).into_owned(),
        m.view((0, n), (n, n)).into_owned(),
        m.view((n, 0), (n, n)).into_owned(),
        m.view((n, n), (n, n)).into_owned(),
    )
}

pub(crate) fn from_blocks(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
) -> DMatrix<f64> {
    let n = a.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(a);
    m.view_mut((0, n), (n, n)).copy_from(b);
    m.view_mut((n, 0), (n, n)).copy_from(c);
    m.view_mut((n, n), (n, n)).copy_from(d);
    m
}

pub(crate) fn from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Dimension("ragged or empty matrix".into()));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub(crate) fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Volume of the Euclidean unit ball in `n` dimensions, `pi^(n/2) / Gamma(n/2 + 1)`.
pub(crate) fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / n as f64 * unit_ball_volume(n - 2),
    }
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn unit_ball_volumes() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn sqrt_and_inverse_sqrt() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let r = spd_sqrt(&m).unwrap();
        assert!(max_abs_diff(&(&r * &r), &m) < 1e-13);
        let ri = spd_inv_sqrt(&m).unwrap();
        assert!(max_abs_diff(&(&ri * &r), &DMatrix::identity(2, 2)) < 1e-13);
    }

    #[test]
    fn blocks_round_trip() {
        let m = DMatrix::from_fn(4, 4, |i, j| (i * 4 + j) as f64);
        let (a, b, c, d) = blocks(&m);
        assert_eq!(from_blocks(&a, &b, &c, &d), m);
    }

    #[test]
    fn rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(spd_sqrt(&m).is_err());
        assert!(require_spd(&m, 1e-12).is_err());
    }
}
