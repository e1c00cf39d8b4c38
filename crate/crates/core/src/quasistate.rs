//! Lagrangian planes and frames, quasi states `S(X x X^hbar)`, and the
//! symplectic capacities of ellipsoids and dual pairs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::convbody::{self, inclusion_scale, ConvexBody, VolumeEstimate};
use crate::error::{Error, Result};
use crate::gaussian::QuantumBlob;
use crate::linalg;
use crate::symplin::{
    generator_ml, j_matrix, symplectic_eigenvalues, williamson, SymplecticMatrix,
    DEFAULT_SYMPLECTIC_TOL,
};

pub const LAGRANGIAN_TOL: f64 = 1e-9;
pub const RANK_TOL: f64 = 1e-9;
/// Maximal distance of `z'` from the second plane in the polar-dual check.
pub const ON_PLANE_TOL: f64 = 1e-8;
/// Slack on `lambda_max >= 1` for the general capacity formula.
pub const INCLUSION_TOL: f64 = 1e-9;
pub const DEFAULT_ORBIT_SAMPLES: usize = 10_000;

fn column_normalized(basis: &DMatrix<f64>) -> DMatrix<f64> {
    let mut b = basis.clone();
    for mut col in b.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    b
}

fn smallest_singular_value(m: &DMatrix<f64>) -> f64 {
    m.clone().singular_values().iter().copied().fold(f64::INFINITY, f64::min)
}

fn require_full_rank(basis: &DMatrix<f64>) -> Result<()> {
    let sigma_min = smallest_singular_value(&column_normalized(basis));
    if !(sigma_min > RANK_TOL) {
        return Err(Error::RankDeficient { sigma_min });
    }
    Ok(())
}

fn lagrangian_defect(basis: &DMatrix<f64>) -> f64 {
    let n = basis.ncols();
    let b = column_normalized(basis);
    linalg::max_abs(&(b.transpose() * j_matrix(n) * &b))
}

fn require_plane_shape(basis: &DMatrix<f64>) -> Result<usize> {
    let n = basis.ncols();
    if n == 0 || basis.nrows() != 2 * n {
        return Err(Error::Dimension(format!(
            "plane basis must be 2n x n, got {}x{}",
            basis.nrows(),
            basis.ncols()
        )));
    }
    linalg::require_finite(basis)?;
    Ok(n)
}

/// Whether the span of `basis` (a full-rank `2n x n` matrix) is Lagrangian.
pub fn plane_is_lagrangian(basis: &DMatrix<f64>, tol: f64) -> Result<bool> {
    require_plane_shape(basis)?;
    require_full_rank(basis)?;
    Ok(lagrangian_defect(basis) <= tol)
}

/// An `n`-dimensional subspace of phase space on which `sigma` vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianPlane {
    basis: DMatrix<f64>,
}

impl LagrangianPlane {
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        require_plane_shape(&basis)?;
        require_full_rank(&basis)?;
        let defect = lagrangian_defect(&basis);
        if defect > LAGRANGIAN_TOL {
            return Err(Error::NotLagrangian { defect });
        }
        Ok(Self { basis })
    }

    /// `l_X = R^n x 0`.
    pub fn position(n: usize) -> Self {
        let mut b = DMatrix::zeros(2 * n, n);
        b.view_mut((0, 0), (n, n)).fill_with_identity();
        Self { basis: b }
    }

    /// `l_P = 0 x R^n`.
    pub fn momentum(n: usize) -> Self {
        let mut b = DMatrix::zeros(2 * n, n);
        b.view_mut((n, 0), (n, n)).fill_with_identity();
        Self { basis: b }
    }

    /// Graph `{ (x, P x) }` of a symmetric matrix.
    pub fn graph(p: &DMatrix<f64>) -> Result<Self> {
        let n = linalg::require_square(p)?;
        let mut b = DMatrix::zeros(2 * n, n);
        b.view_mut((0, 0), (n, n)).fill_with_identity();
        b.view_mut((n, 0), (n, n)).copy_from(p);
        Self::new(b)
    }

    pub fn n(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Orthonormal basis of the same plane.
    pub fn orthonormal_basis(&self) -> DMatrix<f64> {
        let gram = self.basis.transpose() * &self.basis;
        &self.basis * linalg::spd_inv_sqrt(&gram).expect("full rank by construction")
    }

    /// Euclidean distance of `z` from the plane.
    pub fn distance(&self, z: &DVector<f64>) -> f64 {
        let q = self.orthonormal_basis();
        (z - &q * (q.transpose() * z)).norm()
    }

    pub fn image(&self, s: &SymplecticMatrix) -> LagrangianPlane {
        LagrangianPlane {
            basis: s.matrix() * &self.basis,
        }
    }

    /// Same subspace, up to `tol` on the orthogonal projectors.
    pub fn same_plane(&self, other: &LagrangianPlane, tol: f64) -> bool {
        let a = self.orthonormal_basis();
        let b = other.orthonormal_basis();
        linalg::max_abs_diff(&(&a * a.transpose()), &(&b * b.transpose())) <= tol
    }
}

/// A pair of transversal Lagrangian planes, stored as the symplectic `S`
/// with `S(l_X)` the first plane and `S(l_P)` the second.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianFrame {
    s: SymplecticMatrix,
}

impl LagrangianFrame {
    pub fn new(s: SymplecticMatrix) -> Self {
        Self { s }
    }

    pub fn canonical(n: usize) -> Self {
        Self::new(SymplecticMatrix::identity(n))
    }

    /// `S = [W1, U2 K]` with `W1` the orthonormalized basis of `l1` and
    /// `K = (W1^T J U2)^{-1}`, so that the cross pairing is the identity.
    pub fn from_planes(l1: &LagrangianPlane, l2: &LagrangianPlane) -> Result<Self> {
        let n = l1.n();
        if l2.n() != n {
            return Err(Error::Dimension(format!(
                "planes of dimension {n} and {}",
                l2.n()
            )));
        }
        let w1 = l1.orthonormal_basis();
        let u2 = l2.orthonormal_basis();
        let mut both = DMatrix::zeros(2 * n, 2 * n);
        both.view_mut((0, 0), (2 * n, n)).copy_from(&w1);
        both.view_mut((0, n), (2 * n, n)).copy_from(&u2);
        if smallest_singular_value(&both) <= RANK_TOL {
            return Err(Error::NotTransversal);
        }
        let pairing = w1.transpose() * j_matrix(n) * &u2;
        let k = linalg::inverse(&pairing).map_err(|_| Error::NotTransversal)?;
        both.view_mut((0, n), (2 * n, n)).copy_from(&(&u2 * k));
        Ok(Self::new(SymplecticMatrix::new(both, 1e-8)?))
    }

    pub fn s(&self) -> &SymplecticMatrix {
        &self.s
    }

    pub fn n(&self) -> usize {
        self.s.n()
    }

    pub fn first_plane(&self) -> LagrangianPlane {
        LagrangianPlane::position(self.n()).image(&self.s)
    }

    pub fn second_plane(&self) -> LagrangianPlane {
        LagrangianPlane::momentum(self.n()).image(&self.s)
    }

    /// A symplectic map carrying this frame's planes onto `other`'s.
    pub fn transition_to(&self, other: &LagrangianFrame) -> SymplecticMatrix {
        other.s.compose(&self.s.inverse())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    /// Onto the first plane along the second.
    First,
    /// Onto the second plane along the first.
    Second,
}

/// The quasi state `S(X x X^hbar)` of a frame and a base body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuasiStateDoc", into = "QuasiStateDoc")]
pub struct QuasiState {
    frame: LagrangianFrame,
    body: ConvexBody,
    hbar: f64,
}

impl QuasiState {
    pub fn new(frame: LagrangianFrame, body: ConvexBody, hbar: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidParameter(format!("hbar must be positive, got {hbar}")));
        }
        if body.dim() != frame.n() {
            return Err(Error::Dimension(format!(
                "body of dimension {} in a frame of dimension {}",
                body.dim(),
                frame.n()
            )));
        }
        Ok(Self { frame, body, hbar })
    }

    pub fn frame(&self) -> &LagrangianFrame {
        &self.frame
    }

    pub fn body(&self) -> &ConvexBody {
        &self.body
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn n(&self) -> usize {
        self.body.dim()
    }

    fn split(&self, w: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let n = self.n();
        (w.rows(0, n).into_owned(), w.rows(n, n).into_owned())
    }

    /// `z` belongs to the quasi state iff `S^{-1} z = (x, p)` has `x` in `X`
    /// and `h_X(p) <= hbar`, each up to the additive `tol`.
    pub fn contains(&self, z: &DVector<f64>, tol: f64) -> Result<bool> {
        if z.len() != 2 * self.n() {
            return Err(Error::Dimension(format!("point of length {}", z.len())));
        }
        let (x, p) = self.split(&self.frame.s.inverse().apply(z));
        Ok(self.body.contains(&x, tol) && self.body.support(&p)? <= self.hbar + tol)
    }

    /// Whether `z'` (on the second plane) lies in the symplectic polar dual
    /// of `X_l = S(X x 0)`: `sup_{z in X_l} sigma(z', z) <= hbar`.
    pub fn symplectic_polar_dual_check(&self, z_prime: &DVector<f64>, tol: f64) -> Result<bool> {
        let n = self.n();
        if z_prime.len() != 2 * n {
            return Err(Error::Dimension(format!("point of length {}", z_prime.len())));
        }
        let offset = self.frame.second_plane().distance(z_prime);
        if offset > ON_PLANE_TOL * z_prime.norm().max(1.0) {
            return Err(Error::OffPlane { offset });
        }
        // sigma(z', S(x, 0)) = (S^T J z') . (x, 0)
        let u = self.frame.s.matrix().transpose() * (j_matrix(n) * z_prime);
        let u = u.rows(0, n).into_owned();
        Ok(self.body.support(&u)? <= self.hbar + tol)
    }

    /// `S Pi S^{-1} z` with `Pi` the coordinate projection onto `l_X` or `l_P`.
    pub fn project(&self, which: Projection, z: &DVector<f64>) -> DVector<f64> {
        let n = self.n();
        let mut w = self.frame.s.inverse().apply(z);
        match which {
            Projection::First => w.rows_mut(n, n).fill(0.0),
            Projection::Second => w.rows_mut(0, n).fill(0.0),
        }
        self.frame.s.apply(&w)
    }

    /// The John ellipsoid `S M_L B^{2n}(sqrt hbar)` of an ellipsoidal quasi
    /// state, where `X = { A x.x <= 1 }` and `L = (hbar A)^{1/2}`.
    pub fn john_blob(&self) -> Result<QuantumBlob> {
        let a = self.body.ellipsoid_shape().ok_or(Error::NotEllipsoidal)?;
        let l = linalg::spd_sqrt(&(a * self.hbar))?;
        let s = self.frame.s.compose(&generator_ml(&l)?);
        QuantumBlob::new(s, DVector::zeros(2 * self.n()), self.hbar)
    }

    /// `Vol(X) Vol(X^hbar)`, which is also the phase-space volume of the
    /// quasi state.
    pub fn mahler_volume(&self, mc_samples: usize, seed: u64) -> Result<VolumeEstimate> {
        self.body.mahler_volume(self.hbar, mc_samples, seed)
    }

    /// Monte Carlo volume of `S(X x X^hbar)` sampled directly in phase space.
    pub fn phase_space_volume(&self, mc_samples: usize, seed: u64) -> Result<VolumeEstimate> {
        let n = self.n();
        let s = self.frame.s.matrix();
        // h_{S K}(e) = h_K(S^T e), and h_{X^hbar}(b) = hbar * gauge_X(b).
        let bounds: Vec<f64> = (0..2 * n)
            .map(|i| {
                let w = s.row(i).transpose();
                let (a, b) = self.split(&w);
                Ok(self.body.support(&a)? + self.hbar * self.body.gauge(&b)?)
            })
            .collect::<Result<_>>()?;
        let s_inv = self.frame.s.inverse().into_matrix();
        convbody::monte_carlo_volume(&bounds, mc_samples, seed, |z| {
            let w = &s_inv * z;
            let (x, p) = self.split(&w);
            self.body.contains(&x, 0.0) && self.body.support(&p).is_ok_and(|h| h <= self.hbar)
        })
    }

    /// `c_max` of a pure quasi state.
    pub fn cmax(&self) -> f64 {
        cmax_quasi_state(self)
    }
}

/// `c(Omega) = pi hbar / lambda_max^sigma(M)` for `Omega = { M z.z <= hbar }`.
pub fn capacity_ellipsoid(m: &DMatrix<f64>, hbar: f64) -> Result<f64> {
    Ok(std::f64::consts::PI * hbar / symplectic_eigenvalues(m)?.max())
}

/// `c_max(S(X x X^hbar)) = 4 hbar`.
pub fn cmax_quasi_state(qs: &QuasiState) -> f64 {
    4.0 * qs.hbar
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CmaxGeneral {
    pub value: f64,
    pub lambda_max: f64,
}

/// `c_max(X x P) = 4 lambda_max hbar` with `lambda_max` the largest `lambda`
/// such that `lambda X^hbar` fits in `P`; requires `X^hbar` inside `P`.
pub fn cmax_general(x: &ConvexBody, p: &ConvexBody, hbar: f64) -> Result<CmaxGeneral> {
    let dual = x.polar_dual(hbar)?;
    let lambda_max = inclusion_scale(&dual, p)?;
    if lambda_max < 1.0 - INCLUSION_TOL {
        return Err(Error::NotContained { scale: lambda_max });
    }
    Ok(CmaxGeneral {
        value: 4.0 * lambda_max * hbar,
        lambda_max,
    })
}

/// Shortest closed characteristic on the boundary of `{ M z.z <= hbar }`.
#[derive(Debug, Clone, PartialEq)]
pub struct HzOrbit {
    /// `pi hbar / lambda_max^sigma(M)`.
    pub action: f64,
    /// Trapezoidal `sum p . dx` over the sampled closed curve.
    pub discrete_action: f64,
    pub curve: Vec<DVector<f64>>,
}

/// The orbit is the circle of radius `sqrt(hbar / lambda)` in the symplectic
/// eigenplane of the largest symplectic eigenvalue, mapped by the Williamson
/// frame; it is traversed so that its action is positive.
pub fn hz_orbit(m: &DMatrix<f64>, hbar: f64, samples: usize) -> Result<HzOrbit> {
    if samples < 3 {
        return Err(Error::InvalidParameter(format!("need at least 3 orbit samples, got {samples}")));
    }
    let w = williamson(m)?;
    let n = w.s.n();
    let lambda = w.values[0];
    let r = (hbar / lambda).sqrt();
    let s = w.s.matrix();
    let e = s.column(0).into_owned();
    let f = s.column(n).into_owned();
    let curve: Vec<DVector<f64>> = (0..samples)
        .map(|k| {
            let theta = std::f64::consts::TAU * k as f64 / samples as f64;
            &e * (r * theta.cos()) - &f * (r * theta.sin())
        })
        .collect();
    Ok(HzOrbit {
        action: std::f64::consts::PI * hbar / lambda,
        discrete_action: closed_curve_action(&curve),
        curve,
    })
}

pub fn hz_orbit_action(m: &DMatrix<f64>, hbar: f64) -> Result<f64> {
    Ok(hz_orbit(m, hbar, DEFAULT_ORBIT_SAMPLES)?.action)
}

/// `sum_k (p_k + p_{k+1})/2 . (x_{k+1} - x_k)` around a closed polygon.
pub fn closed_curve_action(curve: &[DVector<f64>]) -> f64 {
    let len = curve.len();
    if len == 0 {
        return 0.0;
    }
    let n = curve[0].len() / 2;
    (0..len)
        .map(|k| {
            let a = &curve[k];
            let b = &curve[(k + 1) % len];
            (0..n).map(|j| 0.5 * (a[n + j] + b[n + j]) * (b[j] - a[j])).sum::<f64>()
        })
        .sum()
}

#[derive(Serialize, Deserialize)]
struct QuasiStateDoc {
    #[serde(rename = "S")]
    s: Vec<Vec<f64>>,
    body: ConvexBody,
    hbar: f64,
}

impl TryFrom<QuasiStateDoc> for QuasiState {
    type Error = Error;

    fn try_from(doc: QuasiStateDoc) -> Result<Self> {
        let s = SymplecticMatrix::new(linalg::from_rows(&doc.s)?, DEFAULT_SYMPLECTIC_TOL)?;
        QuasiState::new(LagrangianFrame::new(s), doc.body, doc.hbar)
    }
}

impl From<QuasiState> for QuasiStateDoc {
    fn from(q: QuasiState) -> Self {
        QuasiStateDoc {
            s: linalg::to_rows(q.frame.s.matrix()),
            body: q.body,
            hbar: q.hbar,
        }
    }
}
