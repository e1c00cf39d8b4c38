//! Quantum blobs, squeezed coherent states `psi_{X,Y}^{z0}`, their Wigner
//! functions and covariance matrices, and the blob/state correspondence.
//!
//! The squeezing operator is `S_{X,Y} = V_Y M_{X^{1/2}}`, so
//! `S_{X,Y} = [[X^{-1/2}, 0], [-Y X^{-1/2}, X^{1/2}]]` and the state is
//! `(det X / (pi hbar)^n)^{1/4} exp(-(X + iY) x.x / 2 hbar)`.

pub mod grid;

use nalgebra::{Complex, DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::symplin::{
    self, generator_ml, generator_vp, j_matrix, pre_iwasawa, SymplecticMatrix,
    DEFAULT_SYMPLECTIC_TOL,
};

/// Eigenvalue floor for the Hermitian quantum condition.
pub const QUANTUM_TOL: f64 = 1e-10;
/// Relative tolerance on symplectic eigenvalues for saturation (`hbar/2`).
pub const SATURATION_TOL: f64 = 1e-8;
/// Purity above `1 + PURITY_TOL` flags an unphysical covariance matrix.
pub const PURITY_TOL: f64 = 1e-9;

fn check_hbar(hbar: f64) -> Result<()> {
    if hbar > 0.0 && hbar.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("hbar must be positive, got {hbar}")))
    }
}

fn check_center(center: &DVector<f64>, n: usize) -> Result<()> {
    if center.len() != 2 * n {
        return Err(Error::Dimension(format!(
            "center has length {}, expected {}",
            center.len(),
            2 * n
        )));
    }
    if center.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("center has non-finite entries".into()));
    }
    Ok(())
}

/// `T(z0) S (B^{2n}(sqrt(hbar)))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BlobDoc", into = "BlobDoc")]
pub struct QuantumBlob {
    s: SymplecticMatrix,
    center: DVector<f64>,
    hbar: f64,
}

impl QuantumBlob {
    pub fn new(s: SymplecticMatrix, center: DVector<f64>, hbar: f64) -> Result<Self> {
        check_hbar(hbar)?;
        check_center(&center, s.n())?;
        Ok(Self { s, center, hbar })
    }

    /// The ball `B^{2n}(sqrt(hbar))` itself.
    pub fn standard(n: usize, hbar: f64) -> Result<Self> {
        Self::new(SymplecticMatrix::identity(n), DVector::zeros(2 * n), hbar)
    }

    pub fn n(&self) -> usize {
        self.s.n()
    }

    pub fn s(&self) -> &SymplecticMatrix {
        &self.s
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Shape matrix `M` with the blob equal to `{ z : M (z - z0).(z - z0) <= hbar }`.
    pub fn shape(&self) -> DMatrix<f64> {
        let si = self.s.inverse();
        linalg::symmetrize(&(si.matrix().transpose() * si.matrix()))
    }

    pub fn contains(&self, z: &DVector<f64>, tol: f64) -> bool {
        let w = self.s.inverse().apply(&(z - &self.center));
        w.norm_squared() <= self.hbar * (1.0 + tol)
    }

    /// Image under a symplectic map (center included).
    pub fn transformed(&self, s: &SymplecticMatrix) -> QuantumBlob {
        QuantumBlob {
            s: s.compose(&self.s),
            center: s.apply(&self.center),
            hbar: self.hbar,
        }
    }

    /// `(pi hbar)^n / n!`, the volume of `B^{2n}(sqrt(hbar))`.
    pub fn volume(&self) -> f64 {
        let n = self.n();
        (std::f64::consts::PI * self.hbar).powi(n as i32) / linalg::factorial(n)
    }

    /// Deterministic points on the blob boundary.
    pub fn boundary_samples(&self, count: usize, seed: u64) -> Vec<DVector<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = 2 * self.n();
        let radius = self.hbar.sqrt();
        (0..count)
            .map(|_| {
                let u = DVector::from_fn(dim, |_, _| {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    g
                });
                let u = &u * (radius / u.norm());
                self.s.apply(&u) + &self.center
            })
            .collect()
    }

    /// Same set of phase-space points (`S S^T` and center agree to `tol`).
    pub fn same_set(&self, other: &QuantumBlob, tol: f64) -> bool {
        let a = self.s.matrix() * self.s.matrix().transpose();
        let b = other.s.matrix() * other.s.matrix().transpose();
        linalg::max_abs_diff(&a, &b) <= tol * linalg::max_abs(&a).max(1.0)
            && (&self.center - &other.center).amax() <= tol
            && (self.hbar - other.hbar).abs() <= tol * self.hbar
    }
}

/// Parameters `(X, Y, z0)` of `psi_{X,Y}^{z0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GaussianDoc", into = "GaussianDoc")]
pub struct GaussianState {
    x: DMatrix<f64>,
    y: DMatrix<f64>,
    center: DVector<f64>,
    hbar: f64,
}

impl GaussianState {
    pub fn new(x: DMatrix<f64>, y: DMatrix<f64>, center: DVector<f64>, hbar: f64) -> Result<Self> {
        check_hbar(hbar)?;
        let n = linalg::require_square(&x)?;
        if y.nrows() != n || y.ncols() != n {
            return Err(Error::Dimension(format!(
                "X is {n}x{n} but Y is {}x{}",
                y.nrows(),
                y.ncols()
            )));
        }
        linalg::require_spd(&x, 1e-12)?;
        linalg::require_symmetric(&y, 1e-12)?;
        check_center(&center, n)?;
        Ok(Self {
            x: linalg::symmetrize(&x),
            y: linalg::symmetrize(&y),
            center,
            hbar,
        })
    }

    /// The standard coherent state `phi_0^hbar` (`X = I`, `Y = 0`).
    pub fn coherent(n: usize, hbar: f64) -> Result<Self> {
        Self::new(
            DMatrix::identity(n, n),
            DMatrix::zeros(n, n),
            DVector::zeros(2 * n),
            hbar,
        )
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn with_center(&self, center: DVector<f64>) -> Result<Self> {
        Self::new(self.x.clone(), self.y.clone(), center, self.hbar)
    }

    /// `psi(x) = (det X/(pi hbar)^n)^{1/4} e^{(i/hbar)(p0.x - p0.x0/2)} e^{-(X+iY)(x-x0).(x-x0)/2hbar}`.
    pub fn evaluate(&self, x: &DVector<f64>) -> Complex64 {
        let n = self.n();
        assert_eq!(x.len(), n, "dimension mismatch in state evaluation");
        let x0 = self.center.rows(0, n);
        let p0 = self.center.rows(n, n);
        let d = x - x0;
        let hbar = self.hbar;
        let prefactor =
            (self.x.determinant() / (std::f64::consts::PI * hbar).powi(n as i32)).powf(0.25);
        let re = -d.dot(&(&self.x * &d)) / (2.0 * hbar);
        let im = -d.dot(&(&self.y * &d)) / (2.0 * hbar) + (p0.dot(x) - 0.5 * p0.dot(&x0)) / hbar;
        Complex64::from_polar(prefactor * re.exp(), im)
    }

    /// Parameters of `M_L psi` where `M_L psi(x) = sqrt|det L| psi(Lx)`.
    pub fn apply_ml(&self, l: &DMatrix<f64>) -> Result<Self> {
        let n = self.n();
        let ml = generator_ml(l)?;
        let lt = l.transpose();
        Self::new(
            &lt * &self.x * l,
            &lt * &self.y * l,
            ml.apply(&self.center),
            self.hbar,
        )
        .map(|g| {
            debug_assert_eq!(g.n(), n);
            g
        })
    }

    /// Parameters of `V_P psi = e^{-(i/2hbar) P x.x} psi` (up to a constant phase).
    pub fn apply_vp(&self, p: &DMatrix<f64>) -> Result<Self> {
        let vp = generator_vp(p)?;
        Self::new(self.x.clone(), &self.y + p, vp.apply(&self.center), self.hbar)
    }

    /// Parameters of `J psi`, the normalized Fourier transform: `X + iY` maps to
    /// `(X + iY)^{-1}` and `z0` to `J z0`.
    pub fn apply_j(&self) -> Result<Self> {
        let n = self.n();
        let z = DMatrix::from_fn(n, n, |i, j| Complex::new(self.x[(i, j)], self.y[(i, j)]));
        let zi = z.try_inverse().ok_or(Error::Singular)?;
        let x = DMatrix::from_fn(n, n, |i, j| zi[(i, j)].re);
        let y = DMatrix::from_fn(n, n, |i, j| zi[(i, j)].im);
        Self::new(x, y, &j_matrix(n) * &self.center, self.hbar)
    }
}

/// `S_{X,Y} = V_Y M_{X^{1/2}}`.
pub fn squeeze_matrix(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<SymplecticMatrix> {
    let x_half = linalg::spd_sqrt(x)?;
    let vp = generator_vp(y)?;
    Ok(vp.compose(&generator_ml(&x_half)?))
}

/// The bijection from blobs to squeezed coherent states: factor
/// `S = V_P M_L R`, drop `R`, and read off `X = L^2`, `Y = P`.
pub fn blob_to_gaussian(b: &QuantumBlob) -> Result<GaussianState> {
    let f = pre_iwasawa(&b.s)?;
    GaussianState::new(&f.l * &f.l, f.p, b.center.clone(), b.hbar)
}

pub fn gaussian_to_blob(g: &GaussianState) -> Result<QuantumBlob> {
    QuantumBlob::new(squeeze_matrix(&g.x, &g.y)?, g.center.clone(), g.hbar)
}

/// Image of a state under a metaplectic operator covering `s`, computed at
/// the blob level.
pub fn transform_state(g: &GaussianState, s: &SymplecticMatrix) -> Result<GaussianState> {
    blob_to_gaussian(&gaussian_to_blob(g)?.transformed(s))
}

/// `W psi(z) = (pi hbar)^{-n} exp(-G (z - z0).(z - z0) / hbar)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianWigner {
    pub g: DMatrix<f64>,
    pub normalization: f64,
    pub center: DVector<f64>,
    pub hbar: f64,
}

impl GaussianWigner {
    pub fn evaluate(&self, z: &DVector<f64>) -> f64 {
        let d = z - &self.center;
        self.normalization * (-d.dot(&(&self.g * &d)) / self.hbar).exp()
    }
}

/// `G = [[X + Y X^{-1} Y, Y X^{-1}], [X^{-1} Y, X^{-1}]]`, which equals
/// `(S_{X,Y} S_{X,Y}^T)^{-1}`.
pub fn wigner_matrix(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let xi = linalg::spd_inverse(x)?;
    let g = linalg::from_blocks(&(x + y * &xi * y), &(y * &xi), &(&xi * y), &xi);
    Ok(linalg::symmetrize(&g))
}

pub fn wigner_gaussian(g: &GaussianState) -> Result<GaussianWigner> {
    Ok(GaussianWigner {
        g: wigner_matrix(&g.x, &g.y)?,
        normalization: (std::f64::consts::PI * g.hbar).powi(-(g.n() as i32)),
        center: g.center.clone(),
        hbar: g.hbar,
    })
}

/// Covariance matrix `Sigma` of a Gaussian (possibly mixed) state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CovarianceDoc", into = "CovarianceDoc")]
pub struct CovarianceMatrix {
    sigma: DMatrix<f64>,
    hbar: f64,
}

impl CovarianceMatrix {
    pub fn new(sigma: DMatrix<f64>, hbar: f64) -> Result<Self> {
        check_hbar(hbar)?;
        linalg::require_even_square(&sigma)?;
        linalg::require_spd(&sigma, 1e-10)?;
        Ok(Self {
            sigma: linalg::symmetrize(&sigma),
            hbar,
        })
    }

    pub fn n(&self) -> usize {
        self.sigma.nrows() / 2
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// `(Sigma_XX, Sigma_XP, Sigma_PP)`.
    pub fn blocks(&self) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let (xx, xp, _, pp) = linalg::blocks(&self.sigma);
        (xx, xp, pp)
    }

    /// Shape matrix of the covariance ellipsoid `{ z : (1/2) Sigma^{-1} z.z <= 1 }`
    /// written as `{ z : M z.z <= hbar }`, i.e. `M = (hbar/2) Sigma^{-1}`.
    pub fn ellipsoid_shape(&self) -> Result<DMatrix<f64>> {
        Ok(linalg::spd_inverse(&self.sigma)? * (0.5 * self.hbar))
    }

    pub fn symplectic_spectrum(&self) -> Result<symplin::SymplecticSpectrum> {
        symplin::symplectic_eigenvalues(&self.sigma)
    }
}

/// `Sigma = (hbar/2) S S^T`.
pub fn covariance_from_blob(b: &QuantumBlob) -> CovarianceMatrix {
    let s = b.s.matrix();
    CovarianceMatrix {
        sigma: linalg::symmetrize(&(s * s.transpose() * (0.5 * b.hbar))),
        hbar: b.hbar,
    }
}

/// Blob with covariance `Sigma`; requires every symplectic eigenvalue to be
/// `hbar/2`. The returned `S` is the symmetric root of `(2/hbar) Sigma`.
pub fn blob_from_covariance(cov: &CovarianceMatrix) -> Result<QuantumBlob> {
    let spectrum = cov.symplectic_spectrum()?;
    let half = 0.5 * cov.hbar;
    if (spectrum.max() - half).abs() > SATURATION_TOL * half
        || (spectrum.min() - half).abs() > SATURATION_TOL * half
    {
        return Err(Error::NotSaturated {
            min: spectrum.min(),
            max: spectrum.max(),
        });
    }
    let k = &cov.sigma * (2.0 / cov.hbar);
    let s = SymplecticMatrix::new(linalg::spd_sqrt(&k)?, 1e-6)?;
    QuantumBlob::new(s, DVector::zeros(2 * cov.n()), cov.hbar)
}

/// Smallest eigenvalue of the Hermitian matrix `Sigma + (i hbar/2) J`,
/// computed from its real symmetric embedding.
pub fn quantum_margin(cov: &CovarianceMatrix) -> f64 {
    let n = cov.n();
    let b = j_matrix(n) * (0.5 * cov.hbar);
    let emb = linalg::from_blocks(&cov.sigma, &(-&b), &b, &cov.sigma);
    linalg::min_sym_eigenvalue(&emb)
}

/// `Sigma + (i hbar/2) J >= 0` up to `QUANTUM_TOL`.
pub fn quantum_condition(cov: &CovarianceMatrix) -> bool {
    quantum_margin(cov) >= -QUANTUM_TOL
}

#[derive(Debug, Clone)]
pub struct BlobContainment {
    pub contains: bool,
    pub min_symplectic_eigenvalue: f64,
    /// A blob inside the covariance ellipsoid, present when `contains` holds.
    pub witness: Option<QuantumBlob>,
}

/// Whether the covariance ellipsoid contains a quantum blob. The witness is
/// the Williamson frame of `Sigma`, checked by sampling its boundary.
pub fn contains_quantum_blob(cov: &CovarianceMatrix) -> Result<BlobContainment> {
    let w = symplin::williamson(&cov.sigma)?;
    let lambda_min = w.values.iter().copied().fold(f64::INFINITY, f64::min);
    let contains = lambda_min >= 0.5 * cov.hbar - QUANTUM_TOL;
    let mut witness = None;
    if contains {
        // Sigma = T D T^T with T = W^{-T}; the blob T B(sqrt hbar) has
        // covariance (hbar/2) T T^T <= Sigma.
        let t = w.s.inverse().transpose();
        let blob = QuantumBlob::new(t, DVector::zeros(2 * cov.n()), cov.hbar)?;
        let shape = cov.ellipsoid_shape()?;
        for z in blob.boundary_samples(256, 0xB10B) {
            let q = z.dot(&(&shape * &z)) / cov.hbar;
            if q > 1.0 + 1e-8 {
                return Err(Error::NotContained { scale: 1.0 / q.sqrt() });
            }
        }
        witness = Some(blob);
    }
    Ok(BlobContainment {
        contains,
        min_symplectic_eigenvalue: lambda_min,
        witness,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RsMargin {
    /// `dx_j^2 dp_j^2 - cov(x_j, p_j)^2 - hbar^2/4`.
    pub margin: f64,
    pub pass: bool,
}

/// Robertson-Schroedinger inequalities, one per degree of freedom.
pub fn rs_inequalities(cov: &CovarianceMatrix) -> Vec<RsMargin> {
    let n = cov.n();
    let s = &cov.sigma;
    (0..n)
        .map(|j| {
            let (xx, pp, xp) = (s[(j, j)], s[(n + j, n + j)], s[(j, n + j)]);
            let margin = xx * pp - xp * xp - 0.25 * cov.hbar * cov.hbar;
            let scale = (xx * pp).max(0.25 * cov.hbar * cov.hbar);
            RsMargin {
                margin,
                pass: margin >= -1e-10 * scale,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Purity {
    pub value: f64,
    /// Set when the value exceeds one, which no physical state allows.
    pub unphysical: bool,
}

/// `(hbar/2)^n (det Sigma)^{-1/2}`.
pub fn purity(cov: &CovarianceMatrix) -> Purity {
    let n = cov.n();
    let value = (0.5 * cov.hbar).powi(n as i32) / cov.sigma.determinant().sqrt();
    Purity {
        value,
        unphysical: value > 1.0 + PURITY_TOL,
    }
}

pub fn evaluate_state(g: &GaussianState, x: &DVector<f64>) -> Complex64 {
    g.evaluate(x)
}

/// Random covariance matrix `(hbar/2) Q^T D Q` with `Q` symplectic and the
/// diagonal of `D` log-uniform in `[1/4, 4]`; both quantum and non-quantum
/// matrices occur.
pub fn random_covariance(n: usize, hbar: f64, rng: &mut ChaCha8Rng) -> CovarianceMatrix {
    let q = symplin::random_symplectic_with(n, rng);
    let d = DVector::from_fn(2 * n, |_, _| {
        let u: f64 = rng.random_range(-1.0..1.0);
        4f64.powf(u)
    });
    let q = q.matrix();
    let sigma = q.transpose() * DMatrix::from_diagonal(&d) * q * (0.5 * hbar);
    CovarianceMatrix {
        sigma: linalg::symmetrize(&sigma),
        hbar,
    }
}

/// Random state with `X` well conditioned (eigenvalues in `[1/2, 2]`) and
/// `Y` entries of unit scale.
pub fn random_gaussian(n: usize, hbar: f64, rng: &mut ChaCha8Rng) -> GaussianState {
    let o = symplin::random_symmetric(n, 1.0, rng).symmetric_eigen().eigenvectors;
    let lam = DVector::from_fn(n, |_, _| 2f64.powf(rng.random_range(-1.0..1.0)));
    let x = &o * DMatrix::from_diagonal(&lam) * o.transpose();
    let y = symplin::random_symmetric(n, 1.0, rng);
    let center = DVector::from_fn(2 * n, |_, _| rng.random_range(-1.0..1.0) * hbar.sqrt());
    GaussianState::new(linalg::symmetrize(&x), y, center, hbar).expect("valid by construction")
}

/// Random blob `T(z0) S B(sqrt hbar)` with `S` from [`symplin::random_symplectic`].
pub fn random_blob(n: usize, hbar: f64, rng: &mut ChaCha8Rng) -> QuantumBlob {
    let s = symplin::random_symplectic_with(n, rng);
    let center = DVector::from_fn(2 * n, |_, _| rng.random_range(-1.0..1.0) * hbar.sqrt());
    QuantumBlob::new(s, center, hbar).expect("valid by construction")
}

#[derive(Serialize, Deserialize)]
struct BlobDoc {
    #[serde(rename = "S")]
    s: Vec<Vec<f64>>,
    z0: Vec<f64>,
    hbar: f64,
}

impl TryFrom<BlobDoc> for QuantumBlob {
    type Error = Error;

    fn try_from(doc: BlobDoc) -> Result<Self> {
        let s = SymplecticMatrix::new(linalg::from_rows(&doc.s)?, DEFAULT_SYMPLECTIC_TOL)?;
        QuantumBlob::new(s, DVector::from_vec(doc.z0), doc.hbar)
    }
}

impl From<QuantumBlob> for BlobDoc {
    fn from(b: QuantumBlob) -> Self {
        BlobDoc {
            s: linalg::to_rows(b.s.matrix()),
            z0: b.center.iter().copied().collect(),
            hbar: b.hbar,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct GaussianDoc {
    #[serde(rename = "X")]
    x: Vec<Vec<f64>>,
    #[serde(rename = "Y")]
    y: Vec<Vec<f64>>,
    z0: Vec<f64>,
    hbar: f64,
}

impl TryFrom<GaussianDoc> for GaussianState {
    type Error = Error;

    fn try_from(doc: GaussianDoc) -> Result<Self> {
        GaussianState::new(
            linalg::from_rows(&doc.x)?,
            linalg::from_rows(&doc.y)?,
            DVector::from_vec(doc.z0),
            doc.hbar,
        )
    }
}

impl From<GaussianState> for GaussianDoc {
    fn from(g: GaussianState) -> Self {
        GaussianDoc {
            x: linalg::to_rows(&g.x),
            y: linalg::to_rows(&g.y),
            z0: g.center.iter().copied().collect(),
            hbar: g.hbar,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CovarianceDoc {
    #[serde(rename = "Sigma")]
    sigma: Vec<Vec<f64>>,
    hbar: f64,
}

impl TryFrom<CovarianceDoc> for CovarianceMatrix {
    type Error = Error;

    fn try_from(doc: CovarianceDoc) -> Result<Self> {
        CovarianceMatrix::new(linalg::from_rows(&doc.sigma)?, doc.hbar)
    }
}

impl From<CovarianceMatrix> for CovarianceDoc {
    fn from(c: CovarianceMatrix) -> Self {
        CovarianceDoc {
            sigma: linalg::to_rows(&c.sigma),
            hbar: c.hbar,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplin::{random_symplectic, symplecticity_defect};
    use std::f64::consts::PI;

    fn mat(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, data)
    }

    #[test]
    fn standard_blob_is_coherent_state() {
        let g = blob_to_gaussian(&QuantumBlob::standard(2, 0.5).unwrap()).unwrap();
        assert!(linalg::max_abs_diff(g.x(), &DMatrix::identity(2, 2)) < 1e-14);
        assert!(g.y().amax() < 1e-14);
        let b = gaussian_to_blob(&GaussianState::coherent(3, 1.0).unwrap()).unwrap();
        assert_eq!(b.s().matrix(), &DMatrix::identity(6, 6));
    }

    #[test]
    fn squeeze_block_formula() {
        let s = squeeze_matrix(&mat(1, 1, &[4.0]), &mat(1, 1, &[0.0])).unwrap();
        assert!(linalg::max_abs_diff(s.matrix(), &mat(2, 2, &[0.5, 0.0, 0.0, 2.0])) < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let g = random_gaussian(3, 1.0, &mut rng);
            let s = squeeze_matrix(g.x(), g.y()).unwrap();
            assert!(symplecticity_defect(s.matrix()).unwrap() < 1e-12);
        }
    }

    #[test]
    fn generator_blob_matches_reconstruction() {
        let p = mat(2, 2, &[0.3, -0.2, -0.2, 1.1]);
        let l = mat(2, 2, &[1.5, 0.2, 0.2, 0.7]);
        let s = generator_vp(&p).unwrap().compose(&generator_ml(&l).unwrap());
        let blob = QuantumBlob::new(s.clone(), DVector::zeros(4), 1.0).unwrap();
        let g = blob_to_gaussian(&blob).unwrap();
        let s2 = squeeze_matrix(g.x(), g.y()).unwrap();
        let o = s.inverse().matrix() * s2.matrix();
        assert!(linalg::max_abs_diff(&(&o * o.transpose()), &DMatrix::identity(4, 4)) < 1e-12);
    }

    #[test]
    fn round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=3 {
            for _ in 0..50 {
                let g = random_gaussian(n, 0.7, &mut rng);
                let back = blob_to_gaussian(&gaussian_to_blob(&g).unwrap()).unwrap();
                assert!(linalg::max_abs_diff(g.x(), back.x()) < 1e-9);
                assert!(linalg::max_abs_diff(g.y(), back.y()) < 1e-9);
                assert_eq!(g.center(), back.center());
                let b = random_blob(n, 0.7, &mut rng);
                let b2 = gaussian_to_blob(&blob_to_gaussian(&b).unwrap()).unwrap();
                assert!(b.same_set(&b2, 1e-9));
            }
        }
    }

    #[test]
    fn wigner_matrix_two_routes() {
        let g = wigner_gaussian(&GaussianState::coherent(2, 1.0).unwrap()).unwrap();
        assert_eq!(g.g, DMatrix::identity(4, 4));
        assert!((g.normalization - 1.0 / (PI * PI)).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let st = random_gaussian(2, 1.0, &mut rng);
            let s = squeeze_matrix(st.x(), st.y()).unwrap();
            let direct = linalg::inverse(&(s.matrix() * s.matrix().transpose())).unwrap();
            let g = wigner_matrix(st.x(), st.y()).unwrap();
            assert!(linalg::max_abs_diff(&g, &direct) < 1e-10 * linalg::max_abs(&g).max(1.0));
            assert!(symplecticity_defect(&g).unwrap() < 1e-9 * linalg::max_abs(&g).powi(2).max(1.0));
        }
    }

    #[test]
    fn covariance_round_trip_and_purity() {
        let b = QuantumBlob::standard(1, 2.0).unwrap();
        assert_eq!(covariance_from_blob(&b).sigma(), &DMatrix::identity(2, 2));
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in 1..=3 {
            for _ in 0..30 {
                let b = random_blob(n, 1.3, &mut rng);
                let cov = covariance_from_blob(&b);
                assert!((purity(&cov).value - 1.0).abs() < 1e-9);
                let b2 = blob_from_covariance(&cov).unwrap();
                let a = b.s().matrix() * b.s().matrix().transpose();
                let c = b2.s().matrix() * b2.s().matrix().transpose();
                assert!(linalg::max_abs_diff(&a, &c) < 1e-9 * linalg::max_abs(&a));
            }
        }
        let mixed = CovarianceMatrix::new(DMatrix::identity(2, 2), 1.0).unwrap();
        assert!(matches!(blob_from_covariance(&mixed), Err(Error::NotSaturated { .. })));
    }

    #[test]
    fn quantum_condition_examples() {
        let hbar = 0.8;
        let half = CovarianceMatrix::new(DMatrix::identity(2, 2) * (hbar / 2.0), hbar).unwrap();
        assert!(quantum_condition(&half));
        assert!(rs_inequalities(&half).iter().all(|m| m.pass && m.margin.abs() < 1e-15));
        assert!((purity(&half).value - 1.0).abs() < 1e-15);
        let quarter = CovarianceMatrix::new(DMatrix::identity(2, 2) * (hbar / 4.0), hbar).unwrap();
        assert!(!quantum_condition(&quarter));
        assert!((quantum_margin(&quarter) + hbar / 4.0).abs() < 1e-14);
        assert!(purity(&quarter).unphysical);
        let squeezed = CovarianceMatrix::new(DMatrix::from_diagonal(&DVector::from_vec(vec![hbar, hbar / 8.0])), hbar).unwrap();
        assert!(!quantum_condition(&squeezed));
        assert!(!contains_quantum_blob(&squeezed).unwrap().contains);
        let rs = rs_inequalities(&squeezed);
        assert!(!rs[0].pass);
        assert!((rs[0].margin - (hbar * hbar / 8.0 - hbar * hbar / 4.0)).abs() < 1e-15);
        let mixed = CovarianceMatrix::new(DMatrix::identity(2, 2) * hbar, hbar).unwrap();
        assert!((purity(&mixed).value - 0.5).abs() < 1e-15);
    }

    #[test]
    fn criteria_agree_on_random_covariances() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut counts = [0usize; 2];
        for k in 0..400 {
            let n = 1 + k % 3;
            let cov = random_covariance(n, 1.0, &mut rng);
            let q = quantum_condition(&cov);
            let w = contains_quantum_blob(&cov).unwrap();
            assert_eq!(q, w.contains, "{:?}", cov.sigma());
            counts[q as usize] += 1;
            if q {
                assert!(rs_inequalities(&cov).iter().all(|m| m.pass));
            }
        }
        assert!(counts[0] > 20 && counts[1] > 20, "{counts:?}");
    }

    #[test]
    fn blob_covariance_has_itself_as_witness() {
        let b = QuantumBlob::new(random_symplectic(2, 4), DVector::zeros(4), 1.0).unwrap();
        let w = contains_quantum_blob(&covariance_from_blob(&b)).unwrap();
        assert!(w.contains);
        assert!(w.witness.unwrap().same_set(&b, 1e-8));
    }

    #[test]
    fn evaluation_examples() {
        let g = GaussianState::coherent(1, 1.0).unwrap();
        let v = g.evaluate(&DVector::from_vec(vec![0.0]));
        assert!((v.re - PI.powf(-0.25)).abs() < 1e-15 && v.im == 0.0);
        let x = mat(1, 1, &[2.0]);
        let a = GaussianState::new(x.clone(), mat(1, 1, &[0.0]), DVector::zeros(2), 1.0).unwrap();
        let b = GaussianState::new(x, mat(1, 1, &[3.0]), DVector::zeros(2), 1.0).unwrap();
        for t in [-1.0, 0.3, 2.0] {
            let p = DVector::from_vec(vec![t]);
            assert!((a.evaluate(&p).norm() - b.evaluate(&p).norm()).abs() < 1e-15);
        }
    }

    #[test]
    fn generator_actions_are_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in 1..=3 {
            for _ in 0..20 {
                let g = random_gaussian(n, 0.9, &mut rng);
                let l = DMatrix::identity(n, n) + symplin::random_symmetric(n, 0.3, &mut rng);
                let p = symplin::random_symmetric(n, 1.0, &mut rng);
                let cases = [
                    (g.apply_ml(&l).unwrap(), generator_ml(&l).unwrap()),
                    (g.apply_vp(&p).unwrap(), generator_vp(&p).unwrap()),
                    (g.apply_j().unwrap(), symplin::standard_j(n)),
                ];
                for (direct, s) in cases {
                    let expected = gaussian_to_blob(&g).unwrap().transformed(&s);
                    assert!(gaussian_to_blob(&direct).unwrap().same_set(&expected, 1e-9));
                    let via_blob = transform_state(&g, &s).unwrap();
                    assert!(linalg::max_abs_diff(via_blob.x(), direct.x()) < 1e-9);
                    assert!(linalg::max_abs_diff(via_blob.y(), direct.y()) < 1e-9);
                }
            }
        }
    }

    #[test]
    fn stabilizer_characterization() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for k in 0..100 {
            let s = if k % 2 == 0 {
                symplin::random_symplectic_with(2, &mut rng)
            } else {
                // symplectic rotation
                let a = symplin::random_symmetric(2, 1.0, &mut rng);
                let b = symplin::random_symmetric(2, 1.0, &mut rng);
                let gen = linalg::from_blocks(&a, &b, &(-&b), &a);
                let anti = &gen - gen.transpose();
                SymplecticMatrix::new(symplin::matrix_exponential(&(anti * 0.5)), 1e-9).unwrap_or_else(|_| SymplecticMatrix::identity(2))
            };
            let f = pre_iwasawa(&s).unwrap();
            let trivial = f.p.amax() < 1e-9 && linalg::max_abs_diff(&f.l, &DMatrix::identity(2, 2)) < 1e-9;
            let ball = linalg::max_abs_diff(&(s.matrix() * s.matrix().transpose()), &DMatrix::identity(4, 4)) < 1e-9;
            assert_eq!(trivial, ball);
        }
    }

    #[test]
    fn json_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = random_blob(2, 1.0, &mut rng);
        let back: QuantumBlob = serde_json::from_str(&serde_json::to_string(&b).unwrap()).unwrap();
        assert_eq!(back, b);
        let g = random_gaussian(2, 1.0, &mut rng);
        let back: GaussianState = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);
        let c = random_covariance(2, 1.0, &mut rng);
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.contains("\"Sigma\""));
        let back: CovarianceMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        let bad = r#"{"S": [[2.0, 0.0], [0.0, 1.0]], "z0": [0, 0], "hbar": 1}"#;
        assert!(serde_json::from_str::<QuantumBlob>(bad).is_err());
    }
}
