//! The Fermi Hamiltonian `H_{X,Y}(z) = M_{X,Y} z.z / 2` of a squeezed state,
//! its canonical flow, and grid checks of the stationary equation
//! `H psi_{X,Y} = (hbar Tr X / 2) psi_{X,Y}`.
//!
//! Time follows `dz/dt = J grad H = J M z`, so `S_t = exp(t J M)` and the
//! flow of `X = I`, `Y = 0` has period `2 pi`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::grid::{wavenumbers, Spectral, ALIASING_TOL};
use crate::gaussian::{squeeze_matrix, GaussianState};
use crate::linalg;
use crate::symplin::{j_matrix, matrix_exponential, SymplecticMatrix};

/// Largest `|t|` accepted by [`canonical_flow`].
pub const MAX_TIME: f64 = 1e3;
/// Orthogonality defect below which the blob counts as invariant.
pub const BLOB_INVARIANCE_TOL: f64 = 1e-8;
pub const GRID_POINTS_1D: usize = 4096;
pub const GRID_POINTS_2D: usize = 256;
/// Per-axis size for fourth-order differences in two dimensions; 256 leaves
/// residuals near 3e-4 when `Y` is of unit size.
pub const GRID_POINTS_2D_FD: usize = 512;
/// Half-width of the grid along axis `i`, in units of `sqrt(hbar (X^{-1})_ii)`.
const WIDTH_FACTOR_1D: f64 = 12.0;
const WIDTH_FACTOR_2D: f64 = 9.0;
const TAIL_FRACTION: f64 = 0.05;
/// Largest `dt * X` for which the split-step propagator is trusted.
const MAX_STEP_PHASE: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FermiDoc", into = "FermiDoc")]
pub struct FermiHamiltonian {
    x: DMatrix<f64>,
    y: DMatrix<f64>,
    m: DMatrix<f64>,
    hbar: f64,
}

/// `M_{X,Y} = [[X^2 + Y^2, Y], [Y, I]]`.
pub fn fermi_matrix(x: &DMatrix<f64>, y: &DMatrix<f64>, hbar: f64) -> Result<FermiHamiltonian> {
    // validates X, Y and hbar
    let g = GaussianState::new(x.clone(), y.clone(), DVector::zeros(2 * x.nrows()), hbar)?;
    FermiHamiltonian::from_state(&g)
}

impl FermiHamiltonian {
    pub fn from_state(g: &GaussianState) -> Result<Self> {
        let n = g.n();
        let x = g.x().clone();
        let y = g.y().clone();
        let m = linalg::from_blocks(&(&x * &x + &y * &y), &y, &y, &DMatrix::identity(n, n));
        Ok(Self {
            m: linalg::symmetrize(&m),
            x,
            y,
            hbar: g.hbar(),
        })
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

    pub fn m(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// The ground state `psi_{X,Y}` centered at the origin.
    pub fn state(&self) -> GaussianState {
        GaussianState::new(self.x.clone(), self.y.clone(), DVector::zeros(2 * self.n()), self.hbar)
            .expect("validated on construction")
    }

    /// `S_{X,Y}`.
    pub fn squeeze(&self) -> SymplecticMatrix {
        squeeze_matrix(&self.x, &self.y).expect("validated on construction")
    }

    /// `D_X = diag(X, X)`.
    pub fn d_x(&self) -> DMatrix<f64> {
        let n = self.n();
        linalg::from_blocks(&self.x, &DMatrix::zeros(n, n), &DMatrix::zeros(n, n), &self.x)
    }

    /// `M z.z / 2`.
    pub fn energy(&self, z: &DVector<f64>) -> f64 {
        0.5 * z.dot(&(&self.m * z))
    }

    /// `((p + Y x)^2 + X^2 x.x) / 2` evaluated without `M`.
    pub fn symbol(&self, z: &DVector<f64>) -> f64 {
        let n = self.n();
        let x = z.rows(0, n);
        let p = z.rows(n, n);
        let kinetic = p + &self.y * x;
        let xx = &self.x * x;
        0.5 * (kinetic.norm_squared() + xx.norm_squared())
    }

    /// `max |M - S^{-T} D_X S^{-1}|` with `S = S_{X,Y}`.
    pub fn factorization_residual(&self) -> f64 {
        let s_inv = self.squeeze().inverse().into_matrix();
        let rebuilt = s_inv.transpose() * self.d_x() * s_inv;
        linalg::max_abs_diff(&self.m, &rebuilt)
    }

    /// `hbar Tr(X) / 2`.
    pub fn ground_energy(&self) -> f64 {
        0.5 * self.hbar * self.x.trace()
    }
}

/// `S_t` of the Fermi flow at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalFlow {
    pub t: f64,
    pub s_t: SymplecticMatrix,
}

pub fn canonical_flow(fh: &FermiHamiltonian, t: f64) -> Result<CanonicalFlow> {
    check_time(t)?;
    let generator = j_matrix(fh.n()) * &fh.m * t;
    Ok(CanonicalFlow {
        t,
        s_t: SymplecticMatrix::new_unchecked(matrix_exponential(&generator)),
    })
}

/// `S_{X,Y} R_t S_{X,Y}^{-1}`, the flow computed through the factorization of `M`.
pub fn canonical_flow_conjugated(fh: &FermiHamiltonian, t: f64) -> Result<CanonicalFlow> {
    check_time(t)?;
    let s = fh.squeeze();
    let r = rotation_flow(&fh.x, t)?;
    Ok(CanonicalFlow {
        t,
        s_t: s.compose(&r).compose(&s.inverse()),
    })
}

fn check_time(t: f64) -> Result<()> {
    if !(t.abs() <= MAX_TIME) {
        return Err(Error::InvalidParameter(format!("|t| must not exceed {MAX_TIME}, got {t}")));
    }
    Ok(())
}

/// `R_t = [[cos tX, sin tX], [-sin tX, cos tX]] = exp(t J D_X)`.
pub fn rotation_flow(x: &DMatrix<f64>, t: f64) -> Result<SymplecticMatrix> {
    linalg::require_spd(x, 1e-12)?;
    let c = linalg::sym_function(x, |v| (t * v).cos());
    let s = linalg::sym_function(x, |v| (t * v).sin());
    Ok(SymplecticMatrix::new_unchecked(linalg::from_blocks(&c, &s, &(-&s), &c)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlobInvariance {
    pub is_invariant: bool,
    pub defect: f64,
}

/// `S_t` preserves `S_{X,Y} B(sqrt hbar)` iff `O_t = S^{-1} S_t S` is
/// orthogonal; the defect is `max |O_t O_t^T - I|`.
pub fn blob_invariance(fh: &FermiHamiltonian, t: f64) -> Result<BlobInvariance> {
    let flow = canonical_flow(fh, t)?;
    let s = fh.squeeze();
    let o = s.inverse().compose(&flow.s_t).compose(&s).into_matrix();
    let dim = o.nrows();
    let defect = linalg::max_abs_diff(&(&o * o.transpose()), &DMatrix::identity(dim, dim));
    Ok(BlobInvariance {
        is_invariant: defect <= BLOB_INVARIANCE_TOL,
        defect,
    })
}

/// `|H(S_t z) - H(z)| / (1 + |H(z)|)`.
pub fn energy_drift(fh: &FermiHamiltonian, flow: &CanonicalFlow, z: &DVector<f64>) -> f64 {
    let h0 = fh.energy(z);
    (fh.energy(&flow.s_t.apply(z)) - h0).abs() / (1.0 + h0.abs())
}

/// Half the wrapped mismatch between `arg det(A + iB)` of the conjugated
/// flow `O_t = [[A, B], [-B, A]]` and `t Tr X`. The metaplectic lift of
/// `O_t` multiplies the ground state by `det(A + iB)^{-1/2}`, so this is the
/// deviation of the state's phase from `e^{-it Tr(X)/2}` seen by the flow.
pub fn metaplectic_phase_error(fh: &FermiHamiltonian, flow: &CanonicalFlow) -> f64 {
    let n = fh.n();
    let s = fh.squeeze();
    let o = s.inverse().compose(&flow.s_t).compose(&s).into_matrix();
    let u = DMatrix::from_fn(n, n, |i, j| Complex64::new(o[(i, j)], o[(i, n + j)]));
    let det = u.determinant();
    0.5 * wrap_angle(det.arg() - flow.t * fh.x.trace()).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Differentiation {
    Spectral,
    /// Centered fourth-order finite differences.
    FiniteDifference4,
}

/// A complex field on a one- or two-dimensional tensor grid, the first axis
/// major.
struct Field {
    points: usize,
    dims: usize,
    x_min: Vec<f64>,
    dx: Vec<f64>,
    values: Vec<Complex64>,
}

impl Field {
    fn coord(&self, axis: usize, k: usize) -> f64 {
        self.x_min[axis] + k as f64 * self.dx[axis]
    }

    fn point(&self, flat: usize) -> DVector<f64> {
        let n = self.points;
        match self.dims {
            1 => DVector::from_element(1, self.coord(0, flat)),
            _ => DVector::from_vec(vec![self.coord(0, flat / n), self.coord(1, flat % n)]),
        }
    }

    fn stride(&self, axis: usize) -> usize {
        if self.dims == 2 && axis == 0 {
            self.points
        } else {
            1
        }
    }

    /// Offsets of the first element of every line along `axis`.
    fn line_starts(&self, axis: usize) -> Vec<usize> {
        let n = self.points;
        match (self.dims, axis) {
            (1, _) => vec![0],
            (_, 0) => (0..n).collect(),
            _ => (0..n).map(|i| i * n).collect(),
        }
    }

    fn map_lines(&self, axis: usize, mut f: impl FnMut(&mut [Complex64])) -> Vec<Complex64> {
        let n = self.points;
        let stride = self.stride(axis);
        let mut out = self.values.clone();
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for start in self.line_starts(axis) {
            for (k, v) in line.iter_mut().enumerate() {
                *v = self.values[start + k * stride];
            }
            f(&mut line);
            for (k, v) in line.iter().enumerate() {
                out[start + k * stride] = *v;
            }
        }
        out
    }

    /// First and second derivatives along `axis`.
    fn derivatives(&self, axis: usize, method: Differentiation) -> (Vec<Complex64>, Vec<Complex64>) {
        let n = self.points;
        let h = self.dx[axis];
        match method {
            Differentiation::Spectral => {
                let fft = Spectral::new(n);
                let mut k = wavenumbers(n, h);
                let k2: Vec<f64> = k.iter().map(|v| v * v).collect();
                // the Nyquist mode has no odd derivative
                k[n / 2] = 0.0;
                let first = self.map_lines(axis, |line| {
                    fft.forward(line);
                    for (v, kk) in line.iter_mut().zip(&k) {
                        *v *= Complex64::new(0.0, *kk);
                    }
                    fft.inverse(line);
                });
                let second = self.map_lines(axis, |line| {
                    fft.forward(line);
                    for (v, kk) in line.iter_mut().zip(&k2) {
                        *v *= -kk;
                    }
                    fft.inverse(line);
                });
                (first, second)
            }
            Differentiation::FiniteDifference4 => {
                let at = |line: &[Complex64], k: i64| -> Complex64 {
                    if k < 0 || k >= n as i64 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        line[k as usize]
                    }
                };
                let first = self.map_lines(axis, |line| {
                    let src = line.to_vec();
                    for (k, v) in line.iter_mut().enumerate() {
                        let k = k as i64;
                        *v = (-at(&src, k + 2) + at(&src, k + 1) * 8.0 - at(&src, k - 1) * 8.0
                            + at(&src, k - 2))
                            / (12.0 * h);
                    }
                });
                let second = self.map_lines(axis, |line| {
                    let src = line.to_vec();
                    for (k, v) in line.iter_mut().enumerate() {
                        let k = k as i64;
                        *v = (-at(&src, k + 2) + at(&src, k + 1) * 16.0 - at(&src, k) * 30.0
                            + at(&src, k - 1) * 16.0
                            - at(&src, k - 2))
                            / (12.0 * h * h);
                    }
                });
                (first, second)
            }
        }
    }

    /// Largest of the edge mass along each axis and the spectral tail mass of
    /// every line, relative to the totals.
    fn tail_mass(&self) -> f64 {
        let n = self.points;
        let edge = ((n as f64 * TAIL_FRACTION).ceil() as usize).max(1);
        let fft = Spectral::new(n);
        let mut worst: f64 = 0.0;
        for axis in 0..self.dims {
            let stride = self.stride(axis);
            let (mut pos, mut pos_total, mut spec, mut spec_total) = (0.0, 0.0, 0.0, 0.0);
            for start in self.line_starts(axis) {
                let mut line: Vec<Complex64> = (0..n).map(|k| self.values[start + k * stride]).collect();
                for (k, v) in line.iter().enumerate() {
                    pos_total += v.norm_sqr();
                    if k < edge || k >= n - edge {
                        pos += v.norm_sqr();
                    }
                }
                fft.forward(&mut line);
                for (k, v) in line.iter().enumerate() {
                    spec_total += v.norm_sqr();
                    if k >= n / 2 - edge && k < n / 2 + edge {
                        spec += v.norm_sqr();
                    }
                }
            }
            if pos_total > 0.0 {
                worst = worst.max(pos / pos_total).max(spec / spec_total);
            }
        }
        worst
    }
}

fn sample_state(fh: &FermiHamiltonian, points: usize) -> Result<Field> {
    let dims = fh.n();
    let factor = match dims {
        1 => WIDTH_FACTOR_1D,
        2 => WIDTH_FACTOR_2D,
        _ => {
            return Err(Error::Unsupported(format!(
                "grid eigen-residual supports n = 1 or 2, got n = {dims}"
            )))
        }
    };
    if points < 16 || points % 2 != 0 {
        return Err(Error::Grid(format!("need an even number of at least 16 points, got {points}")));
    }
    let x_inv = linalg::spd_inverse(&fh.x)?;
    let half: Vec<f64> = (0..dims).map(|i| factor * (fh.hbar * x_inv[(i, i)]).sqrt()).collect();
    let dx: Vec<f64> = half.iter().map(|h| 2.0 * h / points as f64).collect();
    let x_min: Vec<f64> = half.iter().map(|h| -h).collect();
    let total = points.pow(dims as u32);
    let mut field = Field {
        points,
        dims,
        x_min,
        dx,
        values: Vec::new(),
    };
    let g = fh.state();
    field.values = (0..total).map(|flat| g.evaluate(&field.point(flat))).collect();
    let tail_mass = field.tail_mass();
    if tail_mass > ALIASING_TOL {
        return Err(Error::Aliasing { tail_mass });
    }
    Ok(field)
}

/// `||H psi - (hbar Tr X / 2) psi|| / ||psi||` for the sampled ground state,
/// with `H = ((-i hbar grad + Y x)^2 + X^2 x.x) / 2`.
pub fn eigen_residual_grid(fh: &FermiHamiltonian, points: usize, method: Differentiation) -> Result<f64> {
    let field = sample_state(fh, points)?;
    let hbar = fh.hbar;
    let dims = fh.n();
    let x2 = &fh.x * &fh.x;
    let derivs: Vec<_> = (0..dims).map(|a| field.derivatives(a, method)).collect();
    let i = Complex64::i();
    let energy = fh.ground_energy();
    let mut num = 0.0;
    let mut den = 0.0;
    for (flat, psi) in field.values.iter().enumerate() {
        let x = field.point(flat);
        let yx = &fh.y * &x;
        // (-i hbar d_j + (Yx)_j)^2 psi
        //   = -hbar^2 d_j^2 psi - i hbar Y_jj psi - 2 i hbar (Yx)_j d_j psi + (Yx)_j^2 psi
        let mut h_psi = Complex64::new(0.0, 0.0);
        for (j, (d1, d2)) in derivs.iter().enumerate() {
            h_psi += -d2[flat] * hbar * hbar - i * hbar * fh.y[(j, j)] * psi
                - i * 2.0 * hbar * yx[j] * d1[flat]
                + psi * (yx[j] * yx[j]);
        }
        h_psi += psi * x.dot(&(&x2 * &x));
        let r = h_psi * 0.5 - psi * energy;
        num += r.norm_sqr();
        den += psi.norm_sqr();
    }
    Ok((num / den).sqrt())
}

/// Default grid size for [`eigen_residual_grid`].
pub fn default_points(n: usize, method: Differentiation) -> usize {
    match (n, method) {
        (1, _) => GRID_POINTS_1D,
        (_, Differentiation::Spectral) => GRID_POINTS_2D,
        (_, Differentiation::FiniteDifference4) => GRID_POINTS_2D_FD,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseEvolution {
    /// `|arg <psi(0), psi(T)> + T X / 2|`, wrapped to `[0, pi]`.
    pub phase_error: f64,
    /// `|| |psi(T)| - |psi(0)| ||_2`.
    pub shape_error: f64,
    pub phase: f64,
}

/// Propagates `psi_{X,0}` under `(p^2 + X^2 x^2) / 2` to time `t_final` with
/// a fourth-order (Yoshida) composition of Strang splitting steps.
pub fn phase_evolution_grid(
    x: f64,
    hbar: f64,
    points: usize,
    steps: usize,
    t_final: f64,
) -> Result<PhaseEvolution> {
    let fh = fermi_matrix(&DMatrix::from_element(1, 1, x), &DMatrix::zeros(1, 1), hbar)?;
    if steps == 0 {
        return Err(Error::StepSize("at least one step is required".into()));
    }
    let dt = t_final / steps as f64;
    if !(dt.abs() * x <= MAX_STEP_PHASE) {
        return Err(Error::StepSize(format!(
            "dt X = {} exceeds {MAX_STEP_PHASE}",
            dt.abs() * x
        )));
    }
    let field = sample_state(&fh, points)?;
    let n = field.points;
    let dx = field.dx[0];
    let psi0 = field.values.clone();
    let fft = Spectral::new(n);
    let k2: Vec<f64> = wavenumbers(n, dx).iter().map(|k| k * k).collect();
    let potential: Vec<f64> = (0..n)
        .map(|j| {
            let xj = field.coord(0, j);
            0.5 * x * x * xj * xj / hbar
        })
        .collect();

    let cbrt2 = 2f64.cbrt();
    let w1 = 1.0 / (2.0 - cbrt2);
    let w0 = -cbrt2 / (2.0 - cbrt2);
    let substeps = [w1 * dt, w0 * dt, w1 * dt];

    let mut psi = psi0.clone();
    let half_kick = |psi: &mut [Complex64], h: f64| {
        for (v, vp) in psi.iter_mut().zip(&potential) {
            *v *= Complex64::from_polar(1.0, -vp * h / 2.0);
        }
    };
    for _ in 0..steps {
        for &h in &substeps {
            half_kick(&mut psi, h);
            fft.forward(&mut psi);
            for (v, kk) in psi.iter_mut().zip(&k2) {
                *v *= Complex64::from_polar(1.0, -hbar * kk * h / 2.0);
            }
            fft.inverse(&mut psi);
            half_kick(&mut psi, h);
        }
    }

    let overlap: Complex64 = psi0.iter().zip(&psi).map(|(a, b)| a.conj() * b).sum::<Complex64>() * dx;
    let phase = overlap.arg();
    let phase_error = wrap_angle(phase + t_final * x / 2.0).abs();
    let shape_error = (psi0
        .iter()
        .zip(&psi)
        .map(|(a, b)| (a.norm() - b.norm()).powi(2))
        .sum::<f64>()
        * dx)
        .sqrt();
    Ok(PhaseEvolution {
        phase_error,
        shape_error,
        phase,
    })
}

/// Maps an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let r = a.rem_euclid(tau);
    if r > std::f64::consts::PI {
        r - tau
    } else {
        r
    }
}

#[derive(Serialize, Deserialize)]
struct FermiDoc {
    #[serde(rename = "X")]
    x: Vec<Vec<f64>>,
    #[serde(rename = "Y")]
    y: Vec<Vec<f64>>,
    hbar: f64,
}

impl TryFrom<FermiDoc> for FermiHamiltonian {
    type Error = Error;

    fn try_from(doc: FermiDoc) -> Result<Self> {
        fermi_matrix(&linalg::from_rows(&doc.x)?, &linalg::from_rows(&doc.y)?, doc.hbar)
    }
}

impl From<FermiHamiltonian> for FermiDoc {
    fn from(f: FermiHamiltonian) -> Self {
        FermiDoc {
            x: linalg::to_rows(&f.x),
            y: linalg::to_rows(&f.y),
            hbar: f.hbar,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::random_gaussian;
    use crate::symplin::standard_j;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn scalar(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    fn random_fermi(n: usize, rng: &mut ChaCha8Rng) -> FermiHamiltonian {
        FermiHamiltonian::from_state(&random_gaussian(n, 1.0, rng)).unwrap()
    }

    #[test]
    fn matrix_examples() {
        let f = fermi_matrix(&DMatrix::identity(2, 2), &DMatrix::zeros(2, 2), 1.0).unwrap();
        assert_eq!(f.m(), &DMatrix::identity(4, 4));
        let f = fermi_matrix(&scalar(2.0), &scalar(1.0), 1.0).unwrap();
        assert_eq!(f.m(), &DMatrix::from_row_slice(2, 2, &[5.0, 1.0, 1.0, 1.0]));
        assert!(fermi_matrix(&scalar(-1.0), &scalar(0.0), 1.0).is_err());
    }

    #[test]
    fn factorization_and_symbol() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in 0..200 {
            let f = random_fermi(1 + k % 3, &mut rng);
            assert!(f.factorization_residual() < 1e-10);
            let z = DVector::from_fn(2 * f.n(), |_, _| rng.random_range(-2.0..2.0));
            assert!((f.energy(&z) - f.symbol(&z)).abs() < 1e-10);
        }
    }

    #[test]
    fn flow_examples() {
        let f = fermi_matrix(&scalar(1.0), &scalar(0.0), 1.0).unwrap();
        let quarter = canonical_flow(&f, PI / 2.0).unwrap();
        assert!(linalg::max_abs_diff(quarter.s_t.matrix(), standard_j(1).matrix()) < 1e-14);
        let zero = canonical_flow(&f, 0.0).unwrap();
        assert_eq!(zero.s_t.matrix(), &DMatrix::identity(2, 2));
        assert!(canonical_flow(&f, 2e3).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for k in 0..30 {
            let f = random_fermi(1 + k % 3, &mut rng);
            let t = rng.random_range(-5.0..5.0);
            let s = rng.random_range(-5.0..5.0);
            let a = canonical_flow(&f, t).unwrap();
            let b = canonical_flow_conjugated(&f, t).unwrap();
            assert!(linalg::max_abs_diff(a.s_t.matrix(), b.s_t.matrix()) < 1e-8);
            assert!(a.s_t.defect() < 1e-9);
            let ab = canonical_flow(&f, s).unwrap().s_t.compose(&a.s_t);
            let sum = canonical_flow(&f, t + s).unwrap();
            assert!(linalg::max_abs_diff(ab.matrix(), sum.s_t.matrix()) < 1e-8);
            let z = DVector::from_fn(2 * f.n(), |_, _| rng.random_range(-1.0..1.0));
            assert!(energy_drift(&f, &a, &z) < 1e-9);
            assert!(blob_invariance(&f, t).unwrap().is_invariant);
        }
    }

    #[test]
    fn rotation_examples() {
        let r = rotation_flow(&scalar(2.0), 0.3).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.6f64.cos(), 0.6f64.sin(), -0.6f64.sin(), 0.6f64.cos()]);
        assert!(linalg::max_abs_diff(r.matrix(), &expected) < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_fermi(2, &mut rng);
        let (t, s) = (0.7, -1.9);
        let rt = rotation_flow(f.x(), t).unwrap();
        let rs = rotation_flow(f.x(), s).unwrap();
        let rts = rotation_flow(f.x(), t + s).unwrap();
        assert!(linalg::max_abs_diff(rt.compose(&rs).matrix(), rts.matrix()) < 1e-10);
        let m = rt.matrix();
        assert!(linalg::max_abs_diff(&(m * m.transpose()), &DMatrix::identity(4, 4)) < 1e-10);
        assert!(rt.defect() < 1e-10);
        let exp = matrix_exponential(&(j_matrix(2) * f.d_x() * t));
        assert!(linalg::max_abs_diff(m, &exp) < 1e-8);
    }

    #[test]
    fn non_fermi_flow_breaks_blob() {
        // flow of a different Hamiltonian does not preserve the blob of (X, Y)
        let f = fermi_matrix(&scalar(2.0), &scalar(0.5), 1.0).unwrap();
        let other = fermi_matrix(&scalar(1.0), &scalar(0.0), 1.0).unwrap();
        let flow = canonical_flow(&other, 0.4).unwrap();
        let s = f.squeeze();
        let o = s.inverse().compose(&flow.s_t).compose(&s).into_matrix();
        assert!(linalg::max_abs_diff(&(&o * o.transpose()), &DMatrix::identity(2, 2)) > 1e-2);
    }

    #[test]
    fn eigen_residual_examples() {
        let ho = fermi_matrix(&scalar(1.0), &scalar(0.0), 1.0).unwrap();
        assert!(eigen_residual_grid(&ho, 4096, Differentiation::Spectral).unwrap() < 1e-8);
        let f = fermi_matrix(&scalar(3.0), &scalar(1.5), 0.7).unwrap();
        assert!(eigen_residual_grid(&f, 4096, Differentiation::Spectral).unwrap() < 1e-6);
        assert!(eigen_residual_grid(&f, 4096, Differentiation::FiniteDifference4).unwrap() < 1e-4);
        let f = fermi_matrix(&DMatrix::from_diagonal(&DVector::from_vec(vec![0.8, 1.7])), &DMatrix::zeros(2, 2), 1.0).unwrap();
        assert!(eigen_residual_grid(&f, 256, Differentiation::Spectral).unwrap() < 1e-6);
        let wrong = fermi_matrix(&scalar(1.0), &scalar(0.0), 1.0).unwrap();
        assert!(matches!(
            eigen_residual_grid(&wrong, 32, Differentiation::Spectral),
            Err(Error::Aliasing { .. })
        ));
    }

    #[test]
    fn phase_examples() {
        let full = phase_evolution_grid(1.0, 1.0, 1024, 1257, 4.0 * PI).unwrap();
        assert!(full.phase_error < 1e-5, "{full:?}");
        assert!(full.shape_error < 1e-6);
        let half = phase_evolution_grid(1.0, 1.0, 1024, 315, PI).unwrap();
        assert!((half.phase + PI / 2.0).abs() < 1e-5, "{half:?}");
        assert!(matches!(phase_evolution_grid(1.0, 1.0, 1024, 1, 10.0), Err(Error::StepSize(_))));
    }

    #[test]
    fn flow_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for k in 0..20 {
            let f = random_fermi(1 + k % 2, &mut rng);
            let flow = canonical_flow(&f, 0.37 * k as f64).unwrap();
            assert!(metaplectic_phase_error(&f, &flow) < 1e-9);
        }
    }

    #[test]
    fn wrap() {
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let f = fermi_matrix(&scalar(2.0), &scalar(-0.25), 0.5).unwrap();
        let back: FermiHamiltonian = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back, f);
    }
}
