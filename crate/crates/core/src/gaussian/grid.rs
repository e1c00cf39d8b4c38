//! One-dimensional grid numerics: sampled wavefunctions, the metaplectic
//! generators acting on them, and the discrete Wigner transform.

use std::io::{self, Read, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::GaussianState;
use crate::error::{Error, Result};

pub const DEFAULT_POINTS: usize = 4096;
/// Half-width of the default grid in units of the state's widest
/// position spread `sqrt(hbar / lambda_min(X))`.
pub const DEFAULT_WIDTH_FACTOR: f64 = 12.0;
/// States with more probability than this near the grid edges (in position
/// or in the discrete spectrum) are rejected as aliased.
pub const ALIASING_TOL: f64 = 1e-8;
/// Discrete norms further than this from one are rejected.
pub const NORM_TOL: f64 = 1e-6;
pub const WIGGRID_MAGIC: &[u8; 8] = b"WIGGRID1";

/// Fraction of the grid at either end counted as "tail".
const TAIL_FRACTION: f64 = 0.05;

/// Uniform grid `x_k = x_min + k dx`, `k = 0..points`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub points: usize,
    pub x_min: f64,
    pub dx: f64,
}

impl GridSpec {
    /// Symmetric grid on `[-half_width, half_width)`.
    pub fn symmetric(points: usize, half_width: f64) -> Result<Self> {
        if points < 16 || points % 2 != 0 {
            return Err(Error::Grid(format!("grid size must be even and >= 16, got {points}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Grid(format!("invalid half-width {half_width}")));
        }
        Ok(Self {
            points,
            x_min: -half_width,
            dx: 2.0 * half_width / points as f64,
        })
    }

    /// Default grid for a one-dimensional state: `points` samples over
    /// `|x - x0| <= 12 sqrt(hbar / X)` shifted to contain the center.
    pub fn for_state(g: &GaussianState, points: usize) -> Result<Self> {
        require_1d(g)?;
        let half = DEFAULT_WIDTH_FACTOR * (g.hbar() / g.x()[(0, 0)]).sqrt() + g.center()[0].abs();
        Self::symmetric(points, half)
    }

    pub fn x(&self, k: usize) -> f64 {
        self.x_min + k as f64 * self.dx
    }
}

fn require_1d(g: &GaussianState) -> Result<()> {
    if g.n() != 1 {
        return Err(Error::Unsupported(format!(
            "grid numerics are one-dimensional, got n = {}",
            g.n()
        )));
    }
    Ok(())
}

/// Signed FFT frequencies `2 pi k / (N dx)`.
pub(crate) fn wavenumbers(points: usize, dx: f64) -> Vec<f64> {
    let scale = 2.0 * std::f64::consts::PI / (points as f64 * dx);
    (0..points)
        .map(|k| {
            let signed = if k < points / 2 { k as f64 } else { k as f64 - points as f64 };
            signed * scale
        })
        .collect()
}

/// 4-point Lagrange weights for offsets -1, 0, 1, 2 at fractional position `t`.
fn lagrange_weights(t: f64) -> [f64; 4] {
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

/// Cubic interpolation of `f` sampled at integers `0..len`, zero outside.
fn interpolate_cubic<T>(f: impl Fn(usize) -> T, len: usize, s: f64) -> T
where
    T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    if !(s > -1.0 && s < len as f64) {
        return T::default();
    }
    let base = s.floor();
    let w = lagrange_weights(s - base);
    let base = base as i64;
    let mut acc = T::default();
    for (o, wk) in (-1..=2).zip(w) {
        let idx = base + o;
        if idx >= 0 && (idx as usize) < len {
            acc = acc + f(idx as usize) * wk;
        }
    }
    acc
}

pub(crate) struct Spectral {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Spectral {
    pub(crate) fn new(points: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(points),
            inverse: planner.plan_fft_inverse(points),
        }
    }

    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.forward.process(data);
    }

    /// Normalized inverse transform.
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.inverse.process(data);
        let scale = 1.0 / data.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

/// Sampled one-dimensional wavefunction.
#[derive(Debug, Clone, PartialEq)]
pub struct GridWavefunction {
    samples: Vec<Complex64>,
    spec: GridSpec,
    hbar: f64,
}

/// Metaplectic generators and Heisenberg displacements acting on grid states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridOp {
    /// `(2 pi i hbar)^{-1/2} int e^{-(i/hbar) x x'} psi(x') dx'`.
    J,
    /// `i^m sqrt|L| psi(L x)` with `m = 0` for `L > 0` and `m = 1` for `L < 0`.
    Ml(f64),
    /// `e^{-(i/2hbar) P x^2} psi(x)`.
    Vp(f64),
    /// `e^{(i/hbar)(p0 x - p0 x0 / 2)} psi(x - x0)`.
    Displace { x0: f64, p0: f64 },
}

impl GridWavefunction {
    pub fn new(samples: Vec<Complex64>, spec: GridSpec, hbar: f64) -> Result<Self> {
        if samples.len() != spec.points {
            return Err(Error::Grid(format!(
                "{} samples for a grid of {} points",
                samples.len(),
                spec.points
            )));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidParameter(format!("hbar must be positive, got {hbar}")));
        }
        Ok(Self { samples, spec, hbar })
    }

    /// Samples `g` and checks normalization and resolution.
    pub fn sample(g: &GaussianState, spec: GridSpec) -> Result<Self> {
        require_1d(g)?;
        let samples = (0..spec.points)
            .map(|k| g.evaluate(&nalgebra::DVector::from_element(1, spec.x(k))))
            .collect();
        let w = Self::new(samples, spec, g.hbar())?;
        w.check_resolved()?;
        let norm = w.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Grid(format!("discrete norm {norm} differs from one")));
        }
        Ok(w)
    }

    pub fn sample_default(g: &GaussianState) -> Result<Self> {
        Self::sample(g, GridSpec::for_state(g, DEFAULT_POINTS)?)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn x(&self, k: usize) -> f64 {
        self.spec.x(k)
    }

    pub fn norm(&self) -> f64 {
        (self.samples.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.spec.dx).sqrt()
    }

    /// `<self, other> = sum conj(self) other dx`.
    pub fn inner(&self, other: &GridWavefunction) -> Result<Complex64> {
        if self.spec != other.spec {
            return Err(Error::Grid("inner product of states on different grids".into()));
        }
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.spec.dx)
    }

    /// Largest of the position tail mass (outer 5% of the grid on each side)
    /// and the spectral tail mass (outer 5% of the frequencies), both
    /// relative to the total.
    pub fn tail_mass(&self) -> f64 {
        let n = self.samples.len();
        let edge = ((n as f64 * TAIL_FRACTION).ceil() as usize).max(1);
        let total: f64 = self.samples.iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let pos: f64 = self.samples[..edge]
            .iter()
            .chain(&self.samples[n - edge..])
            .map(|v| v.norm_sqr())
            .sum();
        let mut spectrum = self.samples.clone();
        Spectral::new(n).forward(&mut spectrum);
        let spec_total: f64 = spectrum.iter().map(|v| v.norm_sqr()).sum();
        let spec_tail: f64 = spectrum[n / 2 - edge..n / 2 + edge].iter().map(|v| v.norm_sqr()).sum();
        (pos / total).max(spec_tail / spec_total)
    }

    pub fn check_resolved(&self) -> Result<()> {
        let tail_mass = self.tail_mass();
        if tail_mass > ALIASING_TOL {
            return Err(Error::Aliasing { tail_mass });
        }
        Ok(())
    }

    /// Cubic interpolation of the samples at an arbitrary point.
    pub fn interpolate(&self, x: f64) -> Complex64 {
        let s = (x - self.spec.x_min) / self.spec.dx;
        interpolate_cubic(|k| self.samples[k], self.samples.len(), s)
    }

    fn with_samples(&self, samples: Vec<Complex64>) -> Self {
        Self {
            samples,
            spec: self.spec,
            hbar: self.hbar,
        }
    }

    pub fn apply(&self, op: GridOp) -> Result<GridWavefunction> {
        let hbar = self.hbar;
        let out = match op {
            GridOp::J => self.fourier(),
            GridOp::Ml(l) => {
                if !(l.is_finite() && l != 0.0) {
                    return Err(Error::InvalidParameter(format!("M_L needs L != 0, got {l}")));
                }
                let phase = if l > 0.0 { Complex64::new(1.0, 0.0) } else { Complex64::i() };
                let amp = l.abs().sqrt();
                let samples = (0..self.spec.points)
                    .map(|k| self.interpolate(l * self.x(k)) * amp * phase)
                    .collect();
                self.with_samples(samples)
            }
            GridOp::Vp(p) => {
                let samples = self
                    .samples
                    .iter()
                    .enumerate()
                    .map(|(k, v)| {
                        let x = self.x(k);
                        v * Complex64::from_polar(1.0, -p * x * x / (2.0 * hbar))
                    })
                    .collect();
                self.with_samples(samples)
            }
            GridOp::Displace { x0, p0 } => {
                let n = self.spec.points;
                let fft = Spectral::new(n);
                let mut buf = self.samples.clone();
                fft.forward(&mut buf);
                for (v, k) in buf.iter_mut().zip(wavenumbers(n, self.spec.dx)) {
                    *v *= Complex64::from_polar(1.0, -k * x0);
                }
                fft.inverse(&mut buf);
                for (k, v) in buf.iter_mut().enumerate() {
                    let x = self.x(k);
                    *v *= Complex64::from_polar(1.0, (p0 * x - 0.5 * p0 * x0) / hbar);
                }
                self.with_samples(buf)
            }
        };
        out.check_resolved()?;
        Ok(out)
    }

    /// Direct quadrature of the Fourier integral on the same grid, with the
    /// per-row phase advanced by recurrence.
    fn fourier(&self) -> GridWavefunction {
        let hbar = self.hbar;
        let spec = self.spec;
        let prefactor = Complex64::from_polar(
            (2.0 * std::f64::consts::PI * hbar).powf(-0.5) * spec.dx,
            -std::f64::consts::FRAC_PI_4,
        );
        let samples = (0..spec.points)
            .into_par_iter()
            .map(|k| {
                let xk = spec.x(k);
                let step = Complex64::from_polar(1.0, -xk * spec.dx / hbar);
                let mut phase = Complex64::from_polar(1.0, -xk * spec.x_min / hbar);
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, v) in self.samples.iter().enumerate() {
                    acc += phase * v;
                    phase *= step;
                    // renormalize now and then to stop drift of |phase|
                    if j % 256 == 255 {
                        phase /= phase.norm();
                    }
                }
                acc * prefactor
            })
            .collect();
        self.with_samples(samples)
    }
}

/// Wigner function on an `nx x np` phase-space grid, stored row-major with
/// the position index major: `values[ix * np + ip]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub x_min: f64,
    pub dx: f64,
    pub p_min: f64,
    pub dp: f64,
    pub nx: usize,
    pub np: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerOptions {
    /// Zero-padding factor of the lag transform; the momentum spacing is
    /// `pi hbar / (oversample * N * dx)`.
    pub oversample: usize,
    /// Keep only rows with `|p| <= p_max`.
    pub p_max: Option<f64>,
}

impl Default for WignerOptions {
    fn default() -> Self {
        Self {
            oversample: 1,
            p_max: None,
        }
    }
}

/// `W(x, p) = (1/2 pi hbar) int e^{-(i/hbar) p y} psi(x + y/2) conj(psi(x - y/2)) dy`,
/// evaluated with lags `y = 2 m dx` and one FFT per grid position.
pub fn wigner_grid(w: &GridWavefunction, opts: WignerOptions) -> Result<WignerGrid> {
    w.check_resolved()?;
    if opts.oversample == 0 {
        return Err(Error::InvalidParameter("oversample must be positive".into()));
    }
    let n = w.spec.points;
    let len = n * opts.oversample;
    let hbar = w.hbar;
    let dx = w.spec.dx;
    let dp = std::f64::consts::PI * hbar / (len as f64 * dx);
    let half = len as i64 / 2;
    let keep: Vec<i64> = (-half..half)
        .filter(|j| opts.p_max.is_none_or(|pm| (*j as f64 * dp).abs() <= pm))
        .collect();
    if keep.is_empty() {
        return Err(Error::Grid("momentum window is empty".into()));
    }
    let fft = FftPlanner::new().plan_fft_forward(len);
    let scale = dx / (std::f64::consts::PI * hbar);
    let psi = &w.samples;
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut buf = vec![Complex64::new(0.0, 0.0); len];
            let reach = k.min(n - 1 - k) as i64;
            for m in -reach..=reach {
                let a = psi[(k as i64 + m) as usize] * psi[(k as i64 - m) as usize].conj();
                buf[m.rem_euclid(len as i64) as usize] = a;
            }
            fft.process(&mut buf);
            keep.iter()
                .map(|j| buf[j.rem_euclid(len as i64) as usize].re * scale)
                .collect()
        })
        .collect();
    Ok(WignerGrid {
        x_min: w.spec.x_min,
        dx,
        p_min: keep[0] as f64 * dp,
        dp,
        nx: n,
        np: keep.len(),
        values: rows.concat(),
    })
}

impl WignerGrid {
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + j as f64 * self.dp
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.np + j]
    }

    /// `sum W dx dp`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dx * self.dp
    }

    /// Position marginal `int W dp` at each grid position.
    pub fn position_marginal(&self) -> Vec<f64> {
        self.values
            .chunks(self.np)
            .map(|row| row.iter().sum::<f64>() * self.dp)
            .collect()
    }

    /// Bicubic Lagrange interpolation, zero outside the grid.
    pub fn interpolate(&self, x: f64, p: f64) -> f64 {
        let sx = (x - self.x_min) / self.dx;
        let sp = (p - self.p_min) / self.dp;
        interpolate_cubic(
            |i| interpolate_cubic(|j| self.value(i, j), self.np, sp),
            self.nx,
            sx,
        )
    }

    /// CSV with a `# ...` comment line (when given), a `x,p,W` header and
    /// one row per grid node.
    pub fn write_csv<W: Write>(&self, out: &mut W, comment: Option<&str>) -> io::Result<()> {
        if let Some(c) = comment {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "x,p,W")?;
        for i in 0..self.nx {
            for j in 0..self.np {
                writeln!(out, "{:.16e},{:.16e},{:.16e}", self.x(i), self.p(j), self.value(i, j))?;
            }
        }
        Ok(())
    }

    /// `WIGGRID1`, `u64 nx`, `u64 np`, `f64 x_min, dx, p_min, dp`, then the
    /// values row-major; everything little-endian.
    pub fn write_binary<W: Write>(&self, out: &mut W) -> io::Result<()> {
        out.write_all(WIGGRID_MAGIC)?;
        out.write_all(&(self.nx as u64).to_le_bytes())?;
        out.write_all(&(self.np as u64).to_le_bytes())?;
        for v in [self.x_min, self.dx, self.p_min, self.dp] {
            out.write_all(&v.to_le_bytes())?;
        }
        for v in &self.values {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(input: &mut R) -> io::Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != WIGGRID_MAGIC {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "missing WIGGRID1 header"));
        }
        let mut b8 = [0u8; 8];
        let mut next_u64 = |input: &mut R| -> io::Result<u64> {
            input.read_exact(&mut b8)?;
            Ok(u64::from_le_bytes(b8))
        };
        let nx = next_u64(input)? as usize;
        let np = next_u64(input)? as usize;
        let mut f = [0.0f64; 4];
        for v in f.iter_mut() {
            *v = f64::from_bits(next_u64(input)?);
        }
        let mut values = Vec::with_capacity(nx * np);
        for _ in 0..nx * np {
            values.push(f64::from_bits(next_u64(input)?));
        }
        Ok(Self {
            x_min: f[0],
            dx: f[1],
            p_min: f[2],
            dp: f[3],
            nx,
            np,
            values,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{wigner_gaussian, GaussianState};
    use nalgebra::{DMatrix, DVector};

    fn state(x: f64, y: f64, x0: f64, p0: f64, hbar: f64) -> GaussianState {
        GaussianState::new(
            DMatrix::from_element(1, 1, x),
            DMatrix::from_element(1, 1, y),
            DVector::from_vec(vec![x0, p0]),
            hbar,
        )
        .unwrap()
    }

    fn max_diff(a: &GridWavefunction, b: &GridWavefunction) -> f64 {
        a.samples()
            .iter()
            .zip(b.samples())
            .map(|(u, v)| (u - v).norm())
            .fold(0.0, f64::max)
    }

    /// Removes the global phase of `a` relative to `b`.
    fn align(a: &GridWavefunction, b: &GridWavefunction) -> GridWavefunction {
        let ip = a.inner(b).unwrap();
        let phase = ip / ip.norm();
        a.with_samples(a.samples().iter().map(|v| v * phase).collect())
    }

    #[test]
    fn sampled_states_are_normalized() {
        for (x, y, hbar) in [(1.0, 0.0, 1.0), (3.0, 1.5, 0.5), (0.5, -2.0, 2.0)] {
            let w = GridWavefunction::sample_default(&state(x, y, 0.3, -0.2, hbar)).unwrap();
            assert!((w.norm() - 1.0).abs() < 1e-8);
        }
        let spec = GridSpec::symmetric(256, 2.0).unwrap();
        assert!(matches!(
            GridWavefunction::sample(&state(0.2, 0.0, 0.0, 0.0, 1.0), spec),
            Err(Error::Aliasing { .. })
        ));
    }

    #[test]
    fn fourier_fixes_the_coherent_state() {
        let g = state(1.0, 0.0, 0.0, 0.0, 1.0);
        let w = GridWavefunction::sample(&g, GridSpec::symmetric(1024, 12.0).unwrap()).unwrap();
        let jw = w.apply(GridOp::J).unwrap();
        assert!((jw.norm() - 1.0).abs() < 1e-10);
        assert!(max_diff(&align(&jw, &w), &w) < 1e-10);
    }

    #[test]
    fn fourier_matches_parameter_action() {
        let g = state(1.7, 0.8, 0.4, -0.6, 0.8);
        let spec = GridSpec::symmetric(2048, 14.0).unwrap();
        let w = GridWavefunction::sample(&g, spec).unwrap();
        let expected = GridWavefunction::sample(&g.apply_j().unwrap(), spec).unwrap();
        let jw = w.apply(GridOp::J).unwrap();
        assert!(max_diff(&align(&jw, &expected), &expected) < 1e-9);
    }

    #[test]
    fn shear_round_trip() {
        let w = GridWavefunction::sample_default(&state(1.2, 0.4, 0.0, 0.0, 1.0)).unwrap();
        let back = w.apply(GridOp::Vp(0.7)).unwrap().apply(GridOp::Vp(-0.7)).unwrap();
        assert!(max_diff(&back, &w) < 1e-10);
    }

    #[test]
    fn dilation_matches_closed_form() {
        let g = state(1.0, 0.0, 0.0, 0.0, 1.0);
        let spec = GridSpec::symmetric(4096, 12.0).unwrap();
        let w = GridWavefunction::sample(&g, spec).unwrap();
        let expected = GridWavefunction::sample(&state(4.0, 0.0, 0.0, 0.0, 1.0), spec).unwrap();
        let lw = w.apply(GridOp::Ml(2.0)).unwrap();
        assert!(max_diff(&lw, &expected) < 1e-8);
        assert!((lw.norm() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn displacement_matches_closed_form() {
        let g = state(1.3, 0.5, 0.0, 0.0, 1.0);
        let spec = GridSpec::symmetric(2048, 14.0).unwrap();
        let w = GridWavefunction::sample(&g, spec).unwrap();
        let expected = GridWavefunction::sample(&g.with_center(DVector::from_vec(vec![1.1, -0.7])).unwrap(), spec).unwrap();
        let tw = w.apply(GridOp::Displace { x0: 1.1, p0: -0.7 }).unwrap();
        assert!(max_diff(&tw, &expected) < 1e-10);
    }

    #[test]
    fn wigner_of_coherent_state() {
        let hbar = 1.0;
        let g = state(1.0, 0.0, 0.0, 0.0, hbar);
        let w = GridWavefunction::sample(&g, GridSpec::symmetric(512, 10.0).unwrap()).unwrap();
        let wg = wigner_grid(&w, WignerOptions::default()).unwrap();
        let analytic = wigner_gaussian(&g).unwrap();
        let mut err: f64 = 0.0;
        for i in 0..wg.nx {
            for j in 0..wg.np {
                let z = DVector::from_vec(vec![wg.x(i), wg.p(j)]);
                err = err.max((wg.value(i, j) - analytic.evaluate(&z)).abs());
            }
        }
        assert!(err < 1e-6, "{err}");
        assert!((wg.integral() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn binary_and_csv_dumps() {
        let g = state(1.0, 0.3, 0.0, 0.0, 1.0);
        let w = GridWavefunction::sample(&g, GridSpec::symmetric(128, 9.0).unwrap()).unwrap();
        let wg = wigner_grid(&w, WignerOptions { oversample: 1, p_max: Some(5.0) }).unwrap();
        let mut bytes = Vec::new();
        wg.write_binary(&mut bytes).unwrap();
        assert_eq!(&bytes[..8], b"WIGGRID1");
        assert_eq!(bytes.len(), 8 + 16 + 32 + 8 * wg.nx * wg.np);
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), wg.nx as u64);
        let back = WignerGrid::read_binary(&mut bytes.as_slice()).unwrap();
        assert_eq!(back, wg);
        let mut csv = Vec::new();
        wg.write_csv(&mut csv, Some("metadata {}")).unwrap();
        let text = String::from_utf8(csv).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# metadata {}"));
        assert_eq!(lines.next(), Some("x,p,W"));
        assert_eq!(text.lines().count(), 2 + wg.nx * wg.np);
    }
}
