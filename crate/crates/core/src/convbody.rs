//! Centrally symmetric convex bodies, their support functions and
//! `hbar`-polar duals, volumes (exact or Monte Carlo) and Mahler volumes.
//!
//! The `hbar`-polar dual of `X` is `X^hbar = { p : sup_{x in X} p.x <= hbar }`.
//! Bodies carry absolute size; `hbar` only enters through [`ConvexBody::polar_dual`]
//! and the measures built on it.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::lp::{self, LpOutcome};

/// Shape matrices with a larger condition number are rejected.
pub const MAX_CONDITION: f64 = 1e12;
/// Smallest accepted half-width or radius.
pub const MIN_EXTENT: f64 = 1e-12;
/// Monte Carlo volume estimates need at least this many samples.
pub const MIN_MC_SAMPLES: usize = 1000;
pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;
/// Number of independently seeded substreams a Monte Carlo run is split into.
pub const MC_STREAMS: u64 = 16;
/// Directions used when an inclusion scale has to be bounded by sampling.
pub const INCLUSION_DIRECTIONS: usize = 4096;
const MAX_ENUMERATION_DIM: usize = 3;
const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BodyDoc", into = "BodyDoc")]
pub enum ConvexBody {
    Ball { dim: usize, radius: f64 },
    /// `{ x : A x . x <= 1 }` with `A` symmetric positive definite.
    Ellipsoid { shape: DMatrix<f64> },
    /// `prod_j [-a_j, a_j]`.
    Box { half_widths: DVector<f64> },
    /// Convex hull of a vertex list closed under negation.
    PolytopeV { vertices: Vec<DVector<f64>> },
    /// `{ x : u_i . x <= 1 for all i }` with normals closed under negation.
    PolytopeH { normals: Vec<DVector<f64>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeMethod {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub value: f64,
    /// Zero exactly when the method is exact.
    pub std_error: f64,
    pub method: VolumeMethod,
    pub samples: usize,
}

impl VolumeEstimate {
    fn exact(value: f64) -> Self {
        Self {
            value,
            std_error: 0.0,
            method: VolumeMethod::Exact,
            samples: 0,
        }
    }
}

fn check_finite_vec(v: &DVector<f64>) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidBody("non-finite coordinates".into()))
    }
}

fn same_dims(points: &[DVector<f64>]) -> Result<usize> {
    let dim = points
        .first()
        .map(|p| p.len())
        .ok_or_else(|| Error::InvalidBody("empty point list".into()))?;
    if dim == 0 || points.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidBody("points have inconsistent dimensions".into()));
    }
    for p in points {
        check_finite_vec(p)?;
    }
    Ok(dim)
}

/// Every point must have its negation in the set.
fn check_central_symmetry(points: &[DVector<f64>]) -> Result<()> {
    let scale = points.iter().map(|p| p.amax()).fold(0.0, f64::max).max(1.0);
    for p in points {
        let has_mirror = points.iter().any(|q| (p + q).amax() <= SYMMETRY_TOL * scale);
        if !has_mirror {
            return Err(Error::InvalidBody(format!(
                "point set is not closed under negation (missing -{:?})",
                p.as_slice()
            )));
        }
    }
    Ok(())
}

fn full_rank(points: &[DVector<f64>], dim: usize) -> bool {
    let m = DMatrix::from_fn(dim, points.len(), |i, j| points[j][i]);
    let sv = m.singular_values();
    let max = sv.max();
    sv.iter().filter(|s| **s > 1e-12 * max.max(1e-300)).count() == dim
}

fn dedupe(points: Vec<DVector<f64>>) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(points.len());
    for p in points {
        let scale = p.amax().max(1.0);
        if !out.iter().any(|q| (q - &p).amax() <= 1e-12 * scale) {
            out.push(p);
        }
    }
    out
}

fn box_vertices(a: &DVector<f64>) -> Vec<DVector<f64>> {
    let n = a.len();
    (0..1usize << n)
        .map(|mask| {
            DVector::from_iterator(
                n,
                (0..n).map(|j| if mask >> j & 1 == 1 { -a[j] } else { a[j] }),
            )
        })
        .collect()
}

fn rows_matrix(points: &[DVector<f64>]) -> DMatrix<f64> {
    let dim = points[0].len();
    DMatrix::from_fn(points.len(), dim, |i, j| points[i][j])
}

/// `sup { c . x : u_i . x <= 1 }`.
fn h_polytope_support(normals: &[DVector<f64>], c: &DVector<f64>) -> Result<f64> {
    let a = rows_matrix(normals);
    let b = DVector::from_element(normals.len(), 1.0);
    match lp::maximize(c, &a, &b) {
        LpOutcome::Optimal(v) => Ok(v),
        LpOutcome::Unbounded => Err(Error::Unbounded {
            direction: c.iter().copied().collect(),
        }),
    }
}

/// Vertices of `{ y : u_i . y <= 1 }` by enumerating `n`-subsets of active
/// constraints. Only used for `n <= 3`.
fn enumerate_vertices(normals: &[DVector<f64>], dim: usize) -> Result<Vec<DVector<f64>>> {
    if dim > MAX_ENUMERATION_DIM {
        return Err(Error::UnsupportedDual { dim });
    }
    let m = normals.len();
    let scale = normals.iter().map(|u| u.amax()).fold(0.0, f64::max).max(1e-300);
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..dim).collect();
    if m < dim {
        return Ok(out);
    }
    loop {
        let a = DMatrix::from_fn(dim, dim, |i, j| normals[idx[i]][j]);
        if a.determinant().abs() > 1e-12 * scale.powi(dim as i32) {
            if let Some(y) = a.lu().solve(&DVector::from_element(dim, 1.0)) {
                let feasible = y.iter().all(|v| v.is_finite())
                    && normals.iter().all(|u| u.dot(&y) <= 1.0 + 1e-9);
                if feasible {
                    out.push(y);
                }
            }
        }
        // next combination
        let mut k = dim;
        loop {
            if k == 0 {
                return Ok(dedupe(out));
            }
            k -= 1;
            if idx[k] != k + m - dim {
                break;
            }
            if k == 0 {
                return Ok(dedupe(out));
            }
        }
        idx[k] += 1;
        for r in k + 1..dim {
            idx[r] = idx[r - 1] + 1;
        }
    }
}

/// Recognizes `{ p : sum_j c_j |p_j| <= 1 }` written with all `2^n` sign
/// patterns of `c` as normals.
fn cross_polytope_weights(normals: &[DVector<f64>]) -> Option<DVector<f64>> {
    let n = normals.first()?.len();
    if n > 20 || normals.len() != 1usize << n {
        return None;
    }
    let c = normals[0].map(f64::abs);
    if c.iter().any(|v| *v <= 0.0) {
        return None;
    }
    let mut patterns = HashSet::new();
    for u in normals {
        let mut mask = 0usize;
        for j in 0..n {
            if (u[j].abs() - c[j]).abs() > 1e-12 * c[j] {
                return None;
            }
            if u[j] < 0.0 {
                mask |= 1 << j;
            }
        }
        patterns.insert(mask);
    }
    (patterns.len() == normals.len()).then_some(c)
}

fn pencil_scale(inner: &DMatrix<f64>, outer: &DMatrix<f64>) -> Result<f64> {
    let w = linalg::spd_inv_sqrt(inner)?;
    let c = &w * outer * &w;
    let (values, _) = linalg::sym_eigen(&c);
    Ok(1.0 / values[values.len() - 1].sqrt())
}

fn sample_directions(dim: usize, count: usize, seed: u64) -> Vec<DVector<f64>> {
    if dim == 2 {
        return (0..count)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / count as f64;
                DVector::from_vec(vec![t.cos(), t.sin()])
            })
            .collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let v = DVector::from_fn(dim, |_, _| {
                let g: f64 = StandardNormal.sample(&mut rng);
                g
            });
            let norm = v.norm();
            v / norm
        })
        .collect()
}

/// Precomputed membership test used in Monte Carlo loops.
enum Membership<'a> {
    Body(&'a ConvexBody),
    Halfspaces(Vec<DVector<f64>>),
}

impl Membership<'_> {
    fn contains(&self, x: &DVector<f64>) -> bool {
        match self {
            Membership::Body(b) => b.contains(x, 0.0),
            Membership::Halfspaces(ws) => ws.iter().all(|w| w.dot(x) <= 1.0),
        }
    }
}

impl ConvexBody {
    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidBody("dimension must be positive".into()));
        }
        if !(radius.is_finite() && radius >= MIN_EXTENT) {
            return Err(Error::InvalidBody(format!("invalid radius {radius}")));
        }
        Ok(Self::Ball { dim, radius })
    }

    pub fn ellipsoid(shape: DMatrix<f64>) -> Result<Self> {
        linalg::require_spd(&shape, 1e-12).map_err(|e| Error::InvalidBody(e.to_string()))?;
        let (values, _) = linalg::sym_eigen(&shape);
        let cond = values[values.len() - 1] / values[0];
        if !(cond <= MAX_CONDITION) {
            return Err(Error::InvalidBody(format!(
                "ellipsoid shape matrix is degenerate (condition number {cond:.3e})"
            )));
        }
        Ok(Self::Ellipsoid {
            shape: linalg::symmetrize(&shape),
        })
    }

    pub fn cuboid(half_widths: DVector<f64>) -> Result<Self> {
        if half_widths.is_empty() {
            return Err(Error::InvalidBody("dimension must be positive".into()));
        }
        if half_widths.iter().any(|a| !(a.is_finite() && *a >= MIN_EXTENT)) {
            return Err(Error::InvalidBody(format!(
                "box half-widths must be >= {MIN_EXTENT}"
            )));
        }
        Ok(Self::Box { half_widths })
    }

    pub fn polytope_v(vertices: Vec<DVector<f64>>) -> Result<Self> {
        let dim = same_dims(&vertices)?;
        check_central_symmetry(&vertices)?;
        if !full_rank(&vertices, dim) {
            return Err(Error::InvalidBody("vertices do not span the space".into()));
        }
        Ok(Self::PolytopeV {
            vertices: dedupe(vertices),
        })
    }

    /// Adds the negation of every point before building a V-polytope.
    pub fn symmetric_hull(points: Vec<DVector<f64>>) -> Result<Self> {
        let mut all = Vec::with_capacity(2 * points.len());
        for p in points {
            all.push(-&p);
            all.push(p);
        }
        Self::polytope_v(all)
    }

    pub fn polytope_h(normals: Vec<DVector<f64>>) -> Result<Self> {
        let dim = same_dims(&normals)?;
        check_central_symmetry(&normals)?;
        let normals = dedupe(normals);
        for j in 0..dim {
            let e = DVector::from_fn(dim, |i, _| if i == j { 1.0 } else { 0.0 });
            let h = h_polytope_support(&normals, &e)
                .map_err(|e| Error::InvalidBody(format!("H-polytope is unbounded: {e}")))?;
            if h > 1.0 / MIN_EXTENT {
                return Err(Error::InvalidBody("H-polytope is nearly unbounded".into()));
            }
        }
        Ok(Self::PolytopeH { normals })
    }

    /// Random centrally symmetric V-polytope: `count` Gaussian points and
    /// their negations.
    pub fn random_polytope_v(dim: usize, count: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..count)
            .map(|_| {
                DVector::from_fn(dim, |_, _| {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    g
                })
            })
            .collect();
        Self::symmetric_hull(points)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Ball { dim, .. } => *dim,
            Self::Ellipsoid { shape } => shape.nrows(),
            Self::Box { half_widths } => half_widths.len(),
            Self::PolytopeV { vertices } => vertices[0].len(),
            Self::PolytopeH { normals } => normals[0].len(),
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            Self::Ball { .. } => "ball",
            Self::Ellipsoid { .. } => "ellipsoid",
            Self::Box { .. } => "box",
            Self::PolytopeV { .. } => "polytope_v",
            Self::PolytopeH { .. } => "polytope_h",
        }
    }

    fn check_dim(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "vector of length {} for body of dimension {}",
                v.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Shape matrix when the body is a ball or an ellipsoid.
    pub fn ellipsoid_shape(&self) -> Option<DMatrix<f64>> {
        match self {
            Self::Ball { dim, radius } => {
                Some(DMatrix::identity(*dim, *dim) / (radius * radius))
            }
            Self::Ellipsoid { shape } => Some(shape.clone()),
            _ => None,
        }
    }

    /// `h_X(u) = sup_{x in X} u . x`.
    pub fn support(&self, u: &DVector<f64>) -> Result<f64> {
        self.check_dim(u)?;
        check_finite_vec(u)?;
        Ok(match self {
            Self::Ball { radius, .. } => radius * u.norm(),
            Self::Ellipsoid { shape } => {
                let inv = linalg::spd_inverse(shape)?;
                u.dot(&(inv * u)).max(0.0).sqrt()
            }
            Self::Box { half_widths } => half_widths.iter().zip(u.iter()).map(|(a, v)| a * v.abs()).sum(),
            Self::PolytopeV { vertices } => vertices
                .iter()
                .map(|v| v.dot(u))
                .fold(f64::NEG_INFINITY, f64::max),
            Self::PolytopeH { normals } => h_polytope_support(normals, u)?,
        })
    }

    /// Minkowski gauge `inf { t > 0 : x in t X }`.
    pub fn gauge(&self, x: &DVector<f64>) -> Result<f64> {
        self.check_dim(x)?;
        Ok(match self {
            Self::Ball { radius, .. } => x.norm() / radius,
            Self::Ellipsoid { shape } => x.dot(&(shape * x)).max(0.0).sqrt(),
            Self::Box { half_widths } => x
                .iter()
                .zip(half_widths.iter())
                .map(|(v, a)| v.abs() / a)
                .fold(0.0, f64::max),
            Self::PolytopeH { normals } => normals.iter().map(|u| u.dot(x)).fold(0.0, f64::max),
            // The gauge of conv(V) is the support function of its polar.
            Self::PolytopeV { vertices } => h_polytope_support(vertices, x)?.max(0.0),
        })
    }

    /// Membership up to an additive `tol` on each defining inequality.
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        assert_eq!(x.len(), self.dim(), "dimension mismatch in membership test");
        match self {
            Self::Ball { radius, .. } => x.norm() <= radius + tol,
            Self::Ellipsoid { shape } => x.dot(&(shape * x)) <= 1.0 + tol,
            Self::Box { half_widths } => x
                .iter()
                .zip(half_widths.iter())
                .all(|(v, a)| v.abs() <= a + tol),
            Self::PolytopeH { normals } => normals.iter().all(|u| u.dot(x) <= 1.0 + tol),
            Self::PolytopeV { vertices } => match h_polytope_support(vertices, x) {
                Ok(g) => g <= 1.0 + tol,
                Err(_) => false,
            },
        }
    }

    /// Vertices, when they are available (always for boxes and V-polytopes,
    /// by enumeration for H-polytopes of dimension at most 3).
    pub fn vertices(&self) -> Result<Option<Vec<DVector<f64>>>> {
        Ok(match self {
            Self::Box { half_widths } => Some(box_vertices(half_widths)),
            Self::PolytopeV { vertices } => Some(vertices.clone()),
            Self::PolytopeH { normals } if self.dim() <= MAX_ENUMERATION_DIM => {
                Some(enumerate_vertices(normals, self.dim())?)
            }
            _ => None,
        })
    }

    /// Facet normals `w` with the body equal to `{ x : w . x <= 1 }`, when available.
    pub fn facet_normals(&self) -> Result<Option<Vec<DVector<f64>>>> {
        Ok(match self {
            Self::Box { half_widths } => {
                let n = half_widths.len();
                let mut out = Vec::with_capacity(2 * n);
                for j in 0..n {
                    let e = DVector::from_fn(n, |i, _| if i == j { 1.0 / half_widths[j] } else { 0.0 });
                    out.push(-&e);
                    out.push(e);
                }
                Some(out)
            }
            Self::PolytopeH { normals } => Some(normals.clone()),
            Self::PolytopeV { vertices } if self.dim() <= MAX_ENUMERATION_DIM => {
                Some(enumerate_vertices(vertices, self.dim())?)
            }
            _ => None,
        })
    }

    /// The `hbar`-polar dual.
    pub fn polar_dual(&self, hbar: f64) -> Result<ConvexBody> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidParameter(format!("hbar must be positive, got {hbar}")));
        }
        match self {
            Self::Ball { dim, radius } => Self::ball(*dim, hbar / radius),
            Self::Ellipsoid { shape } => {
                Self::ellipsoid(linalg::spd_inverse(shape)? / (hbar * hbar))
            }
            Self::Box { half_widths } => {
                let scaled = half_widths / hbar;
                Ok(Self::PolytopeH {
                    normals: box_vertices(&scaled),
                })
            }
            Self::PolytopeV { vertices } => Ok(Self::PolytopeH {
                normals: vertices.iter().map(|v| v / hbar).collect(),
            }),
            Self::PolytopeH { normals } => {
                if let Some(c) = cross_polytope_weights(normals) {
                    return Self::cuboid(c * hbar);
                }
                let dim = self.dim();
                if dim > MAX_ENUMERATION_DIM {
                    return Err(Error::UnsupportedDual { dim });
                }
                // Keep only the normals whose constraint is irredundant: those
                // are the extreme points of conv(normals).
                let mut extreme = Vec::with_capacity(normals.len());
                for (i, u) in normals.iter().enumerate() {
                    let others: Vec<DVector<f64>> = normals
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| *k != i)
                        .map(|(_, v)| v.clone())
                        .collect();
                    let needed = match h_polytope_support(&others, u) {
                        Ok(h) => h > 1.0 + 1e-9,
                        Err(_) => true,
                    };
                    if needed {
                        extreme.push(u * hbar);
                    }
                }
                Ok(Self::PolytopeV { vertices: extreme })
            }
        }
    }

    /// Image `L X` under an invertible linear map.
    pub fn linear_image(&self, l: &DMatrix<f64>) -> Result<ConvexBody> {
        let n = self.dim();
        if l.nrows() != n || l.ncols() != n {
            return Err(Error::Dimension(format!(
                "map is {}x{} for body of dimension {n}",
                l.nrows(),
                l.ncols()
            )));
        }
        let l_inv = linalg::inverse(l)?;
        match self {
            Self::Ball { .. } | Self::Ellipsoid { .. } => {
                let a = self.ellipsoid_shape().expect("ellipsoidal variant");
                Self::ellipsoid(l_inv.transpose() * a * &l_inv)
            }
            Self::Box { half_widths } => {
                let off_diagonal = (0..n).any(|i| (0..n).any(|j| i != j && l[(i, j)] != 0.0));
                if off_diagonal {
                    Ok(Self::PolytopeV {
                        vertices: box_vertices(half_widths).iter().map(|v| l * v).collect(),
                    })
                } else {
                    Self::cuboid(DVector::from_fn(n, |j, _| l[(j, j)].abs() * half_widths[j]))
                }
            }
            Self::PolytopeV { vertices } => Ok(Self::PolytopeV {
                vertices: vertices.iter().map(|v| l * v).collect(),
            }),
            Self::PolytopeH { normals } => {
                let t = l_inv.transpose();
                Ok(Self::PolytopeH {
                    normals: normals.iter().map(|u| &t * u).collect(),
                })
            }
        }
    }

    /// Uniform scaling `t X`, `t > 0`.
    pub fn scaled(&self, t: f64) -> Result<ConvexBody> {
        let n = self.dim();
        self.linear_image(&(DMatrix::identity(n, n) * t))
    }

    fn exact_volume(&self) -> Option<f64> {
        let n = self.dim();
        match self {
            Self::Ball { radius, .. } => Some(linalg::unit_ball_volume(n) * radius.powi(n as i32)),
            Self::Ellipsoid { shape } => {
                Some(linalg::unit_ball_volume(n) / shape.determinant().sqrt())
            }
            Self::Box { half_widths } => Some(half_widths.iter().map(|a| 2.0 * a).product()),
            Self::PolytopeH { normals } => {
                if let Some(c) = cross_polytope_weights(normals) {
                    let prod: f64 = c.iter().product();
                    return Some(2f64.powi(n as i32) / (linalg::factorial(n) * prod));
                }
                (n == 1).then(|| {
                    2.0 / normals.iter().map(|u| u[0].abs()).fold(0.0, f64::max)
                })
            }
            Self::PolytopeV { vertices } => {
                (n == 1).then(|| 2.0 * vertices.iter().map(|v| v[0].abs()).fold(0.0, f64::max))
            }
        }
    }

    /// Euclidean volume; exact closed forms where available, otherwise
    /// rejection sampling inside the axis-aligned support-function bounding box.
    pub fn volume(&self, mc_samples: usize, seed: u64) -> Result<VolumeEstimate> {
        if let Some(v) = self.exact_volume() {
            return Ok(VolumeEstimate::exact(v));
        }
        let n = self.dim();
        let bounds: Vec<f64> = (0..n)
            .map(|j| {
                let e = DVector::from_fn(n, |i, _| if i == j { 1.0 } else { 0.0 });
                self.support(&e)
            })
            .collect::<Result<_>>()?;
        let membership = match self.facet_normals()? {
            Some(ws) => Membership::Halfspaces(ws),
            None => Membership::Body(self),
        };
        monte_carlo_volume(&bounds, mc_samples, seed, |x| membership.contains(x))
    }

    /// `Vol(X) Vol(X^hbar)` with Monte Carlo errors combined in quadrature.
    pub fn mahler_volume(&self, hbar: f64, mc_samples: usize, seed: u64) -> Result<VolumeEstimate> {
        let dual = self.polar_dual(hbar)?;
        let v = self.volume(mc_samples, seed)?;
        let w = dual.volume(mc_samples, seed.wrapping_add(0x9E37_79B9_7F4A_7C15))?;
        let exact = v.method == VolumeMethod::Exact && w.method == VolumeMethod::Exact;
        Ok(VolumeEstimate {
            value: v.value * w.value,
            std_error: ((w.value * v.std_error).powi(2) + (v.value * w.std_error).powi(2)).sqrt(),
            method: if exact {
                VolumeMethod::Exact
            } else {
                VolumeMethod::MonteCarlo
            },
            samples: v.samples.max(w.samples),
        })
    }
}

/// Rejection-sampling volume of `{ x : inside(x) }` within the box
/// `prod_j [-bounds_j, bounds_j]`. The budget is split over [`MC_STREAMS`]
/// ChaCha8 substreams of `seed`, so the result depends only on the seed.
pub fn monte_carlo_volume<F>(bounds: &[f64], samples: usize, seed: u64, inside: F) -> Result<VolumeEstimate>
where
    F: Fn(&DVector<f64>) -> bool + Sync,
{
    if samples < MIN_MC_SAMPLES {
        return Err(Error::TooFewSamples {
            got: samples,
            min: MIN_MC_SAMPLES,
        });
    }
    let n = bounds.len();
    let box_volume: f64 = bounds.iter().map(|b| 2.0 * b).product();
    let per_stream = samples as u64 / MC_STREAMS;
    let remainder = samples as u64 % MC_STREAMS;
    let hits: u64 = (0..MC_STREAMS)
        .into_par_iter()
        .map(|k| {
            let count = per_stream + u64::from(k < remainder);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            let mut x = DVector::zeros(n);
            let mut hits = 0u64;
            for _ in 0..count {
                for j in 0..n {
                    let u: f64 = rng.random();
                    x[j] = (2.0 * u - 1.0) * bounds[j];
                }
                if inside(&x) {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let frac = hits as f64 / samples as f64;
    Ok(VolumeEstimate {
        value: box_volume * frac,
        std_error: box_volume * (frac * (1.0 - frac) / samples as f64).sqrt(),
        method: VolumeMethod::MonteCarlo,
        samples,
    })
}

/// Blaschke-Santalo upper bound `(pi hbar)^n / Gamma(n/2 + 1)^2`.
pub fn santalo_bound(n: usize, hbar: f64) -> f64 {
    let v = linalg::unit_ball_volume(n) * hbar.powf(n as f64 / 2.0);
    v * v
}

/// Proven lower bound `(pi hbar)^n / (4^n n!)`.
pub fn kuperberg_bound(n: usize, hbar: f64) -> f64 {
    (std::f64::consts::PI * hbar).powi(n as i32) / (4f64.powi(n as i32) * linalg::factorial(n))
}

/// Conjectured (Mahler) lower bound `(4 hbar)^n / n!`, attained by boxes.
pub fn mahler_conjecture_bound(n: usize, hbar: f64) -> f64 {
    (4.0 * hbar).powi(n as i32) / linalg::factorial(n)
}

/// Box saturating the Heisenberg inequalities for the given position
/// variances: half-widths `sqrt(2 dx_j^2)`.
pub fn saturating_box(position_variances: &[f64]) -> Result<ConvexBody> {
    ConvexBody::cuboid(DVector::from_iterator(
        position_variances.len(),
        position_variances.iter().map(|v| (2.0 * v).sqrt()),
    ))
}

/// Largest `lambda` with `lambda * inner` contained in `outer`.
pub fn inclusion_scale(inner: &ConvexBody, outer: &ConvexBody) -> Result<f64> {
    let n = inner.dim();
    if outer.dim() != n {
        return Err(Error::Dimension(format!(
            "inner has dimension {n}, outer {}",
            outer.dim()
        )));
    }
    // lambda K in {w . x <= 1} iff lambda h_K(w) <= 1.
    if let Some(ws) = outer.facet_normals()? {
        let mut best = f64::INFINITY;
        for w in &ws {
            let h = inner.support(w)?;
            if h > 0.0 {
                best = best.min(1.0 / h);
            }
        }
        return Ok(best);
    }
    if let (Some(a_in), Some(a_out)) = (inner.ellipsoid_shape(), outer.ellipsoid_shape()) {
        return pencil_scale(&a_in, &a_out);
    }
    // lambda conv(V) in K iff lambda g_K(v) <= 1 for every vertex.
    if let Some(vs) = inner.vertices()? {
        let mut best = f64::INFINITY;
        for v in &vs {
            let g = outer.gauge(v)?;
            if g > 0.0 {
                best = best.min(1.0 / g);
            }
        }
        return Ok(best);
    }
    // Only sampled bounds remain (high-dimensional V-polytope outer with a
    // smooth or H-described inner body).
    let dirs = sample_directions(n, INCLUSION_DIRECTIONS, 0x5EED);
    let mut upper = f64::INFINITY;
    for u in &dirs {
        upper = upper.min(outer.support(u)? / inner.support(u)?);
    }
    let inradius = dirs
        .iter()
        .map(|u| outer.support(u))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let circumradius = dirs
        .iter()
        .map(|u| inner.support(u))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let lower = inradius / circumradius;
    if upper - lower > 1e-4 {
        return Err(Error::InclusionNotCertified { lower, upper });
    }
    Ok(upper)
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "variant", content = "params", rename_all = "snake_case")]
enum BodyParams {
    Ball { radius: f64 },
    Ellipsoid { shape: Vec<Vec<f64>> },
    Box { half_widths: Vec<f64> },
    PolytopeV { vertices: Vec<Vec<f64>> },
    PolytopeH { normals: Vec<Vec<f64>> },
}

/// JSON form: `{"variant": ..., "dim": n, "params": {...}}`.
#[derive(Serialize, Deserialize)]
struct BodyDoc {
    #[serde(flatten)]
    params: BodyParams,
    dim: usize,
}

fn points_from_rows(rows: Vec<Vec<f64>>) -> Vec<DVector<f64>> {
    rows.into_iter().map(DVector::from_vec).collect()
}

fn points_to_rows(points: &[DVector<f64>]) -> Vec<Vec<f64>> {
    points.iter().map(|p| p.iter().copied().collect()).collect()
}

impl TryFrom<BodyDoc> for ConvexBody {
    type Error = Error;

    fn try_from(doc: BodyDoc) -> Result<Self> {
        let body = match doc.params {
            BodyParams::Ball { radius } => ConvexBody::ball(doc.dim, radius)?,
            BodyParams::Ellipsoid { shape } => ConvexBody::ellipsoid(linalg::from_rows(&shape)?)?,
            BodyParams::Box { half_widths } => ConvexBody::cuboid(DVector::from_vec(half_widths))?,
            BodyParams::PolytopeV { vertices } => ConvexBody::polytope_v(points_from_rows(vertices))?,
            BodyParams::PolytopeH { normals } => ConvexBody::polytope_h(points_from_rows(normals))?,
        };
        if body.dim() != doc.dim {
            return Err(Error::Dimension(format!(
                "declared dim {} but parameters describe dim {}",
                doc.dim,
                body.dim()
            )));
        }
        Ok(body)
    }
}

impl From<ConvexBody> for BodyDoc {
    fn from(body: ConvexBody) -> Self {
        let dim = body.dim();
        let params = match body {
            ConvexBody::Ball { radius, .. } => BodyParams::Ball { radius },
            ConvexBody::Ellipsoid { shape } => BodyParams::Ellipsoid {
                shape: linalg::to_rows(&shape),
            },
            ConvexBody::Box { half_widths } => BodyParams::Box {
                half_widths: half_widths.iter().copied().collect(),
            },
            ConvexBody::PolytopeV { vertices } => BodyParams::PolytopeV {
                vertices: points_to_rows(&vertices),
            },
            ConvexBody::PolytopeH { normals } => BodyParams::PolytopeH {
                normals: points_to_rows(&normals),
            },
        };
        BodyDoc { params, dim }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_6, PI};

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_vec(xs.to_vec())
    }

    fn square_v() -> ConvexBody {
        ConvexBody::polytope_v(vec![v(&[1.0, 1.0]), v(&[-1.0, 1.0]), v(&[-1.0, -1.0]), v(&[1.0, -1.0])])
            .unwrap()
    }

    fn random_ellipsoid(n: usize, seed: u64) -> ConvexBody {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::from_fn(n, n, |_, _| {
            let x: f64 = StandardNormal.sample(&mut rng);
            x
        });
        ConvexBody::ellipsoid(&g * g.transpose() + DMatrix::identity(n, n) * 0.5).unwrap()
    }

    #[test]
    fn support_examples() {
        assert_eq!(ConvexBody::ball(2, 1.0).unwrap().support(&v(&[1.0, 0.0])).unwrap(), 1.0);
        let b = ConvexBody::cuboid(v(&[2.0, 3.0])).unwrap();
        assert_eq!(b.support(&v(&[1.0, 1.0])).unwrap(), 5.0);
        let e = ConvexBody::ellipsoid(DMatrix::from_diagonal(&v(&[4.0, 1.0]))).unwrap();
        assert!((e.support(&v(&[1.0, 0.0])).unwrap() - 0.5).abs() < 1e-15);
        let cross = b.polar_dual(1.0).unwrap();
        // support of {2|p1| + 3|p2| <= 1} in e1 is 1/2
        assert!((cross.support(&v(&[1.0, 0.0])).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn unbounded_h_polytope_is_rejected() {
        let r = ConvexBody::polytope_h(vec![v(&[1.0, 0.0]), v(&[-1.0, 0.0])]);
        assert!(matches!(r, Err(Error::InvalidBody(_))));
        let direct = h_polytope_support(&[v(&[1.0, 0.0]), v(&[-1.0, 0.0])], &v(&[0.0, 1.0]));
        assert!(matches!(direct, Err(Error::Unbounded { .. })));
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(ConvexBody::polytope_v(vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])]).is_err());
        assert!(ConvexBody::cuboid(v(&[1.0, 1e-13])).is_err());
        assert!(ConvexBody::ellipsoid(DMatrix::from_diagonal(&v(&[1.0, 1e-13]))).is_err());
        assert!(ConvexBody::ball(2, 0.0).is_err());
        assert!(ConvexBody::polytope_v(vec![v(&[1.0, 0.0]), v(&[-1.0, 0.0])]).is_err());
    }

    #[test]
    fn polar_dual_examples() {
        let hbar: f64 = 0.7;
        let ball = ConvexBody::ball(3, hbar.sqrt()).unwrap();
        match ball.polar_dual(hbar).unwrap() {
            ConvexBody::Ball { radius, dim } => {
                assert_eq!(dim, 3);
                assert!((radius - hbar.sqrt()).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
        let e = ConvexBody::ellipsoid(DMatrix::from_element(1, 1, 2.5)).unwrap();
        match e.polar_dual(1.0).unwrap() {
            ConvexBody::Ellipsoid { shape } => assert!((shape[(0, 0)] - 0.4).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
        let dual = ConvexBody::cuboid(v(&[1.0, 1.0])).unwrap().polar_dual(1.0).unwrap();
        for p in [v(&[1.0, 0.0]), v(&[0.5, -0.5]), v(&[0.0, -1.0])] {
            assert!(dual.contains(&p, 1e-12));
        }
        assert!(!dual.contains(&v(&[0.6, 0.6]), 1e-12));
        assert!((dual.volume(0, 0).unwrap().value - 2.0).abs() < 1e-15);
    }

    #[test]
    fn reflexivity_on_exact_variants() {
        let hbar = 1.3;
        let ball = ConvexBody::ball(2, 0.4).unwrap();
        assert_eq!(ball.polar_dual(hbar).unwrap().polar_dual(hbar).unwrap(), ball);
        let e = random_ellipsoid(3, 1);
        let ee = e.polar_dual(hbar).unwrap().polar_dual(hbar).unwrap();
        let (a, b) = (e.ellipsoid_shape().unwrap(), ee.ellipsoid_shape().unwrap());
        assert!(linalg::max_abs_diff(&a, &b) < 1e-12 * linalg::max_abs(&a));
        let bx = ConvexBody::cuboid(v(&[0.5, 2.0, 3.0])).unwrap();
        match bx.polar_dual(hbar).unwrap().polar_dual(hbar).unwrap() {
            ConvexBody::Box { half_widths } => {
                assert!((half_widths - v(&[0.5, 2.0, 3.0])).amax() < 1e-15)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn polytope_duals_round_trip() {
        let p = ConvexBody::random_polytope_v(3, 8, 4).unwrap();
        let d = p.polar_dual(1.0).unwrap();
        let dd = d.polar_dual(1.0).unwrap();
        // dd keeps only the extreme points of p
        let ConvexBody::PolytopeV { vertices } = &dd else { panic!() };
        for w in vertices {
            assert!(p.contains(w, 1e-9));
            assert!(p.gauge(w).unwrap() > 1.0 - 1e-9);
        }
        for u in sample_directions(3, 200, 9) {
            assert!((p.support(&u).unwrap() - dd.support(&u).unwrap()).abs() < 1e-9);
        }
        let high = ConvexBody::polytope_h(box_vertices(&DVector::from_element(4, 1.0))
            .into_iter()
            .map(|mut u| { u[0] *= 2.0; u[1] *= 1.5; u })
            .chain([DVector::from_vec(vec![0.5, 0.0, 0.0, 0.0]), DVector::from_vec(vec![-0.5, 0.0, 0.0, 0.0])])
            .collect())
        .unwrap();
        assert!(matches!(high.polar_dual(1.0), Err(Error::UnsupportedDual { dim: 4 })));
    }

    #[test]
    fn contains_examples() {
        assert!(ConvexBody::ball(2, 1.0).unwrap().contains(&v(&[0.0, 0.0]), 0.0));
        assert!(!ConvexBody::cuboid(v(&[1.0, 2.0])).unwrap().contains(&v(&[1.5, 0.0]), 0.0));
        let e = random_ellipsoid(2, 3);
        let a = e.ellipsoid_shape().unwrap();
        let dir = v(&[0.3, -0.8]);
        let boundary = &dir / dir.dot(&(&a * &dir)).sqrt();
        assert!(e.contains(&(&boundary * (1.0 - 1e-6)), 1e-5));
        assert!(!e.contains(&(&boundary * 1.01), 1e-5));
        let sq = square_v();
        assert!(sq.contains(&v(&[0.99, -0.99]), 0.0));
        assert!(!sq.contains(&v(&[1.01, 0.0]), 1e-9));
    }

    #[test]
    fn volume_examples() {
        let b = ConvexBody::ball(2, 1.0).unwrap().volume(0, 0).unwrap();
        assert_eq!(b.method, VolumeMethod::Exact);
        assert!((b.value - PI).abs() < 1e-15);
        assert_eq!(b.std_error, 0.0);
        let bx = ConvexBody::cuboid(v(&[1.0, 2.0, 3.0])).unwrap().volume(0, 0).unwrap();
        assert_eq!(bx.value, 48.0);
        let sq = square_v().volume(1_000_000, 42).unwrap();
        assert_eq!(sq.method, VolumeMethod::MonteCarlo);
        // the bounding box is the square itself, so every sample hits
        assert_eq!(sq.value, 4.0);
        assert_eq!(sq.std_error, 0.0);
        assert!(matches!(
            ConvexBody::random_polytope_v(2, 5, 1).unwrap().volume(999, 0),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn monte_carlo_is_deterministic_and_accurate() {
        let (c, sn) = (FRAC_PI_6.cos(), FRAC_PI_6.sin());
        let rotated = ConvexBody::cuboid(v(&[1.0, 1.0]))
            .unwrap()
            .linear_image(&DMatrix::from_row_slice(2, 2, &[c, -sn, sn, c]))
            .unwrap();
        assert!(matches!(rotated, ConvexBody::PolytopeV { .. }));
        let a = rotated.volume(200_000, 5).unwrap();
        let b = rotated.volume(200_000, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.std_error > 0.0);
        assert!((a.value - 4.0).abs() <= 4.0 * a.std_error);
        // the dual is a rotated square of area 2
        let h = rotated.polar_dual(1.0).unwrap();
        let w = h.volume(200_000, 6).unwrap();
        assert!((w.value - 2.0).abs() <= 4.0 * w.std_error);
        assert_ne!(rotated.volume(200_000, 7).unwrap().value, a.value);
    }

    #[test]
    fn mahler_examples() {
        let hbar: f64 = 0.37;
        let m = ConvexBody::ball(2, hbar.sqrt()).unwrap().mahler_volume(hbar, 0, 0).unwrap();
        assert!((m.value - PI * PI * hbar * hbar).abs() < 1e-13);
        let m = ConvexBody::cuboid(v(&[0.3, 5.0])).unwrap().mahler_volume(1.0, 0, 0).unwrap();
        assert_eq!(m.method, VolumeMethod::Exact);
        assert!((m.value - 8.0).abs() < 1e-12);
        let e = random_ellipsoid(3, 8);
        let l = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 0.5, -1.0, 0.3, 0.0, 0.2, 3.0]);
        let a = e.mahler_volume(1.0, 0, 0).unwrap().value;
        let b = e.linear_image(&l).unwrap().mahler_volume(1.0, 0, 0).unwrap().value;
        assert!((a - b).abs() < 1e-10 * a);
    }

    #[test]
    fn saturating_box_reaches_conjectured_bound() {
        for n in 1..=4 {
            let vars: Vec<f64> = (0..n).map(|k| 0.3 + k as f64).collect();
            let hbar = 0.8;
            let m = saturating_box(&vars).unwrap().mahler_volume(hbar, 0, 0).unwrap();
            assert!((m.value - mahler_conjecture_bound(n, hbar)).abs() < 1e-12 * m.value);
        }
    }

    #[test]
    fn linear_image_examples() {
        let e = random_ellipsoid(2, 2);
        assert_eq!(e.linear_image(&DMatrix::identity(2, 2)).unwrap(), e);
        let rot = DMatrix::from_row_slice(2, 2, &[FRAC_PI_4.cos(), -FRAC_PI_4.sin(), FRAC_PI_4.sin(), FRAC_PI_4.cos()]);
        let ConvexBody::PolytopeV { vertices } = ConvexBody::cuboid(v(&[1.0, 1.0])).unwrap().linear_image(&rot).unwrap() else {
            panic!()
        };
        let r2 = 2f64.sqrt();
        for expected in [v(&[0.0, r2]), v(&[r2, 0.0]), v(&[0.0, -r2]), v(&[-r2, 0.0])] {
            assert!(vertices.iter().any(|w| (w - &expected).amax() < 1e-12));
        }
        assert!(matches!(e.linear_image(&DMatrix::zeros(2, 2)), Err(Error::Singular)));
    }

    #[test]
    fn inclusion_scale_examples() {
        let b1 = ConvexBody::ball(2, 1.0).unwrap();
        let b3 = ConvexBody::ball(2, 3.0).unwrap();
        assert!((inclusion_scale(&b1, &b1).unwrap() - 1.0).abs() < 1e-12);
        assert!((inclusion_scale(&b1, &b3).unwrap() - 3.0).abs() < 1e-12);
        let sq = ConvexBody::cuboid(v(&[1.0, 1.0])).unwrap();
        assert!((inclusion_scale(&b1, &sq).unwrap() - 1.0).abs() < 1e-12);
        assert!((inclusion_scale(&sq, &b1).unwrap() - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!((inclusion_scale(&square_v(), &sq).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let bodies = vec![
            ConvexBody::ball(2, 1.5).unwrap(),
            random_ellipsoid(2, 0),
            ConvexBody::cuboid(v(&[1.0, 2.0])).unwrap(),
            square_v(),
            ConvexBody::cuboid(v(&[1.0, 2.0])).unwrap().polar_dual(1.0).unwrap(),
        ];
        for b in bodies {
            let s = serde_json::to_string(&b).unwrap();
            let back: ConvexBody = serde_json::from_str(&s).unwrap();
            assert_eq!(back, b, "{s}");
        }
        let text = r#"{"variant": "box", "dim": 2, "params": {"half_widths": [1.0, 2.0]}}"#;
        let b: ConvexBody = serde_json::from_str(text).unwrap();
        assert_eq!(b, ConvexBody::cuboid(v(&[1.0, 2.0])).unwrap());
        let bad = r#"{"variant": "box", "dim": 3, "params": {"half_widths": [1.0, 2.0]}}"#;
        assert!(serde_json::from_str::<ConvexBody>(bad).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn support_is_positively_homogeneous(seed in 0u64..1000, t in 0.01f64..50.0, x in -3.0f64..3.0, y in -3.0f64..3.0) {
            let u = v(&[x, y]);
            let bodies = [
                random_ellipsoid(2, seed),
                ConvexBody::random_polytope_v(2, 5, seed).unwrap(),
                ConvexBody::random_polytope_v(2, 5, seed).unwrap().polar_dual(1.0).unwrap(),
            ];
            for b in &bodies {
                let lhs = b.support(&(&u * t)).unwrap();
                let rhs = t * b.support(&u).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
            }
        }

        #[test]
        fn membership_duality(seed in 0u64..1000, x in -2.0f64..2.0, y in -2.0f64..2.0, hbar in 0.2f64..3.0) {
            let p = v(&[x, y]);
            let bodies = [
                ConvexBody::ball(2, 0.7).unwrap(),
                random_ellipsoid(2, seed),
                ConvexBody::cuboid(v(&[0.5, 1.7])).unwrap(),
            ];
            for b in &bodies {
                let h = b.support(&p).unwrap();
                if (h - hbar).abs() > 1e-9 {
                    prop_assert_eq!(b.polar_dual(hbar).unwrap().contains(&p, 0.0), h <= hbar);
                }
            }
        }
    }
}
