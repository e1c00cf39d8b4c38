//! Symplectic linear algebra on `R^{2n}` with coordinates `z = (x, p)`.
//!
//! The standard symplectic matrix is `J = [[0, I], [-I, 0]]` and the
//! symplectic form is `sigma(z, z') = J z . z'`. A matrix `S` is symplectic
//! when `S^T J S = J`.
//!
//! Sign conventions used throughout the crate:
//! - `M_L : (x, p) -> (L^{-1} x, L^T p)`
//! - `V_P : (x, p) -> (x, p - P x)`, so that `V_{-P}` adds `P x` to the momentum.

use nalgebra::{DMatrix, DVector, Schur};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg;

/// Absolute max-norm tolerance used when a matrix is claimed symplectic.
pub const DEFAULT_SYMPLECTIC_TOL: f64 = 1e-9;

const PAIRING_TOL: f64 = 1e-8;

/// A real `2n x 2n` matrix satisfying `S^T J S = J`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix {
    m: DMatrix<f64>,
}

impl SymplecticMatrix {
    /// Checks symplecticity against `tol` (max-norm of `S^T J S - J`).
    pub fn new(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        let defect = symplecticity_defect(&m)?;
        if !(defect <= tol) {
            return Err(Error::NotSymplectic { defect });
        }
        Ok(Self { m })
    }

    pub(crate) fn new_unchecked(m: DMatrix<f64>) -> Self {
        debug_assert!(m.nrows() == m.ncols() && m.nrows() % 2 == 0);
        Self { m }
    }

    pub fn identity(n: usize) -> Self {
        Self::new_unchecked(DMatrix::identity(2 * n, 2 * n))
    }

    /// Half the matrix order.
    pub fn n(&self) -> usize {
        self.m.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    /// `S^{-1} = -J S^T J`, exact for symplectic matrices.
    pub fn inverse(&self) -> Self {
        let j = j_matrix(self.n());
        Self::new_unchecked(-(&j * self.m.transpose() * &j))
    }

    pub fn transpose(&self) -> Self {
        Self::new_unchecked(self.m.transpose())
    }

    pub fn compose(&self, other: &SymplecticMatrix) -> Self {
        Self::new_unchecked(&self.m * &other.m)
    }

    pub fn apply(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.m * z
    }

    pub fn defect(&self) -> f64 {
        let j = j_matrix(self.n());
        linalg::max_abs_diff(&(self.m.transpose() * &j * &self.m), &j)
    }
}

/// `J = [[0, I], [-I, 0]]` as a plain matrix.
pub fn j_matrix(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(k, n + k)] = 1.0;
        j[(n + k, k)] = -1.0;
    }
    j
}

pub fn standard_j(n: usize) -> SymplecticMatrix {
    assert!(n >= 1, "dimension must be positive");
    SymplecticMatrix::new_unchecked(j_matrix(n))
}

/// `sigma(z, w) = p_z . x_w - p_w . x_z`.
pub fn symplectic_form(z: &DVector<f64>, w: &DVector<f64>) -> f64 {
    let n = z.len() / 2;
    (0..n).map(|k| z[n + k] * w[k] - w[n + k] * z[k]).sum()
}

/// `||M^T J M - J||_max`.
pub fn symplecticity_defect(m: &DMatrix<f64>) -> Result<f64> {
    let n = linalg::require_even_square(m)?;
    let j = j_matrix(n);
    Ok(linalg::max_abs_diff(&(m.transpose() * &j * m), &j))
}

pub fn is_symplectic(m: &DMatrix<f64>, tol: f64) -> Result<bool> {
    Ok(symplecticity_defect(m)? <= tol)
}

/// `M_L = [[L^{-1}, 0], [0, L^T]]`.
pub fn generator_ml(l: &DMatrix<f64>) -> Result<SymplecticMatrix> {
    linalg::require_square(l)?;
    let inv = linalg::inverse(l)?;
    let zero = DMatrix::zeros(l.nrows(), l.nrows());
    Ok(SymplecticMatrix::new_unchecked(linalg::from_blocks(
        &inv,
        &zero,
        &zero,
        &l.transpose(),
    )))
}

/// `V_P = [[I, 0], [-P, I]]` for symmetric `P`.
pub fn generator_vp(p: &DMatrix<f64>) -> Result<SymplecticMatrix> {
    linalg::require_symmetric(p, 1e-12)?;
    let n = p.nrows();
    let id = DMatrix::identity(n, n);
    Ok(SymplecticMatrix::new_unchecked(linalg::from_blocks(
        &id,
        &DMatrix::zeros(n, n),
        &(-p),
        &id,
    )))
}

pub(crate) fn random_symmetric(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| {
        let v: f64 = StandardNormal.sample(rng);
        v
    });
    (&g + g.transpose()) * (0.5 * scale)
}

/// `exp(J A)` for a random symmetric `A` with seeded Gaussian entries.
///
/// Entries of `A` have standard deviation `1/sqrt(2n)`, which keeps the
/// condition number of the result moderate in every dimension.
pub fn random_symplectic(n: usize, seed: u64) -> SymplecticMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_symplectic_with(n, &mut rng)
}

pub(crate) fn random_symplectic_with(n: usize, rng: &mut ChaCha8Rng) -> SymplecticMatrix {
    assert!(n >= 1, "dimension must be positive");
    let a = random_symmetric(2 * n, 1.0 / ((2 * n) as f64).sqrt(), rng);
    SymplecticMatrix::new_unchecked(matrix_exponential(&(j_matrix(n) * a)))
}

/// Matrix exponential by Pade approximation with scaling and squaring.
pub fn matrix_exponential(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), a.ncols(), "matrix exponential needs a square matrix");
    if a.nrows() == 0 {
        return a.clone();
    }
    a.exp()
}

/// Factors of `S = V_P M_L R`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreIwasawaFactors {
    pub p: DMatrix<f64>,
    pub l: DMatrix<f64>,
    pub r: SymplecticMatrix,
}

impl PreIwasawaFactors {
    /// Upper-left block `E` of the symplectic rotation.
    pub fn e(&self) -> DMatrix<f64> {
        linalg::blocks(self.r.matrix()).0
    }

    /// Upper-right block `F` of the symplectic rotation.
    pub fn f(&self) -> DMatrix<f64> {
        linalg::blocks(self.r.matrix()).1
    }

    /// `V_P M_L`, the part of the factorization that moves the unit ball.
    pub fn vp_ml(&self) -> SymplecticMatrix {
        let vp = generator_vp(&self.p).expect("P is symmetric by construction");
        let ml = generator_ml(&self.l).expect("L is positive definite by construction");
        vp.compose(&ml)
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.vp_ml().matrix() * self.r.matrix()
    }
}

/// Pre-Iwasawa factorization `S = V_P M_L R` with `P` symmetric, `L` symmetric
/// positive definite and `R` symplectic and orthogonal.
///
/// With `S = [[A, B], [C, D]]`:
/// `L = (AA^T + BB^T)^{-1/2}`, `P = -(CA^T + DB^T)(AA^T + BB^T)^{-1}`,
/// `R = [[E, F], [-F, E]]` where `E = L A` and `F = L B`.
pub fn pre_iwasawa(s: &SymplecticMatrix) -> Result<PreIwasawaFactors> {
    let (a, b, c, d) = linalg::blocks(s.matrix());
    let gram = &a * a.transpose() + &b * b.transpose();
    let l = linalg::spd_inv_sqrt(&gram)?;
    let gram_inv = &l * &l;
    let p = linalg::symmetrize(&(-(&c * a.transpose() + &d * b.transpose()) * gram_inv));
    let e = &l * &a;
    let f = &l * &b;
    let r = linalg::from_blocks(&e, &f, &(-&f), &e);
    Ok(PreIwasawaFactors {
        p,
        l,
        r: SymplecticMatrix::new_unchecked(r),
    })
}

/// Checks symplecticity of a raw matrix before factoring it.
pub fn pre_iwasawa_checked(m: &DMatrix<f64>, tol: f64) -> Result<PreIwasawaFactors> {
    pre_iwasawa(&SymplecticMatrix::new(m.clone(), tol)?)
}

/// Symplectic eigenvalues, sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticSpectrum {
    pub values: Vec<f64>,
}

impl SymplecticSpectrum {
    pub fn max(&self) -> f64 {
        self.values[0]
    }

    pub fn min(&self) -> f64 {
        *self.values.last().expect("spectrum is never empty")
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// The `n` positive numbers `lambda_j` such that `+-i lambda_j` are the
/// eigenvalues of `J M`, for symmetric positive-definite `M`.
pub fn symplectic_eigenvalues(m: &DMatrix<f64>) -> Result<SymplecticSpectrum> {
    let n = linalg::require_even_square(m)?;
    linalg::require_spd(m, 1e-10)?;
    let jm = j_matrix(n) * m;
    let eig = Schur::try_new(jm, f64::EPSILON, 0)
        .ok_or(Error::SpectrumPairing { mismatch: f64::NAN })?
        .complex_eigenvalues();
    let mut imag: Vec<f64> = eig.iter().map(|c| c.im).collect();
    imag.sort_by(|a, b| b.total_cmp(a));
    let scale = imag[0].abs().max(1.0);
    let real_defect = eig.iter().fold(0.0_f64, |acc, c| acc.max(c.re.abs()));
    let (pos, neg) = imag.split_at(n);
    let mismatch = pos
        .iter()
        .zip(neg.iter().rev())
        .fold(real_defect, |acc, (p, q)| acc.max((p + q).abs()));
    if mismatch > PAIRING_TOL * scale || pos.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::SpectrumPairing { mismatch });
    }
    Ok(SymplecticSpectrum {
        values: pos.to_vec(),
    })
}

/// Williamson normal form: `S^T M S = diag(Lambda, Lambda)` with `S`
/// symplectic and `Lambda` sorted descending.
#[derive(Debug, Clone)]
pub struct WilliamsonForm {
    pub values: Vec<f64>,
    pub s: SymplecticMatrix,
}

/// Builds the Williamson frame from the real normal form of the
/// antisymmetric matrix `M^{-1/2} J M^{-1/2}`.
pub fn williamson(m: &DMatrix<f64>) -> Result<WilliamsonForm> {
    let n = linalg::require_even_square(m)?;
    linalg::require_spd(m, 1e-10)?;
    let m_inv_sqrt = linalg::spd_inv_sqrt(m)?;
    let anti = &m_inv_sqrt * j_matrix(n) * &m_inv_sqrt;
    let anti = (&anti - anti.transpose()) * 0.5;
    let gram = anti.transpose() * &anti;
    // Eigenvalues of -A^2 are 1/lambda^2, each with multiplicity two; ascending
    // order therefore visits the largest symplectic eigenvalue first.
    let (_, vectors) = linalg::sym_eigen(&gram);

    let mut first: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut second: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for k in 0..2 * n {
        if first.len() == n {
            break;
        }
        let mut v = vectors.column(k).into_owned();
        for u in first.iter().chain(second.iter()) {
            let c = u.dot(&v);
            v.axpy(-c, u, 1.0);
        }
        let norm = v.norm();
        if norm < 0.5 {
            continue;
        }
        v /= norm;
        let av = &anti * &v;
        let mu = av.norm_squared();
        let lambda = 1.0 / mu.sqrt();
        let mut w = av * (-lambda);
        w /= w.norm();
        first.push(v);
        second.push(w);
        values.push(lambda);
    }
    if first.len() != n {
        return Err(Error::SpectrumPairing { mismatch: f64::NAN });
    }

    let mut o = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        o.set_column(j, &first[j]);
        o.set_column(n + j, &second[j]);
    }
    let scale = DVector::from_iterator(2 * n, values.iter().chain(values.iter()).map(|v| v.sqrt()));
    let s = m_inv_sqrt * o * DMatrix::from_diagonal(&scale);
    let s = SymplecticMatrix::new_unchecked(s);
    let defect = s.defect();
    if defect > 1e-6 * linalg::max_abs(s.matrix()).powi(2).max(1.0) {
        return Err(Error::NotSymplectic { defect });
    }
    Ok(WilliamsonForm { values, s })
}
