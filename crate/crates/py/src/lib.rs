use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use phasespace::convbody::{self, ConvexBody};
use phasespace::fermi::{self, Differentiation, FermiHamiltonian};
use phasespace::gaussian::{self, CovarianceMatrix};
use phasespace::quasistate;
use phasespace::symplin::{self, SymplecticMatrix, DEFAULT_SYMPLECTIC_TOL};

create_exception!(phasespace_py, PhasespaceError, PyValueError);

fn err(e: phasespace::Error) -> PyErr {
    PhasespaceError::new_err(e.to_string())
}

type Rows = Vec<Vec<f64>>;

fn matrix(rows: &Rows) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(PhasespaceError::new_err("matrix rows must be non-empty and of equal length"));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn rows(m: &DMatrix<f64>) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn vector(v: Vec<f64>) -> DVector<f64> {
    DVector::from_vec(v)
}

fn symplectic(rows: &Rows, tol: f64) -> PyResult<SymplecticMatrix> {
    SymplecticMatrix::new(matrix(rows)?, tol).map_err(err)
}

/// Pre-Iwasawa factors `S = V_P M_L R` as a dict with `P`, `L`, `R` and
/// `reconstruction_error`.
#[pyfunction]
#[pyo3(signature = (s, tol = DEFAULT_SYMPLECTIC_TOL))]
fn pre_iwasawa<'py>(py: Python<'py>, s: Rows, tol: f64) -> PyResult<Bound<'py, PyDict>> {
    let m = matrix(&s)?;
    let f = symplin::pre_iwasawa_checked(&m, tol).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("P", rows(&f.p))?;
    d.set_item("L", rows(&f.l))?;
    d.set_item("R", rows(f.r.matrix()))?;
    d.set_item("reconstruction_error", (f.reconstruct() - &m).amax())?;
    Ok(d)
}

#[pyfunction]
fn symplectic_eigenvalues(m: Rows) -> PyResult<Vec<f64>> {
    Ok(symplin::symplectic_eigenvalues(&matrix(&m)?).map_err(err)?.values)
}

#[pyfunction]
#[pyo3(signature = (m, tol = DEFAULT_SYMPLECTIC_TOL))]
fn is_symplectic(m: Rows, tol: f64) -> PyResult<bool> {
    symplin::is_symplectic(&matrix(&m)?, tol).map_err(err)
}

#[pyfunction]
fn random_symplectic(n: usize, seed: u64) -> Rows {
    rows(symplin::random_symplectic(n, seed).matrix())
}

#[pyclass(name = "ConvexBody", module = "phasespace_py", skip_from_py_object)]
#[derive(Clone)]
struct PyConvexBody {
    inner: ConvexBody,
}

fn body(inner: phasespace::Result<ConvexBody>) -> PyResult<PyConvexBody> {
    inner.map(|inner| PyConvexBody { inner }).map_err(err)
}

#[pymethods]
impl PyConvexBody {
    #[staticmethod]
    fn ball(dim: usize, radius: f64) -> PyResult<Self> {
        body(ConvexBody::ball(dim, radius))
    }

    #[staticmethod]
    fn ellipsoid(shape: Rows) -> PyResult<Self> {
        body(ConvexBody::ellipsoid(matrix(&shape)?))
    }

    #[staticmethod]
    #[pyo3(name = "box")]
    fn cuboid(half_widths: Vec<f64>) -> PyResult<Self> {
        body(ConvexBody::cuboid(vector(half_widths)))
    }

    #[staticmethod]
    fn polytope_v(vertices: Rows) -> PyResult<Self> {
        body(ConvexBody::polytope_v(vertices.into_iter().map(vector).collect()))
    }

    #[staticmethod]
    fn polytope_h(normals: Rows) -> PyResult<Self> {
        body(ConvexBody::polytope_h(normals.into_iter().map(vector).collect()))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PhasespaceError::new_err(e.to_string()))?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PhasespaceError::new_err(e.to_string()))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn variant(&self) -> &'static str {
        self.inner.variant_name()
    }

    fn support(&self, u: Vec<f64>) -> PyResult<f64> {
        self.inner.support(&vector(u)).map_err(err)
    }

    fn gauge(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.gauge(&vector(x)).map_err(err)
    }

    #[pyo3(signature = (x, tol = 0.0))]
    fn contains(&self, x: Vec<f64>, tol: f64) -> bool {
        self.inner.contains(&vector(x), tol)
    }

    #[pyo3(signature = (hbar = 1.0))]
    fn polar_dual(&self, hbar: f64) -> PyResult<Self> {
        body(self.inner.polar_dual(hbar))
    }

    /// `(value, std_error)`.
    #[pyo3(signature = (samples = convbody::DEFAULT_MC_SAMPLES, seed = 42))]
    fn volume(&self, samples: usize, seed: u64) -> PyResult<(f64, f64)> {
        let v = self.inner.volume(samples, seed).map_err(err)?;
        Ok((v.value, v.std_error))
    }

    /// `(value, std_error)` of `Vol(X) Vol(X^hbar)`.
    #[pyo3(signature = (hbar = 1.0, samples = convbody::DEFAULT_MC_SAMPLES, seed = 42))]
    fn mahler_volume(&self, hbar: f64, samples: usize, seed: u64) -> PyResult<(f64, f64)> {
        let v = self.inner.mahler_volume(hbar, samples, seed).map_err(err)?;
        Ok((v.value, v.std_error))
    }

    fn __repr__(&self) -> String {
        format!("ConvexBody({}, dim={})", self.inner.variant_name(), self.inner.dim())
    }
}

#[pyfunction]
#[pyo3(signature = (n, hbar = 1.0))]
fn santalo_bound(n: usize, hbar: f64) -> f64 {
    convbody::santalo_bound(n, hbar)
}

#[pyfunction]
#[pyo3(signature = (n, hbar = 1.0))]
fn kuperberg_bound(n: usize, hbar: f64) -> f64 {
    convbody::kuperberg_bound(n, hbar)
}

#[pyfunction]
#[pyo3(signature = (n, hbar = 1.0))]
fn mahler_conjecture_bound(n: usize, hbar: f64) -> f64 {
    convbody::mahler_conjecture_bound(n, hbar)
}

#[pyclass(name = "QuantumBlob", module = "phasespace_py", skip_from_py_object)]
#[derive(Clone)]
struct PyQuantumBlob {
    inner: gaussian::QuantumBlob,
}

#[pymethods]
impl PyQuantumBlob {
    #[new]
    #[pyo3(signature = (s, z0 = None, hbar = 1.0))]
    fn new(s: Rows, z0: Option<Vec<f64>>, hbar: f64) -> PyResult<Self> {
        let s = symplectic(&s, DEFAULT_SYMPLECTIC_TOL)?;
        let z0 = z0.map(vector).unwrap_or_else(|| DVector::zeros(2 * s.n()));
        gaussian::QuantumBlob::new(s, z0, hbar).map(|inner| Self { inner }).map_err(err)
    }

    #[getter]
    fn s(&self) -> Rows {
        rows(self.inner.s().matrix())
    }

    #[getter]
    fn z0(&self) -> Vec<f64> {
        self.inner.center().iter().copied().collect()
    }

    #[getter]
    fn hbar(&self) -> f64 {
        self.inner.hbar()
    }

    #[pyo3(signature = (z, tol = 0.0))]
    fn contains(&self, z: Vec<f64>, tol: f64) -> bool {
        self.inner.contains(&vector(z), tol)
    }

    fn volume(&self) -> f64 {
        self.inner.volume()
    }

    fn covariance(&self) -> Rows {
        rows(gaussian::covariance_from_blob(&self.inner).sigma())
    }

    fn to_gaussian(&self) -> PyResult<PyGaussianState> {
        gaussian::blob_to_gaussian(&self.inner)
            .map(|inner| PyGaussianState { inner })
            .map_err(err)
    }
}

#[pyclass(name = "GaussianState", module = "phasespace_py", skip_from_py_object)]
#[derive(Clone)]
struct PyGaussianState {
    inner: gaussian::GaussianState,
}

#[pymethods]
impl PyGaussianState {
    #[new]
    #[pyo3(signature = (x, y, z0 = None, hbar = 1.0))]
    fn new(x: Rows, y: Rows, z0: Option<Vec<f64>>, hbar: f64) -> PyResult<Self> {
        let x = matrix(&x)?;
        let z0 = z0.map(vector).unwrap_or_else(|| DVector::zeros(2 * x.nrows()));
        gaussian::GaussianState::new(x, matrix(&y)?, z0, hbar)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    #[getter]
    fn x(&self) -> Rows {
        rows(self.inner.x())
    }

    #[getter]
    fn y(&self) -> Rows {
        rows(self.inner.y())
    }

    #[getter]
    fn z0(&self) -> Vec<f64> {
        self.inner.center().iter().copied().collect()
    }

    #[getter]
    fn hbar(&self) -> f64 {
        self.inner.hbar()
    }

    fn evaluate(&self, x: Vec<f64>) -> PyResult<Complex64> {
        if x.len() != self.inner.n() {
            return Err(PhasespaceError::new_err(format!("expected a point of length {}", self.inner.n())));
        }
        Ok(self.inner.evaluate(&vector(x)))
    }

    /// Analytic Wigner function at `z`.
    fn wigner(&self, z: Vec<f64>) -> PyResult<f64> {
        let w = gaussian::wigner_gaussian(&self.inner).map_err(err)?;
        Ok(w.evaluate(&vector(z)))
    }

    fn to_blob(&self) -> PyResult<PyQuantumBlob> {
        gaussian::gaussian_to_blob(&self.inner)
            .map(|inner| PyQuantumBlob { inner })
            .map_err(err)
    }
}

/// Quantum condition, purity and Robertson-Schroedinger margins of `sigma`.
#[pyfunction]
#[pyo3(signature = (sigma, hbar = 1.0))]
fn quantum_check<'py>(py: Python<'py>, sigma: Rows, hbar: f64) -> PyResult<Bound<'py, PyDict>> {
    let cov = CovarianceMatrix::new(matrix(&sigma)?, hbar).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("quantum", gaussian::quantum_condition(&cov))?;
    d.set_item("purity", gaussian::purity(&cov).value)?;
    d.set_item(
        "rs_margins",
        gaussian::rs_inequalities(&cov).iter().map(|r| r.margin).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "min_symplectic_eigenvalue",
        cov.symplectic_spectrum().map_err(err)?.min(),
    )?;
    Ok(d)
}

/// `pi hbar / lambda_max` for the ellipsoid `{ M z.z <= hbar }`.
#[pyfunction]
#[pyo3(signature = (m, hbar = 1.0))]
fn capacity_ellipsoid(m: Rows, hbar: f64) -> PyResult<f64> {
    quasistate::capacity_ellipsoid(&matrix(&m)?, hbar).map_err(err)
}

#[pyclass(name = "FermiHamiltonian", module = "phasespace_py")]
struct PyFermiHamiltonian {
    inner: FermiHamiltonian,
}

#[pymethods]
impl PyFermiHamiltonian {
    #[new]
    #[pyo3(signature = (x, y, hbar = 1.0))]
    fn new(x: Rows, y: Rows, hbar: f64) -> PyResult<Self> {
        fermi::fermi_matrix(&matrix(&x)?, &matrix(&y)?, hbar)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    #[getter]
    fn m(&self) -> Rows {
        rows(self.inner.m())
    }

    fn energy(&self, z: Vec<f64>) -> f64 {
        self.inner.energy(&vector(z))
    }

    /// `exp(t J M)`.
    fn flow(&self, t: f64) -> PyResult<Rows> {
        Ok(rows(fermi::canonical_flow(&self.inner, t).map_err(err)?.s_t.matrix()))
    }

    /// `(is_invariant, defect)`.
    fn blob_invariance(&self, t: f64) -> PyResult<(bool, f64)> {
        let b = fermi::blob_invariance(&self.inner, t).map_err(err)?;
        Ok((b.is_invariant, b.defect))
    }

    #[pyo3(signature = (points = None, method = "spectral"))]
    fn eigen_residual(&self, points: Option<usize>, method: &str) -> PyResult<f64> {
        let method = match method {
            "spectral" => Differentiation::Spectral,
            "fd4" | "finite_difference4" => Differentiation::FiniteDifference4,
            other => return Err(PhasespaceError::new_err(format!("unknown method {other:?}"))),
        };
        let points = points.unwrap_or_else(|| fermi::default_points(self.inner.n(), method));
        fermi::eigen_residual_grid(&self.inner, points, method).map_err(err)
    }
}

/// `(phase_error, shape_error)` of split-step propagation of `psi_{X,0}`.
#[pyfunction]
#[pyo3(signature = (x, t, hbar = 1.0, points = 1024, steps = 1000))]
fn phase_evolution(x: f64, t: f64, hbar: f64, points: usize, steps: usize) -> PyResult<(f64, f64)> {
    let p = fermi::phase_evolution_grid(x, hbar, points, steps, t).map_err(err)?;
    Ok((p.phase_error, p.shape_error))
}

#[pymodule]
fn phasespace_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("PhasespaceError", m.py().get_type::<PhasespaceError>())?;
    m.add_class::<PyConvexBody>()?;
    m.add_class::<PyQuantumBlob>()?;
    m.add_class::<PyGaussianState>()?;
    m.add_class::<PyFermiHamiltonian>()?;
    m.add_function(wrap_pyfunction!(pre_iwasawa, m)?)?;
    m.add_function(wrap_pyfunction!(symplectic_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(is_symplectic, m)?)?;
    m.add_function(wrap_pyfunction!(random_symplectic, m)?)?;
    m.add_function(wrap_pyfunction!(santalo_bound, m)?)?;
    m.add_function(wrap_pyfunction!(kuperberg_bound, m)?)?;
    m.add_function(wrap_pyfunction!(mahler_conjecture_bound, m)?)?;
    m.add_function(wrap_pyfunction!(quantum_check, m)?)?;
    m.add_function(wrap_pyfunction!(capacity_ellipsoid, m)?)?;
    m.add_function(wrap_pyfunction!(phase_evolution, m)?)?;
    Ok(())
}
