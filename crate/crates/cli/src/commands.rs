use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use phasespace::convbody::{
    kuperberg_bound, mahler_conjecture_bound, santalo_bound, ConvexBody, VolumeEstimate, VolumeMethod,
};
use phasespace::fermi::{blob_invariance, canonical_flow, energy_drift, metaplectic_phase_error, FermiHamiltonian};
use phasespace::gaussian::grid::{wigner_grid, GridSpec, GridWavefunction, WignerOptions};
use phasespace::gaussian::{
    blob_to_gaussian, contains_quantum_blob, gaussian_to_blob, purity, quantum_condition,
    rs_inequalities, CovarianceMatrix, GaussianState, QuantumBlob,
};
use phasespace::quasistate::{capacity_ellipsoid, cmax_general, hz_orbit, QuasiState, DEFAULT_ORBIT_SAMPLES};
use phasespace::symplin::pre_iwasawa_checked;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::error::CliError;
use crate::output::{emit_report, float, open_output, read_input, to_json_string, write_metadata_comment};

fn parse_value(path: &Path) -> Result<Value, CliError> {
    let text = read_input(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

/// Deserializes `value`, filling in `hbar` from the configuration when the
/// document does not carry one.
fn from_value<T: DeserializeOwned>(mut value: Value, cfg: &RunConfig) -> Result<T, CliError> {
    if let Value::Object(map) = &mut value {
        map.remove("metadata");
        map.entry("hbar").or_insert(json!(cfg.hbar));
    }
    serde_json::from_value(value).map_err(|e| CliError::Parse(e.to_string()))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// A square matrix given as JSON rows, a JSON object with an `S` or
/// `matrix` field, or whitespace/comma separated text rows.
fn parse_matrix(text: &str) -> Result<DMatrix<f64>, CliError> {
    let data: Vec<Vec<f64>> = match serde_json::from_str::<Value>(text) {
        Ok(value) => {
            let inner = match &value {
                Value::Object(map) => map
                    .get("S")
                    .or_else(|| map.get("matrix"))
                    .cloned()
                    .ok_or_else(|| CliError::Parse("expected an `S` or `matrix` field".into()))?,
                _ => value,
            };
            serde_json::from_value(inner).map_err(|e| CliError::Parse(e.to_string()))?
        }
        Err(_) => text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                l.split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|t| !t.is_empty())
                    .map(|t| t.parse::<f64>().map_err(|e| CliError::Parse(format!("{t:?}: {e}"))))
                    .collect()
            })
            .collect::<Result<_, _>>()?,
    };
    let n = data.len();
    if n == 0 || data.iter().any(|r| r.len() != n) {
        return Err(CliError::Parse("matrix must be square and non-empty".into()));
    }
    if n % 2 != 0 {
        return Err(CliError::Parse(format!("matrix must be 2n x 2n, got {n}x{n}")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| data[i][j]))
}

#[derive(Serialize)]
struct DecomposeReport {
    #[serde(rename = "P")]
    p: Vec<Vec<f64>>,
    #[serde(rename = "L")]
    l: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    r: Vec<Vec<f64>>,
    reconstruction_error: f64,
}

pub fn decompose(cfg: &RunConfig, input: &Path) -> Result<(), CliError> {
    let m = parse_matrix(&read_input(input)?)?;
    let f = pre_iwasawa_checked(&m, cfg.tol)?;
    let report = DecomposeReport {
        p: rows(&f.p),
        l: rows(&f.l),
        r: rows(f.r.matrix()),
        reconstruction_error: (f.reconstruct() - &m).amax(),
    };
    emit_report(cfg, &report)
}

#[derive(Serialize)]
struct MahlerReport {
    variant: &'static str,
    dim: usize,
    volume: f64,
    volume_std_error: f64,
    dual_volume: f64,
    dual_volume_std_error: f64,
    mahler: f64,
    std_error: f64,
    method: VolumeMethod,
    santalo_bound: f64,
    kuper_bound: f64,
    conjecture_bound: f64,
    /// Bound violations beyond three standard errors (plus `tol`).
    violations: Vec<&'static str>,
}

pub fn mahler(cfg: &RunConfig, input: &Path) -> Result<(), CliError> {
    let body: ConvexBody = from_value(parse_value(input)?, cfg)?;
    let n = body.dim();
    let hbar = cfg.hbar;
    let dual = body.polar_dual(hbar)?;
    let v = body.volume(cfg.samples, cfg.seed)?;
    let w = dual.volume(cfg.samples, cfg.seed.wrapping_add(0x9E37_79B9_7F4A_7C15))?;
    let m: VolumeEstimate = body.mahler_volume(hbar, cfg.samples, cfg.seed)?;
    let santalo = santalo_bound(n, hbar);
    let kuper = kuperberg_bound(n, hbar);
    let slack = 3.0 * m.std_error + cfg.tol * santalo;
    let mut violations = Vec::new();
    if m.value > santalo + slack {
        violations.push("santalo_bound");
    }
    if m.value < kuper - slack {
        violations.push("kuper_bound");
    }
    let report = MahlerReport {
        variant: body.variant_name(),
        dim: n,
        volume: v.value,
        volume_std_error: v.std_error,
        dual_volume: w.value,
        dual_volume_std_error: w.std_error,
        mahler: m.value,
        std_error: m.std_error,
        method: m.method,
        santalo_bound: santalo,
        kuper_bound: kuper,
        conjecture_bound: mahler_conjecture_bound(n, hbar),
        violations,
    };
    emit_report(cfg, &report)
}

#[derive(Serialize, Default)]
struct CapacityReport {
    input_kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    c_ellipsoid: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c_max_quasi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    orbit_action: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    orbit_discrete_action: Option<f64>,
    quantum_floor_satisfied: bool,
}

/// Accepts a covariance (`Sigma`), a quasi state (`S` and `body`), or a
/// pair of bodies (`X` and `P`).
pub fn capacity(cfg: &RunConfig, input: &Path, orbit_csv: Option<&Path>) -> Result<(), CliError> {
    let value = parse_value(input)?;
    let has = |k: &str| value.get(k).is_some();
    let report = if has("Sigma") {
        let cov: CovarianceMatrix = from_value(value, cfg)?;
        let hbar = cov.hbar();
        let m = cov.ellipsoid_shape()?;
        let c = capacity_ellipsoid(&m, hbar)?;
        let orbit = hz_orbit(&m, hbar, DEFAULT_ORBIT_SAMPLES)?;
        if let Some(path) = orbit_csv {
            write_orbit(cfg, path, &orbit.curve)?;
        }
        let floor = std::f64::consts::PI * hbar;
        CapacityReport {
            input_kind: "covariance",
            c_ellipsoid: Some(c),
            orbit_action: Some(orbit.action),
            orbit_discrete_action: Some(orbit.discrete_action),
            quantum_floor_satisfied: c >= floor * (1.0 - cfg.tol),
            ..Default::default()
        }
    } else if has("S") && has("body") {
        let qs: QuasiState = from_value(value, cfg)?;
        let c = qs.cmax();
        let c_ellipsoid = match qs.john_blob() {
            Ok(blob) => Some(capacity_ellipsoid(&blob.shape(), qs.hbar())?),
            Err(_) => None,
        };
        CapacityReport {
            input_kind: "quasi_state",
            c_max_quasi: Some(c),
            c_ellipsoid,
            quantum_floor_satisfied: c >= std::f64::consts::PI * qs.hbar() * (1.0 - cfg.tol),
            ..Default::default()
        }
    } else if has("X") && has("P") {
        let x: ConvexBody = serde_json::from_value(value["X"].clone()).map_err(|e| CliError::Parse(e.to_string()))?;
        let p: ConvexBody = serde_json::from_value(value["P"].clone()).map_err(|e| CliError::Parse(e.to_string()))?;
        let hbar = value.get("hbar").and_then(Value::as_f64).unwrap_or(cfg.hbar);
        let c = cmax_general(&x, &p, hbar)?;
        CapacityReport {
            input_kind: "body_pair",
            c_max_quasi: Some(c.value),
            lambda_max: Some(c.lambda_max),
            quantum_floor_satisfied: c.value >= std::f64::consts::PI * hbar * (1.0 - cfg.tol),
            ..Default::default()
        }
    } else {
        return Err(CliError::Parse(
            "expected a covariance (Sigma), a quasi state (S, body) or a body pair (X, P)".into(),
        ));
    };
    emit_report(cfg, &report)
}

fn write_orbit(cfg: &RunConfig, path: &Path, curve: &[DVector<f64>]) -> Result<(), CliError> {
    let mut out = open_output(Some(&path.to_path_buf()))?;
    write_metadata_comment(&mut out, cfg)?;
    let n = curve.first().map_or(0, |z| z.len() / 2);
    let header: Vec<String> = (0..n)
        .map(|j| format!("x{j}"))
        .chain((0..n).map(|j| format!("p{j}")))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for z in curve {
        let row: Vec<String> = z.iter().map(|v| float(*v)).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct QuantumReport {
    quantum: bool,
    purity: f64,
    purity_unphysical: bool,
    rs_margins: Vec<f64>,
    rs_pass: bool,
    min_symplectic_eigenvalue: f64,
    contains_quantum_blob: bool,
}

pub fn quantum_check(cfg: &RunConfig, input: &Path) -> Result<(), CliError> {
    let cov: CovarianceMatrix = from_value(parse_value(input)?, cfg)?;
    let rs = rs_inequalities(&cov);
    let p = purity(&cov);
    let containment = contains_quantum_blob(&cov)?;
    let report = QuantumReport {
        quantum: quantum_condition(&cov),
        purity: p.value,
        purity_unphysical: p.unphysical,
        rs_margins: rs.iter().map(|r| r.margin).collect(),
        rs_pass: rs.iter().all(|r| r.pass),
        min_symplectic_eigenvalue: containment.min_symplectic_eigenvalue,
        contains_quantum_blob: containment.contains,
    };
    emit_report(cfg, &report)
}

/// Converts a Gaussian state (`X`, `Y`) to its blob (`S`) and back.
pub fn blob(cfg: &RunConfig, input: &Path) -> Result<(), CliError> {
    let value = parse_value(input)?;
    let converted = if value.get("X").is_some() {
        let g: GaussianState = from_value(value, cfg)?;
        serde_json::to_value(gaussian_to_blob(&g)?)
    } else if value.get("S").is_some() {
        let b: QuantumBlob = from_value(value, cfg)?;
        serde_json::to_value(blob_to_gaussian(&b)?)
    } else {
        return Err(CliError::Parse("expected a Gaussian state (X, Y) or a blob (S)".into()));
    };
    let converted = converted.map_err(|e| CliError::Parse(e.to_string()))?;
    emit_report(cfg, &converted)
}

pub struct FlowRange {
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
}

#[derive(Serialize)]
struct FlowRow {
    t: f64,
    defect: f64,
    energy_drift: f64,
    phase_error: f64,
}

const FLOW_ENERGY_PROBES: usize = 16;

/// Rows `(t, defect, energy_drift, phase_error)`: the blob orthogonality
/// defect, the worst relative energy drift over seeded probe points, and the
/// metaplectic phase mismatch.
pub fn flow(cfg: &RunConfig, input: &Path, range: &FlowRange) -> Result<(), CliError> {
    let fh: FermiHamiltonian = from_value(parse_value(input)?, cfg)?;
    if range.steps == 0 {
        return Err(CliError::Parse("--steps must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let probes: Vec<DVector<f64>> = (0..FLOW_ENERGY_PROBES)
        .map(|_| DVector::from_fn(2 * fh.n(), |_, _| rng.random_range(-1.0..1.0)))
        .collect();
    let mut rows = Vec::with_capacity(range.steps + 1);
    for k in 0..=range.steps {
        let t = range.t_start + (range.t_end - range.t_start) * k as f64 / range.steps as f64;
        let time = cfg.flow_time(t);
        let flow = canonical_flow(&fh, time)?;
        let inv = blob_invariance(&fh, time)?;
        let drift = probes.iter().map(|z| energy_drift(&fh, &flow, z)).fold(0.0, f64::max);
        rows.push(FlowRow {
            t,
            defect: inv.defect,
            energy_drift: drift,
            phase_error: metaplectic_phase_error(&fh, &flow),
        });
    }
    match cfg.format {
        Format::Json => emit_report(cfg, &json!({ "rows": rows })),
        Format::Csv => {
            let mut out = open_output(cfg.output.as_ref())?;
            write_metadata_comment(&mut out, cfg)?;
            writeln!(out, "t,defect,energy_drift,phase_error")?;
            for r in &rows {
                writeln!(
                    out,
                    "{},{},{},{}",
                    float(r.t),
                    float(r.defect),
                    float(r.energy_drift),
                    float(r.phase_error)
                )?;
            }
            out.flush()?;
            Ok(())
        }
    }
}

pub struct WignerArgs {
    pub points: usize,
    pub oversample: usize,
    pub p_max: Option<f64>,
    pub binary: bool,
}

pub fn wigner(cfg: &RunConfig, input: &Path, args: &WignerArgs) -> Result<(), CliError> {
    let g: GaussianState = from_value(parse_value(input)?, cfg)?;
    let w = GridWavefunction::sample(&g, GridSpec::for_state(&g, args.points)?)?;
    let grid = wigner_grid(
        &w,
        WignerOptions {
            oversample: args.oversample,
            p_max: args.p_max,
        },
    )?;
    let mut out = open_output(cfg.output.as_ref())?;
    if args.binary {
        grid.write_binary(&mut out)?;
    } else {
        match cfg.format {
            Format::Csv => {
                let comment = format!("metadata {}", to_json_string(&cfg.metadata())?);
                grid.write_csv(&mut out, Some(&comment))?;
            }
            Format::Json => {
                let report = json!({
                    "metadata": cfg.metadata(),
                    "x_min": grid.x_min,
                    "dx": grid.dx,
                    "p_min": grid.p_min,
                    "dp": grid.dp,
                    "nx": grid.nx,
                    "np": grid.np,
                    "integral": grid.integral(),
                    "values": grid.values,
                });
                writeln!(out, "{}", to_json_string(&report)?)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}
