//! Invariant suites run by `phasespace verify`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use phasespace::convbody::{mahler_conjecture_bound, santalo_bound, ConvexBody};
use phasespace::fermi::{
    blob_invariance, canonical_flow, canonical_flow_conjugated, eigen_residual_grid, energy_drift,
    phase_evolution_grid, Differentiation, FermiHamiltonian,
};
use phasespace::gaussian::grid::{wigner_grid, GridSpec, GridWavefunction, WignerOptions};
use phasespace::gaussian::{
    blob_to_gaussian, covariance_from_blob, gaussian_to_blob, purity, quantum_condition,
    random_blob, random_covariance, random_gaussian, rs_inequalities, wigner_gaussian,
    GaussianState,
};
use phasespace::quasistate::{capacity_ellipsoid, cmax_general, hz_orbit};
use phasespace::symplin::{pre_iwasawa, random_symplectic, symplectic_eigenvalues, williamson};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const SUITES: [&str; 6] = ["convbody", "fermi", "gaussian", "quasistate", "symplin", "wigner"];

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    /// Worst observed value of the checked quantity.
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub all_passed: bool,
    pub suites: Vec<SuiteReport>,
}

type Outcome = phasespace::Result<f64>;

fn check(name: &str, tol: f64, value: Outcome) -> Check {
    match value {
        Ok(v) => Check {
            name: name.into(),
            value: v,
            tol,
            pass: v <= tol,
        },
        Err(_) => Check {
            name: name.into(),
            value: f64::NAN,
            tol,
            pass: false,
        },
    }
}

fn worst(values: impl IntoIterator<Item = phasespace::Result<f64>>) -> Outcome {
    values.into_iter().try_fold(0.0f64, |acc, v| Ok(acc.max(v?)))
}

fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

fn orthogonality_defect(m: &DMatrix<f64>) -> f64 {
    max_abs_diff(&(m * m.transpose()), &DMatrix::identity(m.nrows(), m.nrows()))
}

/// Runs the named suites on scoped threads, each with its own seed; the
/// report is ordered by suite name.
pub fn run(names: &[String], seed: u64, hbar: f64) -> Result<VerifyReport, String> {
    let mut names = names.to_vec();
    if names.iter().any(|n| n == "all") {
        names = SUITES.iter().map(|s| s.to_string()).collect();
    }
    for n in &names {
        if !SUITES.contains(&n.as_str()) {
            return Err(format!("unknown suite {n:?}; expected one of {SUITES:?} or all"));
        }
    }
    names.sort();
    names.dedup();
    let suites: Vec<SuiteReport> = std::thread::scope(|scope| {
        let handles: Vec<_> = names
            .iter()
            .map(|name| {
                let index = SUITES.iter().position(|s| s == name).expect("validated") as u64;
                let suite_seed = seed.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
                scope.spawn(move || run_suite(name, suite_seed, hbar))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("suite thread panicked")).collect()
    });
    Ok(VerifyReport {
        all_passed: suites.iter().all(|s| s.passed),
        suites,
    })
}

fn run_suite(name: &str, seed: u64, hbar: f64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let checks = match name {
        "symplin" => symplin(&mut rng),
        "convbody" => convbody(&mut rng, hbar),
        "quasistate" => quasistate(&mut rng, hbar),
        "gaussian" => gaussian(&mut rng, hbar),
        "wigner" => wigner(&mut rng, hbar),
        "fermi" => fermi(&mut rng, hbar),
        _ => unreachable!("suite names are validated"),
    };
    SuiteReport {
        suite: name.into(),
        passed: checks.iter().all(|c| c.pass),
        checks,
    }
}

fn symplin(rng: &mut ChaCha8Rng) -> Vec<Check> {
    let cases: Vec<_> = [1usize, 2, 3, 5]
        .iter()
        .flat_map(|&n| (0..50).map(move |_| n))
        .map(|n| random_symplectic(n, rng.random()))
        .collect();
    vec![
        check(
            "pre_iwasawa_reconstruction",
            1e-9,
            worst(cases.iter().map(|s| {
                let f = pre_iwasawa(s)?;
                Ok(max_abs_diff(&f.reconstruct(), s.matrix()))
            })),
        ),
        check(
            "pre_iwasawa_rotation_orthogonal",
            1e-9,
            worst(cases.iter().map(|s| Ok(orthogonality_defect(pre_iwasawa(s)?.r.matrix())))),
        ),
        check(
            "williamson_normal_form",
            1e-8,
            worst(cases.iter().map(|s| {
                let m = s.matrix().transpose() * s.matrix();
                let w = williamson(&m)?;
                let d = DVector::from_iterator(
                    2 * s.n(),
                    w.values.iter().chain(w.values.iter()).copied(),
                );
                let normal = w.s.matrix().transpose() * &m * w.s.matrix();
                Ok(max_abs_diff(&normal, &DMatrix::from_diagonal(&d)) / m.amax())
            })),
        ),
    ]
}

fn convbody(rng: &mut ChaCha8Rng, hbar: f64) -> Vec<Check> {
    let dirs: Vec<DVector<f64>> = (0..64)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / 64.0;
            DVector::from_vec(vec![t.cos(), t.sin()])
        })
        .collect();
    let support_gap = |a: &ConvexBody, b: &ConvexBody| -> Outcome {
        worst(dirs.iter().map(|u| Ok((a.support(u)? - b.support(u)?).abs())))
    };
    let bodies = [
        ConvexBody::ball(2, hbar.sqrt()),
        ConvexBody::ellipsoid(DMatrix::from_row_slice(2, 2, &[2.0, 0.4, 0.4, 0.7])),
        ConvexBody::cuboid(DVector::from_vec(vec![1.0, 0.3])),
    ];
    let reflexivity = worst(bodies.iter().map(|b| {
        let b = b.clone()?;
        support_gap(&b, &b.polar_dual(hbar)?.polar_dual(hbar)?)
    }));
    let scaling = worst((0..20).map(|_| {
        let x = ConvexBody::ellipsoid(DMatrix::from_row_slice(
            2,
            2,
            &[rng.random_range(0.5..2.0), 0.1, 0.1, rng.random_range(0.5..2.0)],
        ))?;
        let l = DMatrix::from_fn(2, 2, |i, j| {
            rng.random_range(-0.5..0.5) + if i == j { 1.5 } else { 0.0 }
        });
        let lhs = x.linear_image(&l)?.polar_dual(hbar)?;
        let l_inv_t = l.clone().try_inverse().ok_or(phasespace::Error::Singular)?.transpose();
        let rhs = x.polar_dual(hbar)?.linear_image(&l_inv_t)?;
        support_gap(&lhs, &rhs)
    }));
    let ellipsoid_mahler = worst((1..=3).map(|n| {
        let a = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 + i as f64 } else { 0.1 });
        let m = ConvexBody::ellipsoid(a)?.mahler_volume(hbar, 0, 0)?.value;
        Ok((m / santalo_bound(n, hbar) - 1.0).abs())
    }));
    let box_mahler = worst((1..=3).map(|n| {
        let b = ConvexBody::cuboid(DVector::from_fn(n, |i, _| 0.5 + i as f64))?;
        let m = b.mahler_volume(hbar, 0, 0)?.value;
        Ok((m - mahler_conjecture_bound(n, hbar)).abs() / mahler_conjecture_bound(n, hbar))
    }));
    vec![
        check("polar_reflexivity", 1e-12, reflexivity),
        check("polar_scaling_law", 1e-9, scaling),
        check("ellipsoid_mahler_santalo", 1e-9, ellipsoid_mahler),
        check("box_mahler_conjecture", 1e-12, box_mahler),
    ]
}

fn quasistate(rng: &mut ChaCha8Rng, hbar: f64) -> Vec<Check> {
    let ball = capacity_ellipsoid(&DMatrix::identity(4, 4), hbar).map(|c| (c - PI * hbar).abs());
    let closed_form = worst((0..20).map(|_| {
        let (a, b) = (rng.random_range(0.2..5.0), rng.random_range(0.2..5.0));
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![a, b]));
        Ok((capacity_ellipsoid(&m, hbar)? - PI * hbar / (a * b).sqrt()).abs())
    }));
    let m = DMatrix::from_row_slice(
        4,
        4,
        &[2.0, 0.1, 0.3, 0.0, 0.1, 1.0, 0.0, 0.2, 0.3, 0.0, 1.5, 0.1, 0.0, 0.2, 0.1, 0.7],
    );
    let invariance = capacity_ellipsoid(&m, hbar).and_then(|c| {
        worst((0..20).map(|_| {
            let s = random_symplectic(2, rng.random());
            let conj = s.matrix().transpose() * &m * s.matrix();
            Ok((capacity_ellipsoid(&conj, hbar)? - c).abs())
        }))
    });
    let cmax = worst((0..5).map(|k| {
        let x = ConvexBody::ellipsoid(DMatrix::from_row_slice(2, 2, &[1.0 + k as f64, 0.2, 0.2, 0.8]))?;
        let c = cmax_general(&x, &x.polar_dual(hbar)?.scaled(1.5)?, hbar)?;
        Ok((c.value - 6.0 * hbar).abs())
    }));
    let orbit = hz_orbit(&m, hbar, 10_000).map(|o| ((o.discrete_action - o.action) / o.action).abs());
    vec![
        check("ball_capacity", 1e-12, ball),
        check("capacity_closed_form", 1e-10, closed_form),
        check("capacity_symplectic_invariance", 1e-8, invariance),
        check("cmax_general_pencil", 1e-6, cmax),
        check("orbit_action", 1e-6, orbit),
    ]
}

fn gaussian(rng: &mut ChaCha8Rng, hbar: f64) -> Vec<Check> {
    let round_trip = worst((0..100).map(|k| {
        let g = random_gaussian(1 + k % 3, hbar, rng);
        let back = blob_to_gaussian(&gaussian_to_blob(&g)?)?;
        Ok(max_abs_diff(g.x(), back.x())
            .max(max_abs_diff(g.y(), back.y()))
            .max((g.center() - back.center()).amax()))
    }));
    let blob_round_trip = worst((0..100).map(|k| {
        let b = random_blob(1 + k % 3, hbar, rng);
        let back = gaussian_to_blob(&blob_to_gaussian(&b)?)?;
        let a = b.s().matrix() * b.s().matrix().transpose();
        let c = back.s().matrix() * back.s().matrix().transpose();
        Ok(max_abs_diff(&a, &c) / a.amax())
    }));
    let disagreements = (0..400)
        .filter(|k| {
            let cov = random_covariance(1 + k % 3, hbar, rng);
            let williamson_min = cov
                .symplectic_spectrum()
                .map(|s| s.min() >= 0.5 * hbar * (1.0 - 1e-9))
                .unwrap_or(false);
            quantum_condition(&cov) != williamson_min
        })
        .count() as f64;
    let rs = (0..200)
        .filter(|k| {
            let cov = random_covariance(1 + k % 3, hbar, rng);
            quantum_condition(&cov) && !rs_inequalities(&cov).iter().all(|r| r.pass)
        })
        .count() as f64;
    let blob_purity = worst((0..50).map(|k| {
        let cov = covariance_from_blob(&random_blob(1 + k % 3, hbar, rng));
        Ok((purity(&cov).value - 1.0).abs())
    }));
    let capacity_floor = (0..200)
        .filter(|k| {
            let cov = random_covariance(1 + k % 2, hbar, rng);
            let c = cov.ellipsoid_shape().and_then(|m| capacity_ellipsoid(&m, cov.hbar()));
            match c {
                Ok(c) => (c >= PI * hbar * (1.0 - 1e-9)) != quantum_condition(&cov),
                Err(_) => true,
            }
        })
        .count() as f64;
    vec![
        check("gaussian_round_trip", 1e-9, round_trip),
        check("blob_round_trip", 1e-9, blob_round_trip),
        check("quantum_condition_disagreements", 0.0, Ok(disagreements)),
        check("rs_failures_on_quantum", 0.0, Ok(rs)),
        check("blob_purity", 1e-9, blob_purity),
        check("capacity_floor_disagreements", 0.0, Ok(capacity_floor)),
    ]
}

fn wigner(rng: &mut ChaCha8Rng, hbar: f64) -> Vec<Check> {
    let mut grid_error = Vec::new();
    let mut normalization = Vec::new();
    for _ in 0..4 {
        let g = GaussianState::new(
            DMatrix::from_element(1, 1, rng.random_range(0.5..2.0)),
            DMatrix::from_element(1, 1, rng.random_range(-1.0..1.0)),
            DVector::zeros(2),
            hbar,
        );
        let result = g.and_then(|g| {
            let w = GridWavefunction::sample(&g, GridSpec::for_state(&g, 512)?)?;
            let wg = wigner_grid(&w, WignerOptions::default())?;
            let analytic = wigner_gaussian(&g)?;
            let mut err: f64 = 0.0;
            for i in 0..wg.nx {
                for j in 0..wg.np {
                    let z = DVector::from_vec(vec![wg.x(i), wg.p(j)]);
                    err = err.max((wg.value(i, j) - analytic.evaluate(&z)).abs());
                }
            }
            Ok((err, (wg.integral() - 1.0).abs()))
        });
        grid_error.push(result.clone().map(|r| r.0));
        normalization.push(result.map(|r| r.1));
    }
    vec![
        check("grid_vs_analytic", 1e-6, worst(grid_error)),
        check("normalization", 1e-6, worst(normalization)),
    ]
}

fn fermi(rng: &mut ChaCha8Rng, hbar: f64) -> Vec<Check> {
    let cases: Vec<FermiHamiltonian> = (0..10)
        .map(|k| FermiHamiltonian::from_state(&random_gaussian(1 + k % 3, hbar, rng)))
        .collect::<phasespace::Result<_>>()
        .unwrap_or_default();
    let ts: Vec<f64> = (1..=20).map(|k| 0.5 * k as f64).collect();
    let factorization = worst(cases.iter().map(|f| Ok(f.factorization_residual())));
    let invariance = worst(
        cases
            .iter()
            .flat_map(|f| ts.iter().map(move |&t| blob_invariance(f, t).map(|b| b.defect))),
    );
    let conjugation = worst(cases.iter().flat_map(|f| {
        ts.iter().map(move |&t| {
            Ok(max_abs_diff(
                canonical_flow(f, t)?.s_t.matrix(),
                canonical_flow_conjugated(f, t)?.s_t.matrix(),
            ))
        })
    }));
    let group = worst(cases.iter().map(|f| {
        let a = canonical_flow(f, 1.3)?.s_t;
        let b = canonical_flow(f, -0.4)?.s_t;
        Ok(max_abs_diff(a.compose(&b).matrix(), canonical_flow(f, 0.9)?.s_t.matrix()))
    }));
    let energy = worst(cases.iter().map(|f| {
        let flow = canonical_flow(f, 2.7)?;
        let z = DVector::from_fn(2 * f.n(), |i, _| 0.3 + 0.1 * i as f64);
        Ok(energy_drift(f, &flow, &z))
    }));
    let spectrum = worst(cases.iter().map(|f| {
        // the symplectic spectrum of M is the spectrum of X
        let s = symplectic_eigenvalues(f.m())?;
        let mut ev: Vec<f64> = f.x().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        Ok(s.values.iter().zip(ev.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }));
    let residual = worst([(1.0, 0.0), (3.0, 1.5), (0.7, -0.8)].iter().map(|&(x, y)| {
        let f = phasespace::fermi::fermi_matrix(
            &DMatrix::from_element(1, 1, x),
            &DMatrix::from_element(1, 1, y),
            hbar,
        )?;
        eigen_residual_grid(&f, 4096, Differentiation::Spectral)
    }));
    let phase = phase_evolution_grid(1.0, hbar, 1024, 315, PI).map(|p| p.phase_error.max(p.shape_error));
    vec![
        check("factorization", 1e-10, factorization),
        check("blob_invariance", 1e-8, invariance),
        check("conjugation_route", 1e-8, conjugation),
        check("group_law", 1e-8, group),
        check("energy_conservation", 1e-9, energy),
        check("symplectic_spectrum_is_x", 1e-9, spectrum),
        check("eigen_residual_spectral", 1e-6, residual),
        check("split_step_phase", 1e-5, phase),
    ]
}
