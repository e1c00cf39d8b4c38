"""Smoke test for the phasespace_py extension.

Build the module first, e.g.

    cargo build -p phasespace-py --release --features extension-module
    cp target/release/libphasespace_py.so python/phasespace_py.so
"""

import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

import phasespace_py as ps


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    s = ps.random_symplectic(2, 7)
    assert ps.is_symplectic(s)
    f = ps.pre_iwasawa(s)
    assert f["reconstruction_error"] < 1e-9, f

    try:
        ps.pre_iwasawa([[1.0, 0.0], [0.0, 2.0]])
    except ps.PhasespaceError:
        pass
    else:
        raise AssertionError("expected PhasespaceError")

    ball = ps.ConvexBody.ball(2, 1.0)
    vol, _ = ball.volume()
    assert close(vol, math.pi, 1e-12), vol
    dual = ball.polar_dual(1.0)
    assert dual.variant == ball.variant
    mahler, _ = ps.ConvexBody.box([1.0, 1.0]).mahler_volume()
    assert close(mahler, 8.0, 1e-12), mahler
    assert close(mahler, ps.mahler_conjecture_bound(2), 1e-12)
    assert ps.kuperberg_bound(2) <= mahler <= ps.santalo_bound(2)

    g = ps.GaussianState([[1.5]], [[0.3]], hbar=1.0)
    blob = g.to_blob()
    back = blob.to_gaussian()
    assert close(back.x[0][0], 1.5, 1e-9) and close(back.y[0][0], 0.3, 1e-9)
    assert close(blob.volume(), math.pi, 1e-9)

    q = ps.quantum_check(blob.covariance(), 1.0)
    assert q["quantum"] and close(q["purity"], 1.0, 1e-9), q
    assert close(ps.capacity_ellipsoid([[1.0, 0.0], [0.0, 1.0]], 1.0), math.pi, 1e-12)

    h = ps.FermiHamiltonian([[1.5]], [[0.3]])
    ok, defect = h.blob_invariance(0.7)
    assert ok and defect < 1e-8, defect
    assert h.eigen_residual() < 1e-6
    phase_error, _ = ps.phase_evolution(1.0, 1.0)
    assert phase_error < 1e-5, phase_error

    print("phasespace_py smoke test: OK")


if __name__ == "__main__":
    main()
