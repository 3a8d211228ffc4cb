"""Acceptance criteria 1-9 at their stated tolerances.

Each test prints one ``PASS``/``FAIL`` line; the lines are repeated in the
"acceptance criteria" section of the pytest summary.  Run on its own with
``python3 tests/test_acceptance.py`` or ``pytest -m acceptance``.  The drift-scaling
criterion runs two 8-member ensembles and takes roughly 15 minutes on one CPU.
"""

from __future__ import annotations

import math
import sys
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from gbq import experiments
from gbq.config import load_config
from gbq.datagen import RoughDataSpec, gaussian_data, rough_data
from gbq.dynamics import StepperConfig, duhamel_residual, evolve, evolve_state, initial_state
from gbq.imethod import m_values, smoothing_bounds_check
from gbq.propagators import free_evolution
from gbq.spectral import FourierGrid, forward

pytestmark = pytest.mark.acceptance


def report(n: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, detail


def _run(experiment: str, out: Path, **overrides):
    ov = {"out": str(out), "plots": "false", **{k: str(v) for k, v in overrides.items()}}
    return experiments.run(load_config(None, ov, experiment=experiment))


def _crit(rec) -> str:
    return ", ".join(f"{c.name}={c.value:.4g}" for c in rec.criteria)


@pytest.fixture(scope="module")
def out(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


def test_1_energy_conservation(out):
    sim = _run("simulate", out, k=1, L=80, M=1024, dt=1e-3, T=10, data="gaussian")
    drift = max(sim.series["E_rel_drift"])
    conv = _run("convergence", out)
    order = min(conv.fits["temporal_orders"])
    report(1, drift <= 1e-8 and order >= 3.5,
           f"relative energy drift {drift:.3e} <= 1e-8, temporal order {order:.3f} >= 3.5")


def test_2_linear_exactness():
    g = FourierGrid(2 * math.pi, 256)
    phi, psi = rough_data(RoughDataSpec(s=0.9, seed=5), g)
    st0 = initial_state(phi, psi)
    errs = []
    for dt in (1e-3, 7.3e-3, 0.05, 0.31):
        fin = evolve_state(st0, 1.0, StepperConfig(dt=dt, nonlinear=False), stride=10**9).final
        ref, _ = free_evolution(1.0, st0.u_hat, st0.ut_hat)
        errs.append(float(np.linalg.norm(fin.u_hat.coeffs - ref.coeffs) / np.linalg.norm(ref.coeffs)))
    gphi, gpsi = gaussian_data(1.0, 1.0, FourierGrid(80.0, 1024))
    lin = evolve(gphi, gpsi, 0.5, StepperConfig(dt=1e-2, nonlinear=False), keep_states=True)
    duh = duhamel_residual(lin)
    report(2, max(errs) <= 1e-13 and duh <= 1e-12,
           f"max relative error vs free evolution {max(errs):.3e} <= 1e-13, "
           f"duhamel residual {duh:.3e} <= 1e-12")


@pytest.mark.parametrize("k", [1, 2])
def test_3_acl_identity(out, k):
    rec = _run("acl-check", out, k=k)
    report(3, rec.passed, f"k={k}, N=8,32: {_crit(rec)}")


@pytest.mark.parametrize("k,s", [(1, 0.9), (2, 0.95)])
def test_4_almost_conservation_scaling(out, k, s):
    rec = _run("drift-scaling", out, k=k, s=s)
    report(4, rec.passed, f"k={k}, s={s}: {_crit(rec)}")


def test_5_smoothing_bounds():
    g = FourierGrid(2 * math.pi, 1024)
    lines, ok = [], True
    for s in (0.7, 0.9):
        ens = [forward(rough_data(RoughDataSpec(s=s, seed=3, stream=i), g)[0]) for i in range(8)]
        for s0 in (0.0, s):
            rep = smoothing_bounds_check(ens, s0, s, [8, 16, 32, 64, 128])
            ok &= rep.passed
            lines.append(f"s={s},s0={s0}: r1 {max(rep.r1_max) / rep.r1_max[0]:.3f}x, "
                         f"r2 {max(rep.r2_max) / rep.r2_max[0]:.3f}x")
    report(5, ok, "; ".join(lines) + " (<= 2x)")


def test_6_multiplier_contract():
    worst_branch, worst_c1, mono = 0.0, 0.0, True
    for blend in ("smoothstep", "c1"):
        for N in (1.0, 8.0, 32.0, 128.0):
            for s in (0.1, 0.5, 0.9, 0.95):
                a = np.linspace(0, 12 * N, 20001)
                m = m_values(a, N, s, blend)
                inner = a <= N
                outer = a >= 2 * N
                worst_branch = max(worst_branch, float(np.max(np.abs(m[inner] - 1.0))),
                                   float(np.max(np.abs(m[outer] - (N / a[outer]) ** (1 - s)))))
                mono &= bool(np.all(np.diff(m) <= 0))
                d = 1e-4 * N
                for j in (N, 2 * N):
                    v = m_values(np.array([j - 2 * d, j - d, j, j + d, j + 2 * d]), N, s, blend)
                    left = (3 * v[2] - 4 * v[1] + v[0]) / (2 * d)
                    right = (-3 * v[2] + 4 * v[3] - v[4]) / (2 * d)
                    worst_c1 = max(worst_c1, abs(left - right) * N / (1 - s))
    report(6, worst_branch == 0.0 and mono and worst_c1 <= 1e-6,
           f"branch error {worst_branch:.1e}, nonincreasing={mono}, "
           f"slope jump {worst_c1:.2e} <= 1e-6")


def test_7_strichartz_suite(out):
    rec = _run("strichartz-check", out)
    report(7, rec.passed, _crit(rec))


def test_8_growth_bound(out):
    formula = experiments.growth_bound_exponent(0.9, 1)
    direct = (1 - 0.9) / (6 * 1 * 0.9 - 6 * 1 + 2)
    rec = _run("growth-study", out)
    ok = rec.passed and math.isclose(formula, 0.1 / 1.4, rel_tol=1e-14) \
        and math.isclose(formula, direct, rel_tol=1e-14)
    report(8, ok, f"{_crit(rec)}; bound {formula:.6f} = 0.1/1.4")


def test_9_reproducibility(out):
    pairs = []
    for exp, ov in (("simulate", {"data": "rough", "L": "2pi", "M": 256, "dt": 1e-4, "T": 0.05,
                                  "stride": 10, "N": "4,8", "seed": 17}),
                    ("growth-study", {"T": 0.5, "ensemble": 2, "windows": 4})):
        first = _run(exp, out / "repro", **ov)
        again = experiments.run(load_config(first.outdir / "run.json", experiment=exp))
        for name in first.files:
            if name.endswith(".csv"):
                pairs.append((name, (first.outdir / name).read_bytes() == (again.outdir / name).read_bytes()))
    report(9, bool(pairs) and all(ok for _, ok in pairs),
           "bit-identical CSV on rerun: " + ", ".join(f"{n}={ok}" for n, ok in pairs))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-s", "-q", *sys.argv[1:]]))
