"""Named experiments.  Each ``cmd_*`` takes a validated config, writes its
outputs into a fresh versioned directory and returns the RunRecord."""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
from scipy import integrate, stats

from . import datagen, functionals, imethod
from .config import ExperimentConfig
from .datagen import RoughDataSpec
from .dynamics import (
    SimState,
    StepperConfig,
    advance_by,
    evolve_state,
    initial_state,
)
from .estimates import (
    bilinear_ensemble,
    bilinear_ratio,
    free_wave_ensemble,
    strichartz_ratio,
    uniform_over_sweep,
    xsb_norm,
    mixed_norm,
)
from .propagators import free_evolution
from .records import RunRecord, versioned_dir, write_csv
from .spectral import FourierGrid, Spectrum, pad, sobolev_norm_coeffs

log = logging.getLogger(__name__)

GENERATOR = "Philox4x64-10 (numpy), key = seed, counter word 3 = member index"

# default tolerances; every entry can be overridden with tol.<name>
TOLERANCES = {
    "energy_drift": 1e-8,
    "acl_pointwise": 1e-4,
    "ftc_order_slack": 0.5,
    "drift_slope": -1.5,
    "drift_r2": 0.9,
    "growth_slack": 0.1,
    "sweep_factor": 2.0,
    "parseval": 1e-12,
    "temporal_order": 3.5,
    "spatial_h1": 1e-10,
    "linear_exact": 1e-13,
}


def tol(cfg: ExperimentConfig, name: str) -> float:
    return float(cfg.tol.get(name, TOLERANCES[name]))


def worker_count(n_tasks: int, env=os.environ) -> int:
    cap = os.cpu_count() or 1
    if env.get("GBQ_WORKERS"):
        cap = max(1, int(env["GBQ_WORKERS"]))
    return max(1, min(cap, n_tasks))


def pool_map(fn: Callable, args: Sequence[Any]) -> list:
    """Order-preserving map over a process pool capped by GBQ_WORKERS."""
    n = worker_count(len(args))
    if n <= 1:
        return [fn(a) for a in args]
    with ProcessPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, args))


def make_grid(cfg: ExperimentConfig) -> FourierGrid:
    return FourierGrid(cfg.L, cfg.M)


def make_data(cfg: ExperimentConfig, grid: FourierGrid, member: int = 0):
    if cfg.data == "gaussian":
        return datagen.gaussian_data(cfg.amplitude, cfg.width, grid)
    if cfg.data == "rough":
        spec = RoughDataSpec(s=cfg.s, amplitude=cfg.amplitude, seed=cfg.seed, stream=member,
                             law=cfg.law, cutoff=cfg.cutoff, with_psi=cfg.with_psi)
        return datagen.rough_data(spec, grid)
    if cfg.data == "packet":
        return datagen.packet_data(cfg.amplitude, cfg.packet_amplitude, cfg.packet_xi,
                                   cfg.packet_width, grid)
    if cfg.data == "zero":
        z = datagen.Field(grid, np.zeros(grid.M))
        return z, z
    return datagen.load_data(cfg.data_file, grid)


def stepper(cfg: ExperimentConfig) -> StepperConfig:
    return StepperConfig(dt=cfg.dt, scheme=cfg.scheme, nonlinear=cfg.nonlinear)


def lineage(cfg: ExperimentConfig, members: int) -> dict[str, Any]:
    return {"root_seed": cfg.seed, "generator": GENERATOR,
            "members": [{"member": i, "stream": i} for i in range(members)]}


def _new_record(cfg: ExperimentConfig, members: int = 1) -> tuple[RunRecord, Path]:
    outdir = versioned_dir(cfg.out, cfg.experiment)
    rec = RunRecord(cfg.experiment, cfg.to_dict(), lineage(cfg, members))
    return rec, outdir


def _finish(rec: RunRecord, outdir: Path, cfg: ExperimentConfig, plot: Callable | None = None):
    if plot is not None and cfg.plots:
        try:
            rec.files.extend(str(p.name) for p in plot(rec, outdir))
        except Exception as exc:  # plotting never decides PASS/FAIL
            rec.warnings.append(f"plotting failed: {exc}")
    rec.write(outdir)
    rec.outdir = outdir
    return rec


# ---------------------------------------------------------------- simulate


def series_columns(cfg: ExperimentConfig) -> list[str]:
    cols = ["t", "E", "E_rel_drift", "H1"]
    cols += [f"Hs_{s:g}" for s in cfg.s_list]
    cols += ["L2kp2"]
    cols += [f"EIu_{N:g}" for N in cfg.N]
    return cols


def cmd_simulate(cfg: ExperimentConfig) -> RunRecord:
    from .plotting import plot_simulate

    rec, outdir = _new_record(cfg)
    grid = make_grid(cfg)
    phi, psi = make_data(cfg, grid)
    ms = [imethod.build_m(N, cfg.s, grid, cfg.blend) for N in cfg.N]
    state0 = initial_state(phi, psi, cfg.k)
    traj = evolve_state(state0, cfg.T, stepper(cfg),
                        {"row": lambda st: functionals.norm_row(st, cfg.s_list, ms)},
                        stride=cfg.stride)
    rows = traj.records["row"]
    E0 = rows[0]["E"]
    cols = series_columns(cfg)
    table = []
    for r in rows:
        r["E_rel_drift"] = abs(r["E"] - E0) / E0 if E0 != 0 else abs(r["E"] - E0)
        table.append([r[c] for c in cols])
    rec.files.append(write_csv(outdir / "series.csv", cols, table).name)
    rec.series = {c: [row[i] for row in table] for i, c in enumerate(cols)}
    rec.check("energy_conservation", max(rec.series["E_rel_drift"]), tol(cfg, "energy_drift"))
    return _finish(rec, outdir, cfg, plot_simulate)


# ---------------------------------------------------------------- acl-check


def _advance(state: SimState, h: float, n: int, cfg: StepperConfig) -> SimState:
    for _ in range(n):
        state = advance_by(state, h / n, cfg)
    return state


def acl_trajectory(cfg: ExperimentConfig, grid: FourierGrid, ms, member: int = 0):
    """Pairing, modified energies and finite-difference derivatives along one run."""
    phi, psi = make_data(cfg, grid, member)
    st0 = initial_state(phi, psi, cfg.k)
    scfg = stepper(cfg)
    h, nsub = cfg.fd_h, cfg.fd_substeps
    fd_every = cfg.stride

    def per_step(st: SimState):
        return ([functionals.commutator_pairing(st, m) for m in ms],
                [functionals.modified_energy(st, m).E for m in ms])

    fd_rows = []
    counter = {"i": 0}

    def fd_obs(st: SimState):
        i = counter["i"]
        counter["i"] += 1
        if i % fd_every or st.t == 0.0 or st.t >= cfg.T:
            return None
        plus = _advance(st, h, nsub, scfg)
        minus = _advance(st, -h, nsub, scfg)
        fd = [(functionals.modified_energy(plus, m).E - functionals.modified_energy(minus, m).E)
              / (2.0 * h) for m in ms]
        pair = [functionals.commutator_pairing(st, m) for m in ms]
        fd_rows.append((st.t, fd, pair))
        return None

    traj = evolve_state(st0, cfg.T, scfg, {"pe": per_step, "fd": fd_obs}, stride=1)
    times = np.array(traj.times)
    P = np.array([r[0] for r in traj.records["pe"]])
    E = np.array([r[1] for r in traj.records["pe"]])
    return times, P, E, fd_rows


def ftc_errors(times: np.ndarray, P: np.ndarray, E: np.ndarray, levels: int = 9):
    """|E(T) - E(0) - Simpson(P)| using every 1st, 2nd, 4th, ... sample.

    Levels stop once fewer than four Simpson intervals remain.
    """
    out = []
    dE = E[-1] - E[0]
    for j in range(levels):
        step = 2**j
        idx = np.arange(0, len(times), step)
        if idx[-1] != len(times) - 1 or len(idx) < 5 or (len(idx) - 1) % 2:
            break
        q = integrate.simpson(P[idx], x=times[idx])
        out.append((float(times[step] - times[0]), float(abs(dE - q))))
    return out


def ftc_order(errs: Sequence[tuple[float, float]], above: float = 100.0) -> float:
    """Least-squares order over spacings whose error exceeds ``above`` times the
    finest-spacing error (which sits at the time-integration floor)."""
    if not errs:
        return float("nan")
    floor = errs[0][1]
    pts = [(h, e) for h, e in errs if e > above * floor]
    if len(pts) < 3:
        return float("nan")
    h, e = np.log(np.array(pts)).T
    return float(np.polyfit(h, e, 1)[0])


def cmd_acl_check(cfg: ExperimentConfig) -> RunRecord:
    from .plotting import plot_acl

    rec, outdir = _new_record(cfg)
    grid = make_grid(cfg)
    ms = [imethod.build_m(N, cfg.s, grid, cfg.blend) for N in cfg.N]
    times, P, E, fd_rows = acl_trajectory(cfg, grid, ms)
    cols = ["t"] + [f"fd_{m.N:g}" for m in ms] + [f"pairing_{m.N:g}" for m in ms]
    table = [[t] + fd + pair for t, fd, pair in fd_rows]
    rec.files.append(write_csv(outdir / "acl.csv", cols, table).name)
    cols2 = ["t"] + [f"pairing_{m.N:g}" for m in ms] + [f"EIu_{m.N:g}" for m in ms]
    rec.files.append(write_csv(outdir / "series.csv", cols2,
                               ([t, *p, *e] for t, p, e in zip(times, P, E))).name)
    rec.series = {c: [row[i] for row in table] for i, c in enumerate(cols)}
    for j, m in enumerate(ms):
        fd = np.array([r[1][j] for r in fd_rows])
        pr = np.array([r[2][j] for r in fd_rows])
        scale = np.max(np.abs(pr)) if pr.size else 0.0
        err = float(np.max(np.abs(fd - pr)) / scale) if scale > 0 else float(np.max(np.abs(fd - pr), initial=0.0))
        rec.check(f"acl_pointwise_N{m.N:g}", err, tol(cfg, "acl_pointwise"),
                  note="max|FD - pairing| / max|pairing| over samples")
        errs = ftc_errors(times, P[:, j], E[:, j])
        obs = ftc_order(errs)
        rec.fits[f"ftc_N{m.N:g}"] = {"spacing_error": errs, "dE": float(E[-1, j] - E[0, j]),
                                     "order": obs}
        rec.check(f"ftc_order_N{m.N:g}", obs, 4.0 - tol(cfg, "ftc_order_slack"), ">=",
                  note="fitted Simpson order of the FTC residual above the integration floor")
    return _finish(rec, outdir, cfg, plot_acl)


# ---------------------------------------------------------------- drift-scaling


def _drift_member(args) -> dict[str, Any]:
    cfg, member = args
    grid = make_grid(cfg)
    ms = [imethod.build_m(N, cfg.s, grid, cfg.blend) for N in cfg.N]
    ident = imethod.identity_m(grid)
    obs = {imethod.energy_key(m): imethod.modified_energy_observer(m) for m in ms}
    raw_key = "E_raw"
    obs[raw_key] = lambda st: functionals.energy(st).E
    phi, psi = make_data(cfg, grid, member)
    traj = evolve_state(initial_state(phi, psi, cfg.k), cfg.T, stepper(cfg), obs,
                        stride=cfg.stride)
    e = np.asarray(traj.records[raw_key])
    return {"member": member, "drifts": [imethod.drift(traj, m) for m in ms],
            "raw": float(np.max(np.abs(e - e[0])))}


def cmd_drift_scaling(cfg: ExperimentConfig) -> RunRecord:
    from .plotting import plot_drift

    Ns = sorted(cfg.N)
    cfg.N = Ns
    rec, outdir = _new_record(cfg, cfg.ensemble)
    if cfg.test_mode:
        results = [{"member": i, "drifts": [N**-2.0 for N in Ns], "raw": 0.0}
                   for i in range(cfg.ensemble)]
        rec.warnings.append("test mode: synthetic drift N^-2 injected, no simulation")
    else:
        results = pool_map(_drift_member, [(cfg, i) for i in range(cfg.ensemble)])
    factor = cfg.noise_factor
    rows, flagged, slopes = [], 0, []
    for r in results:
        pts = []
        for N, d in zip(Ns, r["drifts"]):
            bad = d <= factor * r["raw"]
            flagged += bad
            rows.append([r["member"], N, d, r["raw"], bad])
            if not bad:
                pts.append((N, d))
        if len(pts) >= 4:
            slopes.append(imethod.scaling_fit(pts).slope)
    med = [float(np.median([r["drifts"][i] for r in results])) for i in range(len(Ns))]
    med_raw = float(np.median([r["raw"] for r in results]))
    for N, d in zip(Ns, med):
        rows.append(["median", N, d, med_raw, d <= factor * med_raw])
    rec.files.append(write_csv(outdir / "drift.csv", ["member", "N", "drift", "raw_drift", "flagged"],
                               rows).name)
    usable = [(N, d) for N, d in zip(Ns, med) if d > factor * med_raw]
    if flagged:
        rec.warnings.append(f"{flagged} (member, N) drift points within {factor:g}x of the raw energy drift")
    fit = imethod.scaling_fit(usable if len(usable) >= 4 else list(zip(Ns, med)))
    rec.fits = {"median": {"slope": fit.slope, "intercept": fit.intercept, "r2": fit.r2,
                           "points": fit.used},
                "member_slopes": slopes, "median_raw_drift": med_raw,
                "target_slope": -2.0}
    rec.series = {"N": Ns, "median_drift": med}
    rec.check("median_slope", fit.slope, tol(cfg, "drift_slope"))
    rec.check("median_r2", fit.r2, tol(cfg, "drift_r2"), ">=")
    rec.check("points_above_noise_floor", float(flagged), 0.0,
              note=f"count of drift points within {factor:g}x of the raw energy drift")
    return _finish(rec, outdir, cfg, plot_drift)


# ---------------------------------------------------------------- growth-study


def growth_bound_exponent(s: float, k: int) -> float:
    """(1-s)/(6ks-6k+2); defined for 1 - 1/(3k) < s < 1."""
    den = 6 * k * s - 6 * k + 2
    if not (den > 0 and s < 1):
        raise ValueError(f"s={s} outside the range 1 - 1/(3k) < s < 1 for k={k}")
    return (1.0 - s) / den


def growth_quantity(st: SimState, s: float) -> float:
    """||u||^2_{H^s} + ||(-Delta)^{-1/2} u_t||^2_{H^{s-1}}."""
    grid = st.grid
    a = np.abs(grid.xi)
    v = np.zeros_like(st.ut_hat.coeffs)
    nz = a > 0
    v[nz] = st.ut_hat.coeffs[nz] / a[nz]
    return (sobolev_norm_coeffs(grid, st.u_hat.coeffs, s) ** 2
            + sobolev_norm_coeffs(grid, v, s - 1.0) ** 2)


def growth_fit(times: np.ndarray, q: np.ndarray, windows: int):
    """Fit log sup_{[0,T']} q against log(1 + T') over log-spaced windows T'."""
    T = times[-1]
    Tw = T * 2.0 ** (np.arange(windows) - (windows - 1))
    sup = np.maximum.accumulate(q)
    sups = np.array([sup[np.searchsorted(times, t, side="right") - 1] for t in Tw])
    res = stats.linregress(np.log1p(Tw), np.log(sups))
    return float(res.slope), Tw, sups


def _growth_member(args):
    cfg, member = args
    grid = make_grid(cfg)
    phi, psi = make_data(cfg, grid, member)
    traj = evolve_state(initial_state(phi, psi, cfg.k), cfg.T, stepper(cfg),
                        {"q": lambda st: growth_quantity(st, cfg.s),
                         "E": lambda st: functionals.energy(st).E}, stride=cfg.stride)
    return {"member": member, "t": traj.times, "q": traj.records["q"], "E": traj.records["E"]}


def cmd_growth_study(cfg: ExperimentConfig) -> RunRecord:
    from .plotting import plot_growth

    bound = growth_bound_exponent(cfg.s, cfg.k)
    rec, outdir = _new_record(cfg, cfg.ensemble)
    results = pool_map(_growth_member, [(cfg, i) for i in range(cfg.ensemble)])
    rows, exps = [], []
    for r in results:
        t, q = np.array(r["t"]), np.array(r["q"])
        sup = np.maximum.accumulate(q)
        for ti, qi, si, ei in zip(t, q, sup, r["E"]):
            rows.append([r["member"], ti, qi, si, ei])
        slope, Tw, sups = growth_fit(t, q, cfg.windows)
        exps.append(slope)
        rec.fits[f"member_{r['member']}"] = {"exponent": slope, "windows": Tw.tolist(),
                                             "sup": sups.tolist()}
    rec.files.append(write_csv(outdir / "series.csv", ["member", "t", "Q", "Q_sup", "E"], rows).name)
    rec.fits["bound_exponent"] = bound
    rec.fits["observed_exponent"] = max(exps)
    rec.series = {"t": results[0]["t"], "Q": results[0]["q"]}
    rec.check("growth_exponent", max(exps), bound + tol(cfg, "growth_slack"),
              note=f"bound (1-s)/(6ks-6k+2) = {bound:.6g}")
    return _finish(rec, outdir, cfg, plot_growth)


# ---------------------------------------------------------------- strichartz-check


def _fmt_exp(v: float) -> str:
    return "inf" if math.isinf(v) else f"{v:g}"


def cmd_strichartz_check(cfg: ExperimentConfig) -> RunRecord:
    from .plotting import plot_ratios

    rec, outdir = _new_record(cfg, cfg.ensemble)
    grid = make_grid(cfg)
    pairs = cfg.parsed_pairs()
    rows = []
    maxima: dict[str, list[float]] = {}
    for scale in cfg.scales:
        blocks = free_wave_ensemble(grid, scale, cfg.ensemble, cfg.seed, cfg.T_w)
        for q, p in pairs:
            b = 0.0 if (q, p) == (2.0, 2.0) else cfg.b
            st = strichartz_ratio(blocks, q, p, b)
            label = f"L{_fmt_exp(q)}_{_fmt_exp(p)}"
            maxima.setdefault(label, []).append(st.max)
            for i, v in enumerate(st.values):
                rows.append([label, scale, i, v])
            if (q, p) == (2.0, 2.0):
                maxima.setdefault("parseval_dev", []).append(
                    max(abs(v - 1.0) for v in st.values))
    # bilinear refinement
    Mb = 16
    while Mb / 2 <= 2 * max(cfg.N2):
        Mb *= 2
    bgrid = FourierGrid(2 * math.pi, Mb)
    for N2 in cfg.N2:
        st = bilinear_ratio(bilinear_ensemble(bgrid, cfg.N1, N2, cfg.ensemble, cfg.seed,
                                              cfg.T_w_bilinear), cfg.b)
        maxima.setdefault("bilinear", []).append(st.max)
        for i, v in enumerate(st.values):
            rows.append(["bilinear", N2, i, v])
    rec.files.append(write_csv(outdir / "ratios.csv", ["estimate", "scale", "member", "ratio"], rows).name)
    factor = tol(cfg, "sweep_factor")
    for label, vals in maxima.items():
        if label == "parseval_dev":
            rec.check("parseval_L2_L2", max(vals), tol(cfg, "parseval"),
                      note="|ratio - 1| for q=p=2, b=0")
            continue
        rec.check(f"uniform_{label}", max(vals) / vals[0], factor,
                  note="max over sweep / max at smallest scale")
    rec.fits = {"maxima": maxima, "scales": list(cfg.scales), "N1": cfg.N1, "N2": list(cfg.N2),
                "T_w": cfg.T_w, "T_w_bilinear": cfg.T_w_bilinear, "b": cfg.b,
                "cutoff": "bump exp(1 - 1/(1 - r^2)), r = 2t/T_w - 1"}
    rec.series = {k: v for k, v in maxima.items()}
    return _finish(rec, outdir, cfg, plot_ratios)


# ---------------------------------------------------------------- convergence


def _final_u(cfg: ExperimentConfig, grid: FourierGrid, dt: float, nonlinear: bool = True):
    phi, psi = make_data(cfg, grid)
    st0 = initial_state(phi, psi, cfg.k)
    scfg = StepperConfig(dt=dt, scheme=cfg.scheme, nonlinear=nonlinear)
    traj = evolve_state(st0, cfg.T, scfg, stride=10**9)
    return st0, traj.final


def self_convergence_order(finals: Sequence[np.ndarray], grid: FourierGrid) -> tuple[list[float], list[float]]:
    """Errors between successive dyadic runs and the observed orders."""
    errs = [sobolev_norm_coeffs(grid, a - b, 1.0) for a, b in zip(finals, finals[1:])]
    orders = [math.log2(e0 / e1) if e1 > 0 else float("inf") for e0, e1 in zip(errs, errs[1:])]
    return errs, orders


def cmd_convergence(cfg: ExperimentConfig) -> RunRecord:
    from .plotting import plot_convergence

    rec, outdir = _new_record(cfg)
    grid = make_grid(cfg)
    dts = sorted(cfg.dt_list, reverse=True)
    finals = [_final_u(cfg, grid, dt)[1].u_hat.coeffs for dt in dts]
    errs, orders = self_convergence_order(finals, grid)
    rows = [["time", dt, e] for dt, e in zip(dts[1:], errs)]
    rec.check("temporal_order", min(orders), tol(cfg, "temporal_order"), ">=")
    # spatial: compare resolutions on the finest grid
    Ms = sorted(cfg.M_list)
    fine = FourierGrid(cfg.L, Ms[-1])
    ups = []
    for M in Ms:
        g = FourierGrid(cfg.L, M)
        c = _final_u(cfg, g, dts[-1])[1].u_hat.coeffs
        ups.append(pad(c, Ms[-1]))
    sp = [sobolev_norm_coeffs(fine, a - ups[-1], 1.0) for a in ups[:-1]]
    rows += [["space", M, e] for M, e in zip(Ms[:-1], sp)]
    rec.check("spatial_h1_difference", max(sp), tol(cfg, "spatial_h1"))
    # linear-only runs against the exact propagator
    lin = []
    for dt in dts:
        st0, fin = _final_u(cfg, grid, dt, nonlinear=False)
        u_ex, _ = free_evolution(cfg.T, st0.u_hat, st0.ut_hat)
        lin.append(float(np.linalg.norm(fin.u_hat.coeffs - u_ex.coeffs)
                         / max(np.linalg.norm(u_ex.coeffs), 1e-300)))
    rows += [["linear", dt, e] for dt, e in zip(dts, lin)]
    rec.check("linear_exactness", max(lin), tol(cfg, "linear_exact"))
    rec.files.append(write_csv(outdir / "convergence.csv", ["sweep", "parameter", "error"], rows).name)
    rec.fits = {"dt": dts, "temporal_errors": errs, "temporal_orders": orders,
                "M": Ms, "spatial_errors": sp, "linear_errors": lin}
    rec.series = {"dt": dts[1:], "error": errs}
    return _finish(rec, outdir, cfg, plot_convergence)


COMMANDS = {
    "simulate": cmd_simulate,
    "acl-check": cmd_acl_check,
    "drift-scaling": cmd_drift_scaling,
    "growth-study": cmd_growth_study,
    "strichartz-check": cmd_strichartz_check,
    "convergence": cmd_convergence,
}


def run(cfg: ExperimentConfig) -> RunRecord:
    return COMMANDS[cfg.experiment](cfg)
