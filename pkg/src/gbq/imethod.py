"""The smoothing multiplier m_N, the operator I, and drift measurements."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .functionals import modified_energy
from .spectral import FourierGrid, Spectrum, SymbolTable, _same_grid, sobolev_norm_coeffs

log = logging.getLogger(__name__)

BLENDS = ("smoothstep", "c1")


def _blend_profile(tau: np.ndarray, blend: str) -> np.ndarray:
    """tau * S(tau): fraction of the outer log-slope reached at tau in [0, 1]."""
    if blend == "smoothstep":
        S = tau**3 * (10.0 - 15.0 * tau + 6.0 * tau**2)
        return tau * S
    if blend == "c1":
        return tau**2 * (2.0 - tau)
    raise ValueError(f"unknown blend {blend!r}; expected one of {BLENDS}")


def m_values(absxi: np.ndarray, N: float, s: float, blend: str = "smoothstep") -> np.ndarray:
    """m_N(xi) evaluated at |xi| values.

    Equal to 1 for |xi| <= N and to (N/|xi|)^(1-s) for |xi| >= 2N.  In between
    log m is interpolated in log|xi| with matching slopes at both ends.
    """
    a = np.asarray(absxi, dtype=float)
    out = np.ones_like(a)
    outer = a >= 2.0 * N
    out[outer] = (N / a[outer]) ** (1.0 - s)
    mid = (a > N) & ~outer
    tau = np.log(a[mid] / N) / math.log(2.0)
    out[mid] = np.exp(-(1.0 - s) * math.log(2.0) * _blend_profile(tau, blend))
    return out


@dataclass(frozen=True, eq=False)
class MultiplierSpec:
    N: float
    s: float
    blend: str
    table: SymbolTable

    @property
    def grid(self) -> FourierGrid:
        return self.table.grid

    @property
    def is_identity(self) -> bool:
        return bool(np.all(self.table.values == 1.0))


def build_m(N: float, s: float, grid: FourierGrid, blend: str = "smoothstep") -> MultiplierSpec:
    if not 0.0 < s < 1.0:
        raise ValueError(f"target regularity must satisfy 0 < s < 1, got s={s}")
    if not N > 0:
        raise ValueError(f"N must be positive, got {N}")
    if N >= grid.nyquist:
        raise ValueError(
            f"N={N} is not below the Nyquist frequency {grid.nyquist:.6g}; "
            "the decay region would be unresolved"
        )
    if blend not in BLENDS:
        raise ValueError(f"unknown blend {blend!r}; expected one of {BLENDS}")
    if N > grid.nyquist / 4:
        log.warning("N=%g exceeds Nyquist/4=%g; decay region poorly resolved", N, grid.nyquist / 4)
    return MultiplierSpec(float(N), float(s), blend,
                          SymbolTable(grid, m_values(np.abs(grid.xi), N, s, blend)))


def identity_m(grid: FourierGrid) -> MultiplierSpec:
    """m = 1 on every resolved mode (N at the Nyquist frequency)."""
    return MultiplierSpec(grid.nyquist, 0.5, "smoothstep", SymbolTable(grid, np.ones(grid.M)))


def apply_I(F: Spectrum, m: MultiplierSpec) -> Spectrum:
    _same_grid(F.grid, m.grid)
    return Spectrum(F.grid, m.table.values * F.coeffs)


@dataclass
class SmoothingReport:
    N: list[float]
    r1_max: list[float]
    r2_max: list[float]
    passed: bool
    factor: float = 2.0


def smoothing_bounds_check(ensemble: Sequence[Spectrum], s0: float, s: float,
                           N_list: Sequence[float], blend: str = "smoothstep",
                           factor: float = 2.0) -> SmoothingReport:
    """Ratios of the two inequalities ||u||_{H^s0} <= c ||Iu||_{H^{s0+1-s}} <= c N^{1-s} ||u||_{H^s0}.

    Passes when, for both ratios, the maximum over the N sweep stays within
    ``factor`` times the maximum at the smallest N.
    """
    if not ensemble:
        raise ValueError("empty ensemble")
    grid = ensemble[0].grid
    N_sorted = sorted(N_list)
    r1, r2 = [], []
    for N in N_sorted:
        m = build_m(N, s, grid, blend)
        w = m.table.values
        a1, a2 = 0.0, 0.0
        for F in ensemble:
            _same_grid(grid, F.grid)
            base = sobolev_norm_coeffs(grid, F.coeffs, s0)
            smooth = sobolev_norm_coeffs(grid, w * F.coeffs, s0 + 1.0 - s)
            a1 = max(a1, base / smooth)
            a2 = max(a2, smooth / (N ** (1.0 - s) * base))
        r1.append(a1)
        r2.append(a2)
    ok = max(r1) <= factor * r1[0] and max(r2) <= factor * r2[0]
    return SmoothingReport(list(N_sorted), r1, r2, bool(ok), factor)


def energy_key(m: MultiplierSpec) -> str:
    return f"EIu_{m.N:g}"


def modified_energy_observer(m: MultiplierSpec):
    def obs(state):
        return modified_energy(state, m).E
    obs.__name__ = energy_key(m)
    return obs


def drift(traj, m: MultiplierSpec) -> float:
    """sup_t |E(Iu)(t) - E(Iu)(0)| from the observer attached for ``m``."""
    key = energy_key(m)
    if key not in traj.records:
        raise KeyError(f"trajectory has no modified-energy observer for N={m.N:g} ({key})")
    e = np.asarray(traj.records[key], dtype=float)
    return float(np.max(np.abs(e - e[0])))


@dataclass
class FitResult:
    slope: float
    intercept: float
    r2: float
    used: list[tuple[float, float]] = field(default_factory=list)
    dropped: list[tuple[float, float]] = field(default_factory=list)


def scaling_fit(points: Sequence[tuple[float, float]], min_points: int = 4) -> FitResult:
    """Least-squares fit of log(drift) against log(N).

    Points with nonpositive drift are dropped and listed in ``dropped``.
    """
    used = [(float(N), float(d)) for N, d in points if d > 0 and N > 0]
    dropped = [(float(N), float(d)) for N, d in points if not (d > 0 and N > 0)]
    if dropped:
        log.warning("dropping %d nonpositive drift points: %s", len(dropped), dropped)
    if len(used) < min_points:
        raise ValueError(f"need at least {min_points} positive points, have {len(used)}")
    x = np.log([p[0] for p in used])
    y = np.log([p[1] for p in used])
    res = stats.linregress(x, y)
    r2 = float(res.rvalue**2) if np.ptp(y) > 0 else 1.0
    return FitResult(float(res.slope), float(res.intercept), r2, used, dropped)
