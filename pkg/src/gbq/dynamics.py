"""Time integration of u_tt - u_xx + u_xxxx - (|u|^{2k} u)_xx = 0.

The state is the pair (u_hat, ut_hat).  In Fourier variables the equation reads

    u_hat'' + gamma^2 u_hat = -sign * xi^2 * (u^{2k+1})^,

with sign = +1 for the defocusing equation.  The linear part is advanced
exactly by the propagator tables; the forcing is integrated either by
integrating-factor (Lawson) RK4 or by Strang splitting.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping

import numpy as np
import scipy.fft as sfft
from scipy import integrate

from .propagators import gamma_values, propagator, sinc_gamma
from .spectral import (
    MAX_PADDED_MODES,
    Field,
    FourierGrid,
    Spectrum,
    forward,
    int_power,
    padded_size,
    power_coeffs,
    sobolev_norm_coeffs,
)

log = logging.getLogger(__name__)

SCHEMES = ("irk4", "strang")


class BlowUpError(RuntimeError):
    """Raised when the solution stops being finite.

    ``last_state`` holds the last finite state.
    """

    def __init__(self, message: str, last_state: "SimState"):
        super().__init__(message)
        self.last_state = last_state


@dataclass(frozen=True, eq=False)
class SimState:
    t: float
    u_hat: Spectrum
    ut_hat: Spectrum
    k: int = 1
    focusing: bool = False

    @property
    def grid(self) -> FourierGrid:
        return self.u_hat.grid

    @property
    def sign(self) -> float:
        return -1.0 if self.focusing else 1.0

    def u(self) -> np.ndarray:
        return self.grid.inv(self.u_hat.coeffs).real

    def ut(self) -> np.ndarray:
        return self.grid.inv(self.ut_hat.coeffs).real

    def mean(self) -> float:
        return float(self.u_hat.coeffs[self.grid.zero].real / self.grid.L)


@dataclass(frozen=True)
class StepperConfig:
    dt: float = 1e-3
    scheme: str = "irk4"
    nonlinear: bool = True
    max_padded: int = MAX_PADDED_MODES

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")


def nonlinearity(u_hat: Spectrum, k: int, max_padded: int = MAX_PADDED_MODES) -> Spectrum:
    """Resolved spectrum of u^{2k+1}; the -xi^2 factor is left to the caller."""
    return Spectrum(u_hat.grid, power_coeffs(u_hat.grid, u_hat.coeffs, 2 * k + 1, max_padded))


class _HalfTables:
    """Propagator tables restricted to xi >= 0 in rfft layout (j = 0..M/2)."""

    def __init__(self, grid: FourierGrid, h: float):
        P = propagator(grid, h)
        z = grid.zero

        def half(a):
            return np.concatenate((a[z:], a[:1]))

        self.cos = half(P.cos_table)
        self.sinc = half(P.sinc_table)
        self.gsin = half(P.gsin_table)

    def apply(self, u, ut):
        c = self.cos
        return c * u + self.sinc * ut, c * ut - self.gsin * u


def to_half(grid: FourierGrid, coeffs: np.ndarray) -> np.ndarray:
    """Sorted continuum coefficients -> rfft layout of a grid starting at x=0.

    The mode -M/2 is dropped (stored as zero at j = M/2).
    """
    z = grid.zero
    out = np.zeros(z + 1, dtype=complex)
    out[:z] = coeffs[z:] * grid._phase[z:]
    return out


def from_half(grid: FourierGrid, half: np.ndarray) -> np.ndarray:
    z = grid.zero
    out = np.empty(grid.M, dtype=complex)
    out[z:] = half[:z] * grid._phase[z:]
    out[1:z] = np.conj(out[z + 1:][::-1])
    out[0] = 0.0
    return out


class _Integrator:
    """Stepping kernel on half spectra (real fields, mode -M/2 held at zero)."""

    def __init__(self, grid: FourierGrid, k: int, focusing: bool, cfg: StepperConfig):
        self.grid = grid
        self.k = k
        self.cfg = cfg
        self.degree = 2 * k + 1
        self.M_pad = padded_size(grid.M, self.degree, cfg.max_padded, strict=False)
        sign = -1.0 if focusing else 1.0
        xi = 2.0 * np.pi * np.arange(grid.zero + 1) / grid.L
        sym = -sign * xi**2
        sym[-1] = 0.0
        self._force_symbol = sym
        self._pad = np.zeros(self.M_pad // 2 + 1, dtype=complex)
        self._tables: dict[float, _HalfTables] = {}

    def tables(self, h: float) -> _HalfTables:
        tab = self._tables.get(h)
        if tab is None:
            tab = self._tables[h] = _HalfTables(self.grid, h)
        return tab

    def force(self, u: np.ndarray) -> np.ndarray:
        """-sign xi^2 (u^{2k+1})^ in half layout."""
        if not self.cfg.nonlinear:
            return np.zeros_like(u)
        z, Mp, L = self.grid.zero, self.M_pad, self.grid.L
        buf = self._pad
        buf[: z + 1] = u
        v = sfft.irfft(buf, n=Mp)
        # irfft carries 1/Mp; continuum scaling is Mp/L in, L/Mp out
        scale = (Mp / L) ** self.degree * (L / Mp)
        p = sfft.rfft(int_power(v, self.degree))[: z + 1]
        return (scale * self._force_symbol) * p

    def advance(self, u: np.ndarray, ut: np.ndarray, h: float):
        # overflow surfaces as non-finite values, reported by the caller
        with np.errstate(over="ignore", invalid="ignore"):
            if self.cfg.scheme == "strang":
                return self._strang(u, ut, h)
            return self._irk4(u, ut, h)

    def _irk4(self, u, ut, h):
        full = self.tables(h)
        half = self.tables(0.5 * h)
        if not self.cfg.nonlinear:
            return full.apply(u, ut)
        # forcing acts on the ut component only, so E(t)(0, f) = (sinc*f, cos*f)
        f1 = self.force(u)
        f2 = self.force(half.cos * u + half.sinc * (ut + 0.5 * h * f1))
        hu = half.cos * u + half.sinc * ut
        f3 = self.force(hu)
        eu, eut = full.apply(u, ut)
        f4 = self.force(eu + h * half.sinc * f3)
        g23 = f2 + f3
        new_u = eu + (h / 6.0) * (full.sinc * f1 + 2.0 * half.sinc * g23)
        new_ut = eut + (h / 6.0) * (full.cos * f1 + 2.0 * half.cos * g23 + f4)
        return new_u, new_ut

    def _strang(self, u, ut, h):
        half = self.tables(0.5 * h)
        u, ut = half.apply(u, ut)
        if self.cfg.nonlinear:
            ut = ut + h * self.force(u)
        return half.apply(u, ut)


def _state(grid, t, u, ut, k, focusing) -> SimState:
    """SimState from half-layout arrays."""
    return SimState(t, Spectrum(grid, from_half(grid, u)), Spectrum(grid, from_half(grid, ut)),
                    k, focusing)


def advance_by(state: SimState, h: float, cfg: StepperConfig) -> SimState:
    """One step of signed size ``h`` (negative h integrates backwards)."""
    grid = state.grid
    kern = _Integrator(grid, state.k, state.focusing, cfg)
    u, ut = kern.advance(to_half(grid, state.u_hat.coeffs), to_half(grid, state.ut_hat.coeffs), h)
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(ut))):
        raise BlowUpError(f"non-finite solution at t={state.t + h:.6g}", state)
    return _state(grid, state.t + h, u, ut, state.k, state.focusing)


def step(state: SimState, cfg: StepperConfig) -> SimState:
    return advance_by(state, cfg.dt, cfg)


def initial_state(phi: Field, psi: Field, k: int = 1, focusing: bool = False,
                  mean_tol: float = 1e-10) -> SimState:
    """State at t = 0 with u = phi and u_t = psi_x.

    The unpaired mode -M/2 of both components is zeroed.  ``psi`` must have
    zero mean since only its derivative is observable.
    """
    if phi.grid != psi.grid:
        raise ValueError("phi and psi live on different grids")
    if k < 1:
        raise ValueError(f"nonlinearity power k must be >= 1, got {k}")
    grid = phi.grid
    mean = float(np.mean(psi.values))
    scale = max(1.0, float(np.max(np.abs(psi.values), initial=0.0)))
    if abs(mean) > mean_tol * scale:
        raise ValueError(f"psi must have zero mean; got mean {mean:.6e}")
    u = forward(phi).coeffs.copy()
    ut = 1j * grid.xi * forward(psi).coeffs
    u[0] = 0.0
    ut[0] = 0.0
    ut[grid.zero] = 0.0
    return SimState(0.0, Spectrum(grid, u), Spectrum(grid, ut), k, focusing)


Observer = Callable[[SimState], Any]


@dataclass
class Trajectory:
    """Samples collected by ``evolve``.

    ``states`` is filled only when ``keep_states`` was requested; observer
    outputs are in ``records[name]``, aligned with ``times``.
    """

    initial: SimState
    cfg: StepperConfig
    stride: int
    times: list[float] = field(default_factory=list)
    states: list[SimState] = field(default_factory=list)
    records: dict[str, list] = field(default_factory=dict)
    final: SimState | None = None

    def series(self, name: str) -> np.ndarray:
        if name not in self.records:
            raise KeyError(f"no observer named {name!r} was attached")
        return np.asarray(self.records[name])


def _check_mean(state: SimState, mean0: float, scale: float) -> None:
    ut0 = state.ut_hat.coeffs[state.grid.zero]
    if ut0 != 0:
        raise AssertionError(f"mean of u_t became {ut0!r} at t={state.t}")
    drift = abs(state.u_hat.coeffs[state.grid.zero] - mean0)
    if drift > 1e-10 * scale:
        raise AssertionError(f"mean of u drifted by {drift:.3e} at t={state.t}")


def evolve_state(state0: SimState, T: float, cfg: StepperConfig,
                 observers: Mapping[str, Observer] | None = None,
                 stride: int = 1, keep_states: bool = False) -> Trajectory:
    if T < 0:
        raise ValueError(f"final time must be nonnegative, got T={T}")
    if stride < 1:
        raise ValueError("observer stride must be >= 1")
    observers = dict(observers or {})
    traj = Trajectory(state0, cfg, stride, records={name: [] for name in observers})
    grid = state0.grid
    mean0 = state0.u_hat.coeffs[grid.zero]
    scale = max(1.0, abs(mean0))

    def observe(st: SimState):
        _check_mean(st, mean0, scale)
        traj.times.append(st.t)
        if keep_states:
            traj.states.append(st)
        for name, obs in observers.items():
            traj.records[name].append(obs(st))

    observe(state0)
    n_full = int(math.floor(T / cfg.dt * (1 + 1e-14)))
    rem = T - n_full * cfg.dt
    if rem <= 1e-12 * cfg.dt:
        rem = 0.0
    kern = _Integrator(grid, state0.k, state0.focusing, cfg)
    u, ut = to_half(grid, state0.u_hat.coeffs), to_half(grid, state0.ut_hat.coeffs)
    last = state0
    for i in range(1, n_full + 2):
        if i <= n_full:
            h, t = cfg.dt, (T if i == n_full and rem == 0.0 else i * cfg.dt)
        elif rem > 0.0:
            h, t = rem, T
        else:
            break
        u, ut = kern.advance(u, ut, h)
        if t == T or i % stride == 0 or not np.isfinite(u.sum() + ut.sum()):
            if not (np.all(np.isfinite(u)) and np.all(np.isfinite(ut))):
                raise BlowUpError(f"non-finite solution between t={last.t:.6g} and {t:.6g}", last)
            last = _state(grid, t, u, ut, state0.k, state0.focusing)
            observe(last)
    traj.final = last
    return traj


def evolve(phi: Field, psi: Field, T: float, cfg: StepperConfig,
           observers: Mapping[str, Observer] | None = None, *, k: int = 1,
           focusing: bool = False, stride: int = 1,
           keep_states: bool = False) -> Trajectory:
    return evolve_state(initial_state(phi, psi, k, focusing), T, cfg,
                        observers, stride, keep_states)


def duhamel_residual(traj: Trajectory, stride: int = 1, rule: str = "simpson") -> float:
    """Relative H^1 residual of the integral equation at the final sample.

    Compares u(T) - V_c(T) phi - V_s(T) psi_x with the quadrature of
    V_s(T - t') (-xi^2 (u^{2k+1})^)(t') over the stored samples.
    """
    if not traj.states:
        raise ValueError("trajectory was run without keep_states")
    states = traj.states[::stride]
    if states[-1] is not traj.states[-1]:
        raise ValueError("stride does not land on the final sample")
    n = len(states)
    if n < (3 if rule == "simpson" else 2):
        raise ValueError(f"{n} samples are too sparse for the {rule} rule")
    grid = traj.initial.grid
    s0, sT = traj.states[0], traj.states[-1]
    T = sT.t - s0.t
    P = propagator(grid, T)
    free_u, _ = P.apply(s0.u_hat.coeffs, s0.ut_hat.coeffs)
    lhs = sT.u_hat.coeffs - free_u
    times = np.array([st.t for st in states])
    g = gamma_values(grid.xi)
    kern = _Integrator(grid, s0.k, s0.focusing, traj.cfg)
    integrand = np.array([
        sinc_gamma(sT.t - st.t, g) * from_half(grid, kern.force(to_half(grid, st.u_hat.coeffs)))
        for st in states])
    if rule == "simpson":
        integral = integrate.simpson(integrand, x=times, axis=0)
    elif rule == "trapezoid":
        integral = integrate.trapezoid(integrand, x=times, axis=0)
    else:
        raise ValueError(f"unknown quadrature rule {rule!r}")
    denom = sobolev_norm_coeffs(grid, sT.u_hat.coeffs, 1.0)
    if denom == 0.0:
        return 0.0
    return sobolev_norm_coeffs(grid, lhs - integral, 1.0) / denom
