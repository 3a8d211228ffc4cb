"""Discrete X_{s,b} norms and empirical checks of Strichartz-type bounds.

Space-time blocks are samples u(x_n, t_q) * eta(t_q) on a window [0, T_w),
where eta is a smooth bump vanishing at both ends.  Transforms use the same
continuum normalization as :mod:`gbq.spectral`:

    F(tau_r, xi_j) = dx * dt * sum_{n,q} u(x_n, t_q) exp(-i (x_n xi_j + t_q tau_r)),
    ||F||_{L^2_{xi,tau}}^2 = (1 / (L * T_w)) * sum |F|^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.fft as sfft

from .datagen import philox
from .propagators import gamma_values, sinc_gamma
from .spectral import FourierGrid, lp_norm_values

#: b = 1/2+ is realized as this value unless overridden.
B_PLUS = 0.55
#: excess used for the sigma = 1/2+ derivative weight of the L^infinity case.
EPS = 0.05


def bump(t: np.ndarray, T_w: float) -> np.ndarray:
    """exp(1 - 1/(1 - r^2)) with r = 2t/T_w - 1; equals 1 at the centre, 0 outside."""
    r = 2.0 * np.asarray(t, dtype=float) / T_w - 1.0
    out = np.zeros_like(r)
    inside = np.abs(r) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
    return out


@dataclass(frozen=True, eq=False)
class SpaceTimeBlock:
    """Real samples ``values[n, q]`` = u(x_n, t_q) with the cutoff already applied."""

    grid: FourierGrid
    T_w: float
    values: np.ndarray
    cutoff: str = "bump"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != self.grid.M:
            raise ValueError(f"expected values of shape (M={self.grid.M}, Q), got {v.shape}")
        Q = v.shape[1]
        if Q < 2 or Q & (Q - 1):
            raise ValueError(f"time sample count must be a power of two, got {Q}")
        object.__setattr__(self, "values", v)

    @property
    def Q(self) -> int:
        return self.values.shape[1]

    @property
    def dt(self) -> float:
        return self.T_w / self.Q

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.Q)

    @property
    def tau_nyquist(self) -> float:
        return math.pi * self.Q / self.T_w


def required_samples(gamma_max: float, T_w: float, margin: float = 1.5) -> int:
    """Smallest power of two whose temporal Nyquist exceeds margin * gamma_max."""
    need = margin * gamma_max * T_w / math.pi
    return 1 << max(4, math.ceil(math.log2(max(need, 2.0))))


def free_block(grid: FourierGrid, phi_hat: np.ndarray, psix_hat: np.ndarray, T_w: float,
               Q: int | None = None, symbol: np.ndarray | None = None) -> SpaceTimeBlock:
    """Cutoff free solution sampled on [0, T_w).

    ``symbol`` optionally multiplies the spectrum (e.g. |xi|^{1/2}) before
    sampling.  ``Q`` defaults to enough samples to resolve the largest
    dispersion frequency present in the data.
    """
    g = gamma_values(grid.xi)
    active = (np.abs(phi_hat) > 0) | (np.abs(psix_hat) > 0)
    gmax = float(g[active].max()) if active.any() else 0.0
    if Q is None:
        Q = required_samples(gmax + 40.0 / T_w, T_w)
    elif math.pi * Q / T_w < gmax:
        raise ValueError(f"Q={Q} cannot resolve temporal frequency {gmax:.4g} on a window of {T_w}")
    t = T_w * np.arange(Q) / Q
    eta = bump(t, T_w)
    a = phi_hat if symbol is None else symbol * phi_hat
    b = psix_hat if symbol is None else symbol * psix_hat
    coeffs = np.cos(np.outer(t, g)) * a
    if np.any(b):
        coeffs += np.array([sinc_gamma(tq, g) for tq in t]) * b
    coeffs *= grid._phase
    vals = sfft.ifft(sfft.ifftshift(coeffs, axes=-1), axis=-1).real * (grid.M / grid.L)
    return SpaceTimeBlock(grid, T_w, np.ascontiguousarray(vals.T) * eta)


def _spacetime_power(block: SpaceTimeBlock):
    """|F|^2 on the xi >= ... half plane tau >= 0, plus multiplicities."""
    grid = block.grid
    Ft = sfft.rfft(block.values, axis=1)  # tau_r, r = 0..Q/2
    F = sfft.fftshift(sfft.fft(Ft, axis=0), axes=0)
    F *= (grid.dx * block.dt) * grid._phase[:, None]
    r = np.arange(F.shape[1])
    tau = 2.0 * np.pi * r / block.T_w
    mult = np.full(F.shape[1], 2.0)
    mult[0] = 1.0
    mult[-1] = 1.0
    return np.abs(F) ** 2, tau, mult


def xsb_norm(block: SpaceTimeBlock, s: float, b: float) -> float:
    """Weighted L^2 norm with weight <|tau| - gamma(xi)>^b <xi>^s."""
    P, tau, mult = _spacetime_power(block)
    xi = block.grid.xi
    g = gamma_values(xi)
    wx = (1.0 + xi**2) ** s
    wt = (1.0 + (tau[None, :] - g[:, None]) ** 2) ** b
    total = np.sum(wx[:, None] * wt * P * mult[None, :])
    return float(np.sqrt(total / (block.grid.L * block.T_w)))


def mixed_norm(block: SpaceTimeBlock, q: float, p: float) -> float:
    """||u||_{L^q_t L^p_x} of the sampled block."""
    dx, dt = block.grid.dx, block.dt
    per_t = np.array([lp_norm_values(block.values[:, j], dx, p) for j in range(block.Q)])
    return lp_norm_values(per_t, dt, q)


SPECIAL_PAIRS = {(6.0, 6.0), (4.0, 4.0), (math.inf, math.inf), (2.0, 2.0)}


def admissible(q: float, p: float) -> bool:
    """2/q = 1/2 - 1/p with p in [2, inf]."""
    if p < 2 or q < 1:
        return False
    lhs = 0.0 if math.isinf(q) else 2.0 / q
    rhs = 0.5 - (0.0 if math.isinf(p) else 1.0 / p)
    return abs(lhs - rhs) < 1e-12


def check_pair(q: float, p: float, b: float) -> float:
    """Validate the exponent pair; returns the spatial weight sigma to use."""
    q, p = float(q), float(p)
    if (q, p) == (2.0, 2.0):
        return 0.0
    if (q, p) == (math.inf, math.inf):
        return 0.5 + EPS
    if admissible(q, p) or (q, p) in SPECIAL_PAIRS:
        return 0.0
    raise ValueError(f"inadmissible exponent pair (q={q}, p={p}): need 2/q = 1/2 - 1/p")


@dataclass
class RatioStats:
    values: list[float]
    label: str = ""

    @property
    def max(self) -> float:
        return float(np.max(self.values))

    @property
    def median(self) -> float:
        return float(np.median(self.values))


def strichartz_ratio(ensemble: Sequence[SpaceTimeBlock], q: float, p: float,
                     b: float = B_PLUS) -> RatioStats:
    """||u||_{L^q_t L^p_x} / ||u||_{X_{sigma,b}} over an ensemble of blocks."""
    sigma = check_pair(q, p, b)
    vals = []
    for blk in ensemble:
        den = xsb_norm(blk, sigma, b)
        vals.append(mixed_norm(blk, q, p) / den if den > 0 else 0.0)
    return RatioStats(vals, f"L^{q:g}_t L^{p:g}_x")


def bilinear_ratio(pairs: Sequence[tuple[SpaceTimeBlock, SpaceTimeBlock, SpaceTimeBlock]],
                   b: float = B_PLUS) -> RatioStats:
    """||(D^{1/2} psi1) psi2||_{L^2_{x,t}} / (||psi1||_X ||psi2||_X).

    Each entry is (D^{1/2} psi1 block, psi1 block, psi2 block), all on the same
    window and sampling, cutoffs applied.
    """
    vals = []
    for d1, p1, p2 in pairs:
        prod = d1.values * p2.values
        num = math.sqrt(float(np.sum(prod**2)) * d1.grid.dx * d1.dt)
        den = xsb_norm(p1, 0.0, b) * xsb_norm(p2, 0.0, b)
        vals.append(num / den if den > 0 else 0.0)
    return RatioStats(vals, "bilinear")


def band_spectrum(grid: FourierGrid, lo: float, hi: float, rng: np.random.Generator) -> np.ndarray:
    """Unit-L^2 random-phase spectrum supported on lo <= |xi| < hi (Hermitian)."""
    xi = grid.xi
    z = grid.zero
    pos = np.flatnonzero((xi >= lo) & (xi < hi) & (xi > 0))
    if pos.size == 0:
        raise ValueError(f"no resolved modes in the band [{lo}, {hi})")
    if xi[pos].max() >= grid.nyquist:
        raise ValueError("band reaches the Nyquist mode")
    c = np.zeros(grid.M, dtype=complex)
    ph = rng.uniform(0.0, 2.0 * np.pi, size=pos.size)
    c[pos] = np.exp(1j * ph)
    c[2 * z - pos] = np.conj(c[pos])
    norm = math.sqrt(np.sum(np.abs(c) ** 2) / grid.L)
    return c / norm


def free_wave_ensemble(grid: FourierGrid, scale: float, n: int, seed: int, T_w: float,
                       Q: int | None = None) -> list[SpaceTimeBlock]:
    """``n`` cutoff free waves with data on scale <= |xi| < 2 scale and u_t(0) = 0."""
    out = []
    zero = np.zeros(grid.M, dtype=complex)
    for i in range(n):
        phi = band_spectrum(grid, scale, 2.0 * scale, philox(seed, i))
        out.append(free_block(grid, phi, zero, T_w, Q))
    return out


def bilinear_ensemble(grid: FourierGrid, N1: float, N2: float, n: int, seed: int, T_w: float,
                      Q: int | None = None):
    """Pairs of free waves at frequencies ~N1 and ~N2 (requires N2 >= 4 N1)."""
    if N2 < 4 * N1:
        raise ValueError(
            f"support condition needs N2 >= 4 N1 (got N1={N1}, N2={N2}) so that "
            "|xi1| <= min(|xi1 - xi2|, |xi1 + xi2|)"
        )
    zero = np.zeros(grid.M, dtype=complex)
    if Q is None:
        Q = required_samples(float(gamma_values(np.array(2.0 * N2))) + 40.0 / T_w, T_w)
    half_d = np.abs(grid.xi) ** 0.5
    out = []
    for i in range(n):
        rng = philox(seed, i)
        a = band_spectrum(grid, N1, 2.0 * N1, rng)
        c = band_spectrum(grid, N2, 2.0 * N2, rng)
        out.append((free_block(grid, a, zero, T_w, Q, symbol=half_d),
                    free_block(grid, a, zero, T_w, Q),
                    free_block(grid, c, zero, T_w, Q)))
    return out


def uniform_over_sweep(maxima: Sequence[float], factor: float = 2.0) -> bool:
    """True when the largest value is within ``factor`` of the first (smallest scale)."""
    return bool(max(maxima) <= factor * maxima[0])
