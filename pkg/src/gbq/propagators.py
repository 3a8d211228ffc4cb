"""Exact free evolution of u_tt - u_xx + u_xxxx = 0 in Fourier variables."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .spectral import FourierGrid, Spectrum, SymbolTable, _same_grid

# below this |t*gamma| the sine ratio switches to its Taylor series
_SERIES_CUTOFF = 1e-4


def gamma_values(xi: np.ndarray) -> np.ndarray:
    return np.sqrt(xi**2 + xi**4)


def gamma(grid: FourierGrid) -> SymbolTable:
    return SymbolTable(grid, gamma_values(grid.xi))


def sinc_gamma(t: float, g: np.ndarray) -> np.ndarray:
    """sin(t*g)/g, equal to t where g = 0."""
    tg = t * g
    out = np.empty_like(g, dtype=float)
    small = np.abs(tg) < _SERIES_CUTOFF
    big = ~small
    out[big] = np.sin(tg[big]) / g[big]
    z = tg[small] ** 2
    out[small] = t * (1.0 - z / 6.0 + z * z / 120.0)
    return out


@dataclass(frozen=True, eq=False)
class PropagatorCache:
    """cos(h*gamma), sin(h*gamma)/gamma and gamma*sin(h*gamma) for one step h."""

    grid: FourierGrid
    h: float
    gamma: np.ndarray
    cos_table: np.ndarray
    sinc_table: np.ndarray
    gsin_table: np.ndarray

    def apply(self, u: np.ndarray, ut: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Advance the linear flow by h acting on (u_hat, ut_hat) arrays."""
        c = self.cos_table
        return c * u + self.sinc_table * ut, c * ut - self.gsin_table * u


@lru_cache(maxsize=64)
def _cached(grid: FourierGrid, h_bits: bytes) -> PropagatorCache:
    h = float(np.frombuffer(h_bits, dtype=np.float64)[0])
    g = gamma_values(grid.xi)
    tables = [g, np.cos(h * g), sinc_gamma(h, g), g * np.sin(h * g)]
    for a in tables:
        a.setflags(write=False)
    return PropagatorCache(grid, h, *tables)


def propagator(grid: FourierGrid, h: float) -> PropagatorCache:
    """Cached tables keyed by the exact bit pattern of ``h``."""
    return _cached(grid, np.float64(h).tobytes())


def apply_Vc(t: float, F: Spectrum) -> Spectrum:
    g = gamma_values(F.grid.xi)
    return Spectrum(F.grid, np.cos(t * g) * F.coeffs)


def apply_Vs(t: float, F: Spectrum) -> Spectrum:
    g = gamma_values(F.grid.xi)
    return Spectrum(F.grid, sinc_gamma(t, g) * F.coeffs)


def free_evolution(t: float, phi_hat: Spectrum, psix_hat: Spectrum) -> tuple[Spectrum, Spectrum]:
    """(u_hat(t), ut_hat(t)) for the linear problem with u(0)=phi, u_t(0)=psi_x."""
    _same_grid(phi_hat.grid, psix_hat.grid)
    P = propagator(phi_hat.grid, t)
    u, ut = P.apply(phi_hat.coeffs, psix_hat.coeffs)
    return Spectrum(phi_hat.grid, u), Spectrum(phi_hat.grid, ut)
