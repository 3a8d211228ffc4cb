"""Conserved energy, modified energy and the commutator pairing."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from .spectral import (
    GridMismatchError,
    int_power,
    padded_size,
    physical_padded,
    power_coeffs,
    sobolev_norm_coeffs,
)

if TYPE_CHECKING:
    from .dynamics import SimState, Trajectory
    from .imethod import MultiplierSpec


@dataclass(frozen=True)
class EnergyReport:
    """E = h1 + kinetic + potential, summed in that order."""

    t: float
    h1: float
    kinetic: float
    potential: float
    h1_plus: float = float("nan")

    @property
    def E(self) -> float:
        return (self.h1 + self.kinetic) + self.potential

    @property
    def quadratic(self) -> float:
        return self.h1 + self.kinetic


def _inv_abs_xi_sq(xi: np.ndarray) -> np.ndarray:
    out = np.zeros_like(xi)
    nz = xi != 0
    out[nz] = 1.0 / xi[nz] ** 2
    return out


def potential_term(grid, u_hat: np.ndarray, k: int) -> float:
    """(1/(2k+2)) * integral of u^{2k+2}, computed exactly on a padded grid."""
    p = 2 * k + 2
    M_pad = padded_size(grid.M, p, strict=u_hat[0] != 0)
    u = physical_padded(grid, u_hat, M_pad)
    return float(np.sum(int_power(u, p)) * (grid.L / M_pad) / p)


def energy_from_coeffs(grid, t: float, u_hat: np.ndarray, ut_hat: np.ndarray,
                       k: int, focusing: bool = False) -> EnergyReport:
    xi = grid.xi
    L = grid.L
    a2 = np.abs(u_hat) ** 2
    h1 = 0.5 * float(np.sum((1.0 + xi**2) * a2)) / L
    h1_plus = 0.5 * float(np.sum((1.0 + np.abs(xi)) ** 2 * a2)) / L
    kin = 0.5 * float(np.sum(_inv_abs_xi_sq(xi) * np.abs(ut_hat) ** 2)) / L
    pot = potential_term(grid, u_hat, k)
    if focusing:
        pot = -pot
    return EnergyReport(t, h1, kin, pot, h1_plus)


def energy(state: "SimState") -> EnergyReport:
    return energy_from_coeffs(state.grid, state.t, state.u_hat.coeffs,
                              state.ut_hat.coeffs, state.k, state.focusing)


def _check_grid(state, m) -> None:
    if m.grid != state.grid:
        raise GridMismatchError(f"multiplier grid {m.grid} differs from state grid {state.grid}")


def modified_energy(state: "SimState", m: "MultiplierSpec") -> EnergyReport:
    """E(Iu): the energy of (m u_hat, m ut_hat)."""
    _check_grid(state, m)
    w = m.table.values
    return energy_from_coeffs(state.grid, state.t, w * state.u_hat.coeffs,
                              w * state.ut_hat.coeffs, state.k, state.focusing)


def commutator_pairing(state: "SimState", m: "MultiplierSpec") -> float:
    """Real L^2 pairing of (Iu)^{2k+1} - I(u^{2k+1}) with I u_t.

    Equals d/dt E(Iu) along the flow.
    """
    _check_grid(state, m)
    grid, k = state.grid, state.k
    w = m.table.values
    u = state.u_hat.coeffs
    Iu = w * u
    deg = 2 * k + 1
    diff = power_coeffs(grid, Iu, deg) - w * power_coeffs(grid, u, deg)
    if state.focusing:
        diff = -diff
    Iut = w * state.ut_hat.coeffs
    return float(np.real(np.vdot(Iut, diff)) / grid.L)


def linear_energy(state: "SimState") -> float:
    """Quadratic part of the energy, conserved by the free flow."""
    rep = energy_from_coeffs(state.grid, state.t, state.u_hat.coeffs,
                             state.ut_hat.coeffs, 1)
    return rep.quadratic


def norm_row(state: "SimState", s_list: Sequence[float],
             multipliers: Iterable["MultiplierSpec"] = ()) -> dict[str, float]:
    """One row of the norm time series for ``state``."""
    grid = state.grid
    u, ut = state.u_hat.coeffs, state.ut_hat.coeffs
    rep = energy(state)
    # (-Delta)^{-1/2} u_t, zero mode removed
    absxi = np.abs(grid.xi)
    v = np.zeros_like(ut)
    nz = absxi > 0
    v[nz] = ut[nz] / absxi[nz]
    row = {"t": state.t, "E": rep.E, "H1": sobolev_norm_coeffs(grid, u, 1.0),
           "linear_energy": rep.quadratic, "h1_plus": rep.h1_plus,
           "L2kp2": (max(rep.potential, 0.0) * (2 * state.k + 2)) ** (1.0 / (2 * state.k + 2))}
    for s in s_list:
        row[f"Hs_{s:g}"] = sobolev_norm_coeffs(grid, u, s)
        row[f"Vs_{s:g}"] = sobolev_norm_coeffs(grid, v, s - 1.0)
    for m in multipliers:
        row[f"EIu_{m.N:g}"] = modified_energy(state, m).E
    return row


def norm_series(traj: "Trajectory", s_list: Sequence[float],
                multipliers: Iterable["MultiplierSpec"] = ()) -> list[dict[str, float]]:
    if not traj.states:
        raise ValueError("trajectory was run without keep_states")
    multipliers = list(multipliers)
    return [norm_row(st, s_list, multipliers) for st in traj.states]
