"""Initial data: smooth profiles, seeded rough ensembles, CSV files."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .propagators import gamma_values
from .spectral import Field, FourierGrid, Spectrum, inverse

#: Absolute tolerance (relative to max(1, max|psi|)) on the mean of psi.
PSI_MEAN_TOL = 1e-10


def philox(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox4x64-10 generator keyed by ``seed``; ``stream`` selects the
    counter block so member streams never overlap."""
    seed = int(seed) & (2**64 - 1)
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, int(stream)]))


def gaussian_data(amplitude: float, width: float, grid: FourierGrid) -> tuple[Field, Field]:
    """phi = A exp(-x^2 / (2 w^2)), psi = 0."""
    if not width > 0:
        raise ValueError(f"width must be positive, got {width}")
    edge = np.exp(-((0.5 * grid.L) ** 2) / (2.0 * width**2))
    if edge > 1e-10:
        raise ValueError(
            f"width {width} too large for L={grid.L}: boundary value "
            f"{edge:.2e} of peak exceeds 1e-10"
        )
    phi = amplitude * np.exp(-grid.x**2 / (2.0 * width**2))
    return Field(grid, phi), Field(grid, np.zeros(grid.M))


def packet_data(amplitude: float, packet_amplitude: float, xi0: float, width: float,
                grid: FourierGrid) -> tuple[Field, Field]:
    """Lowest standing mode plus a right-moving wave packet centred at ``xi0``.

    The packet's velocity is chosen so it travels in one direction only,
    which keeps the interactions near-resonant and everything measured along
    the flow slowly varying in time.
    """
    xi = grid.xi
    a = np.abs(xi)
    c = packet_amplitude * np.exp(-((a - xi0) ** 2) / (2.0 * width**2))
    c[a == 0] = 0.0
    c[0] = 0.0  # Nyquist
    psi_hat = np.zeros(grid.M, dtype=complex)
    nz = a > 0
    # u_t = psi_x with u_t^ = -i sign(xi) gamma phi^, i.e. psi^ = -gamma/|xi| phi^
    psi_hat[nz] = -gamma_values(xi[nz]) / a[nz] * c[nz]
    low = amplitude * np.cos(2.0 * np.pi * grid.x / grid.L)
    phi = low + inverse(Spectrum(grid, c.astype(complex))).values
    psi = inverse(Spectrum(grid, psi_hat)).values
    return Field(grid, phi), Field(grid, psi)


@dataclass(frozen=True)
class RoughDataSpec:
    """Random data with |phi_hat| = A <xi>^-(s+1/2), |psi_hat| = A <xi>^-(s-1/2).

    With ``law="cutoff"`` the spectra are additionally multiplied by
    exp(-(|xi|/cutoff)^8), giving compactly supported tails in practice.
    """

    s: float
    amplitude: float = 1.0
    seed: int = 0
    stream: int = 0
    law: str = "power"
    cutoff: float = float("inf")
    with_psi: bool = True


def _hermitian_from_half(grid: FourierGrid, pos: np.ndarray, zero: complex) -> np.ndarray:
    """Sorted coefficients from values on xi > 0 (excluding the -M/2 mode)."""
    M = grid.M
    c = np.zeros(M, dtype=complex)
    z = grid.zero
    c[z] = zero
    c[z + 1:] = pos
    c[1:z] = np.conj(pos[::-1])
    return c


def rough_data(spec: RoughDataSpec, grid: FourierGrid) -> tuple[Field, Field]:
    """Deterministic in (seed, stream, grid).  The mode -M/2 is left at zero."""
    rng = philox(spec.seed, spec.stream)
    npos = grid.M // 2 - 1
    # phases for phi (zero mode first), then psi
    th_phi = rng.uniform(0.0, 2.0 * np.pi, size=npos + 1)
    th_psi = rng.uniform(0.0, 2.0 * np.pi, size=npos)
    xi = grid.xi[grid.zero + 1:]
    br = np.sqrt(1.0 + xi**2)
    taper = np.ones_like(xi)
    if spec.law == "cutoff":
        taper = np.exp(-((xi / spec.cutoff) ** 8))
    elif spec.law != "power":
        raise ValueError(f"unknown spectral law {spec.law!r}")
    A = spec.amplitude
    phi_pos = A * br ** (-(spec.s + 0.5)) * taper * np.exp(1j * th_phi[1:])
    zero = A * np.sign(np.cos(th_phi[0]) or 1.0)
    phi_hat = _hermitian_from_half(grid, phi_pos, zero)
    if spec.with_psi:
        psi_pos = A * br ** (-(spec.s - 0.5)) * taper * np.exp(1j * th_psi)
    else:
        psi_pos = np.zeros_like(phi_pos)
    psi_hat = _hermitian_from_half(grid, psi_pos, 0.0)
    phi = grid.inv(phi_hat).real
    psi = grid.inv(psi_hat).real
    psi = psi - psi.mean()
    return Field(grid, phi), Field(grid, psi)


def save_data(path: str | Path, phi: Field, psi: Field) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "phi", "psi"])
        for x, a, b in zip(phi.grid.x, phi.values, psi.values):
            w.writerow([f"{x:.17g}", f"{a:.17g}", f"{b:.17g}"])


def load_data(path: str | Path, grid: FourierGrid) -> tuple[Field, Field]:
    """Read an ``x,phi,psi`` CSV with exactly ``grid.M`` rows."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["x", "phi", "psi"]:
        raise ValueError(f"{path}: expected header 'x,phi,psi'")
    body = [r for r in rows[1:] if r]
    if len(body) != grid.M:
        raise ValueError(f"{path}: expected M={grid.M} data rows, found {len(body)}")
    try:
        data = np.array([[float(c) for c in r] for r in body])
    except ValueError as exc:
        raise ValueError(f"{path}: malformed number ({exc})") from None
    if data.shape[1] != 3:
        raise ValueError(f"{path}: expected 3 columns per row")
    if not np.allclose(data[:, 0], grid.x, rtol=0, atol=1e-9 * grid.L):
        raise ValueError(f"{path}: x column does not match the grid (L={grid.L}, M={grid.M})")
    psi = data[:, 2]
    mean = float(psi.mean())
    if abs(mean) > PSI_MEAN_TOL * max(1.0, float(np.abs(psi).max())):
        raise ValueError(f"{path}: psi has nonzero mean {mean:.6e}")
    return Field(grid, data[:, 1]), Field(grid, psi)
