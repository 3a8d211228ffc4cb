"""Periodic Fourier discretization used by every other module.

Coefficients follow the continuum convention

    f_hat(xi_j) = dx * sum_n f(x_n) exp(-i x_n xi_j),
    f(x_n)      = (1/L) * sum_j f_hat(xi_j) exp(i x_n xi_j),

with x_n = -L/2 + n*dx and xi_j = 2*pi*j/L for j = -M/2, ..., M/2-1, stored in
increasing order of xi.  Discrete norms therefore approximate continuum norms
without rescaling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np
import scipy.fft as sfft

#: Hermitian-symmetry tolerance relative to the coefficient norm.
HERMITIAN_RTOL = 1e-12
#: Default ceiling on padded grid sizes used for dealiased products.
MAX_PADDED_MODES = 1 << 20


class GridMismatchError(ValueError):
    pass


class ResourceLimitError(RuntimeError):
    pass


@dataclass(frozen=True)
class FourierGrid:
    """Uniform periodic grid of ``M`` points on a torus of length ``L``."""

    L: float
    M: int

    def __post_init__(self):
        if not (self.L > 0 and np.isfinite(self.L)):
            raise ValueError(f"domain length must be positive, got L={self.L}")
        if self.M < 16 or self.M % 2:
            raise ValueError(f"M must be even and >= 16, got M={self.M}")

    @property
    def dx(self) -> float:
        return self.L / self.M

    @cached_property
    def x(self) -> np.ndarray:
        return -0.5 * self.L + self.dx * np.arange(self.M)

    @cached_property
    def index(self) -> np.ndarray:
        return np.arange(-self.M // 2, self.M // 2)

    @cached_property
    def xi(self) -> np.ndarray:
        return 2.0 * np.pi * self.index / self.L

    @property
    def nyquist(self) -> float:
        return np.pi * self.M / self.L

    @property
    def zero(self) -> int:
        """Position of the xi = 0 mode in the sorted coefficient array."""
        return self.M // 2

    @cached_property
    def _phase(self) -> np.ndarray:
        # exp(i L xi_j / 2) = (-1)^j accounts for the grid starting at -L/2
        return np.where(self.index % 2 == 0, 1.0, -1.0)

    def fwd(self, values: np.ndarray) -> np.ndarray:
        """Array-level forward transform (no validation)."""
        return self.dx * self._phase * sfft.fftshift(sfft.fft(values))

    def inv(self, coeffs: np.ndarray) -> np.ndarray:
        """Array-level inverse transform; returns the complex samples."""
        return sfft.ifft(sfft.ifftshift(coeffs * self._phase)) * (self.M / self.L)

    def padded(self, M_pad: int) -> "FourierGrid":
        return FourierGrid(self.L, M_pad)


def _check_finite(a: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(a)):
        bad = int(np.count_nonzero(~np.isfinite(a)))
        raise ValueError(f"{what} contains {bad} non-finite entries")


@dataclass(frozen=True, eq=False)
class Field:
    grid: FourierGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.M,):
            raise ValueError(f"expected {self.grid.M} samples, got shape {v.shape}")
        _check_finite(v, "field")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True, eq=False)
class Spectrum:
    grid: FourierGrid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.grid.M,):
            raise ValueError(f"expected {self.grid.M} coefficients, got shape {c.shape}")
        _check_finite(c, "spectrum")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def hermitian_defect(self) -> float:
        """Relative size of the part violating f_hat(-xi) = conj(f_hat(xi))."""
        c = self.coeffs
        scale = np.linalg.norm(c)
        if scale == 0.0:
            return 0.0
        # mode -M/2 pairs with itself
        mirrored = np.conj(np.concatenate(([c[0]], c[1:][::-1])))
        return float(np.linalg.norm(c - mirrored) / (2.0 * scale))

    def is_hermitian(self, rtol: float = HERMITIAN_RTOL) -> bool:
        return self.hermitian_defect() <= rtol


@dataclass(frozen=True, eq=False)
class SymbolTable:
    grid: FourierGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != (self.grid.M,):
            raise ValueError(f"expected {self.grid.M} symbol samples, got shape {v.shape}")
        _check_finite(v, "symbol")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __mul__(self, other: "SymbolTable") -> "SymbolTable":
        _same_grid(self.grid, other.grid)
        return SymbolTable(self.grid, self.values * other.values)


def _same_grid(a: FourierGrid, b: FourierGrid) -> None:
    if a != b:
        raise GridMismatchError(f"grid mismatch: {a} vs {b}")


def forward(f: Field) -> Spectrum:
    return Spectrum(f.grid, f.grid.fwd(f.values))


def inverse(F: Spectrum, rtol: float = HERMITIAN_RTOL) -> Field:
    """Inverse transform of a spectrum representing a real function.

    Raises ``ValueError`` when the imaginary part of the result exceeds
    ``rtol`` relative to the real part.
    """
    z = F.grid.inv(F.coeffs)
    scale = np.max(np.abs(z)) if z.size else 0.0
    imag = np.max(np.abs(z.imag)) if z.size else 0.0
    if scale > 0 and imag > rtol * scale:
        raise ValueError(
            f"spectrum is not Hermitian: imaginary part {imag:.3e} "
            f"(relative {imag / scale:.3e}) exceeds tolerance {rtol:.1e}"
        )
    return Field(F.grid, z.real)


def apply_multiplier(F: Spectrum, sigma: SymbolTable) -> Spectrum:
    _same_grid(F.grid, sigma.grid)
    return Spectrum(F.grid, sigma.values * F.coeffs)


def symbol(grid: FourierGrid, name: str, power: float = 1.0) -> SymbolTable:
    """Common multiplier symbols.

    ``name`` is one of ``"abs"`` (|xi|, with the zero mode set to 0 for
    negative powers), ``"bracket"`` ((1 + xi^2)^(1/2)), ``"dx"`` (i xi).
    """
    xi = grid.xi
    if name == "abs":
        a = np.abs(xi)
        if power < 0:
            out = np.zeros_like(a)
            nz = a > 0
            out[nz] = a[nz] ** power
        else:
            out = a**power
    elif name == "bracket":
        out = (1.0 + xi**2) ** (0.5 * power)
    elif name == "dx":
        out = (1j * xi) ** power
    else:
        raise ValueError(f"unknown symbol {name!r}")
    return SymbolTable(grid, out)


def bracket(xi: np.ndarray) -> np.ndarray:
    return np.sqrt(1.0 + xi**2)


def sobolev_norm_coeffs(grid: FourierGrid, coeffs: np.ndarray, s: float) -> float:
    w = (1.0 + grid.xi**2) ** s
    return float(np.sqrt(np.sum(w * np.abs(coeffs) ** 2) / grid.L))


def sobolev_norm(F: Spectrum, s: float) -> float:
    """H^s norm with the weight (1 + xi^2)^s."""
    return sobolev_norm_coeffs(F.grid, F.coeffs, s)


def lp_norm_values(values: np.ndarray, dx: float, p: float) -> float:
    if not p >= 1:
        raise ValueError(f"L^p norm needs p >= 1, got p={p}")
    a = np.abs(values)
    if np.isinf(p):
        return float(a.max(initial=0.0))
    if p == 2:
        return float(np.sqrt(np.sum(a * a) * dx))
    return float((np.sum(a**p) * dx) ** (1.0 / p))


def lp_norm(f: Field, p: float) -> float:
    return lp_norm_values(f.values, f.grid.dx, p)


def int_power(u: np.ndarray, n: int) -> np.ndarray:
    """u**n by repeated squaring (much faster than np.power for floats)."""
    if n < 1:
        raise ValueError(f"power must be >= 1, got {n}")
    result = None
    base = u
    while n:
        if n & 1:
            result = base if result is None else result * base
        n >>= 1
        if n:
            base = base * base
    return result


@lru_cache(maxsize=None)
def _fast_even(need: int) -> int:
    size = sfft.next_fast_len(need + need % 2)
    while size % 2:
        size = sfft.next_fast_len(size + 1)
    return size


def padded_size(M: int, degree: int, ceiling: int = MAX_PADDED_MODES,
                strict: bool = True) -> int:
    """Smallest FFT-friendly even size >= (degree + 1) * M / 2.

    With ``strict`` the size exceeds that bound, which keeps products of the
    split -M/2 mode from aliasing back onto +-M/2.  Inputs whose -M/2 mode is
    zero can use ``strict=False``.
    """
    size = _fast_even(-(-(degree + 1) * M // 2) + int(strict))
    if size > ceiling:
        raise ResourceLimitError(
            f"padded grid of {size} modes exceeds the ceiling of {ceiling} "
            f"(M={M}, degree={degree})"
        )
    return size


def pad(coeffs: np.ndarray, M_pad: int) -> np.ndarray:
    """Embed sorted coefficients into a larger sorted array.

    The unpaired mode -M/2 is split evenly onto -M/2 and +M/2 so that the
    padded array represents the real trigonometric interpolant.
    """
    M = coeffs.shape[-1]
    if M_pad == M:
        return np.array(coeffs, dtype=complex)
    if M_pad < M:
        raise ValueError(f"cannot pad {M} modes into {M_pad}")
    out = np.zeros(coeffs.shape[:-1] + (M_pad,), dtype=complex)
    lo = M_pad // 2 - M // 2
    out[..., lo : lo + M] = coeffs
    half = 0.5 * coeffs[..., 0]
    out[..., lo] = half
    out[..., lo + M] = half
    return out


def truncate(coeffs: np.ndarray, M: int) -> np.ndarray:
    """Restrict sorted padded coefficients to the M resolved modes.

    The mode -M/2 receives the sum of the padded -M/2 and +M/2 entries (what
    sampling on the coarse grid would give), so that truncate(pad(c)) == c.
    """
    M_pad = coeffs.shape[-1]
    if M_pad == M:
        return np.array(coeffs, dtype=complex)
    lo = M_pad // 2 - M // 2
    out = coeffs[..., lo : lo + M].copy()
    out[..., 0] = coeffs[..., lo] + coeffs[..., lo + M]
    return out


def _half_spectrum(grid: FourierGrid, coeffs: np.ndarray, M_pad: int) -> np.ndarray:
    """rfft-layout coefficients (j = 0..M_pad/2) of the padded real interpolant."""
    M, z = grid.M, grid.zero
    half = np.zeros(M_pad // 2 + 1, dtype=complex)
    ph = grid._phase
    half[:z] = coeffs[z:] * ph[z:]
    # unpaired mode -M/2 contributes half its (real) value at +M/2
    half[z] = 0.5 * (coeffs[0] * ph[0]).real
    return half


def physical_padded(grid: FourierGrid, coeffs: np.ndarray, M_pad: int) -> np.ndarray:
    """Real samples of the trigonometric interpolant on a grid of M_pad points."""
    return sfft.irfft(_half_spectrum(grid, coeffs, M_pad), n=M_pad) * (M_pad / grid.L)


def spectrum_from_padded(grid: FourierGrid, values: np.ndarray) -> np.ndarray:
    """Resolved sorted coefficients of real samples given on a finer grid."""
    M_pad = values.shape[-1]
    z = grid.zero
    p = sfft.rfft(values) * (grid.L / M_pad)
    ph = grid._phase
    out = np.empty(grid.M, dtype=complex)
    out[z:] = p[:z] * ph[z:]
    out[1:z] = np.conj(out[z + 1:][::-1])
    out[0] = 2.0 * p[z].real * ph[0]
    return out


def power_coeffs(grid: FourierGrid, coeffs: np.ndarray, degree: int,
                 ceiling: int = MAX_PADDED_MODES) -> np.ndarray:
    """Resolved spectrum of u**degree without aliasing (array level).

    ``coeffs`` must describe a real function; only xi >= 0 entries and the
    real part of the -M/2 entry are read.
    """
    M_pad = padded_size(grid.M, degree, ceiling, strict=coeffs[0] != 0)
    u = physical_padded(grid, coeffs, M_pad)
    return spectrum_from_padded(grid, int_power(u, degree))


def dealias_product(factors: Sequence[Spectrum], degree: int | None = None,
                    ceiling: int = MAX_PADDED_MODES) -> Spectrum:
    """Alias-free product of real functions given by their spectra."""
    if not factors:
        raise ValueError("need at least one factor")
    degree = len(factors) if degree is None else degree
    if degree != len(factors):
        raise ValueError(f"degree {degree} does not match {len(factors)} factors")
    grid = factors[0].grid
    for F in factors[1:]:
        _same_grid(grid, F.grid)
    M_pad = padded_size(grid.M, degree, ceiling)
    prod = np.ones(M_pad)
    for F in factors:
        prod = prod * physical_padded(grid, F.coeffs, M_pad)
    return Spectrum(grid, spectrum_from_padded(grid, prod))
