"""Independent reference computations used by the tests.

Everything here is written directly from definitions (dense sums, closed
forms) without going through the package's FFT paths.
"""

from __future__ import annotations

import numpy as np


def direct_coeffs(x: np.ndarray, f: np.ndarray, xi: np.ndarray, dx: float) -> np.ndarray:
    """Continuum-normalized coefficients by a dense O(M^2) sum."""
    return dx * np.exp(-1j * np.outer(xi, x)) @ f


def direct_values(x: np.ndarray, coeffs: np.ndarray, xi: np.ndarray, L: float) -> np.ndarray:
    """(1/L) sum_j c_j exp(i x xi_j), evaluated densely."""
    return (np.exp(1j * np.outer(x, xi)) @ coeffs) / L


def dense_convolution(factors: list[np.ndarray], M: int, L: float) -> np.ndarray:
    """Exact (unaliased) product spectrum of sorted coefficient arrays,
    truncated back to the M resolved modes (the -M/2 output collects both
    +-M/2 entries, as sampling on the M-point grid would).

    The unpaired -M/2 mode of each factor is split evenly onto -M/2 and +M/2
    (the real trigonometric interpolant) before multiplying.
    """
    def full(c):
        out = np.zeros(M + 1, dtype=complex)  # indices -M/2 .. M/2
        out[:M] = c
        out[0] = 0.5 * c[0]
        out[M] = 0.5 * c[0]
        return out

    acc = full(factors[0])
    for c in factors[1:]:
        acc = np.convolve(acc, full(c)) / L
    # acc now spans indices -d*M/2 .. d*M/2
    n = len(acc)
    mid = n // 2
    lo = mid - M // 2
    out = acc[lo : lo + M].copy()
    out[0] = acc[lo] + acc[lo + M]
    return out


def trapezoid_periodic(f: np.ndarray, dx: float) -> float:
    """Periodic trapezoid rule (spectrally accurate for smooth periodic f)."""
    return float(np.sum(f) * dx)
