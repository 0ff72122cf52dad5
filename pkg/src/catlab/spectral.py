"""Classical spectral counterpart of the Fourier-transform-then-measure pipeline.

The quantum procedure Fourier-transforms the amplitude grid (roughly the
square root of the density), so the classical comparator here is defined
on amplitudes too, not on the density itself; with the shared kernel
convention the two pipelines are the same unitary and their output
distributions match to numerical precision.
"""

from __future__ import annotations

import numpy as np

from .classical import Density
from .maps import _require_power_of_two
from .quantum import MeasurementHistogram

POWER_SUM_TOL = 1e-9


class Spectrum:
    """Normalized power over wavenumbers (k_x, k_y) on a size x size grid."""

    __slots__ = ("power",)

    def __init__(self, power) -> None:
        arr = np.array(power, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"spectrum must be a square grid, got shape {arr.shape}")
        _require_power_of_two(arr.shape[0], "spectrum size")
        if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
            raise ValueError("spectral power must be finite and nonnegative")
        total = float(arr.sum())
        if abs(total - 1.0) > POWER_SUM_TOL:
            raise ValueError(f"spectral power must sum to 1 within {POWER_SUM_TOL}, got {total!r}")
        arr.flags.writeable = False
        self.power = arr

    @property
    def size(self) -> int:
        return self.power.shape[0]


def power_spectrum(amplitudes: np.ndarray) -> Spectrum:
    """Squared modulus of the 2D transform of an amplitude grid, normalized to 1.

    Uses the same kernel and orthonormal scaling as the qubit-register
    transform, so this is exactly the outcome distribution of transforming
    and then measuring the corresponding state.
    """
    grid = np.asarray(amplitudes, dtype=np.complex128)
    if grid.ndim != 2 or grid.shape[0] != grid.shape[1]:
        raise ValueError(f"amplitude grid must be square, got shape {grid.shape}")
    power = np.abs(np.fft.ifft2(grid, norm="ortho")) ** 2
    total = power.sum()
    if total == 0.0:
        raise ValueError("amplitude grid is identically zero")
    return Spectrum(power / total)


def estimate_spectrum(hist: MeasurementHistogram) -> Spectrum:
    """Empirical outcome frequencies as a spectrum estimate."""
    return Spectrum(hist.counts / hist.total)


def tv_distance(p, q) -> float:
    """Total variation distance (1/2) sum |p - q| between two same-shape distributions.

    Accepts Spectrum, Density, or bare arrays.
    """
    a = _grid_of(p)
    b = _grid_of(q)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(0.5 * np.abs(a - b).sum())


def _grid_of(obj) -> np.ndarray:
    if isinstance(obj, Spectrum):
        return obj.power
    if isinstance(obj, Density):
        return obj.cells
    return np.asarray(obj, dtype=np.float64)
