"""Hot numeric kernels, numba-compiled when available.

Every kernel has a pure-numpy implementation exported under a ``*_numpy``
name. When numba is importable and the environment variable
``CATLAB_NUMBA`` is not ``0``/``false``/``off``, loop variants compiled
with ``@njit(cache=True)`` are bound to the public names instead;
``USING_NUMBA`` records which path is active. ``benchmarks/bench_kernels.py``
times both paths side by side.
"""

from __future__ import annotations

import os

import numpy as np

_flag = os.environ.get("CATLAB_NUMBA", "1").strip().lower()
_WANT_NUMBA = _flag not in ("0", "false", "off")

if _WANT_NUMBA:
    try:
        from numba import njit

        _HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _HAVE_NUMBA = False
else:
    _HAVE_NUMBA = False

if _HAVE_NUMBA:
    # CATLAB_THREADS caps the compiled kernels' worker pool (default: all cores).
    _threads = os.environ.get("CATLAB_THREADS", "").strip()
    if _threads.isdigit() and int(_threads) >= 1:
        import numba

        numba.set_num_threads(min(int(_threads), numba.config.NUMBA_NUM_THREADS))


def build_permutation_numpy(a: int, b: int, c: int, d: int, size: int) -> np.ndarray:
    """Flat-index permutation of the size*size lattice under (x,y) -> (ax+by, cx+dy) mod size.

    Coefficients must already be reduced mod size so int64 products cannot
    overflow. Entry i = x*size + y holds the flat index of the image cell.
    """
    idx = np.arange(size * size, dtype=np.int64)
    x = idx // size
    y = idx - x * size
    px = (a * x + b * y) % size
    py = (c * x + d * y) % size
    return px * size + py


def apply_pauli_frame_numpy(
    amps: np.ndarray, x_mask: int, z_mask: int, y_count: int
) -> np.ndarray:
    """Apply one composite single-qubit-Pauli layer to a flat statevector.

    ``x_mask``/``z_mask`` hold one bit per qubit; amplitude i picks up sign
    (-1)^popcount(i & z_mask) and moves to index i ^ x_mask. ``y_count``
    contributes a global phase i^y_count.
    """
    idx = np.arange(amps.size, dtype=np.int64)
    signs = 1.0 - 2.0 * (np.bitwise_count(idx & np.int64(z_mask)) & 1)
    out = np.empty_like(amps)
    out[idx ^ np.int64(x_mask)] = amps * signs
    phase = (1.0, 1.0j, -1.0, -1.0j)[y_count & 3]
    if phase != 1.0:
        out *= phase
    return out


def pairwise_torus_stats_numpy(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """(min, max, mean) pairwise wrap-around Euclidean distance of unit-torus points.

    Returns (0.0, 0.0, 0.0) for fewer than two points. Builds the full k*k
    distance matrix, so memory is quadratic in the point count.
    """
    k = x.size
    if k < 2:
        return 0.0, 0.0, 0.0
    dx = np.abs(x[:, None] - x[None, :])
    dx = np.minimum(dx, 1.0 - dx)
    dy = np.abs(y[:, None] - y[None, :])
    dy = np.minimum(dy, 1.0 - dy)
    d = np.sqrt(dx * dx + dy * dy)
    pair = d[np.triu_indices(k, k=1)]
    return float(pair.min()), float(pair.max()), float(pair.mean())


if _HAVE_NUMBA:

    @njit(cache=True)
    def _build_permutation_loop(a, b, c, d, size):  # pragma: no cover - compiled
        out = np.empty(size * size, dtype=np.int64)
        i = 0
        for x in range(size):
            for y in range(size):
                px = (a * x + b * y) % size
                py = (c * x + d * y) % size
                out[i] = px * size + py
                i += 1
        return out

    @njit(cache=True)
    def _apply_pauli_frame_loop(amps, x_mask, z_mask, y_count):  # pragma: no cover
        out = np.empty_like(amps)
        for i in range(amps.size):
            m = i & z_mask
            parity = 0
            while m:
                parity ^= 1
                m &= m - 1
            if parity:
                out[i ^ x_mask] = -amps[i]
            else:
                out[i ^ x_mask] = amps[i]
        r = y_count & 3
        if r == 1:
            out *= 1.0j
        elif r == 2:
            out *= -1.0
        elif r == 3:
            out *= -1.0j
        return out

    @njit(cache=True)
    def _pairwise_torus_stats_loop(x, y):  # pragma: no cover - compiled
        k = x.size
        if k < 2:
            return 0.0, 0.0, 0.0
        dmin = 2.0
        dmax = 0.0
        total = 0.0
        for i in range(k):
            for j in range(i + 1, k):
                dx = abs(x[i] - x[j])
                if dx > 0.5:
                    dx = 1.0 - dx
                dy = abs(y[i] - y[j])
                if dy > 0.5:
                    dy = 1.0 - dy
                d = np.sqrt(dx * dx + dy * dy)
                if d < dmin:
                    dmin = d
                if d > dmax:
                    dmax = d
                total += d
        return dmin, dmax, total * 2.0 / (k * (k - 1))

    def build_permutation(a: int, b: int, c: int, d: int, size: int) -> np.ndarray:
        return _build_permutation_loop(
            np.int64(a), np.int64(b), np.int64(c), np.int64(d), np.int64(size)
        )

    def apply_pauli_frame(
        amps: np.ndarray, x_mask: int, z_mask: int, y_count: int
    ) -> np.ndarray:
        return _apply_pauli_frame_loop(
            amps, np.int64(x_mask), np.int64(z_mask), np.int64(y_count)
        )

    def pairwise_torus_stats(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
        dmin, dmax, dmean = _pairwise_torus_stats_loop(x, y)
        return float(dmin), float(dmax), float(dmean)

    USING_NUMBA = True
else:
    build_permutation = build_permutation_numpy
    apply_pauli_frame = apply_pauli_frame_numpy
    pairwise_torus_stats = pairwise_torus_stats_numpy
    USING_NUMBA = False
