"""Classical simulation engines for the discretized torus map.

Covers exact density transport (the map is a lattice permutation, so a
distribution is moved cell-for-cell with no arithmetic error), divergence
of a fixed-precision trajectory from an exact rational reference, Lyapunov
estimation from that divergence, mean breakdown times, and backward
evolution of point blocks to probe the fine structure of an evolved
density.

Rounding model: the map matrix is integer, so b-bit fixed-point iteration
introduces no per-step rounding at all; the only precision loss is the
initial quantization of the start point (offset at most 2**-(b+1) per
axis). A quantized trajectory is therefore itself exact, it coincides with
the lattice dynamics on the 2**b lattice, and the divergence experiment
compares that exactly-iterated rounded start against the exact rational
reference.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from ._kernels import pairwise_torus_stats
from .maps import (
    CatMatrix,
    LatticePoint,
    RationalPoint,
    _require_power_of_two,
    lattice_permutation,
    matrix_pow_mod,
    step_xy,
)

# Odd and larger than any tested mantissa width, so random rational start
# points are essentially never exactly representable in b bits.
DEFAULT_DENOMINATOR = 2**64 + 1

DENSITY_SUM_TOL = 1e-9
INGEST_SUM_WINDOW = (0.99, 1.01)


def torus_distance(ax: float, ay: float, bx: float, by: float) -> float:
    """Wrap-around Euclidean distance between two unit-torus points."""
    dx = abs(ax - bx) % 1.0
    dy = abs(ay - by) % 1.0
    return math.hypot(min(dx, 1.0 - dx), min(dy, 1.0 - dy))


class Density:
    """Nonnegative distribution over the size x size lattice, summing to 1.

    Cells are stored as a read-only float array indexed [x, y]; use the
    classmethod constructors for the built-in shapes.
    """

    __slots__ = ("cells",)

    def __init__(self, cells) -> None:
        arr = np.array(cells, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"density must be a square grid, got shape {arr.shape}")
        _require_power_of_two(arr.shape[0], "density size")
        if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
            raise ValueError("density cells must be finite and nonnegative")
        total = float(arr.sum())
        if abs(total - 1.0) > DENSITY_SUM_TOL:
            raise ValueError(f"density must sum to 1 within {DENSITY_SUM_TOL}, got {total!r}")
        arr.flags.writeable = False
        self.cells = arr

    @property
    def size(self) -> int:
        return self.cells.shape[0]

    @classmethod
    def uniform(cls, size: int) -> "Density":
        _require_power_of_two(size, "density size")
        return cls(np.full((size, size), 1.0 / (size * size)))

    @classmethod
    def delta(cls, size: int, x: int, y: int) -> "Density":
        _require_power_of_two(size, "density size")
        if not (0 <= x < size and 0 <= y < size):
            raise ValueError(f"delta cell ({x}, {y}) outside [0,{size})")
        cells = np.zeros((size, size))
        cells[x, y] = 1.0
        return cls(cells)

    @classmethod
    def gaussian(cls, size: int, cx: float, cy: float, sigma: float) -> "Density":
        """Periodically wrapped Gaussian bump centred at (cx, cy) in torus units."""
        _require_power_of_two(size, "density size")
        if sigma <= 0.0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        coords = np.arange(size) / size
        dx = np.abs(coords - (cx % 1.0))
        dx = np.minimum(dx, 1.0 - dx)
        dy = np.abs(coords - (cy % 1.0))
        dy = np.minimum(dy, 1.0 - dy)
        cells = np.exp(-(dx[:, None] ** 2 + dy[None, :] ** 2) / (2.0 * sigma * sigma))
        return cls(cells / cells.sum())

    @classmethod
    def random(cls, size: int, rng: np.random.Generator) -> "Density":
        """Uniform-random cell weights, normalized; reproducible from ``rng``."""
        cells = rng.random((size, size))
        return cls(cells / cells.sum())

    @classmethod
    def from_spec(cls, spec: str, size: int) -> "Density":
        """Build from 'uniform', 'delta:x,y', or 'gaussian:cx,cy,sigma'."""
        name, _, args = spec.partition(":")
        if name == "uniform":
            if args:
                raise ValueError("uniform takes no arguments")
            return cls.uniform(size)
        if name == "delta":
            try:
                x, y = (int(v) for v in args.split(","))
            except ValueError as exc:
                raise ValueError(f"delta spec needs 'delta:x,y', got {spec!r}") from exc
            return cls.delta(size, x, y)
        if name == "gaussian":
            try:
                cx, cy, sigma = (float(v) for v in args.split(","))
            except ValueError as exc:
                raise ValueError(
                    f"gaussian spec needs 'gaussian:cx,cy,sigma', got {spec!r}"
                ) from exc
            return cls.gaussian(size, cx, cy, sigma)
        raise ValueError(f"unknown density spec {spec!r}")

    def to_text(self) -> str:
        """Serialize as line 1 'N' followed by N rows of N decimals."""
        lines = [str(self.size)]
        for row in self.cells:
            lines.append(" ".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Density":
        """Parse the text format; input summing within [0.99, 1.01] is renormalized."""
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty density file")
        try:
            size = int(lines[0])
        except ValueError as exc:
            raise ValueError(f"first line must be the lattice size, got {lines[0]!r}") from exc
        if len(lines) != size + 1:
            raise ValueError(f"expected {size} data rows, got {len(lines) - 1}")
        try:
            cells = np.array([[float(v) for v in ln.split()] for ln in lines[1:]])
        except ValueError as exc:
            raise ValueError("non-numeric density cell") from exc
        if cells.shape != (size, size):
            raise ValueError(f"expected {size} values per row, got shape {cells.shape}")
        if np.any(cells < 0.0):
            raise ValueError("density cells must be nonnegative")
        total = float(cells.sum())
        if not (INGEST_SUM_WINDOW[0] <= total <= INGEST_SUM_WINDOW[1]):
            raise ValueError(
                f"density sums to {total!r}, outside the accepted window {INGEST_SUM_WINDOW}"
            )
        return cls(cells / total)


def evolve_density(
    dens: Density, m: CatMatrix, steps: int, direction: str = "forward"
) -> Density:
    """Transport a density ``steps`` map steps. Mass moves cell-for-cell.

    The t-step map is a single lattice permutation, so cell values are
    rearranged, never combined: the multiset of values is preserved exactly
    and backward transport undoes forward transport bit for bit.
    """
    if direction not in ("forward", "backward"):
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
    if steps < 0:
        raise ValueError(f"step count must be >= 0, got {steps}")
    perm = lattice_permutation(m, dens.size, steps, inverse=(direction == "backward"))
    out = np.empty(dens.size * dens.size, dtype=np.float64)
    out[perm] = dens.cells.reshape(-1)
    return Density(out.reshape(dens.size, dens.size))


@dataclass(frozen=True)
class FixedPointState:
    """b-bit fixed-point torus point: mantissas (mx, my) represent (mx, my) * 2**-bits."""

    mx: int
    my: int
    bits: int

    def __post_init__(self) -> None:
        if self.bits < 1:
            raise ValueError(f"precision must be >= 1 bit, got {self.bits}")
        scale = 1 << self.bits
        if not (0 <= self.mx < scale and 0 <= self.my < scale):
            raise ValueError(f"mantissas must lie in [0,2**{self.bits})")

    @classmethod
    def quantize(cls, p: RationalPoint, bits: int) -> "FixedPointState":
        """Round-to-nearest b-bit quantization of an exact rational point."""
        scale = 1 << bits
        return cls(
            _round_half_even(p.px * scale, p.q) % scale,
            _round_half_even(p.py * scale, p.q) % scale,
            bits,
        )

    def as_floats(self) -> tuple[float, float]:
        scale = 1 << self.bits
        return self.mx / scale, self.my / scale


def _round_half_even(num: int, den: int) -> int:
    """Exact round-to-nearest-even of num/den for nonnegative integers."""
    n, r = divmod(num, den)
    twice = 2 * r
    if twice > den or (twice == den and n & 1):
        return n + 1
    return n


@dataclass(frozen=True, eq=False)
class DivergenceSeries:
    """Per-step torus distance between a rounded trajectory and its exact reference.

    distances[t] is the separation after t map steps; distances[0] is the
    initial quantization offset. ``degenerate`` marks a start point exactly
    representable at the given precision (the series is then identically
    zero, which is reported, not raised).
    """

    distances: np.ndarray
    epsilon0: float
    bits: int
    degenerate: bool = False

    @property
    def steps(self) -> int:
        return len(self.distances) - 1


def _centered_offset(mnum: int, mden: int, rnum: int, rden: int) -> float:
    # Exact value (mnum/mden - rnum/rden) mod 1, mapped to [-1/2, 1/2], as a float.
    den = mden * rden
    num = (mnum * rden - rnum * mden) % den
    if 2 * num > den:
        num -= den
    return num / den


def divergence_series(
    m: CatMatrix, p0: RationalPoint, bits: int, steps: int
) -> DivergenceSeries:
    """Iterate the exact rational reference and its b-bit quantization side by side.

    Rounding happens once, at initialization; both trajectories are then
    iterated exactly (big-integer numerators for the reference, lattice
    integers for the quantized start), and the wrap-around distance is
    recorded at every step.
    """
    if steps < 1:
        raise ValueError(f"step count must be >= 1, got {steps}")
    fx = FixedPointState.quantize(p0, bits)
    scale = 1 << bits
    rx, ry, q = p0.px, p0.py, p0.q
    mx, my = fx.mx, fx.my
    if mx * q == rx * scale and my * q == ry * scale:
        return DivergenceSeries(np.zeros(steps + 1), 0.0, bits, degenerate=True)
    ds = np.empty(steps + 1)
    for t in range(steps + 1):
        ds[t] = math.hypot(
            _centered_offset(mx, scale, rx, q), _centered_offset(my, scale, ry, q)
        )
        rx, ry = step_xy(m, rx, ry, q)
        mx, my = step_xy(m, mx, my, scale)
    return DivergenceSeries(ds, float(ds[0]), bits)


def first_passage(series: DivergenceSeries, threshold: float) -> int | None:
    """First step index with distance above ``threshold``, or None if never."""
    above = np.nonzero(series.distances > threshold)[0]
    return int(above[0]) if above.size else None


def fit_lyapunov(
    series: DivergenceSeries, lower_factor: float = 10.0, upper: float = 0.01
) -> float:
    """Least-squares slope of ln(distance) over the pre-saturation window.

    The window is the contiguous run of steps with
    lower_factor * epsilon0 < d_t < upper, ending at the first step that
    reaches ``upper``: below the lower bound the quantization offset still
    dominates, and past the upper bound the torus geometry caps growth
    (later re-entries below ``upper`` are saturation noise, not expansion).
    """
    ts: list[int] = []
    logs: list[float] = []
    floor = lower_factor * series.epsilon0
    for t, d in enumerate(series.distances):
        if d >= upper:
            break
        if d > floor and d > 0.0:
            ts.append(t)
            logs.append(math.log(d))
    if len(ts) < 4:
        raise ValueError(
            f"insufficient pre-saturation data: fit window has {len(ts)} steps, need >= 4"
        )
    slope = np.polyfit(np.array(ts, dtype=np.float64), np.array(logs), 1)[0]
    return float(slope)


def _seeded_random(*key: int) -> random.Random:
    words = np.random.SeedSequence(list(key)).generate_state(4)
    return random.Random(int.from_bytes(words.tobytes(), "little"))


def random_rational_point(
    seed: int, trial: int, q: int = DEFAULT_DENOMINATOR, retry: int = 0
) -> RationalPoint:
    """Deterministic random start point for trial ``trial`` of stream ``seed``."""
    rng = _seeded_random(seed, trial, retry)
    return RationalPoint(rng.randrange(q), rng.randrange(q), q)


def breakdown_times(
    m: CatMatrix,
    bits: int,
    threshold: float,
    trials: int,
    seed: int,
    q: int = DEFAULT_DENOMINATOR,
    max_steps: int | None = None,
) -> np.ndarray:
    """First-passage step of the divergence above ``threshold``, per trial.

    Start points are drawn independently per (seed, trial); degenerate
    draws (exactly representable, so zero divergence) are resampled.
    """
    if not (0.0 < threshold <= 0.5):
        raise ValueError(f"threshold must lie in (0, 0.5], got {threshold}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    lam = math.log((abs(m.trace) + math.sqrt(m.trace**2 - 4)) / 2.0)
    if max_steps is None:
        max_steps = int((bits + 1) * math.log(2.0) / lam) + 100
    times = np.empty(trials, dtype=np.int64)
    for k in range(trials):
        for retry in range(64):
            p0 = random_rational_point(seed, k, q, retry)
            series = divergence_series(m, p0, bits, max_steps)
            if not series.degenerate:
                break
        else:  # pragma: no cover - probability ~ (2**bits / q)**64
            raise RuntimeError("could not draw a non-degenerate start point")
        t = first_passage(series, threshold)
        if t is None:  # pragma: no cover - max_steps leaves ample headroom
            raise RuntimeError(f"no crossing of {threshold} within {max_steps} steps")
        times[k] = t
    return times


def breakdown_time(
    m: CatMatrix,
    bits: int,
    threshold: float,
    trials: int,
    seed: int,
    q: int = DEFAULT_DENOMINATOR,
    max_steps: int | None = None,
) -> float:
    """Mean first-passage step over random start points."""
    return float(breakdown_times(m, bits, threshold, trials, seed, q, max_steps).mean())


@dataclass(frozen=True, eq=False)
class FineStructureResult:
    """Backward-evolved point sets and their pairwise-distance statistics.

    points_per_step[s] holds the (k, 2) integer coordinates after s inverse
    steps; the distance arrays hold the min/max/mean pairwise wrap-around
    distance at each step (zeros for a single point).
    """

    size: int
    points_per_step: list[np.ndarray] = field(repr=False)
    min_distance: np.ndarray = field(repr=False)
    max_distance: np.ndarray = field(repr=False)
    mean_distance: np.ndarray = field(repr=False)

    @property
    def steps(self) -> int:
        return len(self.points_per_step) - 1

    def cardinalities(self) -> list[int]:
        return [len(np.unique(p, axis=0)) for p in self.points_per_step]


def backward_fine_structure(
    m: CatMatrix, points: list[LatticePoint], steps: int
) -> FineStructureResult:
    """Evolve a set of lattice points backward, recording spread per step.

    The inverse map is exact and bijective, so the preimage set has the
    same cardinality at every step; what changes is how far apart the
    points sit, which is the recoverable sub-grid detail of a final
    density. Input duplicates are dropped.
    """
    if steps < 0:
        raise ValueError(f"step count must be >= 0, got {steps}")
    if not points:
        raise ValueError("need at least one lattice point")
    size = points[0].size
    if any(p.size != size for p in points):
        raise ValueError("all points must live on the same lattice")
    unique = sorted({(p.x, p.y) for p in points})
    xs = np.array([p[0] for p in unique], dtype=np.int64)
    ys = np.array([p[1] for p in unique], dtype=np.int64)
    (ia, ib), (ic, id_) = matrix_pow_mod(m.inverse(), 1, size)

    per_step: list[np.ndarray] = []
    mins = np.empty(steps + 1)
    maxes = np.empty(steps + 1)
    means = np.empty(steps + 1)
    for s in range(steps + 1):
        per_step.append(np.column_stack((xs, ys)))
        mins[s], maxes[s], means[s] = pairwise_torus_stats(xs / size, ys / size)
        if s < steps:
            xs, ys = (ia * xs + ib * ys) % size, (ic * xs + id_ * ys) % size
    return FineStructureResult(size, per_step, mins, maxes, means)


def fit_growth_rate(max_distances: np.ndarray, saturation: float = 0.2) -> float:
    """Slope of ln(max pairwise distance) per step before saturation.

    Uses the contiguous prefix of steps whose spread is below
    ``saturation``; needs at least 3 such steps. Compare against the map's
    Lyapunov exponent.
    """
    ts: list[int] = []
    logs: list[float] = []
    for t, d in enumerate(max_distances):
        if d >= saturation:
            break
        if d > 0.0:
            ts.append(t)
            logs.append(math.log(d))
    if len(ts) < 3:
        raise ValueError(
            f"insufficient pre-saturation data: growth window has {len(ts)} steps, need >= 3"
        )
    return float(np.polyfit(np.array(ts, dtype=np.float64), np.array(logs), 1)[0])
