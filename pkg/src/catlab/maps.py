"""Hyperbolic torus maps and their exact lattice discretization.

A map is a 2x2 integer matrix with determinant 1 and |trace| > 2 acting on
the unit torus, (x, y) -> (a x + b y, c x + d y) mod 1. Restricted to the
N x N rational lattice the same formula taken mod N is a permutation of the
lattice, so it can be iterated exactly with integer arithmetic, forward and
backward. This module holds the matrix type, the point types, single steps,
exact matrix powers mod N, the permutation period, and the Lyapunov
exponent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import build_permutation

DEFAULT_PERIOD_CAP = 10**8


def _require_power_of_two(size: int, what: str = "lattice size") -> None:
    if not isinstance(size, (int, np.integer)) or isinstance(size, bool):
        raise ValueError(f"{what} must be an integer, got {size!r}")
    if size < 2 or size & (size - 1):
        raise ValueError(f"{what} must be a power of two >= 2, got {size}")


@dataclass(frozen=True)
class CatMatrix:
    """2x2 integer torus-map matrix ((a, b), (c, d)).

    Construction enforces determinant a*d - b*c == 1 (the map is an
    area-preserving lattice bijection for every modulus) and |a + d| > 2
    (hyperbolicity, hence a positive Lyapunov exponent).
    """

    a: int = 1
    b: int = 1
    c: int = 1
    d: int = 2

    def __post_init__(self) -> None:
        for name in ("a", "b", "c", "d"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                raise ValueError(f"matrix entry {name} must be an integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        det = self.a * self.d - self.b * self.c
        if det != 1:
            raise ValueError(f"matrix must have determinant 1, got {det}")
        if abs(self.a + self.d) <= 2:
            raise ValueError(
                f"matrix must be hyperbolic (|a + d| > 2), got trace {self.a + self.d}"
            )

    @classmethod
    def arnold(cls) -> "CatMatrix":
        """The standard map ((1, 1), (1, 2))."""
        return cls(1, 1, 1, 2)

    @classmethod
    def from_string(cls, text: str) -> "CatMatrix":
        """Parse 'a,b,c,d' (comma-separated signed integers)."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 4:
            raise ValueError(f"expected 4 comma-separated integers, got {text!r}")
        try:
            a, b, c, d = (int(p) for p in parts)
        except ValueError as exc:
            raise ValueError(f"non-integer matrix entry in {text!r}") from exc
        return cls(a, b, c, d)

    @property
    def trace(self) -> int:
        return self.a + self.d

    def inverse(self) -> "CatMatrix":
        """The exact integer inverse ((d, -b), (-c, a)); same trace, so still valid."""
        return CatMatrix(self.d, -self.b, -self.c, self.a)

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)

    def __str__(self) -> str:
        return f"(({self.a},{self.b}),({self.c},{self.d}))"


@dataclass(frozen=True)
class TorusPoint:
    """Point on the unit torus, both coordinates in [0, 1)."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.x < 1.0 and 0.0 <= self.y < 1.0):
            raise ValueError(f"torus coordinates must lie in [0,1), got ({self.x}, {self.y})")


@dataclass(frozen=True)
class LatticePoint:
    """Cell (x, y) of the size x size lattice; size must be a power of two."""

    x: int
    y: int
    size: int

    def __post_init__(self) -> None:
        _require_power_of_two(self.size)
        if not (0 <= self.x < self.size and 0 <= self.y < self.size):
            raise ValueError(
                f"lattice coordinates must lie in [0,{self.size}), got ({self.x}, {self.y})"
            )


@dataclass(frozen=True)
class RationalPoint:
    """Exact rational torus point (px/q, py/q) with a fixed denominator q.

    Because map matrices are integer, iterating keeps the denominator fixed:
    only the numerators change (mod q). Python integers make the iteration
    exact at any size, which is what the rounding-error experiments use as
    their reference trajectory.
    """

    px: int
    py: int
    q: int

    def __post_init__(self) -> None:
        if self.q < 1:
            raise ValueError(f"denominator must be positive, got {self.q}")
        if not (0 <= self.px < self.q and 0 <= self.py < self.q):
            raise ValueError(
                f"numerators must lie in [0,{self.q}), got ({self.px}, {self.py})"
            )

    def as_floats(self) -> tuple[float, float]:
        return self.px / self.q, self.py / self.q


def step_xy(m: CatMatrix, x: int, y: int, modulus: int) -> tuple[int, int]:
    """One map step on integer coordinates mod ``modulus``, exact for any size."""
    return (m.a * x + m.b * y) % modulus, (m.c * x + m.d * y) % modulus


def continuous_step(m: CatMatrix, p: TorusPoint) -> TorusPoint:
    """One step of the continuous map in floating point."""
    return TorusPoint((m.a * p.x + m.b * p.y) % 1.0, (m.c * p.x + m.d * p.y) % 1.0)


def rational_step(m: CatMatrix, p: RationalPoint) -> RationalPoint:
    """One step of the continuous map on an exact rational point.

    Integer-only arithmetic; coincides with the discrete lattice step on the
    denominator-q lattice, which is why the discretized map is exactly
    simulable.
    """
    px, py = step_xy(m, p.px, p.py, p.q)
    return RationalPoint(px, py, p.q)


def discrete_step(m: CatMatrix, p: LatticePoint) -> LatticePoint:
    """One exact lattice step; bijective on the size x size lattice."""
    x, y = step_xy(m, p.x, p.y, p.size)
    return LatticePoint(x, y, p.size)


def discrete_inverse_step(m: CatMatrix, p: LatticePoint) -> LatticePoint:
    """Exact inverse lattice step; undoes ``discrete_step`` cell for cell."""
    x, y = step_xy(m.inverse(), p.x, p.y, p.size)
    return LatticePoint(x, y, p.size)


def matrix_pow_mod(m: CatMatrix, t: int, modulus: int) -> tuple[tuple[int, int], tuple[int, int]]:
    """m**t with entries reduced mod ``modulus``, by binary exponentiation.

    Exact for any t (Python integers); t = 0 gives the identity.
    """
    if t < 0:
        raise ValueError(f"step count must be >= 0, got {t}")
    if modulus < 1:
        raise ValueError(f"modulus must be >= 1, got {modulus}")
    a, b, c, d = (v % modulus for v in m.as_tuple())
    ra, rb, rc, rd = 1 % modulus, 0, 0, 1 % modulus
    e = t
    while e:
        if e & 1:
            ra, rb, rc, rd = (
                (ra * a + rb * c) % modulus,
                (ra * b + rb * d) % modulus,
                (rc * a + rd * c) % modulus,
                (rc * b + rd * d) % modulus,
            )
        a, b, c, d = (
            (a * a + b * c) % modulus,
            (a * b + b * d) % modulus,
            (c * a + d * c) % modulus,
            (c * b + d * d) % modulus,
        )
        e >>= 1
    return ((ra, rb), (rc, rd))


def map_period(m: CatMatrix, modulus: int, max_steps: int = DEFAULT_PERIOD_CAP) -> int:
    """Smallest t >= 1 with m**t congruent to the identity mod ``modulus``.

    The lattice dynamics is a finite permutation, so such a t always exists;
    the orbit length of every lattice point divides it. Raises if the period
    exceeds ``max_steps``.
    """
    if modulus < 2:
        raise ValueError(f"modulus must be >= 2, got {modulus}")
    a0, b0, c0, d0 = (v % modulus for v in m.as_tuple())
    a, b, c, d = a0, b0, c0, d0
    for t in range(1, max_steps + 1):
        if a == 1 and d == 1 and b == 0 and c == 0:
            return t
        a, b, c, d = (
            (a * a0 + b * c0) % modulus,
            (a * b0 + b * d0) % modulus,
            (c * a0 + d * c0) % modulus,
            (c * b0 + d * d0) % modulus,
        )
    raise RuntimeError(f"period exceeds cap of {max_steps} steps for modulus {modulus}")


def lyapunov_exponent(m: CatMatrix) -> float:
    """ln of the largest eigenvalue magnitude, ln((|a+d| + sqrt((a+d)^2 - 4)) / 2).

    This is the exponential rate at which the map separates nearby
    trajectories (and amplifies any initial rounding offset).
    """
    tr = abs(m.trace)
    return math.log((tr + math.sqrt(tr * tr - 4.0)) / 2.0)


def lattice_permutation(
    m: CatMatrix, size: int, steps: int = 1, inverse: bool = False
) -> np.ndarray:
    """Flat-index permutation of the size x size lattice for ``steps`` map steps.

    Entry x*size + y holds the flat index of the image cell under m**steps
    (or its inverse). Cells are flattened row-major with x major, y minor.
    """
    _require_power_of_two(size)
    if steps < 0:
        raise ValueError(f"step count must be >= 0, got {steps}")
    base = m.inverse() if inverse else m
    (a, b), (c, d) = matrix_pow_mod(base, steps, size)
    return build_permutation(a, b, c, d, size)
