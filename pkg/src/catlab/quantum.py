"""Statevector simulation of the lattice map on 2n qubits.

A size = 2**n lattice cell (x, y) is the computational basis state with
flat index x*size + y: the y register occupies bits 0..n-1 and the x
register bits n..2n-1. The map unitary is applied as a direct amplitude
permutation at map-step granularity (no elementary-gate decomposition),
and noise is one Monte Carlo Pauli realization per qubit per step, so an
ensemble of pure-state trajectories stands in for the channel; density
matrices at 2n ~ 20 qubits are out of reach and are not attempted.

Fourier convention, fixed so outputs are comparable across tools: the
forward transform uses kernel exp(+2*pi*i*k*x/size)/sqrt(size) per axis
(numpy's ifft with orthonormal scaling), the inverse uses the conjugate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import apply_pauli_frame
from .classical import Density
from .maps import CatMatrix, lattice_permutation

NORM_TOL = 1e-12

NOISE_KINDS = ("bitflip", "phaseflip", "depolarizing")


class StateVector:
    """Unit-norm complex amplitudes over the size x size lattice.

    Amplitude arrays are kept read-only; every operation returns a fresh
    StateVector, so snapshots can be shared freely.
    """

    __slots__ = ("amplitudes", "n")

    def __init__(self, amplitudes) -> None:
        amps = np.array(amplitudes, dtype=np.complex128).reshape(-1)
        length = amps.size
        if length < 4 or length & (length - 1) or (length.bit_length() - 1) % 2:
            raise ValueError(
                f"amplitude count must be 4**n for n >= 1 qubits per axis, got {length}"
            )
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"statevector norm must be 1 within {NORM_TOL}, got {norm!r}")
        amps.flags.writeable = False
        self.amplitudes = amps
        self.n = (length.bit_length() - 1) // 2

    @property
    def size(self) -> int:
        return 1 << self.n

    @property
    def num_qubits(self) -> int:
        return 2 * self.n

    @classmethod
    def basis(cls, n: int, x: int, y: int) -> "StateVector":
        """Basis state |x, y> on the 2**n lattice."""
        size = 1 << n
        if not (0 <= x < size and 0 <= y < size):
            raise ValueError(f"cell ({x}, {y}) outside [0,{size})")
        amps = np.zeros(size * size, dtype=np.complex128)
        amps[x * size + y] = 1.0
        return cls(amps)

    def grid(self) -> np.ndarray:
        """Amplitudes as a (size, size) view indexed [x, y]."""
        return self.amplitudes.reshape(self.size, self.size)

    def probabilities(self) -> np.ndarray:
        """|amplitude|**2 as a (size, size) array."""
        return np.abs(self.grid()) ** 2


@dataclass(frozen=True)
class NoiseModel:
    """Independent per-qubit Pauli errors, probability epsilon per application.

    bitflip applies X, phaseflip applies Z, depolarizing applies X, Y or Z
    with equal probability. ``trajectories`` is the Monte Carlo ensemble
    size used when averaging over realizations.
    """

    kind: str
    epsilon: float
    trajectories: int = 1

    def __post_init__(self) -> None:
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"noise kind must be one of {NOISE_KINDS}, got {self.kind!r}")
        if not (0.0 <= self.epsilon <= 1.0):
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if self.trajectories < 1:
            raise ValueError(f"trajectories must be >= 1, got {self.trajectories}")

    @classmethod
    def from_string(cls, text: str, trajectories: int = 1) -> "NoiseModel":
        """Parse 'kind:epsilon', e.g. 'bitflip:0.01'."""
        kind, sep, eps = text.partition(":")
        if not sep:
            raise ValueError(f"noise spec needs 'kind:epsilon', got {text!r}")
        try:
            epsilon = float(eps)
        except ValueError as exc:
            raise ValueError(f"non-numeric noise probability in {text!r}") from exc
        return cls(kind, epsilon, trajectories)


@dataclass(frozen=True, eq=False)
class MeasurementHistogram:
    """Counts of (x, y) measurement outcomes; counts sum to ``total``."""

    counts: np.ndarray
    total: int

    def __post_init__(self) -> None:
        if self.counts.ndim != 2 or self.counts.shape[0] != self.counts.shape[1]:
            raise ValueError(f"counts must be square, got shape {self.counts.shape}")
        if np.any(self.counts < 0) or int(self.counts.sum()) != self.total:
            raise ValueError("counts must be nonnegative and sum to the sample total")

    @property
    def size(self) -> int:
        return self.counts.shape[0]


def prepare_state(dens: Density) -> StateVector:
    """Encode a density as the real nonnegative superposition sqrt(dens).

    Measuring the prepared state immediately reproduces the density. The
    amplitude vector is renormalized after the square root so the residual
    from the density's own sum tolerance cannot leak into the state norm.
    """
    amps = np.sqrt(dens.cells.reshape(-1)).astype(np.complex128)
    return StateVector(amps / np.linalg.norm(amps))


def apply_map_step(
    psi: StateVector, m: CatMatrix, direction: str = "forward"
) -> StateVector:
    """One map step as an exact amplitude permutation; norm is untouched."""
    if direction not in ("forward", "backward"):
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
    perm = lattice_permutation(m, psi.size, 1, inverse=(direction == "backward"))
    out = np.empty_like(psi.amplitudes)
    out[perm] = psi.amplitudes
    return StateVector(out)


def apply_noise(
    psi: StateVector, model: NoiseModel, rng: np.random.Generator
) -> StateVector:
    """One Monte Carlo noise realization: per qubit, a Pauli with probability epsilon.

    Consumes a fixed number of draws from ``rng`` per call (independent of
    which errors fire), so realizations are reproducible from the stream
    position alone.
    """
    nq = psi.num_qubits
    fire = rng.random(nq) < model.epsilon
    if model.kind == "depolarizing":
        picks = rng.integers(0, 3, size=nq)
    else:
        picks = None
    if not fire.any():
        return StateVector(psi.amplitudes)
    x_mask = 0
    z_mask = 0
    y_count = 0
    for k in np.nonzero(fire)[0]:
        if model.kind == "bitflip":
            x_mask |= 1 << int(k)
        elif model.kind == "phaseflip":
            z_mask |= 1 << int(k)
        else:
            p = int(picks[k])
            if p == 0:
                x_mask |= 1 << int(k)
            elif p == 1:  # Y = i * X * Z
                x_mask |= 1 << int(k)
                z_mask |= 1 << int(k)
                y_count += 1
            else:
                z_mask |= 1 << int(k)
    return StateVector(apply_pauli_frame(psi.amplitudes, x_mask, z_mask, y_count))


def qft2d(psi: StateVector, direction: str = "forward") -> StateVector:
    """Fourier transform each axis register; 'inverse' undoes 'forward'."""
    if direction not in ("forward", "inverse"):
        raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")
    grid = psi.grid()
    if direction == "forward":
        out = np.fft.ifft2(grid, norm="ortho")
    else:
        out = np.fft.fft2(grid, norm="ortho")
    return StateVector(out.reshape(-1))


def measure_samples(
    psi: StateVector, samples: int, rng: np.random.Generator
) -> MeasurementHistogram:
    """Draw ``samples`` independent (x, y) outcomes from |psi|**2."""
    if samples < 1:
        raise ValueError(f"sample count must be >= 1, got {samples}")
    probs = np.abs(psi.amplitudes) ** 2
    probs /= probs.sum()
    outcomes = rng.choice(probs.size, size=samples, p=probs)
    counts = np.bincount(outcomes, minlength=probs.size).reshape(psi.size, psi.size)
    return MeasurementHistogram(counts, samples)


def fidelity(psi: StateVector, phi: StateVector) -> float:
    """|<psi|phi>|**2."""
    if psi.amplitudes.size != phi.amplitudes.size:
        raise ValueError(
            f"statevector lengths differ: {psi.amplitudes.size} vs {phi.amplitudes.size}"
        )
    return float(abs(np.vdot(psi.amplitudes, phi.amplitudes)) ** 2)


def trajectory_rng(seed: int, trajectory: int) -> np.random.Generator:
    """Independent random stream for one Monte Carlo trajectory."""
    return np.random.default_rng([seed, trajectory])


def evolve_noisy(
    psi: StateVector,
    m: CatMatrix,
    steps: int,
    model: NoiseModel,
    rng: np.random.Generator,
    gates_per_step: int = 1,
) -> StateVector:
    """One noisy trajectory: each map step is followed by ``gates_per_step`` noise layers."""
    if gates_per_step < 1:
        raise ValueError(f"gates_per_step must be >= 1, got {gates_per_step}")
    for _ in range(steps):
        psi = apply_map_step(psi, m)
        for _ in range(gates_per_step):
            psi = apply_noise(psi, model, rng)
    return psi


def mean_fidelity_series(
    psi0: StateVector,
    m: CatMatrix,
    steps: int,
    model: NoiseModel,
    seed: int,
    gates_per_step: int = 1,
) -> np.ndarray:
    """Ensemble-mean fidelity against the noiseless state after 0..steps steps."""
    total = np.zeros(steps + 1)
    for traj in range(model.trajectories):
        rng = trajectory_rng(seed, traj)
        noisy = psi0
        ideal = psi0
        total[0] += 1.0
        for t in range(1, steps + 1):
            ideal = apply_map_step(ideal, m)
            noisy = apply_map_step(noisy, m)
            for _ in range(gates_per_step):
                noisy = apply_noise(noisy, model, rng)
            total[t] += fidelity(ideal, noisy)
    return total / model.trajectories


def sample_trajectory_outcomes(
    psi0: StateVector,
    m: CatMatrix,
    steps: int,
    model: NoiseModel,
    seed: int,
    gates_per_step: int = 1,
) -> np.ndarray:
    """One measured flat outcome index per trajectory after a noisy evolution."""
    outcomes = np.empty(model.trajectories, dtype=np.int64)
    for traj in range(model.trajectories):
        rng = trajectory_rng(seed, traj)
        final = evolve_noisy(psi0, m, steps, model, rng, gates_per_step)
        probs = np.abs(final.amplitudes) ** 2
        outcomes[traj] = rng.choice(probs.size, p=probs / probs.sum())
    return outcomes
