"""Named, reproducible end-to-end scenarios with metric reports.

Each scenario is a deterministic function of (config, seed): rerunning
produces bit-identical metrics and series. Reports embed their full config
so any report can be replayed. Wall-clock timings are collected for the
spectrum pipelines but kept out of the serialized report data, they are
machine-dependent diagnostics, not results.
"""

from __future__ import annotations

import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._version import __version__
from .classical import (
    Density,
    backward_fine_structure,
    divergence_series,
    evolve_density,
    first_passage,
    fit_growth_rate,
    fit_lyapunov,
    random_rational_point,
)
from .maps import CatMatrix, LatticePoint, lattice_permutation, lyapunov_exponent
from .quantum import (
    NoiseModel,
    apply_map_step,
    mean_fidelity_series,
    measure_samples,
    prepare_state,
    qft2d,
)
from .spectral import estimate_spectrum, power_spectrum, tv_distance

SCENARIOS = ("compare", "spectrum", "reversibility", "divergence")


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of one scenario run. ``seed`` is mandatory, never wall-clock."""

    scenario: str
    seed: int
    matrix: CatMatrix = CatMatrix.arnold()
    size: int = 64
    steps: int = 10
    bits: int = 16
    noise: NoiseModel | None = None
    samples: int = 10_000
    trials: int = 100
    density: str = "gaussian:0.5,0.5,0.1"
    threshold: float = 0.25
    block: int = 4
    gates_per_step: int = 1

    def __post_init__(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}, expected one of {SCENARIOS}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ValueError(f"seed must be a nonnegative integer, got {self.seed!r}")
        if self.size < 2 or self.size & (self.size - 1):
            raise ValueError(f"size must be a power of two >= 2, got {self.size}")
        if self.steps < 0:
            raise ValueError(f"steps must be >= 0, got {self.steps}")
        if self.bits < 1:
            raise ValueError(f"bits must be >= 1, got {self.bits}")
        if self.samples < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not (0.0 < self.threshold <= 0.5):
            raise ValueError(f"threshold must lie in (0, 0.5], got {self.threshold}")
        if not (1 <= self.block <= self.size):
            raise ValueError(f"block must lie in [1, size], got {self.block}")
        if self.gates_per_step < 1:
            raise ValueError(f"gates_per_step must be >= 1, got {self.gates_per_step}")

    def to_dict(self) -> dict:
        noise = None
        if self.noise is not None:
            noise = {
                "kind": self.noise.kind,
                "epsilon": self.noise.epsilon,
                "trajectories": self.noise.trajectories,
            }
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "matrix": list(self.matrix.as_tuple()),
            "size": self.size,
            "steps": self.steps,
            "bits": self.bits,
            "noise": noise,
            "samples": self.samples,
            "trials": self.trials,
            "density": self.density,
            "threshold": self.threshold,
            "block": self.block,
            "gates_per_step": self.gates_per_step,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        noise = data.get("noise")
        return cls(
            scenario=data["scenario"],
            seed=data["seed"],
            matrix=CatMatrix(*data["matrix"]),
            size=data["size"],
            steps=data["steps"],
            bits=data["bits"],
            noise=None if noise is None else NoiseModel(**noise),
            samples=data["samples"],
            trials=data["trials"],
            density=data["density"],
            threshold=data["threshold"],
            block=data["block"],
            gates_per_step=data["gates_per_step"],
        )


@dataclass(eq=False)
class ExperimentReport:
    """Named metric values plus per-step series, with full config provenance."""

    scenario: str
    metrics: dict[str, float]
    series: dict[str, list[float]]
    config: dict
    version: str = __version__
    timings: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        bad = [k for k, v in self.metrics.items() if not math.isfinite(v)]
        if bad:
            raise ValueError(f"non-finite metric values: {bad}")

    def to_dict(self) -> dict:
        # Timings are intentionally not part of the data payload.
        return {
            "scenario": self.scenario,
            "version": self.version,
            "config": self.config,
            "metrics": self.metrics,
            "series": self.series,
        }

    def to_table(self) -> str:
        """Aligned plain-text rendering for humans."""
        rows: list[tuple[str, str]] = [("scenario", self.scenario), ("version", self.version)]
        for key in sorted(self.config):
            rows.append((f"config.{key}", _plain(self.config[key])))
        for key in sorted(self.metrics):
            rows.append((f"metric.{key}", repr(self.metrics[key])))
        for key in sorted(self.series):
            vals = self.series[key]
            tail = repr(vals[-1]) if vals else "-"
            rows.append((f"series.{key}", f"{len(vals)} values, last {tail}"))
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name.ljust(width)}  {value}" for name, value in rows) + "\n"


def _plain(value) -> str:
    if isinstance(value, dict):
        return " ".join(f"{k}={_plain(value[k])}" for k in sorted(value))
    if isinstance(value, list):
        return ",".join(_plain(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


@contextmanager
def _arm(name: str):
    # Failures inside one arm of a comparison surface with the arm's name.
    try:
        yield
    except Exception as exc:
        raise RuntimeError(f"{name} failed: {exc}") from exc


def _divergence_ensemble(
    m: CatMatrix, bits: int, threshold: float, trials: int, seed: int, series_steps: int
) -> tuple[np.ndarray, list[int], list[float], list[float]]:
    """Shared trial loop: per-step mean distance, first passages, offsets, fits."""
    lam = lyapunov_exponent(m)
    horizon = max(series_steps, int((bits + 1) * math.log(2.0) / lam) + 100)
    mean_d = np.zeros(series_steps + 1)
    passages: list[int] = []
    offsets: list[float] = []
    fits: list[float] = []
    for k in range(trials):
        for retry in range(64):
            p0 = random_rational_point(seed, k, retry=retry)
            series = divergence_series(m, p0, bits, horizon)
            if not series.degenerate:
                break
        else:  # pragma: no cover
            raise RuntimeError("could not draw a non-degenerate start point")
        mean_d += series.distances[: series_steps + 1]
        offsets.append(series.epsilon0)
        t = first_passage(series, threshold)
        if t is not None:
            passages.append(t)
        try:
            fits.append(fit_lyapunov(series))
        except ValueError:
            pass
    return mean_d / trials, passages, offsets, fits


def run_divergence(cfg: ExperimentConfig) -> ExperimentReport:
    """Ensemble divergence of fixed-precision trajectories from exact references."""
    mean_d, passages, offsets, fits = _divergence_ensemble(
        cfg.matrix, cfg.bits, cfg.threshold, cfg.trials, cfg.seed, cfg.steps
    )
    metrics = {
        "mean_epsilon0": float(np.mean(offsets)),
        "lyapunov_exact": lyapunov_exponent(cfg.matrix),
        "fit_failures": float(cfg.trials - len(fits)),
    }
    if passages:
        metrics["mean_breakdown_steps"] = float(np.mean(passages))
    if fits:
        metrics["mean_fitted_lyapunov"] = float(np.mean(fits))
    return ExperimentReport(
        scenario=cfg.scenario,
        metrics=metrics,
        series={"mean_distance": [float(v) for v in mean_d]},
        config=cfg.to_dict(),
    )


def run_compare(cfg: ExperimentConfig) -> ExperimentReport:
    """Four arms on one initial density: rounded-continuous divergence, exact
    classical transport, noiseless quantum evolution, noisy quantum evolution.

    The headline numbers: the breakdown time of the rounded arm, the
    residual between exact classical and noiseless quantum probabilities
    (equal to numerical precision, the accuracy comparison is a tie), and
    the ensemble fidelity decay of the noisy arm.
    """
    timings: dict[str, float] = {}

    with _arm("arm1 (rounded continuous vs exact reference)"):
        t0 = time.perf_counter()
        mean_d, passages, _, _ = _divergence_ensemble(
            cfg.matrix, cfg.bits, cfg.threshold, cfg.trials, cfg.seed, cfg.steps
        )
        timings["arm1_seconds"] = time.perf_counter() - t0

    with _arm("arm2 (exact classical density transport)"):
        t0 = time.perf_counter()
        d0 = Density.from_spec(cfg.density, cfg.size)
        dt = evolve_density(d0, cfg.matrix, cfg.steps)
        timings["arm2_seconds"] = time.perf_counter() - t0

    with _arm("arm3 (noiseless quantum evolution)"):
        t0 = time.perf_counter()
        psi0 = prepare_state(d0)
        psi = psi0
        for _ in range(cfg.steps):
            psi = apply_map_step(psi, cfg.matrix)
        residual = float(np.max(np.abs(psi.probabilities() - dt.cells)))
        timings["arm3_seconds"] = time.perf_counter() - t0

    with _arm("arm4 (noisy quantum evolution)"):
        t0 = time.perf_counter()
        if cfg.noise is None or cfg.noise.epsilon == 0.0:
            fid = np.ones(cfg.steps + 1)
        else:
            fid = mean_fidelity_series(
                psi0, cfg.matrix, cfg.steps, cfg.noise, cfg.seed, cfg.gates_per_step
            )
        timings["arm4_seconds"] = time.perf_counter() - t0

    metrics = {
        "arm23_max_abs_residual": residual,
        "arm4_final_mean_fidelity": float(fid[-1]),
        "lyapunov_exact": lyapunov_exponent(cfg.matrix),
    }
    if passages:
        metrics["arm1_breakdown_mean_steps"] = float(np.mean(passages))
    return ExperimentReport(
        scenario=cfg.scenario,
        metrics=metrics,
        series={
            "arm1_mean_distance": [float(v) for v in mean_d],
            "arm4_mean_fidelity": [float(v) for v in fid],
        },
        config=cfg.to_dict(),
        timings=timings,
    )


def run_spectrum(cfg: ExperimentConfig) -> ExperimentReport:
    """Sampled Fourier pipeline against its exact classical counterpart.

    Evolves the prepared state, Fourier-transforms it, samples outcomes,
    and compares the empirical distribution with the exact power spectrum
    of the identical evolved amplitudes. Wall-clock of both pipelines goes
    to ``timings`` (informational only).
    """
    d0 = Density.from_spec(cfg.density, cfg.size)
    psi0 = prepare_state(d0)

    t0 = time.perf_counter()
    psi = psi0
    for _ in range(cfg.steps):
        psi = apply_map_step(psi, cfg.matrix)
    transformed = qft2d(psi)
    hist = measure_samples(transformed, cfg.samples, np.random.default_rng([cfg.seed]))
    quantum_seconds = time.perf_counter() - t0

    t0 = time.perf_counter()
    perm = lattice_permutation(cfg.matrix, cfg.size, cfg.steps)
    grid = np.empty(cfg.size * cfg.size, dtype=np.complex128)
    grid[perm] = psi0.amplitudes
    exact = power_spectrum(grid.reshape(cfg.size, cfg.size))
    classical_seconds = time.perf_counter() - t0

    empirical = estimate_spectrum(hist)
    return ExperimentReport(
        scenario=cfg.scenario,
        metrics={
            "tv_empirical_vs_exact": tv_distance(empirical, exact),
            "samples": float(cfg.samples),
        },
        series={},
        config=cfg.to_dict(),
        timings={
            "quantum_pipeline_seconds": quantum_seconds,
            "classical_pipeline_seconds": classical_seconds,
        },
    )


def run_reversibility(cfg: ExperimentConfig) -> ExperimentReport:
    """Exact forward/backward identity plus backward fine-structure statistics."""
    size, steps = cfg.size, cfg.steps
    perm_f = lattice_permutation(cfg.matrix, size, steps)
    perm_b = lattice_permutation(cfg.matrix, size, steps, inverse=True)
    mismatches = int(np.count_nonzero(perm_b[perm_f] != np.arange(size * size)))

    dens = Density.random(size, np.random.default_rng([cfg.seed]))
    roundtrip = evolve_density(
        evolve_density(dens, cfg.matrix, steps), cfg.matrix, steps, "backward"
    )
    density_residual = float(np.max(np.abs(roundtrip.cells - dens.cells)))

    block = [
        LatticePoint(i % size, j % size, size)
        for i in range(cfg.block)
        for j in range(cfg.block)
    ]
    fs = backward_fine_structure(cfg.matrix, block, steps)
    metrics = {
        "lattice_mismatch_cells": float(mismatches),
        "density_roundtrip_max_abs": density_residual,
        "block_min_cardinality": float(min(fs.cardinalities())),
        "lyapunov_exact": lyapunov_exponent(cfg.matrix),
    }
    try:
        metrics["fine_structure_growth_rate"] = fit_growth_rate(fs.max_distance)
    except ValueError:
        pass  # too few pre-saturation steps to fit; spread series still reported
    return ExperimentReport(
        scenario=cfg.scenario,
        metrics=metrics,
        series={"fine_structure_max_distance": [float(v) for v in fs.max_distance]},
        config=cfg.to_dict(),
    )


_RUNNERS: dict[str, Callable[[ExperimentConfig], ExperimentReport]] = {
    "compare": run_compare,
    "spectrum": run_spectrum,
    "reversibility": run_reversibility,
    "divergence": run_divergence,
}


def run_scenario(cfg: ExperimentConfig) -> ExperimentReport:
    """Dispatch a config to its scenario runner."""
    return _RUNNERS[cfg.scenario](cfg)
