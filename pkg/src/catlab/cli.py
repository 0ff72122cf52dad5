"""Command-line front end.

Subcommands: period, divergence, evolve, quantum, spectrum, compare,
reversibility. All flags are validated before any computation starts;
stochastic subcommands refuse to run without an explicit --seed, so
identical invocations produce byte-identical data output. Data goes to
stdout or --out-file, diagnostics (including wall-clock timings) go to
stderr. Exit codes: 0 success, 1 computation error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._version import __version__
from .classical import Density, divergence_series, first_passage
from .experiments import (
    ExperimentConfig,
    ExperimentReport,
    run_compare,
    run_reversibility,
    run_spectrum,
    run_divergence,
)
from .maps import CatMatrix, RationalPoint, map_period
from .quantum import (
    NoiseModel,
    StateVector,
    apply_map_step,
    evolve_noisy,
    measure_samples,
    prepare_state,
    qft2d,
    trajectory_rng,
)
from .spectral import power_spectrum


@dataclass(frozen=True)
class CliInvocation:
    """One fully validated command invocation."""

    subcommand: str
    args: argparse.Namespace
    out: str
    seed: int | None


# ---------------------------------------------------------------------------
# flag parsing


def _power_of_two(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 2 or value & (value - 1):
        raise argparse.ArgumentTypeError(f"N must be a power of two >= 2, got {value}")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _nonneg_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {value}")
    return value


def _threshold(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not (0.0 < value <= 0.5):
        raise argparse.ArgumentTypeError(f"threshold must lie in (0, 0.5], got {value}")
    return value


def _matrix(text: str) -> CatMatrix:
    try:
        return CatMatrix.from_string(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _noise(text: str) -> tuple[str, float]:
    # Trajectory count is a separate flag; validate kind and epsilon here.
    try:
        model = NoiseModel.from_string(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))
    return model.kind, model.epsilon


def _density_spec(text: str) -> str:
    name = text.partition(":")[0]
    if name not in ("uniform", "delta", "gaussian"):
        raise argparse.ArgumentTypeError(f"unknown density spec {text!r}")
    return text


def _p0(text: str) -> tuple[int, int, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected 'px,py,q', got {text!r}")
    try:
        px, py, q = (int(p) for p in parts)
        RationalPoint(px, py, q)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))
    return px, py, q


def _add_matrix(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--matrix",
        type=_matrix,
        default=CatMatrix.arnold(),
        metavar="a,b,c,d",
        help="map matrix entries (default 1,1,1,2)",
    )


def _add_density(parser: argparse.ArgumentParser, with_file: bool = True) -> None:
    if with_file:
        group = parser.add_mutually_exclusive_group()
        group.add_argument(
            "--density",
            type=_density_spec,
            default="uniform",
            help="built-in density: uniform | delta:x,y | gaussian:cx,cy,sigma",
        )
        group.add_argument("--density-file", metavar="PATH", help="density text file")
    else:
        parser.add_argument(
            "--density",
            type=_density_spec,
            default="gaussian:0.5,0.5,0.1",
            help="built-in density: uniform | delta:x,y | gaussian:cx,cy,sigma",
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="catlab",
        description="Exact discretized cat-map dynamics: classical, quantum, spectral.",
    )
    parser.add_argument("--version", action="version", version=f"catlab {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")

    p = sub.add_parser("period", help="permutation period of the lattice map")
    _add_matrix(p)
    p.add_argument("--n", type=_power_of_two, required=True, help="lattice size (power of two)")
    p.add_argument("--max-steps", type=_positive_int, default=10**8)

    p = sub.add_parser("divergence", help="fixed-precision trajectory vs exact reference")
    _add_matrix(p)
    p.add_argument("--bits", type=_positive_int, required=True, help="mantissa bits")
    p.add_argument("--steps", type=_positive_int, default=None, help="series length (default 3*bits)")
    p.add_argument("--trials", type=_positive_int, default=100)
    p.add_argument("--threshold", type=_threshold, default=0.25)
    p.add_argument("--p0", type=_p0, metavar="px,py,q", default=None,
                   help="single explicit rational start point instead of an ensemble")
    p.add_argument("--seed", type=_nonneg_int, required=True)
    p.add_argument("--out", choices=("table", "csv", "json"), default="table")
    p.add_argument("--out-file", metavar="PATH", help="write the JSON report here")

    p = sub.add_parser("evolve", help="exact classical density transport")
    _add_matrix(p)
    p.add_argument("--n", type=_power_of_two, required=True)
    p.add_argument("--steps", type=_nonneg_int, required=True)
    p.add_argument("--direction", choices=("forward", "backward"), default="forward")
    _add_density(p)
    p.add_argument("--out-file", metavar="PATH", help="write the evolved density here")

    p = sub.add_parser("quantum", help="statevector evolution, optional noise and sampling")
    _add_matrix(p)
    p.add_argument("--n", type=_power_of_two, required=True)
    p.add_argument("--steps", type=_nonneg_int, required=True)
    _add_density(p)
    p.add_argument("--noise", type=_noise, metavar="kind:epsilon", default=None,
                   help="per-qubit Pauli noise: bitflip | phaseflip | depolarizing")
    p.add_argument("--trajectories", type=_positive_int, default=1)
    p.add_argument("--gates-per-step", type=_positive_int, default=1,
                   help="noise applications per map step")
    p.add_argument("--samples", type=_positive_int, default=1024)
    p.add_argument("--qft", action="store_true", help="Fourier-transform before measuring")
    p.add_argument("--dump-state", metavar="PATH",
                   help="write the trajectory-0 final state as CSV index,real,imaginary")
    p.add_argument("--seed", type=_nonneg_int, required=True)
    p.add_argument("--out", choices=("csv", "json"), default="csv")
    p.add_argument("--out-file", metavar="PATH", help="write the histogram here")

    p = sub.add_parser("spectrum", help="sampled Fourier pipeline vs exact power spectrum")
    _add_matrix(p)
    p.add_argument("--n", type=_power_of_two, required=True)
    p.add_argument("--steps", type=_nonneg_int, default=0)
    _add_density(p, with_file=False)
    p.add_argument("--samples", type=_positive_int, default=10**5)
    p.add_argument("--seed", type=_nonneg_int, required=True)
    p.add_argument("--out", choices=("table", "csv", "json"), default="table",
                   help="table: report; csv/json: exact spectrum data")
    p.add_argument("--out-file", metavar="PATH", help="write the JSON report here")

    p = sub.add_parser("compare", help="rounded-continuous, exact classical, and quantum arms")
    _add_matrix(p)
    p.add_argument("--n", type=_power_of_two, required=True)
    p.add_argument("--steps", type=_nonneg_int, required=True)
    p.add_argument("--bits", type=_positive_int, default=16)
    p.add_argument("--trials", type=_positive_int, default=100)
    p.add_argument("--threshold", type=_threshold, default=0.25)
    _add_density(p, with_file=False)
    p.add_argument("--noise", type=_noise, metavar="kind:epsilon", default=None)
    p.add_argument("--trajectories", type=_positive_int, default=100)
    p.add_argument("--gates-per-step", type=_positive_int, default=1)
    p.add_argument("--seed", type=_nonneg_int, required=True)
    p.add_argument("--out", choices=("table", "json"), default="table")
    p.add_argument("--out-file", metavar="PATH", help="write the JSON report here")

    p = sub.add_parser("reversibility", help="forward/backward identity and fine structure")
    _add_matrix(p)
    p.add_argument("--n", type=_power_of_two, required=True)
    p.add_argument("--steps", type=_nonneg_int, required=True)
    p.add_argument("--block", type=_positive_int, default=4, help="side of the k x k point block")
    p.add_argument("--seed", type=_nonneg_int, required=True)
    p.add_argument("--out", choices=("table", "json"), default="table")
    p.add_argument("--out-file", metavar="PATH", help="write the JSON report here")

    return parser


def parse_args(argv: list[str] | None = None) -> CliInvocation:
    """Parse and validate argv; exits with status 2 on usage errors."""
    ns = build_parser().parse_args(argv)
    return CliInvocation(
        subcommand=ns.subcommand,
        args=ns,
        out=getattr(ns, "out", "table"),
        seed=getattr(ns, "seed", None),
    )


# ---------------------------------------------------------------------------
# output helpers


def _json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _emit(text: str, out_file: str | None) -> None:
    if out_file is None:
        sys.stdout.write(text)
    else:
        Path(out_file).write_text(text, encoding="utf-8", newline="")


def _series_csv(name: str, values: list[float]) -> str:
    lines = [f"step,{name}"]
    lines += [f"{t},{value!r}" for t, value in enumerate(values)]
    return "\n".join(lines) + "\n"


def _report_out(report: ExperimentReport, out: str, out_file: str | None,
                csv_series: str | None = None) -> None:
    """Table or JSON to stdout, JSON to --out-file, timings to stderr."""
    if out == "json":
        sys.stdout.write(_json_text(report.to_dict()))
    elif out == "csv" and csv_series is not None:
        sys.stdout.write(_series_csv(csv_series, report.series[csv_series]))
    else:
        sys.stdout.write(report.to_table())
    if out_file:
        _emit(_json_text(report.to_dict()), out_file)
    for key in sorted(report.timings):
        print(f"timing {key}={report.timings[key]:.6f}", file=sys.stderr)


def _load_density(args: argparse.Namespace, size: int) -> Density:
    path = getattr(args, "density_file", None)
    if path:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ValueError(f"cannot read density file {path}: {exc}") from exc
        dens = Density.from_text(text)
        if dens.size != size:
            raise ValueError(f"density file {path} has size {dens.size}, expected {size}")
        return dens
    return Density.from_spec(args.density, size)


# ---------------------------------------------------------------------------
# subcommands


def _cmd_period(args: argparse.Namespace) -> None:
    sys.stdout.write(f"period={map_period(args.matrix, args.n, args.max_steps)}\n")


def _cmd_divergence(args: argparse.Namespace) -> None:
    if args.p0 is not None:
        px, py, q = args.p0
        steps = args.steps if args.steps is not None else 3 * args.bits
        series = divergence_series(args.matrix, RationalPoint(px, py, q), args.bits, steps)
        metrics = {
            "epsilon0": series.epsilon0,
            "degenerate": float(series.degenerate),
        }
        t = first_passage(series, args.threshold)
        if t is not None:
            metrics["breakdown_steps"] = float(t)
        report = ExperimentReport(
            scenario="divergence",
            metrics=metrics,
            series={"distance": [float(v) for v in series.distances]},
            config={
                "matrix": list(args.matrix.as_tuple()),
                "bits": args.bits,
                "steps": steps,
                "threshold": args.threshold,
                "p0": [px, py, q],
                "seed": args.seed,
            },
        )
        _report_out(report, args.out, args.out_file, csv_series="distance")
        return
    cfg = ExperimentConfig(
        scenario="divergence",
        seed=args.seed,
        matrix=args.matrix,
        steps=args.steps if args.steps is not None else 3 * args.bits,
        bits=args.bits,
        trials=args.trials,
        threshold=args.threshold,
    )
    _report_out(run_divergence(cfg), args.out, args.out_file, csv_series="mean_distance")


def _cmd_evolve(args: argparse.Namespace) -> None:
    dens = _load_density(args, args.n)
    from .classical import evolve_density

    out = evolve_density(dens, args.matrix, args.steps, args.direction)
    _emit(out.to_text(), args.out_file)


def _dump_state_csv(psi: StateVector) -> str:
    lines = ["index,real,imaginary"]
    lines += [f"{i},{a.real!r},{a.imag!r}" for i, a in enumerate(psi.amplitudes)]
    return "\n".join(lines) + "\n"


def _cmd_quantum(args: argparse.Namespace) -> None:
    dens = _load_density(args, args.n)
    psi0 = prepare_state(dens)
    noise = None
    if args.noise is not None:
        kind, eps = args.noise
        noise = NoiseModel(kind, eps, args.trajectories)

    counts = np.zeros((args.n, args.n), dtype=np.int64)
    trajectories = noise.trajectories if noise else 1
    shares = [args.samples // trajectories] * trajectories
    for j in range(args.samples % trajectories):
        shares[j] += 1
    dump_text = None
    for traj in range(trajectories):
        rng = trajectory_rng(args.seed, traj)
        if noise:
            psi = evolve_noisy(psi0, args.matrix, args.steps, noise, rng, args.gates_per_step)
        else:
            psi = psi0
            for _ in range(args.steps):
                psi = apply_map_step(psi, args.matrix)
        if args.qft:
            psi = qft2d(psi)
        if traj == 0 and args.dump_state:
            dump_text = _dump_state_csv(psi)
        if shares[traj]:
            counts += measure_samples(psi, shares[traj], rng).counts

    if dump_text is not None:
        _emit(dump_text, args.dump_state)
    nz = np.argwhere(counts > 0)
    if args.out == "json":
        payload = {
            "size": args.n,
            "total": int(counts.sum()),
            "counts": [[int(x), int(y), int(counts[x, y])] for x, y in nz],
        }
        _emit(_json_text(payload), args.out_file)
    else:
        lines = ["x,y,count"]
        lines += [f"{x},{y},{counts[x, y]}" for x, y in nz]
        _emit("\n".join(lines) + "\n", args.out_file)


def _cmd_spectrum(args: argparse.Namespace) -> None:
    cfg = ExperimentConfig(
        scenario="spectrum",
        seed=args.seed,
        matrix=args.matrix,
        size=args.n,
        steps=args.steps,
        samples=args.samples,
        density=args.density,
    )
    report = run_spectrum(cfg)
    if args.out in ("csv", "json"):
        # Spectrum data output: recompute the exact spectrum of the evolved state.
        psi = prepare_state(Density.from_spec(args.density, args.n))
        for _ in range(args.steps):
            psi = apply_map_step(psi, args.matrix)
        spec = power_spectrum(qft2d(psi, "inverse").grid() if False else psi.grid())
        if args.out == "json":
            _emit(_json_text({"size": args.n, "power": [[float(v) for v in row] for row in spec.power]}),
                  args.out_file)
        else:
            lines = ["k_x,k_y,power"]
            lines += [
                f"{kx},{ky},{spec.power[kx, ky]!r}"
                for kx in range(args.n)
                for ky in range(args.n)
            ]
            _emit("\n".join(lines) + "\n", args.out_file)
        if args.out_file:
            _emit(_json_text(report.to_dict()), args.out_file)
        for key in sorted(report.timings):
            print(f"timing {key}={report.timings[key]:.6f}", file=sys.stderr)
        return
    _report_out(report, args.out, args.out_file)


def _cmd_compare(args: argparse.Namespace) -> None:
    noise = None
    if args.noise is not None:
        kind, eps = args.noise
        noise = NoiseModel(kind, eps, args.trajectories)
    cfg = ExperimentConfig(
        scenario="compare",
        seed=args.seed,
        matrix=args.matrix,
        size=args.n,
        steps=args.steps,
        bits=args.bits,
        noise=noise,
        trials=args.trials,
        density=args.density,
        threshold=args.threshold,
        gates_per_step=args.gates_per_step,
    )
    _report_out(run_compare(cfg), args.out, args.out_file)


def _cmd_reversibility(args: argparse.Namespace) -> None:
    cfg = ExperimentConfig(
        scenario="reversibility",
        seed=args.seed,
        matrix=args.matrix,
        size=args.n,
        steps=args.steps,
        block=args.block,
    )
    _report_out(run_reversibility(cfg), args.out, args.out_file)


_COMMANDS = {
    "period": _cmd_period,
    "divergence": _cmd_divergence,
    "evolve": _cmd_evolve,
    "quantum": _cmd_quantum,
    "spectrum": _cmd_spectrum,
    "compare": _cmd_compare,
    "reversibility": _cmd_reversibility,
}


def run(invocation: CliInvocation) -> int:
    """Dispatch a validated invocation; returns the process exit status."""
    try:
        _COMMANDS[invocation.subcommand](invocation.args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"catlab: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv: list[str] | None = None) -> int:
    return run(parse_args(argv))


if __name__ == "__main__":
    sys.exit(main())
