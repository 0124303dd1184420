"""Command-line front end.

Subcommands drive the library modules and emit CSV/JSON files, with a
manifest JSON written beside every output.  Progress goes to stderr.

Exit codes: 0 success, 2 usage error, 3 no qualifying peak, 4 resource limit.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .engine import (
    EdgeMode,
    ResourceLimitError,
    WalkConfig,
    memory_requirement,
    run,
)
from .experiments import (
    NoPeakError,
    density_experiment,
    resolve_na,
    scaling_experiment,
    step_budget,
    sweep_self_loop,
)
from .fitting import FitError, fit_scaling, parse_model
from .reporting import (
    RunManifest,
    TRACE_HEADER,
    read_records_csv,
    write_manifest,
    write_records_csv,
    write_fit_json,
    write_sweep_csv,
)
from .topology import GridVertex, TopologyParams, TopologyError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NO_PEAK = 3
EXIT_RESOURCE = 4

logger = logging.getLogger(__name__)


def _side(text: str) -> int:
    try:
        value = int(text)
        TopologyParams.from_side(value)
    except (ValueError, TopologyError):
        raise argparse.ArgumentTypeError(f"side must be a power of two >= 4, got {text!r}")
    return value


def _side_list(text: str) -> list[int]:
    sides = [_side(tok) for tok in text.split(",") if tok.strip()]
    if not sides:
        raise argparse.ArgumentTypeError("side list must not be empty")
    return sides


def _target_list(text: str) -> tuple[GridVertex, ...]:
    pairs = [tok for tok in text.split(";") if tok.strip()]
    if not pairs:
        raise argparse.ArgumentTypeError("target list must not be empty")
    targets = []
    for pair in pairs:
        try:
            x, y = pair.split(",")
            targets.append(GridVertex(int(x), int(y)))
        except ValueError:
            raise argparse.ArgumentTypeError(
                f"malformed target {pair!r}; expected 'x,y;x,y;...'"
            )
    return tuple(targets)


def _int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed integer list {text!r}")


def _steps(text: str) -> str | int:
    if text == "auto":
        return "auto"
    try:
        value = int(text)
        if value < 1:
            raise ValueError
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"steps must be 'auto' or a positive integer, got {text!r}"
        )
    return value


def _default_workers() -> int:
    return int(os.environ.get("HN4WALK_WORKERS", "1"))


def _manifest_params(args: argparse.Namespace) -> dict:
    skip = {"func"}
    params = {}
    for key, value in sorted(vars(args).items()):
        if key in skip:
            continue
        if isinstance(value, tuple):
            value = [list(v) for v in value]
        params[key] = value
    return params


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hn4walk",
        description="Lackadaisical quantum-walk search on a periodic grid "
        "with hierarchical long-range edges",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="evolve one walk and write its probability trace")
    sim.add_argument("--side", type=_side, required=True)
    sim.add_argument("--targets", type=_target_list, required=True)
    sim.add_argument("--na", type=float, required=True, help="total self-loop weight N*a")
    sim.add_argument("--mode", choices=[m.value for m in EdgeMode], default="hn4")
    sim.add_argument("--steps", type=_steps, default="auto")
    sim.add_argument("--out", required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.set_defaults(func=_cmd_simulate)

    swp = sub.add_parser("sweep", help="scan the self-loop weight and mark the optimum")
    swp.add_argument("--side", type=_side, required=True)
    swp.add_argument("--targets", type=_target_list, required=True)
    swp.add_argument("--na-min", type=float, required=True)
    swp.add_argument("--na-max", type=float, required=True)
    swp.add_argument("--na-step", type=float, required=True)
    swp.add_argument("--mode", choices=[m.value for m in EdgeMode], default="hn4")
    swp.add_argument("--steps", type=_steps, default="auto")
    swp.add_argument("--out", required=True)
    swp.add_argument("--seed", type=int, default=0)
    swp.add_argument("--workers", type=int, default=None)
    swp.set_defaults(func=_cmd_sweep)

    scl = sub.add_parser("scale", help="first-peak records over lattice sizes")
    scl.add_argument("--sides", type=_side_list, required=True)
    group = scl.add_mutually_exclusive_group(required=True)
    group.add_argument("--m", type=int)
    group.add_argument("--m-list", type=_int_list)
    na_group = scl.add_mutually_exclusive_group(required=True)
    na_group.add_argument("--na", type=float)
    na_group.add_argument("--na-rule", help="heuristic total weight, e.g. 8.5M")
    scl.add_argument("--trials", type=int, default=10)
    scl.add_argument("--mode", choices=[m.value for m in EdgeMode], default="hn4")
    scl.add_argument("--policy", choices=["line", "intersection"], default="line")
    scl.add_argument("--out", required=True)
    scl.add_argument("--seed", type=int, default=0)
    scl.add_argument("--workers", type=int, default=None)
    scl.set_defaults(func=_cmd_scale)

    den = sub.add_parser("density", help="runs with a fixed fraction of marked vertices")
    den.add_argument("--sides", type=_side_list, required=True)
    den.add_argument("--fraction", type=float, required=True)
    den.add_argument("--trials", type=int, default=10)
    den.add_argument("--policy", choices=["line", "intersection"], default="line")
    den.add_argument("--out", required=True)
    den.add_argument("--seed", type=int, default=0)
    den.add_argument("--workers", type=int, default=None)
    den.set_defaults(func=_cmd_density)

    fit = sub.add_parser("fit", help="fit a runtime model to scaling records")
    fit.add_argument("--records", required=True)
    fit.add_argument("--model", required=True, help="sqrt or sqrtlog")
    fit.add_argument("--out", required=True)
    fit.set_defaults(func=_cmd_fit)

    return parser


def _cmd_simulate(args: argparse.Namespace) -> int:
    topology = TopologyParams.from_side(args.side)
    config = WalkConfig.with_na(topology, args.na, args.targets, EdgeMode(args.mode))
    t_max = (
        step_budget(topology.n_vertices, max(config.target_count, 1), config.edge_mode)
        if args.steps == "auto"
        else args.steps
    )
    logger.info(
        "state memory: %d bytes (two buffers)",
        memory_requirement(topology, config.edge_mode),
    )
    manifest = RunManifest.begin("simulate", _manifest_params(args), seed=args.seed)
    manifest.extra["resolved_steps"] = t_max
    with open(args.out, "w", newline="") as handle:
        handle.write(TRACE_HEADER + "\n")
        run(config, t_max, sink=handle)
    write_manifest(args.out, manifest.finish())
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace) -> int:
    workers = args.workers if args.workers is not None else _default_workers()
    manifest = RunManifest.begin("sweep", _manifest_params(args), seed=args.seed, workers=workers)
    sweep = sweep_self_loop(
        args.side,
        args.targets,
        args.na_min,
        args.na_max,
        args.na_step,
        edge_mode=EdgeMode(args.mode),
        t_max=None if args.steps == "auto" else args.steps,
        workers=workers,
    )
    manifest.extra["optimal_na"] = sweep.optimal.na
    write_sweep_csv(args.out, sweep)
    write_manifest(args.out, manifest.finish())
    logger.info("optimal na=%g (peak_probability=%.6f)", sweep.optimal.na,
                sweep.optimal.peak_probability)
    return EXIT_OK


def _cmd_scale(args: argparse.Namespace) -> int:
    workers = args.workers if args.workers is not None else _default_workers()
    m_values = args.m_list if args.m_list is not None else [args.m]
    if any(m < 1 for m in m_values):
        raise ValueError("target counts must be >= 1")
    na_rule = args.na if args.na is not None else args.na_rule
    resolve_na(na_rule, 1)  # validate the rule shape before any run
    manifest = RunManifest.begin("scale", _manifest_params(args), seed=args.seed, workers=workers)
    records = []
    for m in m_values:
        records.extend(
            scaling_experiment(
                args.sides,
                m,
                na_rule,
                args.trials,
                args.seed,
                edge_mode=EdgeMode(args.mode),
                policy=args.policy,
                workers=workers,
            )
        )
    write_records_csv(args.out, records)
    write_manifest(args.out, manifest.finish())
    return EXIT_OK


def _cmd_density(args: argparse.Namespace) -> int:
    workers = args.workers if args.workers is not None else _default_workers()
    manifest = RunManifest.begin(
        "density", _manifest_params(args), seed=args.seed, workers=workers
    )
    records = density_experiment(
        args.sides,
        args.fraction,
        args.trials,
        args.seed,
        policy=args.policy,
        workers=workers,
    )
    for side in args.sides:
        cell = [r.peak_probability for r in records if r.side == side]
        logger.info(
            "density side=%d: mean peak probability %.4f over %d trials",
            side, sum(cell) / len(cell), len(cell),
        )
    mean = sum(r.peak_probability for r in records) / len(records)
    manifest.extra["mean_peak_probability"] = mean
    write_records_csv(args.out, records)
    write_manifest(args.out, manifest.finish())
    return EXIT_OK


def _cmd_fit(args: argparse.Namespace) -> int:
    model = parse_model(args.model)
    records = read_records_csv(args.records)
    result = fit_scaling(records, model)
    manifest = RunManifest.begin("fit", _manifest_params(args))
    manifest.extra["log_base"] = "natural"
    write_fit_json(args.out, result, manifest.finish())
    logger.info(
        "fit %s: coefficient=%.6g rms_relative_residual=%.6g points=%d",
        result.model.value, result.coefficient, result.rms_relative_residual, result.points,
    )
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except NoPeakError as exc:
        print(f"hn4walk: {exc}", file=sys.stderr)
        return EXIT_NO_PEAK
    except ResourceLimitError as exc:
        print(f"hn4walk: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (FitError, TopologyError, ValueError) as exc:
        print(f"hn4walk: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
