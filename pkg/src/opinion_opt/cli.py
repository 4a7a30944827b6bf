"""Command-line entry point (``opinion-opt`` / ``python -m opinion_opt``)."""

from __future__ import annotations

import argparse
import sys

from .budgeted import ExhaustiveTooLarge
from .graph import GraphParseError, GraphValidationError, read_edge_list
from .harness import (
    ConfigError,
    ExperimentConfig,
    ProfileParseError,
    format_csv,
    gen_opinions,
    gen_resistance,
    run_experiment,
    write_profile,
)
from .unbudgeted import BoxBounds

EXIT_CONFIG = 2
EXIT_PARSE = 3
EXIT_REFUSED = 4


def _int_list(text: str) -> list[int]:
    """Parse ``1,2,5`` or ``1-10`` or a mix (``1-3,10``)."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _common(p: argparse.ArgumentParser, needs_graph: bool = True):
    p.add_argument("--graph", required=needs_graph, help="edge-list file")
    p.add_argument("--opinions", default="gen", help="profile TSV path, or 'gen' (default)")
    p.add_argument("--resistance", default=None,
                   help="profile TSV path or 'gen'; default uses the opinion file's alpha column if present")
    p.add_argument("--dist", choices=["uniform", "powerlaw"], default="uniform")
    p.add_argument("--slope", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--out", default=None, help="CSV output path (stdout if omitted)")
    p.add_argument("--normalize-signed", action="store_true",
                   help="map opinions from [-1, 1] to [0, 1] via (s + 1) / 2")
    p.add_argument("--lower", type=float, default=0.001)
    p.add_argument("--upper", type=float, default=1.0)
    p.add_argument("--timing", action="store_true", help="fill the wall_time_ms column")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="opinion-opt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("equilibrium", help="total equilibrium opinion")
    _common(p)

    p = sub.add_parser("optimize-unbudgeted", help="set every resistance to minimize/maximize")
    _common(p)
    p.add_argument("--direction", choices=["min", "max"], required=True)

    p = sub.add_parser("optimize-budgeted", help="pick k targets (greedy, baselines, exhaustive)")
    _common(p)
    p.add_argument("--k-list", type=_int_list, required=True, help="e.g. 1,2,5 or 1-100")
    p.add_argument("--method", action="append", default=None,
                   help="greedy, baseline1, baseline2, exhaustive or none; repeat or comma-separate")
    p.add_argument("--direction", choices=["min", "max"], default="max")
    p.add_argument("--cap-baseline-at-upper", action="store_true",
                   help="baselines set targets to --upper instead of 1")

    p = sub.add_parser("gen-opinions", help="write synthetic innate opinions")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--graph", default=None, help="take n from this edge list")
    p.add_argument("--dist", choices=["uniform", "powerlaw"], default="uniform")
    p.add_argument("--slope", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)

    p = sub.add_parser("gen-resistance", help="write resistances drawn from U[0.001, 1]")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--graph", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    return parser


def _node_count(args) -> int:
    if args.n is not None:
        return args.n
    if args.graph is not None:
        return read_edge_list(args.graph).n
    raise ConfigError("pass --n or --graph")


def _emit_profile(args, values):
    if args.out:
        write_profile(args.out, values)
    else:
        write_profile(sys.stdout, values)


def _config(args) -> ExperimentConfig:
    mode = {"equilibrium": "equilibrium", "optimize-budgeted": "budgeted"}.get(args.command)
    if args.command == "optimize-unbudgeted":
        mode = f"unbudgeted-{args.direction}"
    try:
        bounds = BoxBounds(args.lower, args.upper)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cfg = ExperimentConfig(
        graph_path=args.graph, mode=mode, opinions=args.opinions, resistance=args.resistance,
        dist=args.dist, slope=args.slope, bounds=bounds, trials=args.trials, seed=args.seed,
        output_path=args.out, normalize_signed=args.normalize_signed, timing=args.timing,
    )
    if mode == "budgeted":
        methods = []
        for m in args.method or ["greedy"]:
            methods.extend(x.strip() for x in m.split(",") if x.strip())
        cfg.methods = methods
        cfg.budget_list = args.k_list
        cfg.direction = args.direction
        if args.cap_baseline_at_upper:
            cfg.baseline_alpha = bounds.upper
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gen-opinions":
            _emit_profile(args, gen_opinions(_node_count(args), args.dist, args.seed, args.slope))
            return 0
        if args.command == "gen-resistance":
            _emit_profile(args, gen_resistance(_node_count(args), args.seed))
            return 0
        cfg = _config(args)
        header, rows = run_experiment(cfg)
        if not cfg.output_path:
            sys.stdout.write(format_csv(header, rows))
        return 0
    except (GraphParseError, GraphValidationError, ProfileParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ExhaustiveTooLarge as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except (ConfigError, ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
