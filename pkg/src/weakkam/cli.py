"""Command-line entry point: ``weakkam <subcommand> [--config PATH] [--out DIR] ...``.

Exit status: 0 success, 1 verification failure, 2 usage or config error,
3 numeric error (divergence, negative cycle, disconnected kernel).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import io
from .errors import ConfigError, NumericError, WeakKAMError
from .model import SCENARIO_NAMES
from .pipeline import RunConfig, config_from_dict, load_config, run_pipeline, summary
from .plotdata import PLOT_KINDS, emit_plot_data
from .verify import verify_result

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

# subcommand -> last pipeline stage it needs
SUBCOMMANDS = {
    "kernel": "kernel",
    "critical-value": "critical-value",
    "barriers": "barriers",
    "classes": "classes",
    "evolve": "evolve",
    "represent": "represent",
    "verify": "represent",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="weakkam", description="Discrete weak-KAM toolkit on the circle.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in list(SUBCOMMANDS) + ["plot-data"]:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="JSON run configuration")
        p.add_argument("--out", type=Path, help="output directory (overrides config.outputs)")
        p.add_argument("--seed", type=int, help="seed for random initial data (overrides config.seeds)")
        p.add_argument("--scenario", choices=SCENARIO_NAMES, help="named scenario (overrides config)")
        if name == "plot-data":
            p.add_argument("--kind", required=True, choices=sorted(PLOT_KINDS))
            p.add_argument("--bundle", type=Path, help="bundle directory (default: --out)")
    return parser


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else config_from_dict({})
    if args.scenario:
        cfg.scenario = args.scenario
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be >= 0")
        cfg.seeds = args.seed
    if args.out:
        cfg.outputs = str(args.out)
    return cfg


def _run(args) -> int:
    cfg = _config(args)
    out = Path(cfg.outputs)
    if args.command == "plot-data":
        target = emit_plot_data(args.bundle or out, args.kind)
        print(target)
        return EXIT_OK
    res = run_pipeline(cfg, out, upto=SUBCOMMANDS[args.command])
    if args.command == "verify":
        report = verify_result(res, seed=cfg.seeds)
        io.write_json(out / "verification.json", report.to_dict())
        for e in report.entries:
            print(f"{e.status.upper():7s} {e.name}: measured={e.measured} tol={e.tolerance} {e.reason}".rstrip())
        return EXIT_OK if report.ok else EXIT_VERIFY
    sys.stdout.write(io.dumps(summary(res)))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (WeakKAMError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
