"""Command line entry point: ``vnspectral <subcommand> [--config ...] [--out DIR]``.

Exit codes: 0 when every verdict passes, 2 when one fails, 1 for usage or
configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .config import DEFAULT_PRESET, PRESETS, ConfigError, load_config
from .experiments import CURVE_COLUMNS, INDEX_COLUMNS, RUNNERS, ExperimentError, ExperimentResult

EXIT_PASS, EXIT_USAGE, EXIT_FAIL = 0, 1, 2
OUT_ENV = "VNSPECTRAL_OUT"
SUBCOMMANDS = ("spectrum", "index", "stability", "counting", "cover", "fredholm", "diagnostic", "selftest")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; here 2 means FAIL, so raise instead."""

    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vnspectral", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", default=None,
                       help=f"INI file or preset name (default: {DEFAULT_PRESET.get(name, 'none')})")
        p.add_argument("--out", default=None, help=f"output directory (default: ${OUT_ENV} or ./vnspectral_out)")
        p.add_argument("--seed", type=int, default=None, help="override experiment.seed")
        p.add_argument("--grid", action="append", default=[], metavar="SECTION.KEY=VALUE",
                       help="override one config value; repeatable")
        p.add_argument("--no-figures", action="store_true", help="skip the PNG figures")
        if name == "selftest":
            p.add_argument("--quick", action="store_true", help="fewer random trials")
    sub.add_parser("presets", help="list the built-in presets")
    return parser


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    if v is None:
        return ""
    return str(v)


def write_outputs(result: ExperimentResult, out: Path, config: dict | None, figures: bool = True) -> None:
    out.mkdir(parents=True, exist_ok=True)
    payload = result.to_dict()
    payload["config"] = config
    (out / "results.json").write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
    (out / "timings.json").write_text(json.dumps(_jsonable(result.timings), indent=2, sort_keys=True) + "\n")
    with open(out / "curves.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_COLUMNS)
        for row in result.curves:
            w.writerow([_fmt(v) for v in row])
    with open(out / "index.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(INDEX_COLUMNS)
        for row in result.index_rows:
            w.writerow([_fmt(row.get(c, "")) for c in INDEX_COLUMNS])
    if figures:
        from .plotting import render

        render(result, out)


def _run(args) -> tuple[ExperimentResult, dict | None]:
    if args.command == "selftest":
        from .selftest import run_selftest

        if args.config or args.grid:
            raise ConfigError("config", "selftest takes no configuration")
        seed = 0 if args.seed is None else args.seed
        if seed < 0:
            raise ConfigError("experiment.seed", "seed must be nonnegative")
        return run_selftest(seed, quick=args.quick), {"seed": seed, "quick": args.quick}
    cfg = load_config(args.config or DEFAULT_PRESET[args.command], args.grid, args.seed)
    try:
        result = RUNNERS[args.command](cfg)
    except ExperimentError as exc:
        result = ExperimentResult(args.command)
        result.check(exc.invariant, False, str(exc))
    return result, cfg.to_dict()


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_PASS if exc.code in (0, None) else EXIT_USAGE
    if args.command == "presets":
        for name in sorted(PRESETS):
            print(name)
        return EXIT_PASS
    out = Path(args.out or os.environ.get(OUT_ENV) or "vnspectral_out")
    try:
        result, config = _run(args)
    except ConfigError as exc:
        print(f"vnspectral: {exc}", file=sys.stderr)
        return EXIT_USAGE
    write_outputs(result, out, config, figures=not args.no_figures)
    for v in result.verdicts:
        print(f"[{'PASS' if v.passed else 'FAIL'}] {v.invariant}" + (f": {v.detail}" if v.detail else ""))
    verdict = "PASS" if result.passed else "FAIL"
    print(f"{args.command}: {verdict} (outputs in {out})")
    return EXIT_PASS if result.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
