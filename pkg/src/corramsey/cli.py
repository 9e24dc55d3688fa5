"""Command-line interface.

Exit codes: 0 on success, 1 for invalid parameters or usage, 2 for I/O
failures or, under ``--strict``, when a result hits an infinite sentinel.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

from .config import COMMANDS, FORMATS, RunConfig, read_config_file
from .model import ValidationError
from .qdyne import write_trace
from .runner import execute, trace_table
from .tables import Table, render

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 1, 2
OUTPUT_ENV = "CORRAMSEY_OUTPUT_DIR"

_HELP = {
    "phase": "accumulated phase of one Ramsey or DD sequence",
    "fisher": "Fisher information of a measurement record",
    "gain": "log information gain of correlated Ramsey over a matched DD sequence",
    "sweep": "evaluate a quantity over one or two parameter axes",
    "figure": "regenerate the data behind a published figure",
    "simulate": "simulate a single-shot time trace",
    "estimate": "maximum-likelihood estimation from a trace or a Monte Carlo campaign",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="corramsey", description="Correlated Ramsey versus dynamical decoupling.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name, help=_HELP[name], description=_HELP[name])
        if name == "figure":
            p.add_argument("preset", help="fig2a, fig2b, fig3a, fig3b or fig3c")
        p.add_argument("assignments", nargs="*", metavar="key=value")
        p.add_argument("--config", help="flat key = value file or a previous JSON result")
        p.add_argument("--out", help="output file (default: stdout, or $%s)" % OUTPUT_ENV)
        p.add_argument("--format", choices=FORMATS)
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--strict", action="store_true", default=None,
                       help="exit 2 when any result is an infinite sentinel")
    return parser


def _assignments(items) -> dict:
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"expected key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def make_config(args) -> RunConfig:
    """Merge config file and command-line values; the command line wins."""
    params, settings = {}, {}
    if args.config:
        params, settings = read_config_file(args.config)
        if settings.get("command", args.command) != args.command:
            raise ValidationError("command", f"config file is for {settings['command']!r}, not {args.command!r}")
    params.update(_assignments(args.assignments))
    if args.command == "figure":
        params["preset"] = args.preset
    fmt = args.format or settings.get("format", "csv")
    seed = args.seed if args.seed is not None else settings.get("seed")
    strict = args.strict if args.strict is not None else bool(settings.get("strict", False))
    return RunConfig(args.command, params, fmt, seed, strict, args.out, args.threads)


def _output_path(cfg: RunConfig):
    if cfg.out:
        return cfg.out
    directory = os.environ.get(OUTPUT_ENV)
    if directory:
        ext = "trace.csv" if cfg.command == "simulate" else cfg.format
        return os.path.join(directory, f"{cfg.command}.{ext}")
    return None


def _has_sentinel(table: Table) -> bool:
    for row in table.rows:
        for v in row:
            if isinstance(v, float) and math.isinf(v):
                return True
    return False


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = make_config(args)
        result = execute(cfg)
    except UsageError as exc:
        print(f"corramsey: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        print(f"corramsey: invalid parameter {exc.field}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        print(f"corramsey: {exc}", file=sys.stderr)
        return EXIT_IO

    path = _output_path(cfg)
    try:
        if cfg.command == "simulate" and path is not None and cfg.format == "csv":
            write_trace(path, result)
        else:
            table = trace_table(result) if cfg.command == "simulate" else result
            text = render(table, cfg.to_dict(), cfg.format)
            if path is None:
                sys.stdout.write(text)
            else:
                with open(path, "w", encoding="utf-8") as fh:
                    fh.write(text)
    except OSError as exc:
        print(f"corramsey: {exc}", file=sys.stderr)
        return EXIT_IO

    if cfg.strict and cfg.command != "simulate" and _has_sentinel(result):
        print("corramsey: result contains an infinite sentinel", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
