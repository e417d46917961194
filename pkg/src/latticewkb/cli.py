"""Command-line front end.

Usage::

    latticewkb <command> --config run.json [--out table.csv] [--tol 1e-10] [--range 1:200]

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.
On failure one line ``latticewkb: error kind=<kind> code=<code>: <message>``
is written to stderr. ``LATTICEWKB_LOG`` sets the log level (default WARNING).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import COMMANDS, parse_config
from .errors import ConfigError, LatticeError, NumericalError
from .output import emit_csv
from .pipelines import run

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _fail("usage", EXIT_USAGE, message)


def _fail(kind, code, message):
    text = " ".join(str(message).split())
    sys.stderr.write(f"latticewkb: error kind={kind} code={code}: {text}\n")
    raise SystemExit(code)


def _parse_range(text):
    try:
        a, b = text.split(":")
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b with integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="latticewkb",
                description="Solve, compare and classify discrete Schrödinger equations.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", help="output CSV path (default: config 'output' or stdout)")
    p.add_argument("--tol", type=float, help="override the config tolerance")
    p.add_argument("--range", type=_parse_range, dest="range_", metavar="A:B",
                   help="override the config index range")
    return p


def _setup_logging():
    level = os.environ.get("LATTICEWKB_LOG", "WARNING").upper()
    if not isinstance(logging.getLevelName(level), int):
        level = "WARNING"
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="latticewkb: %(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        with open(args.config, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        _fail("config", EXIT_USAGE, f"cannot read config {args.config}: {exc.strerror}")
    try:
        cfg = parse_config(raw)
        if cfg.command != args.command:
            raise ConfigError(f"config is for {cfg.command!r}, not {args.command!r}", "command")
        cfg = cfg.with_overrides(tol=args.tol, range_=args.range_, output=args.out)
        table = run(cfg)
    except ConfigError as exc:
        _fail("config", EXIT_USAGE, exc)
    except NumericalError as exc:
        _fail(type(exc).__name__, EXIT_NUMERIC, f"{args.command}: {exc}")
    except LatticeError as exc:
        _fail(type(exc).__name__, EXIT_USAGE, f"{args.command}: {exc}")
    try:
        emit_csv(table, cfg.output)
    except OSError as exc:
        _fail("io", EXIT_USAGE, f"cannot write {cfg.output}: {exc.strerror}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
