"""Command line interface: ``margulis invariants|entropy|pressure|verify``.

Exit codes: 0 success, 2 config error, 3 non-hyperbolic input, 4 not enough
data for the requested window, 10-13 a failing verify suite (identities,
signs, variational, pressure), 1 any other library error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import thermo, verify
from .config import SCHEMA_VERSION, default_threads, load, tolerances
from .errors import ConfigError, InsufficientData, MargulisError, NotHyperbolic

LOG = logging.getLogger("margulis")

EXIT_CONFIG = 2
EXIT_NOT_HYPERBOLIC = 3
EXIT_INSUFFICIENT = 4


def _parse_window(text: str):
    try:
        lo, hi = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("window must be 'lo,hi'") from None
    return lo, hi


def _parse_tolerance(text: str):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError("tolerance override must be key=value")
    return key.strip(), value.strip()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, type=Path, help="representation config (JSON)")
    common.add_argument("--threads", type=int, default=None, help="worker processes for enumeration")
    common.add_argument(
        "--tolerance",
        action="append",
        type=_parse_tolerance,
        default=[],
        metavar="KEY=VALUE",
        help="override one tolerance, e.g. pressure.lambda_min=1e-3",
    )
    common.add_argument("--tolerance-file", type=Path, default=None)
    common.add_argument("--output", type=Path, default=None, help="write here instead of stdout")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="margulis", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    inv = sub.add_parser("invariants", parents=[common], help="Margulis invariant spectrum")
    inv.add_argument("--max-word-length", type=int, required=True)
    inv.add_argument("--format", choices=("csv", "json"), default="csv")
    inv.add_argument("--deterministic", action="store_true", help="ordered single-process enumeration")

    ent = sub.add_parser("entropy", parents=[common], help="orbit-counting entropy")
    ent.add_argument("--max-word-length", type=int, required=True)
    ent.add_argument("--window", type=_parse_window, default=None, metavar="LO,HI")
    ent.add_argument("--weighting", choices=("count", "chebyshev"), default="count")

    pr = sub.add_parser("pressure", parents=[common], help="pressure-form Gram matrix")
    pr.add_argument("--basis-from-config", action="store_true", required=True)
    pr.add_argument("--step", type=float, default=1e-3)
    pr.add_argument("--max-word-length", type=int, default=verify.DEFAULT_MAX_LEN)

    ve = sub.add_parser("verify", parents=[common], help="run verification campaigns")
    ve.add_argument("--suite", choices=verify.SUITES + ("all",), default="all")
    ve.add_argument("--seed", type=int, default=0)
    ve.add_argument("--deterministic", action="store_true", default=True)
    return p


def _emit(text: str, output: Path | None) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        output.write_text(text)


def _json(obj) -> str:
    return json.dumps(verify._clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _run(args) -> int:
    tol = tolerances(dict(args.tolerance), args.tolerance_file)
    cfg = load(args.config)
    if cfg.certified is False:
        LOG.warning("generators are not certified Schottky by the ping-pong test")
    if args.command == "invariants":
        workers = 1 if args.deterministic else (args.threads or default_threads())
        table = thermo.build_spectrum(cfg.deformed(), args.max_word_length, workers=workers)
        if args.format == "csv":
            _emit(table.to_csv(), args.output)
        else:
            _emit(
                _json(
                    {
                        "schema_version": SCHEMA_VERSION,
                        "max_len": table.max_len,
                        "complete_below": table.complete_below,
                        "sign": table.sign,
                        "certified": cfg.certified,
                        "entries": table.to_records(),
                    }
                ),
                args.output,
            )
        return 0
    if args.command == "entropy":
        table = thermo.build_spectrum(cfg.deformed(), args.max_word_length, workers=args.threads or 1)
        est = thermo.entropy(table, args.window, weighting=args.weighting)
        _emit(
            _json({"schema_version": SCHEMA_VERSION, "max_len": table.max_len,
                   "complete_below": table.complete_below, "weighting": args.weighting, **est.to_dict()}),
            args.output,
        )
        return 0
    if args.command == "pressure":
        rho, basis, names = verify.pressure_basis(cfg)
        report = verify.run_pressure_suite(rho, basis, args.max_word_length, args.step, tol, names)
        _emit(_json({"schema_version": SCHEMA_VERSION, **report}), args.output)
        return 0
    if args.command == "verify":
        suites = verify.SUITES if args.suite == "all" else (args.suite,)
        card = verify.scorecard(cfg, suites, args.seed, tol)
        _emit(verify.dumps(card), args.output)
        return verify.exit_code(card)
    raise AssertionError(args.command)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NotHyperbolic as exc:
        print(f"not hyperbolic: {exc}", file=sys.stderr)
        return EXIT_NOT_HYPERBOLIC
    except InsufficientData as exc:
        print(f"insufficient data: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT
    except MargulisError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
