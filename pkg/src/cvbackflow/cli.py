"""Command-line entry point: ``cvbackflow {run,reproduce,witness,check}``.

Exit codes: 0 success, 1 invalid configuration or arguments, 2 numerical
failure, 3 file-system failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from . import experiments as ex
from .channels import GaussianChannel, apply, embed_local, is_cptp, is_eb, is_gib
from .errors import CVError, ConfigError

log = logging.getLogger("cvbackflow")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3
ORACLE_TOL = 1e-9


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", metavar="DIR", help="output directory (overrides output.dir)")
    p.add_argument("--grid", metavar="N", type=int, help="number of time samples")
    p.add_argument("--threads", metavar="K", type=int, default=1, help="worker threads for sweep points")
    p.add_argument("--tol-override", metavar="KEY=VAL", action="append", default=[],
                   help="override a config value; bare keys refer to tolerances.*")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cvbackflow",
                                     description="Correlation backflows under Gaussian single-mode evolutions.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment described by a TOML config")
    p.add_argument("config")
    _common(p)

    p = sub.add_parser("reproduce", help="run one of the shipped figure presets")
    p.add_argument("figure", choices=ex.PRESETS)
    _common(p)

    p = sub.add_parser("witness", help="evaluate both witnesses for one state and one lossy channel")
    p.add_argument("--state", choices=ex.STATE_KINDS, default="two_mode")
    p.add_argument("--r", type=float, default=2.0)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--eta", type=float, default=0.0)

    sub.add_parser("check", help="closed-form vs numeric symplectic eigenvalue check")
    return parser


def _prepare(data: dict, args) -> ex.ExperimentConfig:
    data = ex.with_overrides(data, args.tol_override)
    if args.grid is not None:
        data["grid.samples"] = args.grid
    if args.out is not None:
        data["output.dir"] = args.out
    return ex.config_from_mapping(data)


def _run_experiment(cfg: ex.ExperimentConfig, threads: int) -> None:
    bundle = ex.run(cfg, threads=max(1, threads))
    paths = ex.emit_csv(bundle, cfg.output_dir)
    for line in bundle.summary:
        print(line)
    log.info("wrote %d trace file(s) to %s", len(paths), cfg.output_dir)


def _witness(args) -> None:
    make, part = ex._STATES[args.state]
    s0 = make(args.r)
    ch = GaussianChannel.isotropic(args.tau, args.eta)
    cov = apply(embed_local(ch, s0.modes), s0)
    print(f"channel: cptp={is_cptp(ch)} gib={is_gib(ch)} eb={is_eb(ch)}")
    for w in ex.WITNESSES:
        print(f"{w}={ex.format_value(ex.witness_value(w, cov, part))}")


def _check() -> bool:
    worst = ex.oracle_equivalence()
    ok = True
    for k, v in worst.items():
        passed = v <= ORACLE_TOL
        ok &= passed
        print(f"{k}: max |closed form - numeric| = {v:.3e} ({'ok' if passed else 'FAIL'})")
    return ok


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            _run_experiment(_prepare(ex.load_config_file(args.config), args), args.threads)
        elif args.command == "reproduce":
            _run_experiment(_prepare(ex.load_preset(args.figure), args), args.threads)
        elif args.command == "witness":
            _witness(args)
        elif args.command == "check":
            return EXIT_OK if _check() else EXIT_NUMERIC
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CVError, ArithmeticError) as exc:
        # domain errors from the witness subcommand are input problems, not numerical ones
        if args.command == "witness" and isinstance(exc, ValueError):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
