"""Command-line entry point: ``tailwave <command> --config cfg.json --out dir``.

Exit codes: 0 ok, 1 verification checks failed, 2 configuration error,
3 numerical or quadrature failure, 4 blow-up.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

from . import pipeline
from .config import load_config
from .errors import BlowupOrInstability, ConfigError, TailwaveError

EXIT_OK = 0
EXIT_CHECKS = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_BLOWUP = 4

log = logging.getLogger("tailwave")


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tailwave", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "predict": "tail coefficients from the data moments",
        "evolve": "run the solver and write observer CSVs",
        "analyze": "fit exponents, tails and attractor to a run",
        "verify": "predict + evolve + analyze and compare",
        "sweep": "evolve over the epsilon list and resolutions",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", required=True, type=Path)
        p.add_argument("--resolution-factor", type=float, default=1.0,
                       help="multiply the grid size N and the step count by this factor")
        if name == "evolve":
            p.add_argument("--convergence", action="store_true",
                           help="also run at 2x and 4x resolution and report Richardson orders")
        if name == "analyze":
            p.add_argument("--run", type=Path, default=None,
                           help="existing run directory (default: evolve first)")
    return parser


def _cmd_predict(cfg, args):
    pipeline.write_json(pipeline.predict(cfg), args.out / "prediction.json")
    return EXIT_OK


def _cmd_evolve(cfg, args):
    k = args.resolution_factor
    if not args.convergence:
        pipeline.evolve_config(cfg, resolution_factor=k).write(args.out)
        return EXIT_OK
    factors = [k, 2 * k, 4 * k]
    runs = []
    for fac in factors:
        run = pipeline.evolve_config(cfg, resolution_factor=fac)
        run.write(args.out / f"res{fac:g}")
        runs.append(run)
    pipeline.write_json(pipeline.convergence_report(runs, factors), args.out / "convergence.json")
    return EXIT_OK


def _cmd_analyze(cfg, args):
    from .solver import EvolutionRun

    if args.run is not None:
        run = EvolutionRun.load(args.run)
    else:
        run = pipeline.evolve_config(cfg, resolution_factor=args.resolution_factor)
        run.write(args.out / "run")
    pipeline.write_json(pipeline.analyze_run(run, cfg), args.out / "analysis.json")
    return EXIT_OK


def _cmd_verify(cfg, args):
    try:
        report, passed = pipeline.verify(cfg, args.out, args.resolution_factor)
    except BlowupOrInstability as exc:
        report = {"status": "blowup", "message": str(exc), "time": exc.time, "max_abs": exc.max_abs}
        pipeline.write_json(report, args.out / "verify.json")
        (args.out / "verify.txt").write_text(f"blow-up: {exc}\n")
        raise
    sys.stdout.write(pipeline.format_table(report["checks"]))
    return EXIT_OK if passed else EXIT_CHECKS


def _cmd_sweep(cfg, args):
    pipeline.sweep(cfg, args.out, args.resolution_factor)
    return EXIT_OK


COMMANDS = {
    "predict": _cmd_predict,
    "evolve": _cmd_evolve,
    "analyze": _cmd_analyze,
    "verify": _cmd_verify,
    "sweep": _cmd_sweep,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    warnings.simplefilter("default", RuntimeWarning)
    try:
        if not args.resolution_factor > 0:
            raise ConfigError("--resolution-factor must be positive")
        cfg = load_config(args.config)
        args.out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except BlowupOrInstability as exc:
        log.error("blow-up: %s", exc)
        return EXIT_BLOWUP
    except (TailwaveError, ArithmeticError, ValueError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
