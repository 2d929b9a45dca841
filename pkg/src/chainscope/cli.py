"""Command line entry point: ``chainscope <stage> --config cfg --out dir``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import PipelineConfig, load_config
from .errors import ChainscopeError, ConfigError, StageError
from .features import FEATURE_CONFIGS
from .pipeline import STAGES, run_pipeline
from .segments import parse_granularity

EXIT_OK, EXIT_INVALID, EXIT_STAGE = 0, 2, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chainscope", description="Malicious smart-contract lookalike detection.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in STAGES + ("run",):
        p = sub.add_parser(name, help="run every stage up to and including this one" if name != "run" else "run all stages")
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--granularity", help="comma-separated: day1,day3,month1,all")
        p.add_argument("--feature-config", choices=FEATURE_CONFIGS)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", type=Path, default=Path("out"))
    return parser


def _apply_overrides(cfg: PipelineConfig, args) -> PipelineConfig:
    changes = {}
    if args.granularity:
        try:
            changes["granularities"] = tuple(parse_granularity(g) for g in args.granularity.split(",") if g.strip())
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if args.feature_config:
        changes["feature_configs"] = (args.feature_config,)
    if args.seed is not None:
        changes["seed"] = args.seed
    return cfg.replace(**changes) if changes else cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    until = "report" if args.command == "run" else args.command
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        run_pipeline(cfg, args.out, until)
    except ConfigError as exc:
        print(f"chainscope: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except StageError as exc:
        print(f"chainscope: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except ChainscopeError as exc:
        print(f"chainscope: {exc}", file=sys.stderr)
        return EXIT_STAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
