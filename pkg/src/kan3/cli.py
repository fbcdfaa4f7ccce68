"""Command line driver: one subcommand per experiment.

Exit codes: 0 = experiment passed, 1 = experiment ran but its criterion
failed (or raised), 2 = usage / configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from .config import ExperimentConfig, config_from_dict, parse_config
from .errors import ConfigError, Kan3Error
from .reports import EXPERIMENTS, run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kan3",
        description="Numerical laboratory for a robustly transitive, "
                    "non-mixing skew product with intermingled basins.")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="TOML config file")
        p.add_argument("--t", type=float, help="fiber coupling strength")
        p.add_argument("--seed", type=int, help="master RNG seed")
        p.add_argument("--threads", type=int,
                       help="worker threads (fallback: KAN3_THREADS)")
        p.add_argument("--out", help="output directory")
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = parse_config(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if args.t is not None:
        overrides["t"] = args.t
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    elif "KAN3_THREADS" in os.environ:
        try:
            overrides["threads"] = int(os.environ["KAN3_THREADS"])
        except ValueError as exc:
            raise ConfigError(f"KAN3_THREADS: {exc}") from exc
    if args.out is not None:
        overrides["out_dir"] = args.out
    if overrides:
        merged = dict(dataclasses.asdict(cfg), **overrides)
        cfg = config_from_dict(merged)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        manifest = run(cfg, args.experiment)
    except Kan3Error as exc:
        print(f"experiment failed: {exc}", file=sys.stderr)
        return 1
    status = "PASS" if manifest.ok else "FAIL"
    print(f"{args.experiment}: {status} "
          f"(outputs in {cfg.out_dir}, payload {manifest.payload_sha256[:16]})")
    return 0 if manifest.ok else 1


if __name__ == "__main__":
    sys.exit(main())
