"""Command line entry point: ``manifold-extremes {limit-law,tail,pickands,assumptions}``."""

from __future__ import annotations

import argparse
import logging
import sys
import time

from ..errors import ConfigError
from .config import load_config
from .experiments import run
from .output import write_outputs

SUBCOMMANDS = {
    "limit-law": "limit_law",
    "tail": "tail_asymptotics",
    "pickands": "pickands",
    "assumptions": "assumptions",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="manifold-extremes", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="TOML experiment config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config, SUBCOMMANDS[args.command])
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.out = args.out
        cfg.validate()
        t0 = time.perf_counter()
        report = run(cfg, threads=max(1, args.threads))
        out = write_outputs(report, cfg, cfg.out, runtime=time.perf_counter() - t0)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"{report.kind}: wrote {out}")
    for k, v in report.summary.items():
        if not isinstance(v, (dict, list)):
            print(f"  {k}: {v}")
    return report.status


if __name__ == "__main__":
    sys.exit(main())
