#!/usr/bin/env python3
"""Run every shipped config through the CLI and summarise the outcomes.

    python3 scripts/reproduce_all.py [--out results] [--threads 1]
"""

import argparse
import json
import sys
import time
from pathlib import Path

from manifold_extremes.harness import cli

ROOT = Path(__file__).resolve().parents[1]
SUBCOMMAND = {"limit_law": "limit-law", "tail_asymptotics": "tail", "pickands": "pickands", "assumptions": "assumptions"}


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(ROOT / "results"))
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    from manifold_extremes.harness.config import load_config

    worst = 0
    for cfg_path in sorted((ROOT / "configs").glob("*.toml")):
        kind = load_config(cfg_path).kind
        out = Path(args.out) / cfg_path.stem
        t0 = time.perf_counter()
        code = cli.main([SUBCOMMAND[kind], "--config", str(cfg_path), "--out", str(out), "--threads", str(args.threads)])
        report = json.loads((out / "report.json").read_text()) if (out / "report.json").exists() else {}
        print(f"-> {cfg_path.name}: exit {code}, {time.perf_counter() - t0:.1f}s, {len(report.get('warnings', []))} warning(s)\n")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
