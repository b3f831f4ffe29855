#!/usr/bin/env python3
"""Run the full pipeline on a synthetic cohort: simulate, replay, mine,
report.  Everything lands under --out (default ./out/pipeline)."""

import argparse
import sys
from pathlib import Path

from mapcoach.cli import main as cli


def run(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--high", type=int, default=40)
    parser.add_argument("--low", type=int, default=40)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--budget", type=float, default=1500.0)
    parser.add_argument("--out", type=Path, default=Path("out/pipeline"))
    args = parser.parse_args(argv)

    sim = args.out / "sim"
    replay = args.out / "replay"
    report = args.out / "report"
    steps = [
        ["simulate", "--high", str(args.high), "--low", str(args.low),
         "--seed", str(args.seed), "--budget", str(args.budget), "--out", str(sim)],
        ["replay", "--events", str(sim / "events"),
         "--expert", str(sim / "expert-map.json"), "--out", str(replay)],
        ["mine", "--annotated", str(replay / "annotated"),
         "--grouping", str(sim / "grouping.json"),
         "--out", str(args.out / "dsm.tsv")],
        ["report", "--annotated", str(replay / "annotated"),
         "--deliveries", str(replay / "deliveries"),
         "--affect", str(sim / "affect"),
         "--grouping", str(sim / "grouping.json"),
         "--outcomes", str(sim / "outcomes.jsonl"),
         "--out", str(report)],
    ]
    for step in steps:
        print("mapcoach", " ".join(step))
        code = cli(step)
        if code != 0:
            return code
    print(f"\npipeline complete; tables in {report} and {args.out / 'dsm.tsv'}")
    return 0


if __name__ == "__main__":
    sys.exit(run())
