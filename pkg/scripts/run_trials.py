"""Run one or more experiment plans and collect their reports.

    python scripts/run_trials.py scripts/plans/table1.json scripts/plans/table2.json --out results
"""

import argparse
import sys
from pathlib import Path

from liquidstate.cli import main as cli_main


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("plans", nargs="+")
    parser.add_argument("--out", default="results")
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args(argv)
    status = 0
    for plan in args.plans:
        out = Path(args.out) / Path(plan).stem
        print(f"== {plan} -> {out}")
        status |= cli_main(["eval", "--plan", plan, "--out", str(out), "--threads", str(args.threads)])
    return status


if __name__ == "__main__":
    sys.exit(main())
