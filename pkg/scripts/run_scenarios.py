"""Simulate every shipped scenario and write one CSV plus summary JSON per run.

    python3 scripts/run_scenarios.py --out runs/ [--variants]
"""

import argparse
from pathlib import Path

from fracsmc.cli import main, scenario_names


def run(out: Path, variants: bool) -> int:
    out.mkdir(parents=True, exist_ok=True)
    worst = 0
    for name in scenario_names(include_variants=variants):
        code = main(["simulate", "--config", name, "--out", str(out / f"{name}.csv")])
        print(f"{name}: exit {code}")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=Path("runs"))
    parser.add_argument("--variants", action="store_true")
    args = parser.parse_args()
    raise SystemExit(run(args.out, args.variants))
