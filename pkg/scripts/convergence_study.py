"""Step-refinement study: max |x1| change against the finest step, per scenario.

    python3 scripts/convergence_study.py --scenario kv_open --levels 4
"""

import argparse

import numpy as np

from fracsmc.cli import load_config
from fracsmc.engine import simulate


def study(name: str, levels: int, T: float | None):
    base = load_config(name)
    if T is not None:
        base = base.replace(T=T)
    runs = []
    for i in range(levels):
        f = 2**i
        cfg = base.replace(dt=base.dt / f, decimation=base.decimation * f)
        runs.append((cfg.dt, simulate(cfg)["x1"]))
    ref = runs[-1][1]
    rows = []
    for (dt, x1), nxt in zip(runs[:-1], runs[1:]):
        rows.append((dt, float(np.max(np.abs(x1 - ref))), float(np.max(np.abs(x1 - nxt[1])))))
    return rows


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--scenario", default="kv_open")
    parser.add_argument("--levels", type=int, default=4)
    parser.add_argument("--T", type=float, default=None, help="shorten the horizon")
    args = parser.parse_args(argv)

    rows = study(args.scenario, args.levels, args.T)
    print("dt,err_vs_finest,change_on_halving,observed_order")
    prev = None
    for dt, err, change in rows:
        order = "" if prev is None or change == 0 else f"{np.log2(prev / change):.2f}"
        print(f"{dt:g},{err:.3e},{change:.3e},{order}")
        prev = change


if __name__ == "__main__":
    main()
