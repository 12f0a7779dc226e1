"""Long-horizon run of the adaptive scenario: when does |s| first stay inside a band?

    python3 scripts/adaptive_horizon.py --T 120
"""

import argparse

import numpy as np

from fracsmc.cli import load_config
from fracsmc.engine import simulate


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--scenario", default="kv_adaptive")
    parser.add_argument("--T", type=float, default=120.0)
    parser.add_argument("--band", type=float, default=0.01)
    args = parser.parse_args(argv)

    tr = simulate(load_config(args.scenario).replace(T=args.T))
    t, s, fhat = tr.t, tr["s"], tr["fhat"]
    outside = np.nonzero(np.abs(s) > args.band)[0]
    settle = 0.0 if len(outside) == 0 else float(t[min(outside[-1] + 1, len(t) - 1)])
    print("t,fhat,max_abs_s_next_10s")
    for t0 in np.arange(0.0, args.T, 10.0):
        win = (t >= t0) & (t < t0 + 10.0)
        print(f"{t0:g},{fhat[win][0]:.4g},{np.max(np.abs(s[win])):.3e}")
    print(f"# |s| <= {args.band:g} from t = {settle:g} s; fhat(T) = {fhat[-1]:.4g}")


if __name__ == "__main__":
    main()
