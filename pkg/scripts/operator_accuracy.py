"""Max relative error of both fractional-derivative kernels on the power fixtures.

Prints a CSV table over fractional orders and grid sizes:
    python3 scripts/operator_accuracy.py > operator_accuracy.csv
"""

import argparse
import sys

from fracsmc.engine import operator_fixture_errors


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--alpha", type=float, nargs="+", default=[0.2, 0.44, 0.56, 0.8])
    parser.add_argument("--J", type=int, nargs="+", default=[20, 40, 60, 80])
    parser.add_argument("--dt", type=float, default=1e-3)
    args = parser.parse_args(argv)

    out = sys.stdout
    out.write("alpha,J,dt,gl_t1,gl_t2,diffusive_t1,diffusive_t2\n")
    for alpha in args.alpha:
        for J in args.J:
            err = operator_fixture_errors(alpha, dt=args.dt, J=J)
            out.write(
                f"{alpha:g},{J},{args.dt:g},{err['gl']['t1']:.3e},{err['gl']['t2']:.3e},"
                f"{err['diffusive']['t1']:.3e},{err['diffusive']['t2']:.3e}\n"
            )


if __name__ == "__main__":
    main()
