"""Tail exponent of the single-particle density against the number of poles,
with and without the closed-form remainder of the discarded poles."""

import argparse
import warnings

import numpy as np

from resdecay import BoxMode, DeltaShell, build_expansion, density_series, find_poles
from resdecay.dynamics import TruncationWarning, tail_exponent


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--lam", type=float, default=100.0)
    parser.add_argument("--r", type=float, default=3000.0)
    parser.add_argument("--n", type=int, nargs="+", default=[10, 50, 200, 1000])
    args = parser.parse_args()
    warnings.simplefilter("ignore", TruncationWarning)

    spec = DeltaShell(lam=args.lam)
    full = build_expansion(find_poles(spec, max(args.n)), BoxMode.for_spec(spec, 1))
    times = np.geomspace(0.5, 1e4, 1500) * full.tau
    print(f"{'N':>6}  {'bare':>9}  {'completed':>9}")
    for n in args.n:
        exp = full.truncated(n)
        row = []
        for completion in (False, True):
            series = density_series(exp, [args.r], None, times, tail_completion=completion)
            try:
                row.append(f"{tail_exponent(series):9.3f}")
            except ValueError as err:
                row.append(f"{'n/a':>9}")
                print(f"  N={n} completion={completion}: {err}")
        print(f"{n:>6}  " + "  ".join(row))


if __name__ == "__main__":
    main()
