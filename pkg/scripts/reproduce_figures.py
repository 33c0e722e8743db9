"""Run the built-in figure presets and print predicted against measured peaks.

    python scripts/reproduce_figures.py                 # all six presets
    python scripts/reproduce_figures.py fig4 fig6 --out runs
"""

import argparse
import time
from pathlib import Path

from resdecay.cli import run_experiment
from resdecay.config import PRESETS, preset


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("names", nargs="*", default=sorted(PRESETS))
    parser.add_argument("--out", default="runs")
    parser.add_argument("--cache", default="pole_cache")
    args = parser.parse_args()

    for name in args.names:
        cfg = preset(name).replace(out_dir=str(Path(args.out) / name), cache_dir=args.cache)
        t0 = time.perf_counter()
        summary = run_experiment(cfg)
        print(f"\n{name}: tau = {summary['tau']:.6f}, N = {summary['poles_used']} "
              f"({time.perf_counter() - t0:.1f} s)")
        for key, entry in summary["series"].items():
            print(f"  {key}: global max {entry['global_max_t_lifetimes']:.3f} tau"
                  + (f", tail exponent {entry['tail_exponent']:.3f}" if entry.get("tail_exponent") else ""))
            if key.endswith("/peak"):
                for p in entry["predicted_peaks"]:
                    got = "-" if p["measured"] is None else f"{p['measured']:.3f}"
                    print(f"    x={p['position']:<9g} n={p['pole']}  predicted {p['t_lifetimes']:7.3f}  measured {got}")


if __name__ == "__main__":
    main()
