"""Command-line interface.

Subcommands::

    resdecay poles   --preset fig1 --n-poles 4      # solve (or reuse) and print poles
    resdecay run     --preset fig4 --out runs/fig4  # density series, plot script, summary
    resdecay sumrule --preset fig2                  # Re sum C_n Cbar_n per state
    resdecay verify  [--quick]                      # independent oracle checks

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config, preset
from .dynamics import (TruncationWarning, WindowTooShort, density_series, peak_time,
                       prominent_peaks, tail_exponent)
from .model import fingerprint
from .poles import PoleError, PoleSet, find_poles, load_pole_cache, save_pole_cache
from .states import build_expansion, sum_rule

__all__ = [
    "main", "build_parser", "resolve_config", "obtain_poles", "compute_series", "run_experiment",
    "EXIT_OK", "EXIT_VALIDATION", "EXIT_NUMERIC",
]

log = logging.getLogger("resdecay")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3

PEAK_PROMINENCE = 1.0
PEAK_WINDOW = 0.05


def cache_path(cache_dir, spec, n: int) -> Path:
    return Path(cache_dir) / f"{spec.kind}_{fingerprint(spec)}_N{n}.csv"


def obtain_poles(spec, n: int, cache_dir) -> PoleSet:
    """Smallest cached set with at least ``n`` poles, truncated; otherwise solve and store."""
    cache_dir = Path(cache_dir)
    prefix = f"{spec.kind}_{fingerprint(spec)}_N"
    best = None
    for f in cache_dir.glob(prefix + "*.csv") if cache_dir.is_dir() else ():
        try:
            size = int(f.stem[len(prefix):])
        except ValueError:
            continue
        if size >= n and (best is None or size < best[0]):
            best = (size, f)
    if best is not None:
        log.info("reusing pole cache %s", best[1])
        poles = load_pole_cache(best[1], spec)
        return poles if poles.N == n else poles.truncated(n)
    log.info("solving for %d poles of %s", n, spec)
    poles = find_poles(spec, n)
    save_pole_cache(poles, cache_path(cache_dir, spec, n))
    return poles


def resolve_config(args) -> ExperimentConfig:
    if args.config and args.preset:
        raise ConfigError("give either --config or --preset, not both")
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = preset(args.preset or "fig1")
    over = {}
    if args.n_poles is not None:
        over["n_poles"] = args.n_poles
    if args.out is not None:
        over["out_dir"] = args.out
    if args.cache is not None:
        over["cache_dir"] = args.cache
    if over:
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), **over})
    return cfg


def compute_series(cfg, expansion, symmetry, grid):
    """Density series of ``cfg`` for one symmetry on one time grid."""
    times = grid.times(expansion.tau)
    if symmetry == "single":
        return density_series(expansion, cfg.positions[:1], None, times, grid=grid.name,
                              tail_completion=cfg.tail_completion)
    labels = ("alpha", "alpha") if symmetry == "factorized" else ("alpha", "beta")
    return density_series(expansion, cfg.positions[:2], symmetry, times, labels=labels,
                          grid=grid.name, tail_completion=cfg.tail_completion)


def _predicted_peaks(cfg, expansion, symmetry) -> list:
    """Arrival times (in lifetimes) of the leading resonances at each position."""
    poles = expansion.poles
    if symmetry == "single":
        pairs = [(cfg.positions[0], "alpha")]
    elif symmetry == "factorized":
        pairs = [(x, "alpha") for x in cfg.positions[:2]]
    else:
        pairs = list(zip(cfg.positions[:2], ("alpha", "beta")))
    out = []
    for x, lab in pairs:
        ns = sorted(set(range(1, min(4, poles.N) + 1)) | {min(cfg.states[lab], poles.N)})
        for n in ns:
            t = peak_time(x, poles[n - 1], cfg.potential.boundary) / expansion.tau
            out.append({"position": x, "state": lab, "pole": n, "t_lifetimes": t})
    return out


def _summarize_series(series, predicted) -> dict:
    tl = series.t_lifetimes
    ln = series.ln_density
    ok = np.isfinite(ln)
    peaks = prominent_peaks(series, PEAK_PROMINENCE) / series.tau
    matched = []
    for p in predicted:
        lo, hi = p["t_lifetimes"] * (1 - PEAK_WINDOW), p["t_lifetimes"] * (1 + PEAK_WINDOW)
        near = peaks[(peaks >= lo) & (peaks <= hi)]
        best = None if near.size == 0 else float(near[np.argmin(np.abs(near - p["t_lifetimes"]))])
        matched.append({**p, "measured": best})
    return {
        "global_max_t_lifetimes": float(tl[ok][np.argmax(ln[ok])]) if ok.any() else None,
        "prominent_peaks_t_lifetimes": [float(v) for v in peaks],
        "predicted_peaks": matched,
        "invalid_samples": int((~series.valid).sum()),
    }


def _tail_summary(series) -> dict:
    try:
        return {"tail_exponent": tail_exponent(series), "tail_error": None}
    except (WindowTooShort, ValueError, np.linalg.LinAlgError) as err:
        return {"tail_exponent": None, "tail_error": str(err)}


def _gnuplot(cfg, files) -> str:
    lines = ["# gnuplot script: ln|Psi|^2 against t/tau (natural units hbar=2m=1)",
             "set datafile separator ','",
             "set xlabel 't / tau'",
             "set ylabel 'ln |Psi|^2'",
             f"set title '{cfg.name}'"]
    for name, path, kind in files:
        lines.append("set logscale x" if kind == "log" else "unset logscale x")
        lines.append(f"plot '{path.name}' using 2:6 every ::2 with lines title '{name}'")
        lines.append("pause -1")
    return "\n".join(lines) + "\n"


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Compute every (symmetry, grid) series, write CSVs, a gnuplot script and summary.json."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    poles = obtain_poles(cfg.potential, cfg.n_poles, cfg.cache_dir)
    expansion = build_expansion(poles, cfg.box_states())
    summary = {
        "config": cfg.to_dict(),
        "units": "hbar=2m=1",
        "poles_used": poles.N,
        "n_below_barrier": poles.n_below_barrier,
        "tau": expansion.tau,
        "poles": [{"n": p.n, "re_k": p.kappa.real, "im_k": p.kappa.imag} for p in poles.poles[:10]],
        "series": {},
    }
    files = []
    for sym in cfg.symmetries:
        predicted = _predicted_peaks(cfg, expansion, sym)
        for grid in cfg.grids:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", TruncationWarning)
                series = compute_series(cfg, expansion, sym, grid)
            path = series.to_csv(out / f"{cfg.name}_{sym}_{grid.name}.csv")
            files.append((f"{sym} {grid.name}", path, grid.kind))
            entry = _summarize_series(series, predicted)
            if grid.kind == "log":
                entry.update(_tail_summary(series))
            summary["series"][f"{sym}/{grid.name}"] = entry
    (out / f"{cfg.name}.gp").write_text(_gnuplot(cfg, files))
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def _cmd_poles(cfg, args):
    poles = obtain_poles(cfg.potential, cfg.n_poles, cfg.cache_dir)
    print(f"# {cfg.potential}  N={poles.N}  below barrier={poles.n_below_barrier}  "
          f"lifetime(pole 1)={poles[0].lifetime:.8g}")
    print("n,upsilon,gamma,residual_abs")
    for p in poles.poles[: args.show]:
        print(f"{p.n},{p.upsilon:.10g},{p.gamma:.10g},{p.residual_abs:.2e}")
    return EXIT_OK


def _cmd_run(cfg, args):
    summary = run_experiment(cfg)
    print(f"{cfg.name}: tau={summary['tau']:.8g}, {summary['poles_used']} poles, output in {cfg.out_dir}")
    for key, entry in summary["series"].items():
        line = f"  {key}: global max at {entry['global_max_t_lifetimes']:.4g} tau"
        if entry.get("tail_exponent") is not None:
            line += f", tail exponent {entry['tail_exponent']:.3f}"
        print(line)
    return EXIT_OK


def _cmd_sumrule(cfg, args):
    poles = obtain_poles(cfg.potential, cfg.n_poles, cfg.cache_dir)
    expansion = build_expansion(poles, cfg.box_states())
    for lab in expansion.labels:
        print(f"{lab} (q={cfg.states[lab]}): Re sum C Cbar over {poles.N} poles = "
              f"{sum_rule(expansion, poles.N, lab):.12f}")
        if args.out:
            expansion.write_coefficients(lab, Path(args.out) / f"coefficients_{lab}.csv")
    return EXIT_OK


def _cmd_verify(cfg, args):
    from .oracle import format_report, verification_suite

    rows = verification_suite(quick=args.quick)
    print(format_report(rows))
    return EXIT_OK if all(r.passed for r in rows) else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="resdecay", description=__doc__.split("\n")[0],
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--preset", help="built-in experiment: fig1 ... fig6")
    common.add_argument("--n-poles", type=int, help="override the number of poles")
    common.add_argument("--out", help="output directory")
    common.add_argument("--cache", help="pole cache directory")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("poles", parents=[common], help="solve for resonance poles")
    p.add_argument("--show", type=int, default=10, help="number of poles to print")
    p.set_defaults(func=_cmd_poles)
    p = sub.add_parser("run", parents=[common], help="compute density series")
    p.set_defaults(func=_cmd_run)
    p = sub.add_parser("sumrule", parents=[common], help="expansion coefficient sum rule")
    p.set_defaults(func=_cmd_sumrule)
    p = sub.add_parser("verify", parents=[common], help="run the independent oracle checks")
    p.add_argument("--quick", action="store_true", help="coarser time-dependent comparison")
    p.set_defaults(func=_cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        return args.func(cfg, args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except (PoleError, ArithmeticError, FloatingPointError, RuntimeError, ValueError) as err:
        print(f"numerical failure: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
