"""Acceptance criteria, each checked at its stated tolerance.

Every clause is recorded and a one-line pass/fail summary per criterion is
printed at the end of the session (see ``conftest.py``).
"""

import math

import numpy as np
import pytest

from resdecay.cli import compute_series
from resdecay.config import TimeGrid, preset
from resdecay.dynamics import density_series, exponential_transition, prominent_peaks, tail_exponent
from resdecay.model import BoxMode, DeltaShell
from resdecay.oracle import admissible_moshinsky_args, moshinsky_contour, tdse_agreement
from resdecay.poles import find_poles
from resdecay.specfun import faddeeva_w, moshinsky_m
from resdecay.states import build_expansion, reconstruct_initial, sum_rule

from scipy.special import dawsn


def rel(a, b):
    return abs(a - b) / abs(b)


@pytest.fixture(scope="module")
def figure_series(ds_expansion, db_expansion):
    """Density series of the figure presets, computed lazily and shared."""
    cache = {}

    def get(name, symmetry, grid="peak"):
        key = (name, symmetry, grid)
        if key not in cache:
            cfg = preset(name)
            base = ds_expansion if cfg.potential == ds_expansion.spec else db_expansion
            exp = base.truncated(cfg.n_poles)
            (g,) = [g for g in cfg.grids if g.name == grid]
            cache[key] = compute_series(cfg, exp, symmetry, g)
        return cache[key]

    return get


def peaks_near(series, targets, window=0.05, prominence=1.0):
    """Prominent peak (in lifetimes) nearest each target within +-window, or None."""
    peaks = prominent_peaks(series, prominence) / series.tau
    out = []
    for t in targets:
        near = peaks[np.abs(peaks / t - 1) <= window]
        out.append(None if near.size == 0 else float(near[np.argmin(np.abs(near - t))]))
    return out


def global_max(series):
    ln = series.ln_density
    ok = np.isfinite(ln)
    return float(series.t_lifetimes[ok][np.argmax(ln[ok])])


def test_criterion_01_delta_shell_poles(ds_poles, record):
    quoted = [3.11052, 6.2213, 9.3325, 12.4444]
    ups = [ds_poles[i].upsilon for i in range(4)]
    err = max(abs(u - q) for u, q in zip(ups, quoted))
    res = max(ds_poles[i].residual_abs for i in range(4))
    ok1 = record(1, "upsilon_1..4", err <= 1e-3, f"max |dv| = {err:.1e}")
    ok2 = record(1, "residuals", res < 1e-10, f"max residual {res:.1e}")
    assert ok1 and ok2


def test_criterion_02_delta_shell_lifetime(ds_poles, record):
    p = ds_poles[0]
    tau = 1.0 / (4 * p.upsilon * p.gamma)
    d = rel(tau, 82.058)
    assert record(2, "tau within 0.5% of 82.058", d <= 0.005, f"tau = {tau:.4f}, off by {100 * d:.2f}%")


def test_criterion_03_double_barrier(db_poles, record):
    p = db_poles[0]
    tau = 1.0 / (4 * p.upsilon * p.gamma)
    ok1 = record(3, "upsilon_1", abs(p.upsilon - 2.3725) <= 1e-3, f"{p.upsilon:.6f}")
    ok2 = record(3, "tau", rel(tau, 18067.23) <= 0.005, f"tau = {tau:.2f}")
    below = sum(q.upsilon < math.sqrt(db_poles.spec.V) for q in db_poles.poles[:50])
    ok3 = record(3, "sub-barrier count", below == 2, f"{below} of 50")
    assert ok1 and ok2 and ok3


def test_criterion_04_sum_rule(ds_expansion, record):
    ok = True
    for label, q in (("alpha", 1), ("beta", 6)):
        s = sum_rule(ds_expansion, 1000, label)
        ok &= record(4, f"q={q}", abs(s - 1.0) <= 1e-3, f"Re sum = {s:.6f}")
    assert ok


def test_criterion_05_reconstruction(ds_expansion, record):
    x = np.linspace(0.05, 0.95, 2001)
    diff = reconstruct_initial(ds_expansion, x, 1000) - BoxMode(1)(x)
    err = math.sqrt(np.trapezoid(diff ** 2, x))
    assert record(5, "L2 error", err < 1e-2, f"{err:.2e}")


def test_criterion_06_peak_law(figure_series, ds_expansion, db_expansion, record):
    results = []
    # (a) single-particle global maxima against (r - boundary) / (2 upsilon_1)
    fig1 = figure_series("fig1", "single")
    pred = (3000.0 - 1.0) / (2 * ds_expansion.poles[0].upsilon) / ds_expansion.tau
    got = global_max(fig1)
    results.append(record(6, "delta-shell global max 2%", rel(got, pred) <= 0.02,
                          f"{got:.3f} vs {pred:.3f} tau ({100 * (got / pred - 1):+.2f}%)"))
    r1 = 6e5
    db_tau = db_expansion.tau
    t = np.linspace(5.0, 9.0, 2000) * db_tau
    single = density_series(db_expansion, [r1], None, t)
    pred_db = (r1 - 3.0) / (2 * db_expansion.poles[0].upsilon) / db_tau
    got_db = global_max(single)
    results.append(record(6, "double-barrier global max 2%", rel(got_db, pred_db) <= 0.02,
                          f"{got_db:.3f} vs {pred_db:.3f} tau"))
    # (b) double-barrier two-particle peaks at 7.0 and 35.0 lifetimes
    for name in ("fig5", "fig6"):
        found = peaks_near(figure_series(name, "factorized"), [7.0, 35.0], window=0.02)
        results.append(record(6, f"{name} peaks 7.0/35.0", None not in found, f"{found}"))
    # (c) figure-read delta-shell values within 5%
    fig4 = figure_series("fig4", "factorized")
    read = {5.73: global_max(fig1)}
    read.update(zip([28.68, 14.34, 9.56, 7.17], peaks_near(fig4, [28.68, 14.34, 9.56, 7.17])))
    bad = [k for k, v in read.items() if v is None or rel(v, k) > 0.05]
    results.append(record(6, "figure-read values 5%", not bad,
                          ", ".join(f"{k}->{'none' if v is None else f'{v:.2f}'}" for k, v in read.items())))
    assert all(results)


def _tail(series):
    tx = exponential_transition(series)
    decades = math.log10(series.t[-1] / (2.0 * tx))
    return tail_exponent(series), decades


def test_criterion_07_tail_exponents(figure_series, record):
    ok = True
    cases = [("fig1", "single", -3.0, 0.15), ("fig2", "symmetric", -6.0, 0.3), ("fig2", "antisymmetric", -10.0, 0.5)]
    for name, sym, want, tol in cases:
        slope, decades = _tail(figure_series(name, sym, "tail"))
        ok &= record(7, sym, abs(slope - want) <= tol and decades >= 1.5,
                     f"{slope:.3f} over {decades:.1f} decades")
    assert ok


def test_criterion_08_spectra_effect(figure_series, ds_expansion, record):
    tau = ds_expansion.tau
    r2 = 15000.0
    targets = [(r2 - 1.0) / (2 * ds_expansion.poles[n - 1].upsilon) / tau for n in (2, 3, 4)]
    fig4 = peaks_near(figure_series("fig4", "factorized"), targets)
    fig3 = peaks_near(figure_series("fig3", "factorized"), targets)
    ok1 = record(8, "fig4 peaks at r2/2v_n, absent in fig3",
                 None not in fig4 and fig3 == [None] * 3,
                 f"fig4 {['-' if v is None else round(v, 2) for v in fig4]}, fig3 {fig3}")
    # fig6 (50 poles) against fig5 (2 poles) over the first broad peak:
    # the contiguous region around the first maximum within 1/e of it
    s5, s6 = figure_series("fig5", "factorized"), figure_series("fig6", "factorized")
    tl = s5.t_lifetimes
    ln5 = s5.ln_density
    i0 = int(np.argmin(np.abs(tl - 7.0)))
    win = slice(max(0, i0 - 400), i0 + 400)
    ipk = win.start + int(np.nanargmax(ln5[win]))
    lo = hi = ipk
    while lo > 0 and ln5[lo - 1] >= ln5[ipk] - 1:
        lo -= 1
    while hi < len(tl) - 1 and ln5[hi + 1] >= ln5[ipk] - 1:
        hi += 1
    d = np.max(np.abs(s6.density[lo:hi + 1] / s5.density[lo:hi + 1] - 1))
    ok2 = record(8, "fig6 vs fig5 < 2% on first broad peak", d < 0.02,
                 f"max rel diff {d:.2e} over t/tau in [{tl[lo]:.2f}, {tl[hi]:.2f}]")
    assert ok1 and ok2


def test_criterion_09_oracle_equivalence(record):
    spec = DeltaShell(lam=10.0, a=1.0)
    exp = build_expansion(find_poles(spec, 1000), BoxMode.for_spec(spec, 1))
    h = 0.0125
    step = 2 * 0.02 * h
    times = np.round(np.array([1.0, 2.0, 3.0, 5.0]) * exp.tau / step) * step
    res = tdse_agreement(exp, "alpha", times, [1.5, 2.0, 5.0, 10.0], h)
    ok1 = record(9, "density agreement 1e-4", res["extrapolated"] <= 1e-4,
                 f"extrapolated {res['extrapolated']:.1e} (raw {res['fine']:.1e})")
    ok2 = record(9, "Richardson factor >= 3", res["factor"] >= 3.0, f"{res['factor']:.2f}")
    assert ok1 and ok2


def test_criterion_10_special_functions(record):
    rng = np.random.default_rng(2024)
    z = rng.uniform(-6, 6, 2000) + 1j * rng.uniform(0, 6, 2000)
    w = faddeeva_w(z)
    conj = np.max(np.abs(faddeeva_w(-np.conj(z)) - np.conj(w)) / np.abs(w))
    zs = rng.uniform(-4, 4, 2000) + 1j * rng.uniform(-4, 4, 2000)
    lhs = faddeeva_w(zs) + faddeeva_w(-zs)
    rhs = 2 * np.exp(-zs * zs)
    scale = np.maximum.reduce([np.abs(faddeeva_w(zs)), np.abs(faddeeva_w(-zs)), np.abs(rhs)])
    refl = np.max(np.abs(lhs - rhs) / scale)
    x = rng.uniform(-30, 30, 2000)
    wx = faddeeva_w(x + 0j)
    real = np.max(np.abs(wx - (np.exp(-x * x) + 2j / math.sqrt(math.pi) * dawsn(x))) / np.abs(wx))
    ok1 = record(10, "Faddeeva identities 1e-12", max(conj, refl, real) <= 1e-12,
                 f"conj {conj:.0e}, refl {refl:.0e}, real axis {real:.0e}")
    worst = 0.0
    for r, a, t, k in admissible_moshinsky_args(100, seed=0):
        m = moshinsky_m(r, a, t, k)
        worst = max(worst, abs(m - moshinsky_contour(r, a, t, k)) / abs(m))
    ok2 = record(10, "Moshinsky vs contour 1e-8", worst <= 1e-8, f"worst {worst:.1e} on 100 draws")
    assert ok1 and ok2
