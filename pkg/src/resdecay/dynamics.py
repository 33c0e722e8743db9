"""One- and two-particle decaying wave functions, densities and their features.

The single-particle amplitude is the resonance sum over poles n and their
mirror images -n (``kappa_{-n} = -conj(kappa_n)``, ``u_{-n} = conj(u_n)``,
``C_{-n} = conj(Cbar_n)``). Both members of each pair are evaluated
explicitly: their Moshinsky functions are not conjugates at finite time.

Truncating the sum at N poles leaves an error that decays only as
``t**-1/2``: every Moshinsky function behaves like
``-e^{i pi/4} e^{iX**2/4t} / (2 kappa sqrt(pi t))`` once ``|kappa| t`` is
large, and the complete set obeys ``sum_n C_n u_n / kappa_n = 0``. The
discarded poles therefore add up, at leading order, to minus the same
combination over the retained ones. ``tail_completion`` adds that closed-form
remainder back, which makes long-time power laws independent of N.
"""

from __future__ import annotations

import enum
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import find_peaks

from .model import DoubleBarrier
from .poles import ComplexPole
from .specfun import moshinsky_m_flagged
from .states import Expansion

__all__ = [
    "Symmetry",
    "TruncationWarning",
    "WindowTooShort",
    "DensitySeries",
    "psi_single",
    "psi_two",
    "density_series",
    "peak_time",
    "prominent_peaks",
    "exponential_transition",
    "tail_exponent",
]

SQRT_HALF = math.sqrt(0.5)
_CHUNK = 2_000_000
_E_I_PI_4 = np.exp(0.25j * np.pi)


class Symmetry(str, enum.Enum):
    SYMMETRIC = "symmetric"
    ANTISYMMETRIC = "antisymmetric"
    FACTORIZED = "factorized"


class TruncationWarning(UserWarning):
    pass


class WindowTooShort(ValueError):
    pass


def _pair_terms(expansion: Expansion, label, x, nmax):
    """Amplitudes and Moshinsky ``(r, a)`` for the +n and -n terms at position x."""
    b = expansion.basis
    C = expansion.coeffs[label][:nmax]
    Cm = np.conj(expansion.coeffs_bar[label][:nmax])
    spec = expansion.spec
    L = spec.boundary
    if x >= L:
        u = b.boundary_values[:nmax]
        r, a = x, L
    elif isinstance(spec, DoubleBarrier) and x <= spec.left:
        u = b.left_values[:nmax]
        r, a = spec.left + (spec.left - x), spec.left
    else:
        u = b.values(x)[:nmax]
        r, a = 0.0, 0.0
    return C * u, Cm * np.conj(u), r, a


def _tail_remainder(amp_p, amp_m, kp, km, X, t):
    """Leading large-|kappa| contribution of the poles beyond the truncation."""
    s1 = np.sum(amp_p / kp) + np.sum(amp_m / km)
    return _E_I_PI_4 * np.exp(1j * X * X / (4.0 * t)) / (2.0 * np.sqrt(np.pi * t)) * s1


def psi_single(expansion: Expansion, label, x: float, t, N: int | None = None,
               return_flag: bool = False, warn: bool = True, tail_completion: bool = True):
    """Single-particle amplitude at position ``x`` for times ``t > 0``.

    Inside the interaction region the interior expansion with ``M(y°)`` is
    used, outside the exterior one with ``u_n(boundary) M(y_n)``. With
    ``return_flag`` also returns the mask of overflow-invalid times. With
    ``tail_completion=False`` the bare N-term sum is returned.
    """
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    tf = np.atleast_1d(t).ravel()
    if np.any(tf <= 0):
        raise ValueError("psi_single needs t > 0; use initial_state_value at t = 0")
    nmax = expansion.N if N is None else N
    if not 1 <= nmax <= expansion.N:
        raise ValueError(f"truncation must be in 1..{expansion.N}")
    x = float(x)
    amp_p, amp_m, r, a = _pair_terms(expansion, label, x, nmax)
    kp = expansion.kappa[:nmax]
    km = -np.conj(kp)
    psi = np.empty(tf.size, dtype=complex)
    flag = np.zeros(tf.size, dtype=bool)
    last = np.zeros(tf.size)
    step = max(1, _CHUNK // nmax)
    for i in range(0, tf.size, step):
        tt = tf[i:i + step][None, :]
        Mp, fp = moshinsky_m_flagged(r, a, tt, kp[:, None])
        Mm, fm = moshinsky_m_flagged(r, a, tt, km[:, None])
        terms = amp_p[:, None] * Mp + amp_m[:, None] * Mm
        psi[i:i + step] = terms.sum(axis=0)
        flag[i:i + step] = (fp | fm).any(axis=0)
        last[i:i + step] = np.abs(terms[-1])
    if tail_completion:
        psi += _tail_remainder(amp_p, amp_m, kp, km, r - a, tf)
    if warn and nmax > 1:
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.nanmax(last / np.abs(psi))
        if ratio > 1e-8:
            warnings.warn(f"last resonance term contributes {ratio:.2e} of |psi| (N={nmax})",
                          TruncationWarning, stacklevel=2)
    if scalar:
        psi, flag = psi[0], bool(flag[0])
    else:
        psi, flag = psi.reshape(t.shape), flag.reshape(t.shape)
    return (psi, flag) if return_flag else psi


def psi_two(expansion: Expansion, x1: float, x2: float, t, symmetry, labels=("alpha", "beta"),
            N: int | None = None, return_flag: bool = False, warn: bool = True,
            tail_completion: bool = True):
    """Two identical noninteracting particles.

    ``FACTORIZED`` gives ``psi_a(x1) psi_a(x2)`` (``labels[0]`` only); the
    entangled states give ``(psi_a(x1) psi_b(x2) +- psi_b(x1) psi_a(x2)) / sqrt 2``.
    """
    symmetry = Symmetry(symmetry)
    la, lb = labels
    opts = dict(N=N, return_flag=True, warn=warn, tail_completion=tail_completion)
    if symmetry is Symmetry.FACTORIZED:
        p1, f1 = psi_single(expansion, la, x1, t, **opts)
        p2, f2 = psi_single(expansion, la, x2, t, **opts)
        out, flag = p1 * p2, f1 | f2
    else:
        if la == lb or expansion.initial[la] == expansion.initial[lb]:
            raise ValueError("entangled states need two different single-particle states")
        a1, fa1 = psi_single(expansion, la, x1, t, **opts)
        b2, fb2 = psi_single(expansion, lb, x2, t, **opts)
        b1, fb1 = psi_single(expansion, lb, x1, t, **opts)
        a2, fa2 = psi_single(expansion, la, x2, t, **opts)
        sign = 1.0 if symmetry is Symmetry.SYMMETRIC else -1.0
        out = SQRT_HALF * (a1 * b2 + sign * b1 * a2)
        flag = fa1 | fb2 | fb1 | fa2
    return (out, flag) if return_flag else out


@dataclass
class DensitySeries:
    """|Psi|**2 on a time grid at fixed position(s)."""

    t: np.ndarray
    density: np.ndarray
    valid: np.ndarray
    x1: float
    x2: float | None
    tau: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("time grid must be strictly increasing")

    @property
    def t_lifetimes(self) -> np.ndarray:
        return self.t / self.tau

    @property
    def ln_density(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(self.density)

    def to_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        x2 = "" if self.x2 is None else repr(float(self.x2))
        meta = "; ".join(f"{k}={json.dumps(v, sort_keys=True)}" for k, v in self.meta.items())
        lines = ["# natural units hbar=2m=1; " + meta, "t_abs,t_lifetimes,x1,x2,density,ln_density,valid_flag"]
        x1 = repr(float(self.x1))
        cols = zip(self.t.tolist(), self.t_lifetimes.tolist(), self.density.tolist(),
                   self.ln_density.tolist(), self.valid.tolist())
        for t, tl, d, ld, ok in cols:
            lines.append(f"{t!r},{tl!r},{x1},{x2},{d!r},{ld!r},{int(ok)}")
        path.write_text("\n".join(lines) + "\n")
        return path


def density_series(expansion: Expansion, positions, symmetry=None, times=None,
                   labels=("alpha", "beta"), N: int | None = None, grid: str = "custom",
                   warn: bool = True, tail_completion: bool = True) -> DensitySeries:
    """Density on a time grid; ``symmetry=None`` means a single particle at ``positions[0]``."""
    times = np.asarray(times, dtype=float)
    tau = expansion.tau
    if times.min() <= 0 or times.max() > 1e4 * tau * (1 + 1e-12):
        raise ValueError("time grid must lie in (0, 1e4 tau]")
    positions = list(np.atleast_1d(positions))
    if symmetry is None:
        psi, flag = psi_single(expansion, labels[0], positions[0], times, N=N, return_flag=True, warn=warn,
                               tail_completion=tail_completion)
        x2 = None
    else:
        psi, flag = psi_two(expansion, positions[0], positions[1], times, symmetry, labels=labels,
                            N=N, return_flag=True, warn=warn, tail_completion=tail_completion)
        x2 = float(positions[1])
    dens = np.abs(psi) ** 2
    dens[flag] = np.nan
    meta = {"spec": expansion.spec.to_dict(),
            "labels": "/".join(str(lab) for lab in labels),
            "symmetry": "single" if symmetry is None else Symmetry(symmetry).value,
            "N": expansion.N if N is None else N,
            "tau": tau,
            "grid": grid,
            "tail_completion": tail_completion}
    return DensitySeries(times, dens, ~flag, float(positions[0]), x2, tau, meta)


def peak_time(r: float, pole: ComplexPole, boundary: float) -> float:
    """Arrival time ``(r - boundary) / (2 upsilon)`` of a resonance term at ``r``."""
    if r < boundary:
        raise ValueError("peak time is defined outside the interaction region")
    return (r - boundary) / (2.0 * pole.upsilon)


def prominent_peaks(series: DensitySeries, prominence: float = 1.0, t_range=None) -> np.ndarray:
    """Times of local maxima of ln|Psi|**2 standing at least ``prominence`` above
    their surroundings (in ln units)."""
    ln = series.ln_density
    ok = np.isfinite(ln)
    t = series.t[ok]
    idx, _ = find_peaks(ln[ok], prominence=prominence)
    tp = t[idx]
    if t_range is not None:
        tp = tp[(tp >= t_range[0]) & (tp <= t_range[1])]
    return tp


def exponential_transition(series: DensitySeries, fit_span=(1.0, 5.0), tolerance: float = 0.05,
                           after: float | None = None) -> float:
    """Time at which the exponential regime ends.

    A straight line is fit to ln|Psi|**2 against t over ``fit_span`` (in
    lifetimes, counted from ``after`` or from the last prominent peak). The
    transition is the last time the density is within ``tolerance`` of that
    exponential; from then on it stays away from it.
    """
    ln = series.ln_density
    t = series.t
    ok = np.isfinite(ln)
    if after is None:
        peaks = prominent_peaks(series, prominence=2.0)
        after = peaks[-1] if peaks.size else t[ok][np.argmax(ln[ok])]
    lo, hi = after + fit_span[0] * series.tau, after + fit_span[1] * series.tau
    sel = ok & (t >= lo) & (t <= hi)
    if sel.sum() < 5:
        raise WindowTooShort("too few samples in the exponential fit span")
    slope, icpt = np.polyfit(t[sel], ln[sel], 1)
    with np.errstate(over="ignore", invalid="ignore"):
        dev = np.abs(np.expm1(ln - (slope * t + icpt)))
    close = ok & (t >= lo) & (dev <= tolerance)
    return float(t[close][-1]) if close.any() else float(lo)


def tail_exponent(series: DensitySeries, window=None, start_factor: float = 2.0, **transition_kw) -> float:
    """Least-squares slope of ln|Psi|**2 against ln t over ``window``.

    The default window runs from ``start_factor`` times the exponential
    transition time to the end of the series. The window must lie beyond the
    transition and span at least one decade.
    """
    t_x = exponential_transition(series, **transition_kw)
    if window is None:
        window = (start_factor * t_x, series.t[-1])
    lo, hi = window
    if lo < t_x:
        raise ValueError(f"window starts at {lo:g}, before the exponential transition at {t_x:g}")
    if hi / lo < 10.0:
        raise WindowTooShort(f"tail window spans only {math.log10(hi / lo):.2f} decades")
    ln = series.ln_density
    sel = np.isfinite(ln) & (series.t >= lo) & (series.t <= hi)
    slope, _ = np.polyfit(np.log(series.t[sel]), ln[sel], 1)
    return float(slope)
