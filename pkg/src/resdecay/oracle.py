"""Independent checks: direct time integration and brute-force quadrature.

Nothing here is used to produce results. The grid propagator integrates the
time-dependent Schroedinger equation ``i dpsi/dt = -psi'' + V psi`` with the
Crank-Nicolson scheme on a uniform grid and a complex absorbing layer; the
quadrature helpers recompute closed-form overlaps and normalizations.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.fft import dst, idst
from scipy.linalg import lapack

from .model import BoxMode, DeltaShell, DoubleBarrier, PotentialSpec

__all__ = [
    "GridState",
    "GridTooSmall",
    "ToleranceNotMet",
    "tdse_evolve",
    "tdse_track",
    "band_limited",
    "richardson",
    "free_gaussian",
    "moshinsky_contour",
    "quad_overlap",
    "quad_normalization",
    "admissible_moshinsky_args",
    "tdse_agreement",
    "VerificationRow",
    "format_report",
    "verification_suite",
]


class GridTooSmall(RuntimeError):
    pass


class ToleranceNotMet(ArithmeticError):
    pass


@dataclass
class GridState:
    """Wave function samples on a uniform grid at time ``t``."""

    x: np.ndarray
    psi: np.ndarray
    t: float
    h: float
    layer: float
    meta: dict = field(default_factory=dict)

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.psi) ** 2

    @property
    def norm(self) -> float:
        # the discrete inner product the scheme conserves
        return float(self.h * np.sum(self.density))

    def value_at(self, x0: float) -> complex:
        """Sample at a grid node (raises if ``x0`` is not one)."""
        j = _node(self.x[0], self.h, x0)
        return complex(self.psi[j])


def _node(x_min: float, h: float, x0: float) -> int:
    j = (x0 - x_min) / h
    if abs(j - round(j)) > 1e-8:
        raise ValueError(f"x = {x0} is not a grid node for h = {h}")
    return int(round(j))


def _potential(spec, x, h):
    """Real potential on the nodes.

    The delta shell becomes ``lam / h`` on the node at ``a``; a barrier edge
    that falls on a node gets half the barrier height.
    """
    v = np.zeros_like(x)
    if spec is None:
        return v
    if isinstance(spec, DeltaShell):
        v[_node(x[0], h, spec.a)] = spec.lam / h
        return v
    if isinstance(spec, DoubleBarrier):
        for x0, d, height in spec.regions():
            if height == 0:
                continue
            inside = (x > x0 + 1e-9 * h) & (x < x0 + d - 1e-9 * h)
            v[inside] += height
            for edge in (x0, x0 + d):
                v[np.abs(x - edge) < 1e-9 * h] += 0.5 * height
        return v
    raise TypeError(f"unsupported potential {spec!r}")


def _layer(x, start, width, strength, side):
    s = (x - start) / width if side > 0 else (start - x) / width
    return -1j * strength * np.where(s > 0, s * s, 0.0)


def _grid(spec, h, x_max, layer):
    if isinstance(spec, DoubleBarrier):
        # full line, absorbing layers on both sides
        x_min = -x_max + spec.boundary
    else:
        x_min = 0.0
    n = int(round((x_max - x_min) / h))
    x = x_min + h * np.arange(n + 1)
    return x


def _initial(init, x):
    if callable(init):
        return np.asarray(init(x), dtype=complex)
    return np.asarray(init, dtype=complex)


def _propagate(spec, init, times, h, dt, x_max, layer, strength, absorb):
    x = _grid(spec, h, x_max, layer)
    v = _potential(spec, x, h).astype(complex)
    if absorb:
        v += _layer(x, x[-1] - layer, layer, strength, +1)
        if x[0] < 0:
            v += _layer(x, x[0] + layer, layer, strength, -1)
    psi = _initial(init, x)
    # Dirichlet at both grid ends (psi at the end nodes stays zero)
    inner = slice(1, len(x) - 1)
    m = len(x) - 2
    off = np.full(m - 1, -1.0 / (h * h), dtype=complex)
    diag = 2.0 / (h * h) + v[inner]
    # (1 + i dt H / 2) psi_new = (1 - i dt H / 2) psi_old, H tridiagonal
    fac = 0.5j * dt
    dl, d, du, du2, ipiv, info = lapack.zgttrf(fac * off, 1.0 + fac * diag, fac * off)
    if info != 0:
        raise ArithmeticError(f"Crank-Nicolson factorization failed (info={info})")
    bd = 1.0 - fac * diag
    bo = -fac * off[0]

    def step(core):
        rhs = bd * core
        rhs[1:] += bo * core[:-1]
        rhs[:-1] += bo * core[1:]
        return lapack.zgttrs(dl, d, du, du2, ipiv, rhs)[0]

    psi[0] = psi[-1] = 0.0
    t = 0.0
    for target in times:
        steps = int(round((target - t) / dt))
        if abs(steps * dt - (target - t)) > 1e-9 * max(1.0, target):
            raise ValueError(f"time {target} is not a multiple of dt = {dt} from {t}")
        core = psi[inner]
        for _ in range(steps):
            core = step(core)
        psi = psi.copy()
        psi[inner] = core
        t = target
        yield GridState(x, psi, t, h, layer if absorb else 0.0,
                        {"dt": dt, "x_max": x_max, "strength": strength})


def _defaults(spec, t_end, x_max, layer, strength):
    boundary = 1.0 if spec is None else spec.boundary
    if x_max is None:
        x_max = boundary + 40.0 + 12.0 * t_end
    if layer is None:
        layer = 0.4 * (x_max - boundary)
    if strength is None:
        strength = 20.0
    return x_max, layer, strength


def tdse_track(spec: PotentialSpec | None, init, times, positions, h: float, dt: float,
               x_max: float | None = None, layer: float | None = None, strength: float | None = None,
               absorb: bool = True, check_reflections: bool = False) -> np.ndarray:
    """Complex amplitudes at grid nodes ``positions`` for each of ``times``.

    Returns an array of shape ``(len(times), len(positions))``. With
    ``check_reflections`` the run is repeated on a grid twice as long; if the
    densities differ by more than 1e-6 of the peak density the layer is
    reflecting and :class:`GridTooSmall` is raised.
    """
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) <= 0) or times[0] < 0:
        raise ValueError("times must be non-negative and increasing")
    x_max, layer, strength = _defaults(spec, times[-1], x_max, layer, strength)
    out = []
    idx = None
    for st in _propagate(spec, init, times, h, dt, x_max, layer, strength, absorb):
        if idx is None:
            idx = [_node(st.x[0], h, p) for p in positions]
        out.append(st.psi[idx])
    out = np.array(out)
    if check_reflections:
        far = 2 * x_max - (1.0 if spec is None else spec.boundary)
        ref = tdse_track(spec, init, times, positions, h, dt, x_max=far, layer=layer,
                         strength=strength, absorb=absorb)
        dens, dref = np.abs(out) ** 2, np.abs(ref) ** 2
        worst = np.max(np.abs(dens - dref)) / np.max(dref)
        if worst > 1e-6:
            raise GridTooSmall(f"absorbing layer reflections reach {worst:.2e} of the peak density")
    return out


def tdse_evolve(spec: PotentialSpec | None, init, t_end: float, h: float, dt: float,
                x_max: float | None = None, layer: float | None = None,
                strength: float | None = None, absorb: bool = True) -> GridState:
    """Crank-Nicolson propagation of ``init`` to ``t_end``.

    ``spec=None`` is the free particle. ``init`` is a callable of ``x`` (for
    instance a :class:`BoxMode`) or an array of node values. For a delta shell
    the shell radius must be a grid node. The layer is a quadratic complex
    potential ``-i strength s**2`` on the last ``layer`` length units.
    """
    if h <= 0 or dt <= 0 or t_end <= 0:
        raise ValueError("h, dt and t_end must be positive")
    x_max, layer, strength = _defaults(spec, t_end, x_max, layer, strength)
    (state,) = _propagate(spec, init, [t_end], h, dt, x_max, layer, strength, absorb)
    return state


def _smooth_step(k, k1, k2):
    """1 below k1, 0 above k2, C-infinity in between."""
    s = np.clip((k - k1) / (k2 - k1), 1e-12, 1 - 1e-12)
    lo, hi = np.exp(-1.0 / s), np.exp(-1.0 / (1.0 - s))
    return np.where(k <= k1, 1.0, np.where(k >= k2, 0.0, hi / (lo + hi)))


def band_limited(init, k1: float = 80.0, k2: float = 120.0):
    """Initial data with wavenumbers above ``k1`` smoothly removed.

    A box state has a kink, so its spectrum decays only like ``k**-2``. On a
    grid the content near ``pi/h`` barely moves and would sit next to the
    kink for the whole run. The filter is a sine transform over the grid
    (Dirichlet at both ends) times a C-infinity step from 1 at ``k1`` to 0 at
    ``k2``. Removed components travel faster than ``2 k1`` and leave any
    fixed observation window early.
    """
    def filtered(x):
        x = np.asarray(x, dtype=float)
        vals = np.asarray(init(x), dtype=complex)[1:-1]
        n = len(x) - 1
        k = math.pi * np.arange(1, n) / (x[-1] - x[0])
        chi = _smooth_step(k, k1, k2)
        out = np.zeros(len(x), dtype=complex)
        out[1:-1] = (idst(dst(vals.real, type=1) * chi, type=1)
                     + 1j * idst(dst(vals.imag, type=1) * chi, type=1))
        return out
    return filtered


def richardson(coarse, fine, order: int = 2):
    """Extrapolate two results computed with step ``h`` and ``h/2``."""
    f = 2.0 ** order
    return (f * np.asarray(fine) - np.asarray(coarse)) / (f - 1.0)


def free_gaussian(x, t, x0: float = 0.0, sigma: float = 1.0, k0: float = 0.0):
    """Closed-form free Gaussian packet for ``hbar = 2m = 1``.

    At ``t = 0`` it is ``(2 pi sigma**2)**-1/4 exp(-(x-x0)**2 / 4 sigma**2 + i k0 (x-x0))``.
    """
    x = np.asarray(x, dtype=float)
    s2 = sigma * sigma
    q = s2 + 1j * t
    u = x - x0
    pref = (2 * math.pi * s2) ** -0.25 * np.sqrt(s2 / q)
    return pref * np.exp((-(u * u) / 4 + 1j * k0 * s2 * u - 1j * k0 * k0 * s2 * t) / q)


def moshinsky_contour(r: float, a: float, t: float, kappa: complex, rtol: float = 1e-12) -> complex:
    """Moshinsky function from its integral over the steepest-descent line.

    ``M = (i / 2 pi) int exp(i k X - i k**2 t) / (k - kappa) dk`` with
    ``X = r - a``. The real axis is rotated to ``k = X/2t + e^{-i pi/4} s``
    where the integrand is a Gaussian in ``s``; the pole term is added when
    the rotation sweeps over ``kappa``.
    """
    X = r - a
    k0 = X / (2.0 * t)
    rot = np.exp(-0.25j * math.pi)
    pref = 0.5j / math.pi * np.exp(1j * X * X / (4.0 * t)) * rot
    scale = 1.0 / math.sqrt(t)

    def f(sig):
        s = sig * scale
        return np.exp(-sig * sig) / (k0 + rot * s - kappa) * scale

    # nearest approach of the pole to the line, as a break point
    s_p = float(((kappa - k0) / rot).real) / scale
    pts = [s_p] if abs(s_p) < 12 else None
    with warnings.catch_warnings():
        # quad reports round-off when it cannot beat rtol; the result is still used
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        re, _ = integrate.quad(lambda u: f(u).real, -12, 12, points=pts, epsabs=0, epsrel=rtol, limit=400)
        im, _ = integrate.quad(lambda u: f(u).imag, -12, 12, points=pts, epsabs=0, epsrel=rtol, limit=400)
    val = pref * (re + 1j * im)
    d = kappa.real - k0
    if d > 0 and kappa.imag > -d:
        val += np.exp(1j * kappa * X - 1j * kappa * kappa * t)
    return complex(val)


def quad_overlap(f, g, interval, points=None, atol: float = 1e-13, limit: int = 400) -> complex:
    """``int f g dx`` over ``interval`` by adaptive quadrature (no conjugation).

    ``points`` are interior break points where the integrand is not smooth.
    Raises :class:`ToleranceNotMet` if the error estimate exceeds ``atol``.
    """
    a, b = interval
    cuts = [a] + sorted(p for p in (points or []) if a < p < b) + [b]
    total = 0j
    err = 0.0
    with warnings.catch_warnings():
        # the error estimate is checked below
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            for part, fn in ((1.0, np.real), (1j, np.imag)):
                val, e = integrate.quad(lambda s: fn(complex(f(s) * g(s))), lo, hi,
                                        epsabs=atol / 4, epsrel=0.0, limit=limit)
                total += part * val
                err += e
    if err > atol:
        raise ToleranceNotMet(f"quadrature error estimate {err:.2e} exceeds {atol:.0e}")
    return total


def quad_normalization(state, atol: float = 1e-13) -> complex:
    """``int_0^L u**2 dx`` plus the outgoing surface terms, by quadrature."""
    spec = state.spec
    L = spec.boundary
    brk = [] if isinstance(spec, DeltaShell) else [spec.b, spec.b + spec.w]
    inner = quad_overlap(state, state, (0.0, L), points=brk, atol=atol)
    k = state.kappa
    surf = 1j * state.boundary_value ** 2 / (2 * k)
    if isinstance(spec, DoubleBarrier):
        surf += 1j * complex(state(0.0)) ** 2 / (2 * k)
    return inner + surf


@dataclass
class VerificationRow:
    name: str
    observed: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.observed) and self.observed <= self.tolerance)


def format_report(rows) -> str:
    """Plain-text pass/fail table."""
    width = max(len(r.name) for r in rows)
    lines = [f"{'check'.ljust(width)}  {'observed':>10}  {'tolerance':>10}  result"]
    for r in rows:
        lines.append(f"{r.name.ljust(width)}  {r.observed:10.3e}  {r.tolerance:10.1e}  "
                     f"{'PASS' if r.passed else 'FAIL'}")
    return "\n".join(lines)


def admissible_moshinsky_args(n: int, seed: int = 0):
    """Random ``(r, a, t, kappa)`` with phases double precision can resolve.

    Poles are drawn from both the fourth and third quadrants, ``X = r - a``
    from ``[0, 3000]`` (a tenth of them exactly 0, the interior argument) and
    ``t`` log-uniform in ``[1e-2, 1e3]``. Draws with ``X**2/4t > 1e6`` or
    ``|kappa X| > 1e5`` are rejected: there the rounding of the phase alone
    exceeds 1e-10.
    """
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        kappa = complex(rng.uniform(0.1, 50.0), -10 ** rng.uniform(-5, 0.5))
        if rng.random() < 0.5:
            kappa = -kappa.conjugate()
        X = 0.0 if rng.random() < 0.1 else rng.uniform(0.0, 3000.0)
        t = 10 ** rng.uniform(-2, 3)
        if X * X / (4 * t) > 1e6 or abs(kappa * X) > 1e5:
            continue
        out.append((1.0 + X, 1.0, t, kappa))
    return out


def tdse_agreement(expansion, label, times, positions, h: float, dt_ratio: float = 0.02,
                   k_band=(80.0, 120.0), x_max: float = 150.0, layer: float = 120.0,
                   strength: float = 10.0) -> dict:
    """Grid densities at ``h`` and ``h/2`` against the resonance expansion.

    The box state of ``label`` is band-limited (:func:`band_limited`),
    propagated with ``dt = dt_ratio * h`` and extrapolated with
    :func:`richardson`. Returns the maximum relative density discrepancies
    ``coarse``, ``fine`` and ``extrapolated``, their ratio ``factor`` and the
    arrays themselves.
    """
    from .dynamics import psi_single

    init = band_limited(expansion.initial[label], *k_band)
    times = np.asarray(times, dtype=float)
    ref = np.abs(np.array([[psi_single(expansion, label, x, t, warn=False) for x in positions]
                           for t in times])) ** 2
    dens = []
    for hh in (h, h / 2):
        amp = tdse_track(expansion.spec, init, times, positions, hh, dt_ratio * hh,
                         x_max=x_max, layer=layer, strength=strength)
        dens.append(np.abs(amp) ** 2)
    extra = richardson(*dens)
    rel = [np.max(np.abs(d / ref - 1)) for d in (*dens, extra)]
    return {"coarse": rel[0], "fine": rel[1], "extrapolated": rel[2], "factor": rel[0] / rel[1],
            "expansion": ref, "grid": dens, "richardson": extra}


def verification_suite(quick: bool = False) -> list:
    """Run the independent checks; ``quick`` uses coarser grids for the
    time-dependent comparison."""
    from .model import BoxMode
    from .poles import find_poles
    from .specfun import moshinsky_m
    from .states import build_expansion, normalize_state

    rows = []
    # free Gaussian against its closed form
    g0 = lambda x: free_gaussian(x, 0.0, 30.0, 2.0, 1.0)  # noqa: E731
    dens = []
    for h in (0.01, 0.005):
        st = tdse_evolve(None, g0, 2.0, h, h / 4, x_max=80.0, absorb=False)
        dens.append(st.density)
    exact = np.abs(free_gaussian(st.x, 2.0, 30.0, 2.0, 1.0)) ** 2
    extra = richardson(dens[0], dens[1][::2])
    rows.append(VerificationRow("free Gaussian vs closed form", float(np.max(np.abs(extra - exact[::2]))
                                                                      / np.max(exact)), 1e-6))
    # unitarity without the layer
    ds10 = DeltaShell(lam=10.0, a=1.0)
    st = tdse_evolve(ds10, BoxMode(1), 1.0, 0.01, 0.002, x_max=40.0, absorb=False)
    rows.append(VerificationRow("norm without absorber", abs(st.norm - 1.0), 1e-10))
    # closed-form overlap and normalization
    ds = DeltaShell()
    poles = find_poles(ds, 8)
    exp = build_expansion(poles, BoxMode.for_spec(ds, 1))
    u1 = exp.state(0)
    c1 = quad_overlap(BoxMode(1), u1, (0.0, 1.0))
    rows.append(VerificationRow("C_1 quadrature vs closed form", abs(c1 - exp.coeffs["alpha"][0]), 1e-12))
    rows.append(VerificationRow("delta-shell normalization by quadrature",
                                abs(quad_normalization(u1) - 1.0), 1e-10))
    db = DoubleBarrier()
    dbp = find_poles(db, 3)
    rows.append(VerificationRow("double-barrier normalization by quadrature",
                                max(abs(quad_normalization(normalize_state(db, p)) - 1.0) for p in dbp.poles),
                                1e-10))
    # Moshinsky function against the rotated contour
    worst = 0.0
    for r, a, t, k in admissible_moshinsky_args(100):
        m = moshinsky_m(r, a, t, k)
        worst = max(worst, abs(m - moshinsky_contour(r, a, t, k)) / abs(m))
    rows.append(VerificationRow("Moshinsky vs contour quadrature", worst, 1e-8))
    # resonance expansion against the grid propagation
    p10 = find_poles(ds10, 1000)
    e10 = build_expansion(p10, BoxMode.for_spec(ds10, 1))
    tau = e10.tau
    h = 0.025 if quick else 0.0125
    dt = 0.02 * h
    step = 2 * dt
    times = np.round(np.array([1.0, 2.0, 3.0, 5.0]) * tau / step) * step
    res = tdse_agreement(e10, "alpha", times, [1.5, 2.0, 5.0, 10.0], h)
    rows.append(VerificationRow(f"TDSE vs expansion, extrapolated (h={h:g})", res["extrapolated"], 1e-4))
    rows.append(VerificationRow("TDSE discrepancy ratio fine/coarse", 1.0 / res["factor"], 1.0 / 3.0))
    return rows
