"""Locating, refining and validating fourth-quadrant resonance poles."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import DeltaShell, PotentialSpec, fingerprint, spec_from_dict

__all__ = [
    "ComplexPole",
    "PoleSet",
    "PoleError",
    "NoConvergence",
    "WrongQuadrant",
    "MissedPole",
    "DuplicatePole",
    "refine_pole",
    "winding_number",
    "count_poles",
    "find_poles",
    "save_pole_cache",
    "load_pole_cache",
]

MAX_NEWTON = 100
STEP_TOL = 1e-12
RESIDUAL_TOL = 1e-10


class PoleError(RuntimeError):
    pass


class NoConvergence(PoleError):
    pass


class WrongQuadrant(PoleError):
    pass


class MissedPole(PoleError):
    pass


class DuplicatePole(PoleError):
    pass


@dataclass(frozen=True)
class ComplexPole:
    """Resonance pole ``kappa = upsilon - i gamma`` and the derived quantities."""

    n: int
    kappa: complex
    residual_abs: float = 0.0

    @property
    def upsilon(self) -> float:
        return self.kappa.real

    @property
    def gamma(self) -> float:
        return -self.kappa.imag

    @property
    def energy(self) -> float:
        return self.upsilon ** 2 - self.gamma ** 2

    @property
    def width(self) -> float:
        # -2 Im(kappa^2) = 4 upsilon gamma
        return 4.0 * self.upsilon * self.gamma

    @property
    def lifetime(self) -> float:
        return 1.0 / self.width


@dataclass(frozen=True)
class PoleSet:
    spec: PotentialSpec
    poles: tuple[ComplexPole, ...]
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def N(self) -> int:
        return len(self.poles)

    @property
    def kappas(self) -> np.ndarray:
        return np.array([p.kappa for p in self.poles], dtype=complex)

    @property
    def lifetime(self) -> float:
        """Lifetime of the system: the longest pole lifetime."""
        return max(p.lifetime for p in self.poles)

    @property
    def n_below_barrier(self) -> int:
        top = self.spec.barrier_top
        return sum(p.upsilon < top for p in self.poles)

    def truncated(self, n: int) -> "PoleSet":
        if not 1 <= n <= self.N:
            raise ValueError(f"cannot truncate {self.N} poles to {n}")
        return PoleSet(self.spec, self.poles[:n], dict(self.meta))

    def __getitem__(self, i):
        return self.poles[i]

    def __len__(self):
        return self.N


def _residual_tol(spec: PotentialSpec, k: complex = 0j) -> float:
    # round-off in exp(2ika) grows like |k| once |k| exceeds the potential scale
    return RESIDUAL_TOL * max(spec.scale, 2.0 * abs(k))


def refine_pole(spec: PotentialSpec, seed: complex, tol: float = STEP_TOL, n: int = 0) -> ComplexPole:
    """Newton iteration on the pole residual with its analytic derivative."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    k = complex(seed)
    for _ in range(MAX_NEWTON):
        f = complex(spec.residual(k))
        step = f / complex(spec.residual_dk(k))
        k -= step
        if not np.isfinite(k):
            break
        if abs(step) < tol * max(1.0, abs(k)):
            res = abs(complex(spec.residual(k)))
            if res < _residual_tol(spec, k):
                if k.imag >= 0 or k.real <= 0:
                    raise WrongQuadrant(f"Newton from {seed} converged to {k}")
                return ComplexPole(n, k, res)
    raise NoConvergence(f"Newton from {seed} did not converge (last iterate {k})")


def winding_number(func, vertices, max_dphase: float = 0.3, max_rounds: int = 40,
                   density: float = 8.0) -> int:
    """Winding number of ``func`` around a closed polygon, by phase tracking.

    Each edge starts with ``density`` samples per unit length (at least 65)
    and is bisected wherever the phase jumps by more than ``max_dphase``
    between neighbours. ``density`` must be high enough that the phase cannot
    wrap a full turn between two initial samples.
    """
    verts = [complex(v) for v in vertices]
    total = 0.0
    for p0, p1 in zip(verts, verts[1:] + verts[:1]):
        s = np.linspace(0.0, 1.0, max(65, int(density * abs(p1 - p0)) + 1))
        f = func(p0 + s * (p1 - p0))
        for _ in range(max_rounds):
            if np.any(f == 0) or not np.all(np.isfinite(f)):
                raise MissedPole("zero or non-finite residual on the contour")
            dphi = np.angle(f[1:] / f[:-1])
            bad = np.abs(dphi) > max_dphase
            if not bad.any():
                break
            mids = 0.5 * (s[:-1][bad] + s[1:][bad])
            s = np.sort(np.concatenate([s, mids]))
            f = func(p0 + s * (p1 - p0))
        else:
            raise MissedPole("phase along the contour could not be resolved")
        total += dphi.sum()
    wind = total / (2 * math.pi)
    if abs(wind - round(wind)) > 1e-3:
        raise MissedPole(f"non-integer winding {wind}")
    return int(round(wind))


def count_poles(spec: PotentialSpec, re_lo, re_hi, im_lo, im_hi) -> int:
    """Argument-principle count of residual zeros in a rectangle."""
    verts = [complex(re_lo, im_lo), complex(re_hi, im_lo), complex(re_hi, im_hi), complex(re_lo, im_hi)]
    # exp(2ikL) turns by 2L radians per unit of Re k
    return winding_number(spec.residual, verts, density=8.0 * spec.boundary)


def _scan_cell(spec, re_lo, re_hi, im_lo, im_hi, found, depth=0):
    cnt = count_poles(spec, re_lo, re_hi, im_lo, im_hi)
    if cnt == 0:
        return
    if cnt < 0:
        raise MissedPole(f"negative winding in cell {(re_lo, re_hi, im_lo, im_hi)}")
    if cnt == 1:
        centre = complex(0.5 * (re_lo + re_hi), 0.5 * (im_lo + im_hi))
        try:
            p = refine_pole(spec, centre)
        except PoleError:
            p = None
        eps = 1e-9 * max(1.0, abs(centre))
        if p is not None and re_lo - eps <= p.upsilon <= re_hi + eps and im_lo - eps <= p.kappa.imag <= im_hi + eps:
            found.append(p.kappa)
            return
    if depth > 40:
        raise MissedPole(f"could not isolate poles near {complex(re_lo, im_lo)}")
    rm = 0.5 * (re_lo + re_hi)
    im = 0.5 * (im_lo + im_hi)
    for a, b in ((re_lo, rm), (rm, re_hi)):
        for c, d in ((im_lo, im), (im, im_hi)):
            _scan_cell(spec, a, b, c, d, found, depth + 1)


def _scan_strip(spec, re_lo, re_hi, depth, cell=1.0):
    """All poles in ``[re_lo, re_hi] x [-depth, 0.05]`` via a grid of cells."""
    nre = max(1, int(math.ceil((re_hi - re_lo) / cell)))
    nim = max(1, int(math.ceil(depth / cell)))
    re_edges = np.linspace(re_lo, re_hi, nre + 1)
    re_edges[1:-1] += 2.718281e-3 * np.arange(1, nre) / nre
    # irrational-ish offset keeps cell edges off the poles
    im_edges = np.linspace(-depth, 0.05, nim + 1) + 1.234567e-3 * np.arange(nim + 1) / (nim + 1)
    im_edges[-1] = 0.05
    found: list[complex] = []
    for i in range(nre):
        for j in range(nim):
            _scan_cell(spec, re_edges[i], re_edges[i + 1], im_edges[j], im_edges[j + 1], found)
    return found


def _continuation_poles(spec: DeltaShell, count: int) -> list[complex]:
    kappas: list[complex] = []
    for n in range(1, count + 1):
        if n <= 2:
            seed = spec.seed(n)
        else:
            seed = 2 * kappas[-1] - kappas[-2]
        kappas.append(refine_pole(spec, seed, n=n).kappa)
    return kappas


def _validate(spec, kappas, n_want):
    kappas = sorted(kappas, key=lambda z: z.real)
    kap = np.array(kappas)
    if len(kap) > 1:
        d = np.abs(kap[:, None] - kap[None, :]) + np.eye(len(kap)) * 1e9
        if d.min() < 1e-6:
            raise DuplicatePole(f"poles closer than 1e-6: min separation {d.min()}")
        if np.any(np.diff(kap.real) <= 0):
            raise DuplicatePole("pole real parts are not strictly increasing")
    poles = []
    for i, k in enumerate(kappas[:n_want]):
        res = abs(complex(spec.residual(k)))
        if res >= _residual_tol(spec, k) or k.imag >= 0 or k.real <= 0:
            raise PoleError(f"pole {k} fails validation (|residual|={res})")
        poles.append(ComplexPole(i + 1, complex(k), res))
    return poles


def find_poles(spec: PotentialSpec, N: int) -> PoleSet:
    """The N lowest (by real part) fourth-quadrant poles, validated.

    Completeness is checked with the argument principle over a rectangle whose
    right edge sits midway between pole N and pole N+1.
    """
    if int(N) != N or N < 1:
        raise ValueError(f"number of poles must be a positive integer, got {N}")
    N = int(N)
    kappas = None
    re_lo = 0.0
    if isinstance(spec, DeltaShell):
        try:
            kappas = _continuation_poles(spec, N + 1)
            re_lo = 0.5 * kappas[0].real
            depth = 1.5 * max(-k.imag for k in kappas) + 1.0
            re_hi = 0.5 * (kappas[N - 1].real + kappas[N].real)
            n_in = sum(k.real < re_hi for k in kappas)
            if count_poles(spec, re_lo, re_hi, -depth, 0.5) != n_in:
                kappas = None
        except PoleError:
            kappas = None
    if kappas is None:
        kappas, re_lo, re_hi, depth = _strip_search(spec, N)
        if count_poles(spec, re_lo, re_hi, -depth, 0.05) != sum(k.real < re_hi for k in kappas):
            raise MissedPole("argument-principle count disagrees with the scan")
    poles = _validate(spec, kappas, N)
    meta = {"re_lo": re_lo, "re_hi": re_hi, "depth": depth}
    return PoleSet(spec, tuple(poles), meta)


def _strip_search(spec, N):
    re_lo = 0.25
    width = 8.0
    depth = 4.0
    kappas: list[complex] = []
    re_hi = re_lo
    while True:
        kappas += _scan_strip(spec, re_hi, re_hi + width, depth)
        re_hi += width
        kappas.sort(key=lambda z: z.real)
        deepest = max((-k.imag for k in kappas), default=0.0)
        if deepest > 0.5 * depth:
            # rescan everything deeper
            depth = 2.0 * deepest + 2.0
            kappas = _scan_strip(spec, re_lo, re_hi, depth)
            kappas.sort(key=lambda z: z.real)
            continue
        if len(kappas) >= N + 1:
            break
    cut = 0.5 * (kappas[N - 1].real + kappas[N].real)
    return kappas, re_lo, cut, depth


def _spec_header(spec) -> str:
    return f"# fingerprint={fingerprint(spec)} spec={json.dumps(spec.to_dict(), sort_keys=True)} units=hbar=2m=1"


def save_pole_cache(poleset: PoleSet, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [_spec_header(poleset.spec),
             f"# n_below_barrier={poleset.n_below_barrier}",
             "n,re_k,im_k,residual_abs"]
    for p in poleset.poles:
        lines.append(f"{p.n},{p.kappa.real!r},{p.kappa.imag!r},{p.residual_abs:.6e}")
    path.write_text("\n".join(lines) + "\n")
    return path


def load_pole_cache(path, spec: PotentialSpec | None = None) -> PoleSet:
    """Reload a cache file and re-validate every pole against the residual."""
    text = Path(path).read_text().splitlines()
    head = text[0]
    fp = head.split("fingerprint=")[1].split()[0]
    spec_json = head.split("spec=")[1].rsplit(" units=", 1)[0]
    cached_spec = spec_from_dict(json.loads(spec_json))
    if spec is not None and fingerprint(spec) != fp:
        raise ValueError("pole cache belongs to a different potential")
    rows = [ln for ln in text if ln and not ln.startswith("#")][1:]
    kappas = []
    for row in rows:
        _, re_k, im_k, _ = row.split(",")
        kappas.append(complex(float(re_k), float(im_k)))
    poles = _validate(cached_spec, kappas, len(kappas))
    return PoleSet(cached_spec, tuple(poles))
