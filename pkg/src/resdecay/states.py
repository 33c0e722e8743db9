"""Normalized resonance states, expansion coefficients and their diagnostics.

Every model is treated as a chain of constant-potential regions. On a region
starting at ``x_r`` with potential ``V_r`` a state is

    u(x_r + s) = u_r cos(p s) + u_r' sin(p s) / p,   p**2 = kappa**2 - V_r,

which is entire in ``p**2``, so no square-root branch enters. Normalization
and overlaps with box states are closed-form integrals of these pieces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import BoxMode, DeltaShell, DoubleBarrier, PotentialSpec, transfer_step
from .poles import ComplexPole, PoleSet

__all__ = [
    "DegenerateNormalizer",
    "ResonanceBasis",
    "ResonanceState",
    "Expansion",
    "normalize_state",
    "coefficient",
    "build_expansion",
    "sum_rule",
    "reconstruct_initial",
]


class DegenerateNormalizer(ArithmeticError):
    pass


def _regions(spec: PotentialSpec):
    if isinstance(spec, DeltaShell):
        return [(0.0, spec.a, 0.0)]
    return spec.regions()


def _left_condition(spec, kappa):
    """Unnormalized ``(u, u')`` at the left edge of the first region."""
    if isinstance(spec, DeltaShell):
        return np.zeros_like(kappa), np.ones_like(kappa)
    return np.ones_like(kappa), -1j * kappa


def _int_S2(k2, d):
    """Integral of (sin(ps)/p)**2 over [0, d]: (d - cS) / (2 p**2)."""
    c, S, _ = transfer_step(k2, d)
    small = np.abs(k2) * d * d < 1e-3
    safe = np.where(small, 1.0, k2)
    series = d ** 3 / 3 - k2 * d ** 5 / 15 + 2 * k2 ** 2 * d ** 7 / 315
    return np.where(small, series, (d - c * S) / (2 * safe))


def _half_sinc(alpha, h):
    """sin(alpha h) / alpha, equal to h at alpha = 0."""
    tiny = np.abs(alpha) < 1e-300
    safe = np.where(tiny, 1.0, alpha)
    return np.where(tiny, h, np.sin(alpha * h) / safe)


def _trig_overlaps(P, p, s0, s1):
    """Integrals over [s0, s1] of sin(Ps), cos(Ps) against cos(ps), sin(ps)/p.

    Returns ``(I_sc, I_sS, I_cc, I_cS)``.
    """
    m = 0.5 * (s0 + s1)
    h = 0.5 * (s1 - s0)

    def Jc(a):
        return 2 * np.cos(a * m) * _half_sinc(a, h)

    def Js(a):
        return 2 * np.sin(a * m) * _half_sinc(a, h)

    ap, am = P + p, P - p
    I_sc = 0.5 * (Js(ap) + Js(am))
    I_cc = 0.5 * (Jc(am) + Jc(ap))
    I_sS = 0.5 * (Jc(am) - Jc(ap)) / p
    I_cS = 0.5 * (Js(ap) - Js(am)) / p
    return I_sc, I_sS, I_cc, I_cS


@dataclass(frozen=True)
class ResonanceState:
    """One normalized resonance eigenfunction.

    ``amplitude`` is ``A`` in ``A sin(kappa r)`` for the delta shell and
    ``u(0)`` for the double barrier. ``edges`` holds ``(u, u')`` at the left
    edge of every region followed by the value at the outer boundary.
    """

    spec: PotentialSpec
    pole: ComplexPole
    amplitude: complex
    edges: np.ndarray = field(repr=False)

    @property
    def kappa(self) -> complex:
        return self.pole.kappa

    @property
    def boundary(self) -> float:
        return self.spec.boundary

    @property
    def boundary_value(self) -> complex:
        return complex(self.edges[-1, 0])

    @property
    def boundary_derivative(self) -> complex:
        return complex(self.edges[-1, 1])

    def __call__(self, x):
        basis = ResonanceBasis(self.spec, np.array([self.kappa]), np.array([self.amplitude]),
                               self.edges[None])
        return basis.values(x)[0]

    def normalization_integral(self, quad=False) -> complex:
        """``int u**2 + i (surface terms) / (2 kappa)``; equals 1 when normalized."""
        basis = ResonanceBasis(self.spec, np.array([self.kappa]), np.array([self.amplitude]),
                               self.edges[None])
        return complex(basis.normalization_integrals()[0])


@dataclass(frozen=True)
class ResonanceBasis:
    """Vectorized storage of the states belonging to a pole set."""

    spec: PotentialSpec
    kappa: np.ndarray
    amplitude: np.ndarray
    edges: np.ndarray = field(repr=False)  # (N, R + 1, 2)

    @classmethod
    def from_kappas(cls, spec: PotentialSpec, kappa) -> "ResonanceBasis":
        kappa = np.atleast_1d(np.asarray(kappa, dtype=complex))
        u, up = _left_condition(spec, kappa)
        edges = [(u, up)]
        for _, d, v in _regions(spec):
            c, S, pS = transfer_step(kappa * kappa - v, d)
            u, up = c * u + S * up, -pS * u + c * up
            edges.append((u, up))
        raw = np.moveaxis(np.array(edges), -1, 0)  # (N, R+1, 2)
        basis = cls(spec, kappa, np.ones_like(kappa), raw)
        integral = basis.normalization_integrals()
        if np.any(np.abs(integral) < 1e-14):
            raise DegenerateNormalizer("resonance normalizer vanishes; wrong pole?")
        if isinstance(spec, DeltaShell):
            # raw state is sin(kappa r)/kappa
            amp = np.sqrt(1.0 / (kappa * kappa * integral))
            scale = amp * kappa
        else:
            amp = np.sqrt(1.0 / integral)
            scale = amp
        return cls(spec, kappa, amp, raw * scale[:, None, None])

    @property
    def N(self) -> int:
        return len(self.kappa)

    @property
    def boundary_values(self) -> np.ndarray:
        return self.edges[:, -1, 0]

    @property
    def left_values(self) -> np.ndarray:
        return self.edges[:, 0, 0]

    def state(self, pole: ComplexPole, i: int) -> ResonanceState:
        return ResonanceState(self.spec, pole, complex(self.amplitude[i]), self.edges[i])

    def normalization_integrals(self) -> np.ndarray:
        k = self.kappa
        total = np.zeros_like(k)
        for r, (_, d, v) in enumerate(_regions(self.spec)):
            k2 = k * k - v
            c, S, _ = transfer_step(k2, d)
            u0, up0 = self.edges[:, r, 0], self.edges[:, r, 1]
            int_cc = 0.5 * (d + c * S)
            int_cS = 0.5 * S * S
            total = total + u0 * u0 * int_cc + 2 * u0 * up0 * int_cS + up0 * up0 * _int_S2(k2, d)
        surface = self.edges[:, -1, 0] ** 2
        if isinstance(self.spec, DoubleBarrier):
            surface = surface + self.edges[:, 0, 0] ** 2
        return total + 1j * surface / (2 * k)

    def values(self, x) -> np.ndarray:
        """``u_n(x)`` with shape ``(N,) + x.shape``."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        xf = np.atleast_1d(x).ravel()
        k = self.kappa[:, None]
        out = np.zeros((self.N, xf.size), dtype=complex)
        regions = _regions(self.spec)
        L = self.spec.boundary
        for r, (x0, d, v) in enumerate(regions):
            last = r == len(regions) - 1
            sel = (xf >= x0) & ((xf <= x0 + d) if last else (xf < x0 + d))
            if sel.any():
                s = xf[sel][None, :] - x0
                p = np.sqrt(k * k - v)
                S = np.where(np.abs(p * s) < 1e-8, s, np.sin(p * s) / np.where(p == 0, 1, p))
                out[:, sel] = self.edges[:, r, 0][:, None] * np.cos(p * s) + self.edges[:, r, 1][:, None] * S
        right = xf > L
        if right.any():
            out[:, right] = self.boundary_values[:, None] * np.exp(1j * k * (xf[right][None, :] - L))
        left = xf < self.spec.left
        if left.any():
            if isinstance(self.spec, DoubleBarrier):
                out[:, left] = self.left_values[:, None] * np.exp(-1j * k * xf[left][None, :])
            else:
                out[:, left] = 0.0
        if scalar:
            return out[:, 0]
        return out.reshape((self.N,) + x.shape)

    def overlaps(self, init: BoxMode) -> np.ndarray:
        """``int init(x) u_n(x) dx`` in closed form for all n."""
        P = init.wavenumber
        norm = math.sqrt(2.0 / init.length)
        total = np.zeros(self.N, dtype=complex)
        covered = 0.0
        for r, (x0, d, v) in enumerate(_regions(self.spec)):
            lo, hi = max(x0, init.x0), min(x0 + d, init.x1)
            if hi <= lo:
                continue
            covered += hi - lo
            p = np.sqrt(self.kappa ** 2 - v)
            I_sc, I_sS, I_cc, I_cS = _trig_overlaps(P, p, lo - x0, hi - x0)
            phi = P * (x0 - init.x0)
            u0, up0 = self.edges[:, r, 0], self.edges[:, r, 1]
            total = total + norm * (math.sin(phi) * (u0 * I_cc + up0 * I_cS)
                                    + math.cos(phi) * (u0 * I_sc + up0 * I_sS))
        if covered < init.length * (1 - 1e-12):
            raise ValueError("initial state support must lie inside the confinement region")
        return total


def normalize_state(spec: PotentialSpec, pole: ComplexPole) -> ResonanceState:
    basis = ResonanceBasis.from_kappas(spec, [pole.kappa])
    return basis.state(pole, 0)


def coefficient(state: ResonanceState, init: BoxMode) -> complex:
    basis = ResonanceBasis(state.spec, np.array([state.kappa]), np.array([state.amplitude]),
                           state.edges[None])
    return complex(basis.overlaps(init)[0])


@dataclass(frozen=True)
class Expansion:
    """Poles, states and coefficients for one or two initial box states."""

    spec: PotentialSpec
    poles: PoleSet
    basis: ResonanceBasis
    initial: dict
    coeffs: dict
    coeffs_bar: dict

    @property
    def N(self) -> int:
        return self.basis.N

    @property
    def kappa(self) -> np.ndarray:
        return self.basis.kappa

    @property
    def tau(self) -> float:
        """Lifetime unit: lifetime of the first pole."""
        return self.poles[0].lifetime

    @property
    def labels(self) -> tuple:
        return tuple(self.initial)

    def truncated(self, n: int) -> "Expansion":
        if not 1 <= n <= self.N:
            raise ValueError(f"truncation must be in 1..{self.N}, got {n}")
        b = self.basis
        basis = ResonanceBasis(b.spec, b.kappa[:n], b.amplitude[:n], b.edges[:n])
        return Expansion(self.spec, self.poles.truncated(n), basis, dict(self.initial),
                         {k: v[:n] for k, v in self.coeffs.items()},
                         {k: v[:n] for k, v in self.coeffs_bar.items()})

    def state(self, i: int) -> ResonanceState:
        return self.basis.state(self.poles[i], i)

    def write_coefficients(self, label, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        C = self.coeffs[label]
        Cb = self.coeffs_bar[label]
        lines = ["n,re_C,im_C,re_CCbar"]
        for i, (c, cb) in enumerate(zip(C, Cb), start=1):
            lines.append(f"{i},{float(c.real)!r},{float(c.imag)!r},{float((c * cb).real)!r}")
        path.write_text("\n".join(lines) + "\n")
        return path


def build_expansion(poles: PoleSet, initial) -> Expansion:
    """Expansion of one or more box states in the resonance states of ``poles``.

    ``initial`` maps labels to :class:`BoxMode` (a single BoxMode is stored
    under ``"alpha"``).
    """
    if isinstance(initial, BoxMode):
        initial = {"alpha": initial}
    basis = ResonanceBasis.from_kappas(poles.spec, poles.kappas)
    coeffs = {lab: basis.overlaps(st) for lab, st in initial.items()}
    # real initial states: the conjugated-state overlap equals C itself
    coeffs_bar = {lab: c.copy() for lab, c in coeffs.items()}
    return Expansion(poles.spec, poles, basis, dict(initial), coeffs, coeffs_bar)


def sum_rule(expansion: Expansion, N: int, label="alpha") -> float:
    """``Re sum_{n<=N} C_n Cbar_n``."""
    if N > expansion.N:
        raise ValueError(f"sum rule needs N <= {expansion.N}")
    C = expansion.coeffs[label][:N]
    Cb = expansion.coeffs_bar[label][:N]
    return float(np.sum(C * Cb).real) if N > 0 else 0.0


def reconstruct_initial(expansion: Expansion, x, N: int | None = None, label="alpha"):
    """``Re sum_{n<=N} C_n u_n(x)``, which tends to the initial state inside the region."""
    N = expansion.N if N is None else N
    if N > expansion.N:
        raise ValueError(f"reconstruction needs N <= {expansion.N}")
    u = expansion.basis.values(x)[:N]
    C = expansion.coeffs[label][:N]
    return np.tensordot(C, u, axes=(0, 0)).real
