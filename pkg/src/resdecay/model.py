"""Potentials, confinement geometry and the initial box states.

Units are natural, hbar = 2m = 1, so the energy of wavenumber k is k**2.

Two exactly solvable models are supported:

* :class:`DeltaShell` -- ``V(r) = lam * delta(r - a)`` on the half line with
  ``u(0) = 0``. Its resonance poles solve ``2ik + lam (exp(2ika) - 1) = 0``.
* :class:`DoubleBarrier` -- two rectangular barriers of height ``V`` and width
  ``b`` around a well of width ``w`` on the full line, occupying
  ``[0, b]`` and ``[b + w, 2b + w]``. Poles are zeros of
  ``u'(L) - ik u(L)`` for the solution that leaves the left edge as
  ``exp(-ikx)``, propagated by 2x2 transfer matrices.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass
from typing import Union

import numpy as np

__all__ = [
    "DeltaShell",
    "DoubleBarrier",
    "PotentialSpec",
    "BoxMode",
    "spec_from_dict",
    "pole_residual",
    "pole_residual_derivative",
    "pole_seed",
    "initial_state_value",
    "transfer_step",
]


def transfer_step(k2, d):
    """Transfer matrix entries ``(cos(pd), sin(pd)/p, -p sin(pd))`` for ``p**2 = k2``.

    All three are entire in ``k2`` so no branch of the square root is chosen.
    Returns ``(c, s, ps)`` with ``s = sin(pd)/p`` and ``ps = p**2 * s``.
    """
    k2 = np.asarray(k2, dtype=complex)
    p = np.sqrt(k2)
    pd = p * d
    small = np.abs(pd) < 1e-4
    safe_p = np.where(small, 1.0, p)
    c = np.cos(pd)
    # sin(pd)/p = d (1 - (pd)^2/6 + (pd)^4/120) near zero
    s = np.where(small, d * (1 - pd * pd / 6 + pd ** 4 / 120), np.sin(pd) / safe_p)
    return c, s, k2 * s


def _transfer_step_dk(k, k2, d):
    """Derivatives of ``(c, s)`` with respect to ``k`` where ``k2 = k**2 - V``."""
    c, s, _ = transfer_step(k2, d)
    # dc/dk2 = -d s / 2 ; ds/dk2 = (d c - s) / (2 k2)
    k2 = np.asarray(k2, dtype=complex)
    small = np.abs(k2) * d * d < 1e-6
    safe = np.where(small, 1.0, k2)
    ds_dk2 = np.where(small, -d ** 3 / 6 + k2 * d ** 5 / 60, (d * c - s) / (2 * safe))
    dc_dk2 = -0.5 * d * s
    return 2 * k * dc_dk2, 2 * k * ds_dk2


@dataclass(frozen=True)
class DeltaShell:
    """Delta-shell potential ``lam * delta(r - a)`` on ``[0, inf)``."""

    lam: float = 100.0
    a: float = 1.0
    kind: str = "delta_shell"

    def __post_init__(self):
        if not (self.lam > 0 and self.a > 0):
            raise ValueError(f"delta shell needs lam > 0 and a > 0, got {self}")

    @property
    def boundary(self) -> float:
        return self.a

    @property
    def left(self) -> float:
        return 0.0

    @property
    def scale(self) -> float:
        return max(1.0, self.lam)

    @property
    def barrier_top(self) -> float:
        return math.inf

    def residual(self, k):
        k = np.asarray(k, dtype=complex)
        return 2j * k + self.lam * (np.exp(2j * k * self.a) - 1.0)

    def residual_dk(self, k):
        k = np.asarray(k, dtype=complex)
        return 2j + 2j * self.a * self.lam * np.exp(2j * k * self.a)

    def seed(self, n: int) -> complex:
        la = self.lam * self.a
        return complex(n * math.pi / self.a * (1 - 1 / la),
                       -(n * math.pi / la) ** 2 / self.a)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DoubleBarrier:
    """Double rectangular barrier: height ``V``, barrier width ``b``, well ``w``."""

    V: float = 40.0
    b: float = 1.0
    w: float = 1.0
    kind: str = "double_barrier"

    def __post_init__(self):
        if not (self.V > 0 and self.b > 0 and self.w > 0):
            raise ValueError(f"double barrier needs V, b, w > 0, got {self}")

    @property
    def boundary(self) -> float:
        return 2 * self.b + self.w

    @property
    def left(self) -> float:
        return 0.0

    @property
    def scale(self) -> float:
        return max(1.0, self.V)

    @property
    def barrier_top(self) -> float:
        return math.sqrt(self.V)

    @property
    def well(self) -> tuple[float, float]:
        return (self.b, self.b + self.w)

    def regions(self) -> list[tuple[float, float, float]]:
        """``(x_start, width, potential)`` for the three inner regions."""
        return [(0.0, self.b, self.V), (self.b, self.w, 0.0), (self.b + self.w, self.b, self.V)]

    def edge_values(self, k):
        """``(u, u')`` at the left edge of each region and at ``L``.

        The solution is the one with ``u(0) = 1``, ``u'(0) = -ik``. Shape of the
        result is ``(4, 2) + k.shape``.
        """
        k = np.asarray(k, dtype=complex)
        u = np.ones_like(k)
        up = -1j * k
        out = [(u, up)]
        for _, d, v in self.regions():
            c, s, ps = transfer_step(k * k - v, d)
            u, up = c * u + s * up, -ps * u + c * up
            out.append((u, up))
        return np.array(out)

    def residual(self, k):
        k = np.asarray(k, dtype=complex)
        u, up = self.edge_values(k)[-1]
        return up - 1j * k * u

    def residual_dk(self, k):
        """Analytic k-derivative of :meth:`residual` by the product rule."""
        k = np.asarray(k, dtype=complex)
        u = np.ones_like(k)
        up = -1j * k
        du = np.zeros_like(k)
        dup = np.full_like(k, -1j)
        for _, d, v in self.regions():
            k2 = k * k - v
            c, s, ps = transfer_step(k2, d)
            dc, ds = _transfer_step_dk(k, k2, d)
            dps = 2 * k * s + k2 * ds
            nu = c * u + s * up
            nup = -ps * u + c * up
            ndu = dc * u + c * du + ds * up + s * dup
            ndup = -dps * u - ps * du + dc * up + c * dup
            u, up, du, dup = nu, nup, ndu, ndup
        return dup - 1j * u - 1j * k * du

    def seed(self, n: int) -> complex:
        # well-mode estimate; above-barrier poles come from the contour scan
        return complex(n * math.pi / self.w, -1e-3)

    def to_dict(self) -> dict:
        return asdict(self)


PotentialSpec = Union[DeltaShell, DoubleBarrier]


def spec_from_dict(d: dict) -> PotentialSpec:
    d = dict(d)
    kind = d.pop("kind", None)
    if kind == "delta_shell":
        return DeltaShell(**d)
    if kind == "double_barrier":
        return DoubleBarrier(**d)
    raise ValueError(f"unknown potential kind {kind!r}")


def fingerprint(spec: PotentialSpec) -> str:
    """Short stable hash of the potential parameters."""
    blob = json.dumps(spec.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def pole_residual(spec: PotentialSpec, k):
    """Analytic function of k whose fourth-quadrant zeros are the resonance poles."""
    return spec.residual(k)


def pole_residual_derivative(spec: PotentialSpec, k):
    return spec.residual_dk(k)


def pole_seed(spec: PotentialSpec, n: int) -> complex:
    """Starting guess for the n-th pole (n >= 1)."""
    if int(n) != n or n < 1:
        raise ValueError(f"pole index must be a positive integer, got {n}")
    return spec.seed(int(n))


@dataclass(frozen=True)
class BoxMode:
    """Infinite-box eigenstate ``sqrt(2/l) sin(q pi (x - x0)/l)`` on ``[x0, x1]``."""

    q: int = 1
    x0: float = 0.0
    x1: float = 1.0

    def __post_init__(self):
        if int(self.q) != self.q or self.q < 1:
            raise ValueError(f"box mode index must be a positive integer, got {self.q}")
        if not self.x1 > self.x0:
            raise ValueError("box support must have x1 > x0")

    @property
    def length(self) -> float:
        return self.x1 - self.x0

    @property
    def wavenumber(self) -> float:
        return self.q * math.pi / self.length

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.x0) & (x <= self.x1)
        val = math.sqrt(2 / self.length) * np.sin(self.wavenumber * (x - self.x0))
        return np.where(inside, val, 0.0)

    @classmethod
    def for_spec(cls, spec: PotentialSpec, q: int) -> "BoxMode":
        """Box mode filling the confinement region (the well for a double barrier)."""
        if isinstance(spec, DoubleBarrier):
            return cls(q, *spec.well)
        return cls(q, 0.0, spec.a)

    def to_dict(self) -> dict:
        return asdict(self)


def initial_state_value(state: BoxMode, x):
    return state(x)
