"""Faddeeva function and the Moshinsky propagation function.

The Faddeeva function ``w(z) = exp(-z**2) erfc(-i z)`` is evaluated with the
region-split scheme of Poppe & Wijers: a power series close to the origin, a
Taylor expansion whose derivatives come from the Laplace continued fraction in
an intermediate annulus, and the bare continued fraction further out. All
arithmetic is vectorized over numpy arrays; scalar inputs return scalars.

The Moshinsky function ``M(y) = 1/2 exp(i X**2 / 4t) w(i y)`` is what the
resonance expansion actually needs. In the regime where ``w(i y)`` would have to
be obtained by reflection, ``M`` is assembled directly as the pole term
``exp(i kappa X - i kappa**2 t)`` minus a bounded upper-half-plane Faddeeva value,
so no intermediate overflows.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "faddeeva_w",
    "faddeeva_w_flagged",
    "moshinsky_arg",
    "moshinsky_m",
    "moshinsky_m_flagged",
]

_TWO_OVER_SQRT_PI = 1.12837916709551257388
# largest exponent with exp(x) finite in double precision
_MAX_EXP = 709.0
_E_MINUS_I_PI_4 = np.exp(-0.25j * np.pi)


def _w_first_quadrant(xa: np.ndarray, ya: np.ndarray) -> np.ndarray:
    """w(x + iy) for x >= 0, y >= 0 (1-d arrays of equal length)."""
    x = xa / 6.3
    y = ya / 4.4
    qrho = x * x + y * y
    xquad = xa * xa - ya * ya
    yquad = 2.0 * xa * ya
    out = np.empty(xa.shape, dtype=complex)

    series = qrho < 0.085264
    if series.any():
        xq, yq = xquad[series], yquad[series]
        xs_, ys_ = xa[series], ya[series]
        nterm = np.rint(6 + 72 * (1 - 0.85 * y[series]) * np.sqrt(qrho[series])).astype(int)
        j = 2.0 * nterm + 1.0
        sx = 1.0 / j
        sy = np.zeros_like(sx)
        for i in range(int(nterm.max()), 0, -1):
            act = i <= nterm
            jj = j - 2.0
            tx = (sx * xq - sy * yq) / i
            ty = (sx * yq + sy * xq) / i
            sx = np.where(act, tx + 1.0 / jj, sx)
            sy = np.where(act, ty, sy)
            j = np.where(act, jj, j)
        u1 = 1.0 - _TWO_OVER_SQRT_PI * (sx * ys_ + sy * xs_)
        v1 = _TWO_OVER_SQRT_PI * (sx * xs_ - sy * ys_)
        damp = np.exp(-xq)
        u2 = damp * np.cos(yq)
        v2 = -damp * np.sin(yq)
        out[series] = (u1 * u2 - v1 * v2) + 1j * (u1 * v2 + v1 * u2)

    cf = np.flatnonzero(~series)
    if cf.size:
        qr = qrho[cf]
        far = qr > 1.0
        inner = np.where(far, 0.0, (1 - y[cf]) * np.sqrt(np.clip(1 - qr, 0.0, None)))
        # a zero Taylor step (on |z| = boundary or y = 4.4) means the bare fraction
        kapn = np.where(far | (inner == 0.0), 0, np.rint(7 + 34 * inner)).astype(int)
        nu = np.where(far, (3 + 1442 / (26 * np.sqrt(qr) + 77)).astype(int),
                      np.rint(16 + 26 * inner).astype(int))
        # group by iteration counts so each group runs an unmasked recurrence
        key = nu * 1000 + kapn
        for k in np.unique(key):
            sel = key == k
            out[cf[sel]] = _laplace_cf(xa[cf[sel]], ya[cf[sel]], 1.88 * inner[sel], int(k // 1000), int(k % 1000))
    return out


def _laplace_cf(X, Y, h, nu, kapn):
    """Laplace continued fraction, optionally feeding a Taylor step of size h."""
    rx = np.zeros_like(X)
    ry = np.zeros_like(X)
    taylor = kapn > 0
    if taylor:
        h2 = 2.0 * h
        lam = h2 ** kapn
        sx = np.zeros_like(X)
        sy = np.zeros_like(X)
    else:
        h = 0.0
    for n in range(nu, -1, -1):
        np1 = n + 1
        tx = Y + h + np1 * rx
        ty = X - np1 * ry
        c = 0.5 / (tx * tx + ty * ty)
        rx = c * tx
        ry = c * ty
        if taylor and n <= kapn:
            t2 = lam + sx
            sx, sy = rx * t2 - ry * sy, ry * t2 + rx * sy
            lam = lam / h2
    if taylor:
        rx, ry = sx, sy
    u = _TWO_OVER_SQRT_PI * rx
    v = _TWO_OVER_SQRT_PI * ry
    u = np.where(Y == 0.0, np.exp(-X * X), u)
    return u + 1j * v


def _w_upper(z: np.ndarray) -> np.ndarray:
    """w(z) for Im z >= 0 (flat array)."""
    w = _w_first_quadrant(np.abs(z.real), z.imag)
    return np.where(z.real < 0, np.conj(w), w)


def faddeeva_w_flagged(z):
    """Faddeeva function with an overflow mask.

    Returns ``(w, overflow)``. Where ``Im z < 0`` the value comes from the
    reflection ``w(z) = 2 exp(-z**2) - w(-z)``; entries whose ``exp(-z**2)``
    leaves the double range are set to ``nan`` and flagged instead of becoming
    infinite.
    """
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    zf = np.atleast_1d(z).ravel()
    w = np.empty(zf.shape, dtype=complex)
    flag = np.zeros(zf.shape, dtype=bool)

    up = zf.imag >= 0
    if up.any():
        w[up] = _w_upper(zf[up])
    lo = ~up
    if lo.any():
        zl = zf[lo]
        expo = -(zl * zl)
        over = expo.real > _MAX_EXP
        refl = 2.0 * np.exp(np.where(over, 0.0, expo)) - _w_upper(-zl)
        refl[over] = complex(np.nan, np.nan)
        w[lo] = refl
        flag[lo] = over
    w = w.reshape(z.shape) if not scalar else w[0]
    flag = flag.reshape(z.shape) if not scalar else bool(flag[0])
    return w, flag


def faddeeva_w(z):
    """Faddeeva (complex error) function ``exp(-z**2) erfc(-i z)``.

    Relative accuracy is close to machine precision in the upper half plane.
    Overflowing lower-half-plane values are returned as ``nan``; use
    :func:`faddeeva_w_flagged` to get the mask.
    """
    return faddeeva_w_flagged(z)[0]


def moshinsky_arg(r, a, t, kappa):
    """Argument ``y = e^{-i pi/4} (1/4t)^{1/2} [(r - a) - 2 kappa t]``."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("Moshinsky argument needs t > 0")
    return _E_MINUS_I_PI_4 * np.sqrt(0.25 / t) * ((np.asarray(r) - a) - 2.0 * np.asarray(kappa) * t)


def _moshinsky_direct(X, t, z):
    return 0.5 * np.exp(1j * X * X / (4.0 * t)) * _w_upper(z)


def _moshinsky_reflected(X, t, kappa, z):
    expo = 1j * kappa * X - 1j * kappa * kappa * t
    over = expo.real > _MAX_EXP
    pole = np.exp(np.where(over, 0.0, expo))
    val = pole - 0.5 * np.exp(1j * X * X / (4.0 * t)) * _w_upper(-z)
    val = np.where(over, complex(np.nan, np.nan), val)
    return val, over


def moshinsky_m_flagged(r, a, t, kappa):
    """Moshinsky function and overflow mask, broadcasting over all inputs.

    ``M = (i / 2 pi) int exp(i k (r-a)) exp(-i k**2 t) / (k - kappa) dk``.
    """
    r, t, kappa = np.broadcast_arrays(np.asarray(r, dtype=float),
                                      np.asarray(t, dtype=float),
                                      np.asarray(kappa, dtype=complex))
    if np.any(t <= 0):
        raise ValueError("Moshinsky function needs t > 0")
    shape = r.shape
    X = (r - a).ravel()
    tf = t.ravel()
    kf = kappa.ravel()
    # z = i y
    z = 1j * _E_MINUS_I_PI_4 * np.sqrt(0.25 / tf) * (X - 2.0 * kf * tf)
    out = np.empty(z.shape, dtype=complex)
    flag = np.zeros(z.shape, dtype=bool)
    up = z.imag >= 0
    if up.any():
        out[up] = _moshinsky_direct(X[up], tf[up], z[up])
    lo = ~up
    if lo.any():
        out[lo], flag[lo] = _moshinsky_reflected(X[lo], tf[lo], kf[lo], z[lo])
    if shape == ():
        return out[0], bool(flag[0])
    return out.reshape(shape), flag.reshape(shape)


def moshinsky_m(r, a, t, kappa):
    """Moshinsky function ``M(y)`` for ``r >= a`` (or ``r = a`` for the interior
    argument), ``t > 0``. Overflowing entries are ``nan``."""
    return moshinsky_m_flagged(r, a, t, kappa)[0]
