"""Special functions used by the reconstruction pipelines.

Cylindrical and spherical Bessel/Hankel functions are thin wrappers over
:mod:`scipy.special` with an explicit overflow convention; the normalized
associated Legendre functions (and the spherical harmonics built from them)
are computed here with the standard three-term recurrences.

Overflow convention
-------------------
For orders much larger than the argument, ``|H_k(x)|`` exceeds the double
range.  In that case :func:`hankel1` and :func:`spherical_h1` return a value
whose imaginary part is ``-inf``.  :func:`is_overflow` detects the flag and
:func:`inv_hankel1` / :func:`inv_spherical_h1` map such entries to an exact
zero, which is what the spectral filters need.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

__all__ = [
    "bessel_j",
    "hankel1",
    "spherical_j",
    "spherical_h1",
    "is_overflow",
    "inv_hankel1",
    "inv_spherical_h1",
    "LegendreTable",
    "legendre_index",
    "sph_harm",
    "truncation_order",
]


def _complex(re, im):
    out = np.empty(np.broadcast(re, im).shape, dtype=complex)
    out.real = re
    out.imag = im
    return out


def _check_nonneg_order(order):
    order = np.asarray(order)
    if np.any(order < 0):
        raise ValueError("Bessel order must be non-negative")
    return order


def bessel_j(order, x):
    """Cylindrical Bessel function of the first kind, ``J_order(x)``.

    Raises
    ------
    ValueError
        If any ``x`` is negative or ``order`` is negative.
    """
    order = _check_nonneg_order(order)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("bessel_j is defined here for x >= 0 only")
    out = special.jv(order, x)
    return out[()] if np.ndim(out) == 0 else out


def hankel1(order, x):
    """Hankel function of the first kind ``H^(1)_order(x) = J + iY``.

    Where ``Y`` overflows, the result carries ``-inf`` in its imaginary part
    (see the module docstring).
    """
    order = _check_nonneg_order(order)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("hankel1 requires x > 0")
    j = special.jv(order, x)
    y = special.yv(order, x)
    # yv saturates to -inf for large order / small x; jv is then ~0
    y = np.where(np.isnan(y), -np.inf, y)
    out = _complex(j, y)
    return out[()] if np.ndim(out) == 0 else out


def spherical_j(order, x):
    """Spherical Bessel function ``j_order(x)`` for ``x >= 0``."""
    order = _check_nonneg_order(order)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("spherical_j is defined here for x >= 0 only")
    out = special.spherical_jn(order, x)
    return out[()] if np.ndim(out) == 0 else out


def spherical_h1(order, x):
    """Spherical Hankel function ``h^(1)_order(x) = j + i y``.

    ``h_0`` is evaluated from its closed form ``-i e^{ix} / x``.
    """
    order = _check_nonneg_order(order)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("spherical_h1 requires x > 0")
    order, x = np.broadcast_arrays(order, x)
    j = special.spherical_jn(order, x)
    y = special.spherical_yn(order, x)
    y = np.where(np.isnan(y), -np.inf, y)
    out = _complex(j, y)
    zero = order == 0
    if np.any(zero):
        out = np.where(zero, -1j * np.exp(1j * x) / np.where(zero, x, 1.0), out)
    return out[()] if np.ndim(out) == 0 else out


def is_overflow(h):
    """True where a Hankel value carries the overflow flag."""
    return ~np.isfinite(np.asarray(h))


def _safe_inverse(h):
    h = np.asarray(h)
    bad = is_overflow(h)
    inv = 1.0 / np.where(bad, 1.0, h)
    return np.where(bad, 0.0, inv)


def inv_hankel1(order, x):
    """``1 / H^(1)_order(x)`` with overflowed entries mapped to 0."""
    with np.errstate(over="ignore", invalid="ignore"):
        return _safe_inverse(hankel1(order, x))


def inv_spherical_h1(order, x):
    """``1 / h^(1)_order(x)`` with overflowed entries mapped to 0."""
    with np.errstate(over="ignore", invalid="ignore"):
        return _safe_inverse(spherical_h1(order, x))


def truncation_order(lam, radius, cap=None):
    """Harmonic truncation ``ceil(e * lam * radius / 2) + 20``, optionally capped."""
    k = int(math.ceil(math.e * lam * radius / 2.0)) + 20
    return k if cap is None else min(k, int(cap))


def legendre_index(degree, order):
    """Row of ``(degree, order)`` (``0 <= order <= degree``) in a packed table."""
    return degree * (degree + 1) // 2 + order


@dataclass(frozen=True)
class LegendreTable:
    """Orthonormal associated Legendre values ``Pbar_s^p(cos theta)``.

    ``values[legendre_index(s, p), j]`` holds ``Pbar_s^p(nodes[j])`` for
    ``0 <= p <= s <= max_degree``.  The normalization (with Condon-Shortley
    phase) is chosen so that ``Pbar_s^p(cos theta) * exp(i p phi)`` is an
    orthonormal spherical harmonic on the unit sphere.
    """

    max_degree: int
    nodes: np.ndarray
    values: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, max_degree, nodes):
        if max_degree < 0:
            raise ValueError("max_degree must be non-negative")
        x = np.asarray(nodes, dtype=float).ravel()
        if np.any(np.abs(x) > 1):
            raise ValueError("Legendre nodes must lie in [-1, 1]")
        S = int(max_degree)
        u = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
        table = np.zeros(((S + 1) * (S + 2) // 2, x.size))
        diag = np.full(x.size, 1.0 / math.sqrt(4.0 * math.pi))
        for p in range(S + 1):
            if p > 0:
                diag = -math.sqrt((2.0 * p + 1.0) / (2.0 * p)) * u * diag
            table[legendre_index(p, p)] = diag
            if p + 1 <= S:
                prev2 = diag
                prev1 = math.sqrt(2.0 * p + 3.0) * x * diag
                table[legendre_index(p + 1, p)] = prev1
                for s in range(p + 2, S + 1):
                    a = math.sqrt((4.0 * s * s - 1.0) / (s * s - p * p))
                    b = math.sqrt(((s - 1.0) ** 2 - p * p) / (4.0 * (s - 1.0) ** 2 - 1.0))
                    cur = a * (x * prev1 - b * prev2)
                    table[legendre_index(s, p)] = cur
                    prev2, prev1 = prev1, cur
        table.setflags(write=False)
        x.setflags(write=False)
        return cls(S, x, table)

    def get(self, degree, order):
        """``Pbar_degree^order`` at every node, for ``|order| <= degree``."""
        if abs(order) > degree or degree > self.max_degree:
            raise IndexError(f"invalid Legendre index ({degree}, {order})")
        row = self.values[legendre_index(degree, abs(order))]
        return -row if order < 0 and order % 2 else row

    def order_block(self, order):
        """Rows ``Pbar_s^order`` for ``s = order..max_degree`` as a 2-D array."""
        idx = [legendre_index(s, order) for s in range(order, self.max_degree + 1)]
        return self.values[idx]


def sph_harm(degree, order, theta, phi):
    """Orthonormal complex spherical harmonic ``Y_degree^order(theta, phi)``.

    ``theta`` is the polar angle and ``phi`` the azimuth.  Satisfies
    ``Y_s^{-p} = (-1)^p conj(Y_s^p)``.
    """
    if abs(order) > degree or degree < 0:
        raise IndexError(f"|order| must not exceed degree (got {degree}, {order})")
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    theta, phi = np.broadcast_arrays(theta, phi)
    table = LegendreTable.build(degree, np.cos(theta).ravel())
    leg = table.get(degree, order).reshape(theta.shape)
    out = leg * np.exp(1j * order * phi)
    return out[()] if out.ndim == 0 else out
