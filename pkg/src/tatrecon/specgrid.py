"""Regridding of non-Cartesian spectra and the Cartesian inverse transforms.

Radial interpolation uses a 4-point Lagrange cubic (one-sided at the first and
last radial intervals); angular interpolation is linear in 2-D and bilinear in
``(theta, phi)`` in 3-D.  Nodes beyond the last sampled radius are zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

__all__ = [
    "PolarSpectrum",
    "SphericalSpectrum",
    "radial_stencil",
    "polar_to_cartesian",
    "spherical_to_cartesian",
    "cartesian_axis",
    "cartesian_inverse",
]

_CHUNK = 1 << 20


@dataclass(frozen=True)
class PolarSpectrum:
    """Samples ``values[m, q]`` at ``Lambda = lambdas[m] (cos phi_q, sin phi_q)``.

    ``lambdas`` is equispaced from 0 and ``phi_q = 2 pi q / n_phi``.  Row 0 is
    the zero frequency and holds ``dc`` in every column.
    """

    lambdas: np.ndarray
    values: np.ndarray = field(repr=False)
    dc: complex

    @property
    def n_phi(self) -> int:
        return self.values.shape[1]

    @property
    def dlam(self) -> float:
        return float(self.lambdas[1] - self.lambdas[0])


@dataclass(frozen=True)
class SphericalSpectrum:
    """Samples ``values[m, j, q]`` at radius ``lambdas[m]``, polar angle
    ``thetas[j] = j pi / (n_theta - 1)`` and azimuth ``2 pi q / n_phi``."""

    lambdas: np.ndarray
    values: np.ndarray = field(repr=False)
    dc: complex

    @property
    def n_theta(self) -> int:
        return self.values.shape[1]

    @property
    def n_phi(self) -> int:
        return self.values.shape[2]

    @property
    def thetas(self) -> np.ndarray:
        return np.linspace(0.0, np.pi, self.n_theta)

    @property
    def dlam(self) -> float:
        return float(self.lambdas[1] - self.lambdas[0])


def radial_stencil(lam, dlam: float, n_rows: int):
    """Indices ``(..., 4)`` and Lagrange weights ``(..., 4)`` for radius ``lam``.

    Points beyond the last row get all-zero weights.
    """
    if n_rows < 4:
        raise ValueError("cubic radial interpolation needs at least 4 radial samples")
    lam = np.asarray(lam, dtype=float)
    u = lam / dlam
    i = np.clip(np.floor(u).astype(np.int64), 0, n_rows - 2)
    base = np.clip(i - 1, 0, n_rows - 4)
    s = u - base
    w = np.stack(
        [
            -(s - 1) * (s - 2) * (s - 3) / 6.0,
            s * (s - 2) * (s - 3) / 2.0,
            -s * (s - 1) * (s - 3) / 2.0,
            s * (s - 1) * (s - 2) / 6.0,
        ],
        axis=-1,
    )
    w[u > n_rows - 1 + 1e-12] = 0.0
    idx = base[..., None] + np.arange(4)
    return idx, w


def _angle_weights(angle, step: float, count: int, periodic: bool = True):
    pos = angle / step
    q = np.floor(pos).astype(np.int64)
    frac = pos - q
    if periodic:
        q %= count
        q1 = (q + 1) % count
    else:
        q = np.clip(q, 0, count - 2)
        frac = pos - q
        q1 = q + 1
    return q, q1, frac


def polar_to_cartesian(spec: PolarSpectrum, kx, ky) -> np.ndarray:
    """Interpolate a polar spectrum onto the grid ``kx x ky`` (``ij`` indexing)."""
    kx = np.asarray(kx, dtype=float)
    ky = np.asarray(ky, dtype=float)
    KX, KY = np.meshgrid(kx, ky, indexing="ij")
    out = np.zeros(KX.shape, dtype=complex)
    flat_x, flat_y, flat_o = KX.ravel(), KY.ravel(), out.reshape(-1)
    vals = spec.values
    n_rows, n_phi = vals.shape
    dphi = 2 * np.pi / n_phi
    for start in range(0, flat_x.size, _CHUNK):
        sl = slice(start, start + _CHUNK)
        x, y = flat_x[sl], flat_y[sl]
        lam = np.hypot(x, y)
        inside = lam <= spec.lambdas[-1] * (1 + 1e-12)
        if not np.any(inside):
            continue
        lam_in = lam[inside]
        phi = np.mod(np.arctan2(y[inside], x[inside]), 2 * np.pi)
        idx, w = radial_stencil(lam_in, spec.dlam, n_rows)
        q, q1, f = _angle_weights(phi, dphi, n_phi)
        acc = np.zeros(lam_in.shape, dtype=complex)
        for r in range(4):
            rows = idx[:, r]
            acc += w[:, r] * ((1 - f) * vals[rows, q] + f * vals[rows, q1])
        acc[lam_in == 0] = spec.dc
        block = np.zeros(x.shape, dtype=complex)
        block[inside] = acc
        flat_o[sl] = block
    return out


def spherical_to_cartesian(spec: SphericalSpectrum, kx, ky, kz) -> np.ndarray:
    """Interpolate a spherical spectrum onto the 3-D grid ``kx x ky x kz``."""
    kx, ky, kz = (np.asarray(a, dtype=float) for a in (kx, ky, kz))
    out = np.zeros((kx.size, ky.size, kz.size), dtype=complex)
    vals = spec.values
    n_rows, n_theta, n_phi = vals.shape
    dphi = 2 * np.pi / n_phi
    dtheta = np.pi / (n_theta - 1)
    KY, KZ = np.meshgrid(ky, kz, indexing="ij")
    for ix, x in enumerate(kx):
        lam = np.sqrt(x * x + KY * KY + KZ * KZ)
        inside = lam <= spec.lambdas[-1] * (1 + 1e-12)
        if not np.any(inside):
            continue
        lam_in = lam[inside]
        y, z = KY[inside], KZ[inside]
        theta = np.arccos(np.clip(z / np.where(lam_in > 0, lam_in, 1.0), -1.0, 1.0))
        phi = np.mod(np.arctan2(y, np.full_like(y, x)), 2 * np.pi)
        idx, w = radial_stencil(lam_in, spec.dlam, n_rows)
        j, j1, ft = _angle_weights(theta, dtheta, n_theta, periodic=False)
        q, q1, fp = _angle_weights(phi, dphi, n_phi)
        acc = np.zeros(lam_in.shape, dtype=complex)
        for r in range(4):
            rows = idx[:, r]
            lo = (1 - fp) * vals[rows, j, q] + fp * vals[rows, j, q1]
            hi = (1 - fp) * vals[rows, j1, q] + fp * vals[rows, j1, q1]
            acc += w[:, r] * ((1 - ft) * lo + ft * hi)
        acc[lam_in == 0] = spec.dc
        out[ix][inside] = acc
    return out


def cartesian_axis(n: int, extent: float, oversample: float = 2.0):
    """Frequency axis (FFT order) for an image of ``n`` nodes on ``[-extent, extent]``.

    The FFT length is at least ``oversample * n`` so the periodised image does
    not wrap back onto the field of view.
    """
    h = 2.0 * extent / (n - 1)
    size = sfft.next_fast_len(int(math.ceil(oversample * n)))
    return 2 * np.pi * np.fft.fftfreq(size, d=h), size


def cartesian_inverse(spectrum: np.ndarray, n: int, extent: float, sign: int = +1, scale: float = 1.0) -> np.ndarray:
    """Evaluate ``scale * sum_m F(Lambda_m) exp(sign * i x . Lambda_m) dLambda^d``
    at the ``n^d`` image nodes, where ``spectrum`` is laid out on
    :func:`cartesian_axis` along every dimension.
    """
    spectrum = np.asarray(spectrum, dtype=complex)
    d = spectrum.ndim
    size = spectrum.shape[0]
    h = 2.0 * extent / (n - 1)
    freq = 2 * np.pi * np.fft.fftfreq(size, d=h)
    dk = 2 * np.pi / (size * h)
    # shift the origin of x to -extent
    shift = np.exp(-sign * 1j * extent * freq)
    g = spectrum.copy()
    for ax in range(d):
        shape = [1] * d
        shape[ax] = size
        g *= shift.reshape(shape)
    if sign > 0:
        res = sfft.ifftn(g, norm="forward")
    else:
        res = sfft.fftn(g)
    res = res[(slice(0, n),) * d]
    return scale * dk**d * res
