"""Fast inversion for point detectors on a sphere.

The temporal spectrum on the detector sphere is expanded in spherical
harmonics, filtered degree by degree with spherical Hankel functions and
summed back into the spectrum of the image,

    F(lam, w) = sqrt(2/pi) sum_{s,p} i^s Phat_{s,p}(lam) / (lam^2 h_s(lam R)) Y_s^p(w),

from which ``f(x) = (2 pi)^{-3/2} int F(Lambda) exp(-i x . Lambda) dLambda``.
Harmonic analysis uses Gauss-Legendre quadrature in ``cos(theta)`` and an FFT
in the azimuth; synthesis is the direct sum over Legendre tables.  The Legendre
sums use einsum loops rather than BLAS so that results do not depend on the
thread count.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from . import specfun
from .model import DetectorSphere, Image, SeriesData
from .recon2d import FrequencyGrid, _real_image, time_fft
from .specgrid import SphericalSpectrum, cartesian_axis, cartesian_inverse, spherical_to_cartesian

log = logging.getLogger(__name__)

__all__ = [
    "SphericalHarmonicSpectrum",
    "sph_analysis",
    "sph_synthesis",
    "spectral_filter_3d",
    "dc_term_3d",
    "sphere_spectrum",
    "reconstruct_3d",
    "default_degree",
]


@dataclass(frozen=True)
class SphericalHarmonicSpectrum:
    """``coeffs[m, s, S + p] = Phat_{s,p}(lam_m)``; entries with ``|p| > s`` are 0."""

    coeffs: np.ndarray = field(repr=False)
    grid: FrequencyGrid | None
    S: int

    def get(self, s: int, p: int) -> np.ndarray:
        if abs(p) > s or s > self.S:
            raise IndexError(f"invalid harmonic index ({s}, {p})")
        return self.coeffs[:, s, self.S + p]


def _check_grid(values: np.ndarray, n_theta: int, n_phi: int) -> np.ndarray:
    values = np.asarray(values)
    if values.shape[0] != n_theta * n_phi:
        raise ValueError(f"expected {n_theta * n_phi} sphere nodes, got {values.shape[0]}")
    return values.reshape(n_theta, n_phi, -1)


def sph_analysis(values, table: specfun.LegendreTable, weights, n_phi: int, S: int | None = None,
                 grid: FrequencyGrid | None = None) -> SphericalHarmonicSpectrum:
    """Spherical harmonic coefficients of samples on a Gauss-Legendre x azimuth grid.

    Parameters
    ----------
    values : array, shape ``(n_theta * n_phi, n_lambda)`` or ``(n_theta * n_phi,)``
        Samples ordered theta-major, at the table nodes and ``phi_q = 2 pi q / n_phi``.
    table : LegendreTable
        Built at the Gauss-Legendre nodes.
    weights : array
        Gauss-Legendre weights.
    S : int, optional
        Maximum degree, defaults to ``table.max_degree``.

    Raises
    ------
    ValueError
        If ``S`` exceeds what the grid integrates exactly.
    """
    n_theta = table.nodes.size
    S = table.max_degree if S is None else int(S)
    if S > table.max_degree or S > n_theta - 1 or 2 * S + 1 > n_phi:
        raise ValueError(f"degree {S} aliases on a {n_theta} x {n_phi} grid")
    squeeze = np.ndim(values) == 1
    v = _check_grid(values, n_theta, n_phi)
    # azimuthal coefficients c_p(theta_j) = int v exp(-i p phi) dphi
    c = sfft.fft(v, axis=1) * (2 * np.pi / n_phi)
    wts = np.asarray(weights, dtype=float)
    out = np.zeros((v.shape[2], S + 1, 2 * S + 1), dtype=complex)
    for p in range(S + 1):
        block = table.order_block(p)[: S + 1 - p] * wts  # (S+1-p, n_theta)
        out[:, p:, S + p] = np.einsum("sj,jr->rs", block, c[:, p, :])
        if p:
            out[:, p:, S - p] = (-1) ** p * np.einsum("sj,jr->rs", block, c[:, (-p) % n_phi, :])
    if squeeze:
        out = out[:1]
    return SphericalHarmonicSpectrum(out, grid, S)


def sph_synthesis(coeffs, table: specfun.LegendreTable, n_phi: int) -> np.ndarray:
    """``sum_{s,p} coeffs[..., s, S + p] Y_s^p`` at the table nodes x ``n_phi`` azimuths.

    ``coeffs`` is ``(rows, S + 1, 2S + 1)``; returns ``(rows, n_nodes, n_phi)``.
    """
    coeffs = np.asarray(coeffs)
    rows, width_s, width_p = coeffs.shape
    S = width_s - 1
    if width_p != 2 * S + 1 or S > table.max_degree:
        raise ValueError("coefficient layout does not match the Legendre table")
    if n_phi < 2 * S + 1:
        raise ValueError("synthesis needs n_phi >= 2S + 1")
    g = np.zeros((rows, table.nodes.size, n_phi), dtype=complex)
    for p in range(S + 1):
        block = table.order_block(p)[: S + 1 - p]
        g[:, :, p] = np.einsum("rs,sj->rj", coeffs[:, p:, S + p], block)
        if p:
            g[:, :, n_phi - p] = (-1) ** p * np.einsum("rs,sj->rj", coeffs[:, p:, S - p], block)
    return sfft.ifft(g, axis=2, norm="forward")


def spectral_filter_3d(spec: SphericalHarmonicSpectrum, R: float) -> np.ndarray:
    """``b_{s,p} = sqrt(2/pi) i^s Phat_{s,p} / (lam^2 h_s(lam R))``; the ``lam = 0`` row is 0."""
    if spec.grid is None:
        raise ValueError("spectrum carries no frequency grid")
    rows = spec.coeffs.shape[0]
    lam = spec.grid.lambdas[1:rows]
    out = np.zeros_like(spec.coeffs)
    if lam.size == 0:
        return out
    s = np.arange(spec.S + 1)
    inv_h = specfun.inv_spherical_h1(s[None, :], lam[:, None] * R)
    fac = math.sqrt(2 / np.pi) * (1j ** s)[None, :] * inv_h / lam[:, None] ** 2
    out[1:] = spec.coeffs[1:] * fac[:, :, None]
    return out


def dc_term_3d(p00, grid: FrequencyGrid, R: float) -> complex:
    """``F(0) = i sqrt(2) R^2 / pi^2 int Phat_{00} e^{-i lam R} (sin(lam R)/(lam R) - cos(lam R)) / lam dlam``.

    Trapezoid rule over the rows supplied; the integrand vanishes at ``lam = 0``.
    """
    p00 = np.asarray(p00)
    lam = grid.lambdas[1 : p00.size]
    x = lam * R
    g = p00[1:] * np.exp(-1j * x) * (np.sin(x) / x - np.cos(x)) / lam
    w = np.ones(g.size)
    if w.size:
        w[-1] = 0.5
    return complex(1j * math.sqrt(2) * R**2 / np.pi**2 * grid.dlam * np.sum(w * g))


def default_degree(sphere: DetectorSphere, dt: float) -> int:
    """``min(grid limit, ceil(e lam_max R / 2))``."""
    return min(sphere.max_degree, int(math.ceil(math.e * (np.pi / dt) * sphere.R / 2)))


@dataclass(frozen=True)
class SphereSpectrum:
    """Filtered harmonics of one detector sphere and the dc value."""

    grid: FrequencyGrid
    b: np.ndarray = field(repr=False)
    dc: complex
    S: int

    def spherical(self, n_theta: int, n_phi: int) -> SphericalSpectrum:
        thetas = np.linspace(0.0, np.pi, n_theta)
        table = specfun.LegendreTable.build(self.S, np.cos(thetas))
        vals = sph_synthesis(self.b, table, n_phi)
        vals[0] = self.dc
        return SphericalSpectrum(self.grid.lambdas[: self.b.shape[0]], vals, self.dc)


def sphere_spectrum(data: SeriesData, S: int | None = None, band: float | None = None) -> SphereSpectrum:
    """Steps 1-5 of the spherical inversion."""
    if data.kind != "sphere":
        raise ValueError(f"spherical inversion needs sphere data, got {data.kind!r}")
    sphere: DetectorSphere = data.geometry
    R, dt = sphere.R, data.time.dt
    if data.time.t_max < 2 * R * (1 - 1e-9):
        raise ValueError("the record must cover t in [0, 2R]")
    S = default_degree(sphere, dt) if S is None else int(S)
    grid = FrequencyGrid.for_series(dt, data.time.nt, radius=R)
    cut = min(grid.lambda_max, S / R) if band is None else min(band, grid.lambda_max)
    rows = max(4, min(grid.n_lambda, int(math.floor(cut / grid.dlam)) + 1))
    x, w, _ = sphere.quadrature()
    table = specfun.LegendreTable.build(S, x)
    phat_full = time_fft(data.values, grid)
    spec = sph_analysis(phat_full[:, :rows], table, w, sphere.n_phi, S, grid)
    b = spectral_filter_3d(spec, R)
    # the dc identity only needs the (0, 0) mode, over the full band
    p00 = (w[:, None] * phat_full.reshape(sphere.n_theta, sphere.n_phi, -1).mean(axis=1)).sum(axis=0)
    p00 *= 2 * np.pi / math.sqrt(4 * np.pi)
    dc = dc_term_3d(p00, grid, R).real
    return SphereSpectrum(grid, b, dc, S)


def reconstruct_3d(
    data: SeriesData,
    n: int,
    extent: float | None = None,
    oversample: float = 1.25,
    S: int | None = None,
    band: float | None = None,
    angular_oversample: int = 2,
) -> Image:
    """Reconstruct the initial pressure on an ``n^3`` grid over ``[-extent, extent]^3``."""
    R = data.geometry.R
    extent = R if extent is None else extent
    if band is None:
        band = np.pi * (n - 1) / (2 * extent)
    rs = sphere_spectrum(data, S=S, band=None)
    rows = max(4, min(rs.b.shape[0], int(math.floor(band / rs.grid.dlam)) + 1))
    rs = SphereSpectrum(rs.grid, rs.b[:rows], rs.dc, rs.S)
    n_phi = int(sfft.next_fast_len(angular_oversample * 2 * (2 * rs.S + 1)))
    n_theta = n_phi // 2 + 1
    spec = rs.spherical(n_theta, n_phi)
    axis, _ = cartesian_axis(n, extent, oversample)
    cart = spherical_to_cartesian(spec, axis, axis, axis)
    img = cartesian_inverse(cart, n, extent, sign=-1, scale=(2 * np.pi) ** -1.5)
    return _real_image(img, extent)
