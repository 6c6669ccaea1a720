"""Fast inversion for point detectors on a circle.

Pipeline: temporal FFT -> angular Fourier series -> Hankel-function filter
-> Fourier series synthesis on a polar grid -> zero-frequency term ->
polar-to-Cartesian interpolation -> 2-D inverse FFT.  The image is recovered
as ``f(x) = (1/2pi) int fhat(Lambda) exp(i x . Lambda) dLambda`` where

    fhat(lam, phi) = sum_k  2 (-i)^|k| Phat_k(lam) / (pi lam H_|k|(lam R))  e^{ik phi}.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from . import specfun
from .model import DetectorRing, Image, SeriesData
from .specgrid import PolarSpectrum, cartesian_axis, cartesian_inverse, polar_to_cartesian

log = logging.getLogger(__name__)

__all__ = [
    "FrequencyGrid",
    "HarmonicSpectrum2D",
    "time_fft",
    "angular_fourier",
    "spectral_filter_2d",
    "polar_synthesis",
    "dc_term_2d",
    "ring_spectrum",
    "reconstruct_2d",
    "default_band",
]


@dataclass(frozen=True)
class FrequencyGrid:
    """Non-negative temporal frequencies ``lam_m = m * dlam``, ``m < n_lambda``.

    ``n_fft`` is the zero-padded transform length; ``lambda_max = pi / dt``.
    """

    dt: float
    n_fft: int

    @classmethod
    def for_series(cls, dt: float, nt: int, radius: float | None = None, pad: int = 2) -> "FrequencyGrid":
        """Pad to the next power of two of ``pad * nt`` (and of a ``8 R`` record
        when ``radius`` is given) so that ``dlam <= pi / t_max``."""
        need = pad * nt
        if radius is not None:
            need = max(need, int(math.ceil(8 * radius / dt)))
        return cls(dt, 1 << max(need - 1, 1).bit_length())

    @property
    def n_lambda(self) -> int:
        return self.n_fft // 2 + 1

    @property
    def dlam(self) -> float:
        return 2 * np.pi / (self.n_fft * self.dt)

    @property
    def lambda_max(self) -> float:
        return np.pi / self.dt

    @property
    def lambdas(self) -> np.ndarray:
        return np.arange(self.n_lambda) * self.dlam


@dataclass(frozen=True)
class HarmonicSpectrum2D:
    """``coeffs[m, K + k] = Phat_k(lam_m)`` for ``-K <= k <= K``."""

    coeffs: np.ndarray = field(repr=False)
    grid: FrequencyGrid
    K: int

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)


def time_fft(values, grid: FrequencyGrid) -> np.ndarray:
    """``Phat(y, lam) = int P(y, t) exp(i t lam) dt`` by the trapezoid rule.

    ``values`` is ``(detectors, nt)``; returns ``(detectors, n_lambda)``.
    """
    values = np.asarray(values, dtype=float)
    nt = values.shape[-1]
    if nt > grid.n_fft:
        raise ValueError("frequency grid shorter than the record")
    w = np.ones(nt)
    w[0] = w[-1] = 0.5
    return grid.dt * np.conj(sfft.rfft(values * w, n=grid.n_fft, axis=-1))


def angular_fourier(phat: np.ndarray, K: int) -> np.ndarray:
    """Fourier coefficients in the detector angle, ``(n_lambda, 2K + 1)``.

    ``phat`` is ``(detectors, n_lambda)`` sampled at ``phi_j = 2 pi j / count``.
    """
    count = phat.shape[0]
    if K > count // 2:
        raise ValueError(f"angular order {K} exceeds the detector sampling limit {count // 2}")
    c = sfft.fft(phat, axis=0) / count
    k = np.arange(-K, K + 1)
    out = c[k % count].T.copy()
    if count % 2 == 0 and K == count // 2:
        # the Nyquist harmonic is shared between +K and -K
        out[:, 0] *= 0.5
        out[:, -1] *= 0.5
    return out


def spectral_filter_2d(spec: HarmonicSpectrum2D, R: float, rows=None) -> np.ndarray:
    """``b_k(lam) = 2 (-i)^|k| Phat_k / (pi lam H_|k|(lam R))``; row ``lam = 0`` is 0.

    ``rows`` optionally restricts the computation to the first ``rows`` rows
    (the rest are returned as zero).
    """
    lam = spec.grid.lambdas
    size = spec.coeffs.shape[0]
    n = size if rows is None else min(rows, size)
    ak = np.abs(spec.orders)
    out = np.zeros(spec.coeffs.shape, dtype=complex)
    if n <= 1:
        return out
    lp = lam[1:n, None]
    inv_h = specfun.inv_hankel1(np.arange(spec.K + 1)[None, :], lp * R)[:, ak]
    phase = (-1j) ** ak
    out[1:n] = (2.0 / np.pi) * phase * spec.coeffs[1:n] * inv_h / lp
    return out


def polar_synthesis(b: np.ndarray, n_phi: int) -> np.ndarray:
    """``fhat(lam_m, phi_q) = sum_k b_k(lam_m) exp(i k phi_q)``."""
    n_rows, width = b.shape
    K = (width - 1) // 2
    if n_phi < width:
        raise ValueError("polar grid needs n_phi >= 2K + 1")
    placed = np.zeros((n_rows, n_phi), dtype=complex)
    placed[:, np.arange(-K, K + 1) % n_phi] = b
    return sfft.ifft(placed, axis=1, norm="forward")


def dc_term_2d(p0, grid: FrequencyGrid, R: float) -> complex:
    """``fhat(0) = int 2 Phat_0 R J_1(lam R) / (pi lam H_0(lam R)) dlam`` (trapezoid).

    The integrand vanishes at ``lam = 0``.
    """
    p0 = np.asarray(p0)
    lam = grid.lambdas[1 : p0.size]
    g = 2.0 * p0[1:] * R * specfun.bessel_j(1, lam * R) * specfun.inv_hankel1(0, lam * R) / (np.pi * lam)
    w = np.ones(g.size)
    w[-1] = 0.5
    return complex(grid.dlam * np.sum(w * g))


def default_band(count: int, R: float, dt: float, n: int | None = None, extent: float | None = None):
    """``(K, lam_cut)``: angular truncation and the spectral cut-off used.

    ``K`` follows ``min(count // 2, ceil(e lam_max R / 2))``.  The cut-off is
    the smallest of the temporal Nyquist ``pi/dt``, the angular resolution
    ``K / R`` of the ring and, if an image grid is given, its Nyquist ``pi/h``.
    """
    lam_max = np.pi / dt
    K = min(count // 2, int(math.ceil(math.e * lam_max * R / 2)))
    cut = min(lam_max, K / R)
    if n is not None and extent is not None:
        cut = min(cut, np.pi * (n - 1) / (2 * extent))
    return K, cut


@dataclass(frozen=True)
class RingSpectrum:
    """Output of steps 1-5: filtered harmonics, polar samples and the dc value."""

    grid: FrequencyGrid
    harmonics: HarmonicSpectrum2D
    b: np.ndarray = field(repr=False)
    dc: complex
    rows: int

    def polar(self, n_phi: int) -> PolarSpectrum:
        vals = polar_synthesis(self.b[: self.rows], n_phi)
        vals[0] = self.dc
        return PolarSpectrum(self.grid.lambdas[: self.rows], vals, self.dc)


def ring_spectrum(
    data: SeriesData,
    K: int | None = None,
    band: float | None = None,
    grid: FrequencyGrid | None = None,
) -> RingSpectrum:
    """Steps 1-5 of the circular inversion for one ring of detectors."""
    if data.kind not in ("ring", "line"):
        raise ValueError(f"circular inversion needs ring data, got {data.kind!r}")
    R = data.geometry.R
    count = data.geometry.count
    dt = data.time.dt
    if grid is None:
        grid = FrequencyGrid.for_series(dt, data.time.nt, radius=R)
    K0, cut0 = default_band(count, R, dt)
    K = K0 if K is None else K
    band = cut0 if band is None else min(band, grid.lambda_max)
    rows = min(grid.n_lambda, int(math.floor(band / grid.dlam)) + 1)
    rows = max(rows, 4)
    phat = time_fft(data.values, grid)[:, :rows]
    harm = HarmonicSpectrum2D(angular_fourier(phat, K), grid, K)
    b = spectral_filter_2d(harm, R)
    # the zero-frequency identity uses the full temporal band of the k = 0 mode
    p0 = time_fft(data.values.mean(axis=0), grid)
    dc = dc_term_2d(p0, grid, R).real
    return RingSpectrum(grid, harm, b, dc, rows)


def reconstruct_2d(
    data: SeriesData,
    n: int,
    extent: float | None = None,
    oversample: float = 2.0,
    phi_oversample: int = 8,
    K: int | None = None,
    band: float | None = None,
) -> Image:
    """Reconstruct the initial pressure on an ``n x n`` grid over ``[-extent, extent]^2``.

    ``extent`` defaults to the ring radius.  The imaginary part left by the
    inverse transform is stored in ``image.meta['imag_ratio']``.
    """
    if data.kind not in ("ring", "line"):
        raise ValueError(f"reconstruct_2d needs ring data, got {data.kind!r}")
    R = data.geometry.R
    extent = R if extent is None else extent
    _, cut = default_band(data.geometry.count, R, data.time.dt, n, extent)
    band = cut if band is None else band
    rs = ring_spectrum(data, K=K, band=band)
    n_phi = int(sfft.next_fast_len(phi_oversample * (2 * rs.harmonics.K + 1)))
    polar = rs.polar(n_phi)
    axis, _ = cartesian_axis(n, extent, oversample)
    spec = polar_to_cartesian(polar, axis, axis)
    img = cartesian_inverse(spec, n, extent, sign=+1, scale=1.0 / (2 * np.pi))
    return _real_image(img, extent)


def _real_image(img: np.ndarray, extent: float) -> Image:
    re = img.real
    ref = float(np.linalg.norm(re))
    ratio = float(np.linalg.norm(img.imag)) / ref if ref > 0 else 0.0
    if ratio > 0.01:
        log.warning("imaginary residual is %.1f%% of the image; check geometry/conventions", 100 * ratio)
    return Image(np.ascontiguousarray(re), extent, meta={"imag_ratio": ratio})
