"""Inversion for a rotating array of integrating line detectors.

Each rotation ``alpha`` of the assembly records, by the method of descent, the
2-D wave field generated by the projection of the source along ``D(alpha)``.
The 2-D spectrum of each projection is obtained with the circular pipeline
and, by the slice-projection theorem, equals the 3-D spectrum of the source on
the plane spanned by ``e2`` and ``N(alpha)``.  The planes are merged on a
Cartesian frequency grid and inverted with a 3-D FFT:

    f(x) = (2 pi)^{-2} int fhat(Lambda) exp(i x . Lambda) dLambda.

In-plane coordinates are ``Gamma_1 = Lambda . e2`` and ``Gamma_2 = Lambda . N``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .model import Image, LineDetectorGeometry, SeriesData
from .recon2d import _real_image, default_band, ring_spectrum
from .specgrid import _CHUNK, cartesian_axis, cartesian_inverse, radial_stencil

log = logging.getLogger(__name__)

__all__ = [
    "RotatingPlaneSpectrum",
    "per_alpha_spectra",
    "assemble_3d_spectrum",
    "reconstruct_linedet",
]


@dataclass(frozen=True)
class RotatingPlaneSpectrum:
    """Polar samples of every plane: ``values[a, m, q]`` at ``lam_m (cos phi_q, sin phi_q)``
    in the ``(e2, N(alphas[a]))`` frame, plus the per-plane dc values."""

    alphas: np.ndarray
    lambdas: np.ndarray
    values: np.ndarray = field(repr=False)
    dcs: np.ndarray

    @property
    def n_phi(self) -> int:
        return self.values.shape[2]

    @property
    def dlam(self) -> float:
        return float(self.lambdas[1] - self.lambdas[0])

    @property
    def dc(self) -> complex:
        return complex(np.mean(self.dcs))

    def dc_spread(self) -> float:
        """Largest pairwise relative difference of the per-plane dc values."""
        d = np.asarray(self.dcs)
        ref = np.abs(np.mean(d))
        return float((d.real.max() - d.real.min()) / ref) if ref > 0 else 0.0


def per_alpha_spectra(
    scan,
    geom: LineDetectorGeometry,
    K: int | None = None,
    band: float | None = None,
    phi_oversample: int = 4,
) -> RotatingPlaneSpectrum:
    """Run the circular pipeline through the dc term on every slice of a scan."""
    scan = list(scan)
    if len(scan) != len(geom.alphas):
        raise ValueError(f"scan has {len(scan)} slices, geometry has {len(geom.alphas)} angles")
    values, dcs, lambdas = None, [], None
    for a, (alpha, data) in enumerate(zip(geom.alphas, scan)):
        try:
            if data.kind not in ("line", "ring") or not math.isclose(data.geometry.R, geom.R):
                raise ValueError("slice geometry does not match the assembly")
            rs = ring_spectrum(data, K=K, band=band)
            n_phi = int(sfft.next_fast_len(phi_oversample * (2 * rs.harmonics.K + 1)))
            polar = rs.polar(n_phi)
        except ValueError as exc:
            raise ValueError(f"slice alpha={alpha:.6g}: {exc}") from exc
        if values is None:
            lambdas = polar.lambdas
            values = np.empty((len(scan),) + polar.values.shape, dtype=complex)
        elif polar.values.shape != values.shape[1:]:
            raise ValueError(f"slice alpha={alpha:.6g}: inconsistent sampling")
        values[a] = polar.values
        dcs.append(polar.dc)
    return RotatingPlaneSpectrum(np.asarray(geom.alphas), lambdas, values, np.asarray(dcs))


def _plane_coordinates(x, y, z):
    """Bracketing data for the plane containing ``Lambda = (x, y, z)``.

    Returns the plane angle in ``[0, pi)`` and the in-plane polar angle.
    """
    rho = np.hypot(x, z)
    psi = np.arctan2(z, x)
    a0 = np.mod(psi - np.pi / 2, 2 * np.pi)
    flip = a0 >= np.pi
    alpha = np.where(flip, a0 - np.pi, a0)
    g2 = np.where(flip, -rho, rho)
    return alpha, np.arctan2(g2, y), rho


def _plane_sample(vals, plane, idx, w, phi, n_phi):
    pos = np.mod(phi, 2 * np.pi) / (2 * np.pi / n_phi)
    q = np.floor(pos).astype(np.int64)
    f = pos - q
    q %= n_phi
    q1 = (q + 1) % n_phi
    acc = np.zeros(phi.shape, dtype=complex)
    for r in range(4):
        rows = idx[:, r]
        acc += w[:, r] * ((1 - f) * vals[plane, rows, q] + f * vals[plane, rows, q1])
    return acc


def assemble_3d_spectrum(spectra: RotatingPlaneSpectrum, kx, ky, kz) -> np.ndarray:
    """Interpolate the plane samples onto the Cartesian grid ``kx x ky x kz``.

    Cubic in ``|Lambda|``, linear in the in-plane angle and linear across the
    two bracketing planes; plane ``alpha + pi`` is plane ``alpha`` with the
    in-plane angle reflected.  Nodes on the common ``e2`` axis take the average
    over all planes.
    """
    alphas = np.asarray(spectra.alphas, dtype=float)
    n_alpha = alphas.size
    if n_alpha < 2:
        raise ValueError("assembly needs at least two planes")
    vals = spectra.values
    n_rows, n_phi = vals.shape[1], vals.shape[2]
    lam_max = spectra.lambdas[-1]
    ext = np.append(alphas, alphas[0] + np.pi)
    kx, ky, kz = (np.asarray(a, dtype=float) for a in (kx, ky, kz))
    X, Y, Z = np.meshgrid(kx, ky, kz, indexing="ij")
    out = np.zeros(X.shape, dtype=complex)
    fx, fy, fz, fo = X.ravel(), Y.ravel(), Z.ravel(), out.reshape(-1)
    mean_plane = vals.mean(axis=0)
    for start in range(0, fx.size, _CHUNK):
        sl = slice(start, start + _CHUNK)
        x, y, z = fx[sl], fy[sl], fz[sl]
        lam = np.sqrt(x * x + y * y + z * z)
        inside = lam <= lam_max * (1 + 1e-12)
        if not np.any(inside):
            continue
        x, y, z, lam = x[inside], y[inside], z[inside], lam[inside]
        alpha, phi, rho = _plane_coordinates(x, y, z)
        idx, w = radial_stencil(lam, spectra.dlam, n_rows)
        i = np.clip(np.searchsorted(ext, alpha, side="right") - 1, 0, n_alpha - 1)
        # below the first plane the bracket is (last plane - pi, first plane)
        low = alpha < alphas[0]
        wrap = (i == n_alpha - 1) & ~low
        a_lo = np.where(low, alphas[-1] - np.pi, ext[i])
        a_hi = np.where(low, alphas[0], ext[i + 1])
        t = (alpha - a_lo) / (a_hi - a_lo)
        lo_plane = np.where(low, n_alpha - 1, i)
        hi_plane = np.where(low, 0, np.where(wrap, 0, i + 1))
        lo = _plane_sample(vals, lo_plane, idx, w, np.where(low, -phi, phi), n_phi)
        hi = _plane_sample(vals, hi_plane, idx, w, np.where(wrap, -phi, phi), n_phi)
        acc = (1 - t) * lo + t * hi
        axis_nodes = rho == 0
        if np.any(axis_nodes):
            zeros = np.zeros(int(axis_nodes.sum()), dtype=np.int64)
            acc[axis_nodes] = _plane_sample(
                mean_plane[None], zeros, idx[axis_nodes], w[axis_nodes], phi[axis_nodes], n_phi
            )
        acc[lam == 0] = spectra.dc
        block = np.zeros(inside.shape, dtype=complex)
        block[inside] = acc
        fo[sl] = block
    return out


def reconstruct_linedet(
    scan,
    geom: LineDetectorGeometry,
    n: int,
    extent: float | None = None,
    oversample: float = 1.25,
    K: int | None = None,
    band: float | None = None,
    phi_oversample: int = 4,
) -> Image:
    """Reconstruct the initial pressure on an ``n^3`` grid over ``[-extent, extent]^3``."""
    scan = list(scan)
    extent = geom.R if extent is None else extent
    if band is None:
        _, band = default_band(geom.n_beta, geom.R, scan[0].time.dt, n, extent)
    spectra = per_alpha_spectra(scan, geom, K=K, band=band, phi_oversample=phi_oversample)
    spread = spectra.dc_spread()
    if spread > 0.02:
        log.warning("per-plane dc values spread by %.1f%%", 100 * spread)
    axis, _ = cartesian_axis(n, extent, oversample)
    spec = assemble_3d_spectrum(spectra, axis, axis, axis)
    img = cartesian_inverse(spec, n, extent, sign=+1, scale=(2 * np.pi) ** -2)
    out = _real_image(img, extent)
    out.meta["dc_spread"] = spread
    return out
