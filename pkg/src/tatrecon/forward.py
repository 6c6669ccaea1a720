"""Semi-analytic forward simulation of the wave equation with initial pressure.

2-D data use Poisson's formula written through circular means,

    u(y, t) = d/dt  int_0^t  r M(y, r) / sqrt(t^2 - r^2) dr,

with the substitution ``r = t sin(psi)`` removing the endpoint singularity.
3-D data use Kirchhoff's formula ``u = d/dt [t * spherical mean]`` which is in
closed form for balls and Gaussians.  Nothing here shares code with the
spectral inversions.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import special

from .model import (
    DetectorRing,
    DetectorSphere,
    LineDetectorGeometry,
    Phantom,
    Primitive,
    SeriesData,
    TimeGrid,
    eval_phantom,
    project_phantom,
)

log = logging.getLogger(__name__)

__all__ = [
    "NoiseSpec",
    "circular_mean",
    "forward_points",
    "forward_2d",
    "forward_3d",
    "forward_linedet",
    "add_noise",
    "taper_window",
]

GAUSS_CUTOFF = 8.0  # Gaussian tails beyond 8 sigma are below 1e-13
_CHUNK = 8


@dataclass(frozen=True)
class NoiseSpec:
    level: float
    seed: int = 0

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("noise level must be non-negative")


def _leggauss01(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


# --- circular means -------------------------------------------------------


def _gauss_mean(p: Primitive, d, r):
    s2 = p.radius**2
    return p.amplitude * np.exp(-((r - d) ** 2) / (2 * s2)) * special.i0e(r * d / s2)


def _gauss_mean_dr(p: Primitive, d, r):
    s2 = p.radius**2
    z = r * d / s2
    e = np.exp(-((r - d) ** 2) / (2 * s2))
    return p.amplitude * e * (d * special.i1e(z) - r * special.i0e(z)) / s2


def _disk_mean(p: Primitive, d, r):
    a = p.radius
    d, r = np.broadcast_arrays(np.asarray(d, float), np.asarray(r, float))
    out = np.zeros(d.shape)
    inside = r <= a - d
    out[inside] = 1.0
    ring = (~inside) & (r > np.abs(d - a)) & (r < d + a)
    if np.any(ring):
        rr, dd = r[ring], d[ring]
        c = (rr * rr + dd * dd - a * a) / (2 * rr * dd)
        out[ring] = np.arccos(np.clip(c, -1.0, 1.0)) / np.pi
    return p.amplitude * out


_CHORD_NODES = _leggauss01(48)


def _chord_mean(p: Primitive, d, r):
    """Circular mean of ``2 A sqrt(a^2 - rho^2)`` (projection of a ball)."""
    a = p.radius
    d, r = np.broadcast_arrays(np.asarray(d, float), np.asarray(r, float))
    out = np.zeros(d.shape)
    v, w = _CHORD_NODES
    full = r <= a - d
    part = (~full) & (r > np.abs(d - a)) & (r < d + a)
    if np.any(full):
        rr, dd = r[full][:, None], d[full][:, None]
        th = np.pi * v[None, :]
        g = np.sqrt(np.clip(a * a - rr * rr - dd * dd + 2 * rr * dd * np.cos(th), 0, None))
        out[full] = (g * w).sum(axis=1)  # (1/pi) int_0^pi == mean over [0, 1]
    if np.any(part):
        rr, dd = r[part][:, None], d[part][:, None]
        c = (rr * rr + dd * dd - a * a) / (2 * rr * dd)
        tmax = np.arccos(np.clip(c, -1.0, 1.0))
        psi = 0.5 * np.pi * v[None, :]
        th = tmax * np.sin(psi)
        g = np.sqrt(np.clip(a * a - rr * rr - dd * dd + 2 * rr * dd * np.cos(th), 0, None))
        jac = tmax * np.cos(psi) * 0.5 * np.pi
        out[part] = (g * jac * w).sum(axis=1) / np.pi
    return 2.0 * p.amplitude * out


_MEANS = {"gaussian": _gauss_mean, "disk": _disk_mean, "chord": _chord_mean}


def circular_mean(phantom: Phantom, center, t):
    """Average of a 2-D phantom over the circle of radius ``t`` about ``center``."""
    if phantom.dimension != 2:
        raise ValueError("circular_mean needs a 2-D phantom")
    center = np.asarray(center, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("circle radius must be non-negative")
    out = np.zeros(t.shape)
    for p in phantom.primitives:
        d = float(np.hypot(*(center - np.asarray(p.center))))
        if d == 0.0:
            # concentric circle: the profile value at distance t
            out += np.atleast_1d(eval_phantom(Phantom((p,), 2), np.stack([t, 0 * t], -1) + p.center)).reshape(t.shape)
            continue
        out += _MEANS[p.kind](p, d, t)
    return out[()] if out.ndim == 0 else out


# --- 2-D propagation --------------------------------------------------------


def _gauss_series(p: Primitive, dists, times, nodes):
    """Exact-derivative Abel integral for a Gaussian at each detector distance."""
    v, w = nodes
    s = p.radius
    s2 = s * s
    out = np.zeros((dists.size, times.size))
    for i, d in enumerate(dists):
        lo = max(d - GAUSS_CUTOFF * s, 0.0)
        hi = d + GAUSS_CUTOFF * s
        live = times > lo
        t = times[live]
        if t.size == 0:
            continue
        psi_lo = np.arcsin(lo / t)
        psi_hi = np.arcsin(np.minimum(hi, t) / t)
        span = psi_hi - psi_lo
        psi = psi_lo[:, None] + span[:, None] * v[None, :]
        sp = np.sin(psi)
        r = t[:, None] * sp
        z = r * (d / s2)
        e = np.exp((r - d) ** 2 * (-0.5 / s2))
        # M + r M' with M = A e I0e(z), M' = A e (d I1e(z) - r I0e(z)) / s^2
        i0 = special.i0e(z)
        integrand = sp * e * (i0 * (1.0 - r * r / s2) + special.i1e(z) * z)
        out[i, live] = _quad(integrand, w) * (span * p.amplitude)
    return out


def _quad(vals: np.ndarray, w: np.ndarray) -> np.ndarray:
    # einsum loops instead of BLAS: the sum order must not depend on the thread count
    return np.einsum("...k,k->...", vals, w)


def _abel_potential(p: Primitive, d, t, nodes):
    """``G(t) = t int_0^{pi/2} sin(psi) M(t sin psi) dpsi`` with panel splits."""
    v, w = nodes
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros(t.shape)
    pos = t > 0
    if not np.any(pos):
        return out
    tp = t[pos]
    a = p.extent
    brk = [r for r in (d - a, d + a) if r > 0]
    edges = [np.zeros_like(tp)]
    for rb in brk:
        edges.append(np.arcsin(np.minimum(rb, tp) / tp))
    edges.append(np.full_like(tp, 0.5 * np.pi))
    mean = _MEANS[p.kind]
    total = np.zeros_like(tp)
    for lo, hi in zip(edges[:-1], edges[1:]):
        span = hi - lo
        psi = lo[:, None] + span[:, None] * v[None, :]
        sp = np.sin(psi)
        vals = sp * mean(p, d, tp[:, None] * sp)
        total += _quad(vals, w) * span
    out[pos] = tp * total
    return out


def _fd_series(p: Primitive, dists, times, step, nodes):
    out = np.empty((dists.size, times.size))
    for i, d in enumerate(dists):
        gp = _abel_potential(p, d, times + step, nodes)
        gm = _abel_potential(p, d, times - step, nodes)
        out[i] = (gp - gm) / (2 * step)
    return out


def forward_points(phantom: Phantom, points, time: TimeGrid, n_nodes: int = 40, workers: int = 1) -> np.ndarray:
    """2-D pressure ``u(y, t)`` at arbitrary points ``y`` (shape ``(m, 2)``)."""
    if phantom.dimension != 2:
        raise ValueError("forward_points needs a 2-D phantom")
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    times = time.times
    nodes = _leggauss01(n_nodes)
    step = time.dt / 8.0

    def rows(sl):
        block = np.zeros((sl.stop - sl.start, times.size))
        for p in phantom.primitives:
            dists = np.hypot(*(points[sl] - np.asarray(p.center)).T)
            if np.any(dists <= p.extent):
                raise ValueError("detector inside the phantom support")
            if p.kind == "gaussian":
                block += _gauss_series(p, dists, times, nodes)
            else:
                block += _fd_series(p, dists, times, step, nodes)
        return block

    chunks = [slice(i, min(i + _CHUNK, len(points))) for i in range(0, len(points), _CHUNK)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(rows, chunks))
    else:
        parts = [rows(c) for c in chunks]
    return np.concatenate(parts, axis=0) if parts else np.zeros((0, times.size))


def taper_window(time: TimeGrid, fraction: float = 0.05) -> np.ndarray:
    """Raised-cosine cut-off over the final ``fraction`` of the record."""
    t = time.times
    t0 = t[-1] * (1.0 - fraction)
    w = np.ones_like(t)
    tail = t > t0
    if fraction > 0 and np.any(tail):
        w[tail] = 0.5 * (1.0 + np.cos(np.pi * (t[tail] - t0) / (t[-1] - t0)))
    return w


def forward_2d(
    phantom: Phantom,
    ring: DetectorRing,
    time: TimeGrid,
    taper: bool = True,
    n_nodes: int = 40,
    workers: int = 1,
) -> SeriesData:
    """Pressure at the detectors of a circular ring."""
    if phantom.support_radius >= ring.R:
        raise ValueError("phantom support must lie strictly inside the detector ring")
    if time.dt > ring.R / 100:
        log.warning("time step %.3g is coarse relative to R=%.3g", time.dt, ring.R)
    values = forward_points(phantom, ring.positions, time, n_nodes=n_nodes, workers=workers)
    if taper:
        values *= taper_window(time)
    return SeriesData(ring, values, time)


# --- 3-D propagation --------------------------------------------------------


def _kirchhoff(p: Primitive, d, t):
    A, a = p.amplitude, p.radius
    if p.kind == "ball":
        return np.where(np.abs(d - t) <= a, A * (d - t) / (2 * d), 0.0)
    s2 = 2 * a * a
    return A / (2 * d) * ((d - t) * np.exp(-((t - d) ** 2) / s2) + (t + d) * np.exp(-((t + d) ** 2) / s2))


def forward_3d(phantom: Phantom, sphere: DetectorSphere, time: TimeGrid, taper: bool = False) -> SeriesData:
    """Pressure at the detectors of a sphere (closed-form Kirchhoff formula)."""
    if phantom.dimension != 3:
        raise ValueError("forward_3d needs a 3-D phantom")
    if phantom.support_radius >= sphere.R:
        raise ValueError("phantom support must lie strictly inside the detector sphere")
    if time.t_max < 2 * sphere.R:
        raise ValueError("3-D records must cover t in [0, 2R]")
    pos = sphere.positions
    t = time.times[None, :]
    values = np.zeros((pos.shape[0], time.nt))
    for p in phantom.primitives:
        d = np.linalg.norm(pos - np.asarray(p.center), axis=1)[:, None]
        values += _kirchhoff(p, d, t)
    if taper:
        values *= taper_window(time)
    return SeriesData(sphere, values, time)


# --- line detectors ---------------------------------------------------------


def forward_linedet(
    phantom: Phantom,
    geom: LineDetectorGeometry,
    time: TimeGrid,
    taper: bool = True,
    n_nodes: int = 40,
    workers: int = 1,
) -> list:
    """Line-integrated pressure for every rotation angle of the assembly.

    By the method of descent each slice is a 2-D problem whose initial data is
    the x-ray projection of the phantom along ``D(alpha)``.
    """
    if phantom.dimension != 3:
        raise ValueError("forward_linedet needs a 3-D phantom")
    if phantom.support_radius >= geom.R:
        raise ValueError("phantom support must lie strictly inside the cylinder")
    ring = DetectorRing(geom.R, geom.n_beta)
    window = taper_window(time) if taper else None

    def one(index):
        proj = project_phantom(phantom, geom.alphas[index])
        vals = forward_points(proj, ring.positions, time, n_nodes=n_nodes)
        if window is not None:
            vals *= window
        return SeriesData(geom.slice(index), vals, time)

    idx = range(len(geom.alphas))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(one, idx))
    return [one(i) for i in idx]


# --- noise ------------------------------------------------------------------


def _norm(a: np.ndarray) -> float:
    return math.sqrt(float(np.sum(a * a)))


def add_noise(data: SeriesData, spec: NoiseSpec, stream: int = 0) -> SeriesData:
    """Add white Gaussian noise with ``||noise|| = level * ||signal||``.

    The generator is numpy's PCG64 seeded with ``(seed, stream)``; ``stream``
    separates the slices of a multi-file scan.
    """
    if spec.level == 0:
        return data
    norm = _norm(data.values)
    if norm == 0:
        raise ValueError("cannot scale noise relative to an all-zero signal")
    rng = np.random.Generator(np.random.PCG64([spec.seed, stream]))
    noise = rng.standard_normal(data.values.shape)
    noise *= spec.level * norm / _norm(noise)
    return data.with_values(data.values + noise)
