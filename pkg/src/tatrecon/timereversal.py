"""Time-reversal baseline on a square.

The wave equation is solved backward in time with the explicit leapfrog
scheme on the grid ``n x n`` over ``[-L, L]^2``,

    (u^{m+1} - 2 u^m + u^{m-1}) / dt^2 = (5-point Laplacian of u^m) / dx^2,

starting from ``u = u_t = 0`` at the end of the record and imposing the
measured pressure as Dirichlet data on the boundary nodes at every level.
The interior field at ``t = 0`` is the image.
"""
from __future__ import annotations

import logging
import math

import numpy as np

from .forward import forward_points, taper_window
from .model import Image, Phantom, SeriesData, SquareBoundary, TimeGrid

log = logging.getLogger(__name__)

__all__ = [
    "forward_square_boundary",
    "time_reverse_2d",
    "cfl_step",
    "resample_time",
    "leapfrog_step",
    "leapfrog_energy",
]


def forward_square_boundary(
    phantom: Phantom,
    square: SquareBoundary,
    time: TimeGrid,
    taper: bool = False,
    n_nodes: int = 40,
) -> SeriesData:
    """Pressure at the boundary nodes of ``square``.

    Raises
    ------
    ValueError
        If some primitive reaches the boundary of the square.
    """
    if phantom.dimension != 2:
        raise ValueError("square boundary data need a 2-D phantom")
    for p in phantom.primitives:
        if np.max(np.abs(p.center)) + p.extent >= square.L:
            raise ValueError("phantom support must lie strictly inside the square")
    vals = forward_points(phantom, square.positions, time, n_nodes=n_nodes)
    if taper:
        vals *= taper_window(time)
    return SeriesData(square, vals, time)


def cfl_step(dx: float, safety: float = 1.0) -> float:
    """Largest stable leapfrog step ``dx / sqrt(2)``, times ``safety``."""
    return safety * dx / math.sqrt(2.0)


def resample_time(values: np.ndarray, time: TimeGrid, dt: float):
    """Linear interpolation of ``values[..., nt]`` onto the finest grid with step
    ``<= dt`` covering the same interval.  Returns ``(values, TimeGrid)``."""
    steps = int(math.ceil(time.t_max / dt - 1e-12))
    new = TimeGrid(time.t_max / steps, steps + 1)
    t_old = time.times
    t_new = np.minimum(new.times, t_old[-1])
    pos = np.clip(np.searchsorted(t_old, t_new, side="right") - 1, 0, time.nt - 2)
    f = (t_new - t_old[pos]) / time.dt
    out = (1.0 - f) * values[..., pos] + f * values[..., pos + 1]
    return out, new


def _laplacian(u: np.ndarray) -> np.ndarray:
    lap = np.zeros_like(u)
    lap[1:-1, 1:-1] = u[2:, 1:-1] + u[:-2, 1:-1] + u[1:-1, 2:] + u[1:-1, :-2] - 4.0 * u[1:-1, 1:-1]
    return lap


def leapfrog_step(u_prev: np.ndarray, u_cur: np.ndarray, courant2: float) -> np.ndarray:
    """Next interior level ``2 u - u_prev + c^2 Lap(u)``; boundary rows are copied
    from ``u_cur`` and must be overwritten by the caller."""
    nxt = 2.0 * u_cur - u_prev + courant2 * _laplacian(u_cur)
    nxt[0, :], nxt[-1, :], nxt[:, 0], nxt[:, -1] = u_cur[0, :], u_cur[-1, :], u_cur[:, 0], u_cur[:, -1]
    return nxt


def leapfrog_energy(u_a: np.ndarray, u_b: np.ndarray, dx: float, dt: float) -> float:
    """Discrete energy between two consecutive levels with zero boundary values.

    ``E = 1/2 |(u_b - u_a)/dt|^2 + 1/2 <D u_a, D u_b>`` summed with weight ``dx^2``;
    it is exactly invariant under :func:`leapfrog_step` when the boundary is 0.
    """
    v = (u_b - u_a) / dt
    gx = np.sum(np.diff(u_a, axis=0) * np.diff(u_b, axis=0))
    gy = np.sum(np.diff(u_a, axis=1) * np.diff(u_b, axis=1))
    return 0.5 * dx * dx * (np.sum(v * v) + (gx + gy) / (dx * dx))


def time_reverse_2d(data: SeriesData, safety: float = 1.0) -> Image:
    """Reconstruct the initial pressure from boundary data on a square.

    The grid is the one of ``data.geometry``; if the sampling step violates
    the stability limit the series is resampled in time first.
    """
    if data.kind != "square":
        raise ValueError(f"time reversal needs square boundary data, got {data.kind!r}")
    sq: SquareBoundary = data.geometry
    dx = sq.spacing
    values, time = data.values, data.time
    limit = cfl_step(dx, safety)
    if time.dt > limit * (1 + 1e-12):
        values, time = resample_time(values, time, limit)
        log.info("resampled %d -> %d time levels for stability", data.time.nt, time.nt)
    courant2 = (time.dt / dx) ** 2
    bi, bj = sq.indices()
    n = sq.n
    u_next = np.zeros((n, n))
    u_cur = np.zeros((n, n))
    u_next[bi, bj] = values[:, -1]
    u_cur[bi, bj] = values[:, -1]
    # stepping from level m+1, m to m-1; u_t = 0 at the final time
    for m in range(time.nt - 2, -1, -1):
        if m == time.nt - 2:
            u_cur = u_next.copy()
            u_cur[bi, bj] = values[:, m]
            continue
        u_prev = leapfrog_step(u_next, u_cur, courant2)
        u_prev[bi, bj] = values[:, m]
        u_next, u_cur = u_cur, u_prev
    return Image(u_cur, sq.L, meta={"time_levels": time.nt, "dt": time.dt})
