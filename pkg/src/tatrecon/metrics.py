"""Image errors and a wall-clock scaling harness."""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .model import Image

__all__ = ["rel_l2_error", "ScalingTable", "scaling_probe", "fit_exponent", "PIPELINES"]


def _norm(a: np.ndarray) -> float:
    # pairwise summation; BLAS reductions may depend on the thread count
    return math.sqrt(float(np.sum(a * a)))


def rel_l2_error(a: Image, b: Image, mask_radius: float | None = None) -> float:
    """``||a - b|| / ||b||`` over the nodes with ``|x| <= mask_radius``.

    Raises
    ------
    ValueError
        If the grids differ or the reference vanishes on the mask.
    """
    if a.values.shape != b.values.shape or not math.isclose(a.extent, b.extent, rel_tol=1e-12):
        raise ValueError("images are on different grids")
    diff = a.values - b.values
    ref = b.values
    if mask_radius is not None:
        m = b.radius() <= mask_radius
        diff, ref = diff[m], ref[m]
    den = _norm(ref)
    if den == 0:
        raise ValueError("reference image is zero on the mask")
    return _norm(diff) / den


def fit_exponent(sizes: Sequence[int], seconds: Sequence[float]) -> float:
    """Least-squares ``p`` in ``t ~ c n^p log n``; NaN for fewer than two sizes."""
    n = np.asarray(sizes, dtype=float)
    t = np.asarray(seconds, dtype=float)
    if n.size < 2:
        return float("nan")
    y = np.log(t / np.log(n))
    p, _ = np.polyfit(np.log(n), y, 1)
    return float(p)


@dataclass(frozen=True)
class ScalingTable:
    sizes: tuple
    seconds: tuple
    exponent: float

    def ratios(self) -> list:
        return [b / a for a, b in zip(self.seconds, self.seconds[1:])]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "seconds", "fitted_exponent"])
        for n, s in zip(self.sizes, self.seconds):
            w.writerow([n, f"{s:.6f}", f"{self.exponent:.4f}"])
        return buf.getvalue()


def _recon2d_case():
    from .forward import forward_2d
    from .model import DetectorRing, TimeGrid, gaussian_phantom
    from .recon2d import reconstruct_2d

    ph = gaussian_phantom([(-0.3, 0.2), (0.35, 0.3), (0.1, -0.4)], [0.08, 0.05, 0.1], [1.0, 0.8, 0.6])
    data = forward_2d(ph, DetectorRing(1.05, 272), TimeGrid(0.005, 1000))
    return lambda n: reconstruct_2d(data, n)


def _recon3d_case():
    from .forward import forward_3d
    from .model import DetectorSphere, TimeGrid, gaussian_phantom
    from .recon3d import reconstruct_3d

    ph = gaussian_phantom([(0.3, 0.0, 0.0)], [0.1], [1.0])
    data = forward_3d(ph, DetectorSphere(1.05, 33, 66), TimeGrid(0.01, 232))
    return lambda n: reconstruct_3d(data, n)


PIPELINES: dict = {"recon2d": _recon2d_case, "recon3d": _recon3d_case}


def scaling_probe(pipeline: str | Callable[[int], object], sizes: Sequence[int], repeats: int = 3) -> ScalingTable:
    """Median wall time of ``repeats`` runs at each size, plus the fitted exponent.

    ``pipeline`` is a registered name or a callable taking ``n``; data
    preparation for registered pipelines is excluded from the timings.
    """
    sizes = [int(s) for s in sizes]
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("sizes must be strictly ascending")
    if isinstance(pipeline, str):
        if pipeline not in PIPELINES:
            raise ValueError(f"unknown pipeline {pipeline!r}; choose from {sorted(PIPELINES)}")
        run = PIPELINES[pipeline]()
    else:
        run = pipeline
    seconds = []
    for n in sizes:
        samples = []
        for _ in range(max(1, repeats)):
            t0 = time.perf_counter()
            run(n)
            samples.append(time.perf_counter() - t0)
        seconds.append(float(np.median(samples)))
    return ScalingTable(tuple(sizes), tuple(seconds), fit_exponent(sizes, seconds))
