"""Geometry, phantoms, grids and data containers shared by all pipelines.

Units have the speed of sound set to 1, so times and lengths share a scale.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "Primitive",
    "Phantom",
    "TimeGrid",
    "DetectorRing",
    "DetectorSphere",
    "LineDetectorGeometry",
    "LineSlice",
    "SquareBoundary",
    "SeriesData",
    "Image",
    "eval_phantom",
    "xray_projection",
    "project_phantom",
    "axis_vectors",
    "load_phantom",
    "phantom_from_dict",
]

PUBLIC_KINDS = {"disk": (2,), "ball": (3,), "gaussian": (2, 3)}
# "chord" is the x-ray projection of a ball; produced internally only
KINDS = dict(PUBLIC_KINDS, chord=(2,))
GAUSS_SUPPORT = 4.0


@dataclass(frozen=True)
class Primitive:
    kind: str
    center: tuple
    radius: float
    amplitude: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown primitive kind {self.kind!r}")
        if len(self.center) not in KINDS[self.kind]:
            raise ValueError(f"{self.kind} primitive cannot have a {len(self.center)}-D center")
        if not self.radius > 0:
            raise ValueError("primitive radius / sigma must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "amplitude", float(self.amplitude))

    @property
    def dimension(self) -> int:
        return len(self.center)

    @property
    def extent(self) -> float:
        """Radius of the ball outside which the primitive is (numerically) zero."""
        if self.kind == "gaussian":
            return GAUSS_SUPPORT * self.radius
        return self.radius

    def scaled(self, factor: float) -> "Primitive":
        return Primitive(self.kind, self.center, self.radius, self.amplitude * factor)


@dataclass(frozen=True)
class Phantom:
    """Sum of analytic primitives (disks, balls, Gaussians)."""

    primitives: tuple
    dimension: int

    def __post_init__(self):
        prims = tuple(self.primitives)
        object.__setattr__(self, "primitives", prims)
        if self.dimension not in (2, 3):
            raise ValueError("phantom dimension must be 2 or 3")
        for p in prims:
            if p.dimension != self.dimension:
                raise ValueError("primitive dimension does not match phantom dimension")

    @property
    def support_radius(self) -> float:
        if not self.primitives:
            return 0.0
        return max(float(np.linalg.norm(p.center)) + p.extent for p in self.primitives)

    @property
    def mass(self) -> float:
        """Integral of the phantom over the whole space."""
        total = 0.0
        for p in self.primitives:
            a = p.radius
            if p.kind == "disk":
                total += p.amplitude * math.pi * a * a
            elif p.kind == "ball":
                total += p.amplitude * 4.0 / 3.0 * math.pi * a**3
            elif p.kind == "chord":
                total += p.amplitude * 4.0 / 3.0 * math.pi * a**3
            else:
                total += p.amplitude * (2.0 * math.pi * a * a) ** (p.dimension / 2.0)
        return total

    def scaled(self, factor: float) -> "Phantom":
        return Phantom(tuple(p.scaled(factor) for p in self.primitives), self.dimension)

    def __add__(self, other: "Phantom") -> "Phantom":
        if other.dimension != self.dimension:
            raise ValueError("cannot add phantoms of different dimension")
        return Phantom(self.primitives + other.primitives, self.dimension)

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "primitives": [
                {"kind": p.kind, "center": list(p.center), "radius": p.radius, "amplitude": p.amplitude}
                for p in self.primitives
            ],
        }


def phantom_from_dict(doc: dict) -> Phantom:
    """Validate and build a phantom from its JSON document form."""
    if not isinstance(doc, dict):
        raise ValueError("phantom document must be a JSON object")
    extra = set(doc) - {"dimension", "primitives"}
    if extra:
        raise ValueError(f"unknown phantom fields: {sorted(extra)}")
    dim = doc.get("dimension")
    if dim not in (2, 3):
        raise ValueError("phantom 'dimension' must be 2 or 3")
    prims = doc.get("primitives")
    if not isinstance(prims, list):
        raise ValueError("phantom 'primitives' must be a list")
    out = []
    for i, item in enumerate(prims):
        if not isinstance(item, dict):
            raise ValueError(f"primitive {i} must be an object")
        kind = item.get("kind")
        if kind not in PUBLIC_KINDS:
            raise ValueError(f"primitive {i}: unknown kind {kind!r}")
        keys = set(item)
        allowed = {"kind", "center", "radius", "sigma", "amplitude"}
        if keys - allowed:
            raise ValueError(f"primitive {i}: unknown fields {sorted(keys - allowed)}")
        size = item.get("sigma" if kind == "gaussian" and "sigma" in item else "radius")
        if not isinstance(size, (int, float)) or isinstance(size, bool):
            raise ValueError(f"primitive {i}: radius/sigma must be a number")
        center = item.get("center")
        if not isinstance(center, list) or len(center) != dim:
            raise ValueError(f"primitive {i}: center must be a list of {dim} numbers")
        amp = item.get("amplitude", 1.0)
        out.append(Primitive(kind, tuple(center), size, amp))
    return Phantom(tuple(out), dim)


def load_phantom(path) -> Phantom:
    return phantom_from_dict(json.loads(Path(path).read_text()))


def _disk_indicator(dist, radius):
    return (dist <= radius).astype(float)


def eval_phantom(phantom: Phantom, x) -> np.ndarray:
    """Evaluate the phantom at points ``x`` of shape ``(..., dimension)``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != phantom.dimension:
        raise ValueError("point dimension does not match phantom")
    out = np.zeros(x.shape[:-1])
    for p in phantom.primitives:
        d2 = np.sum((x - np.asarray(p.center)) ** 2, axis=-1)
        if p.kind in ("disk", "ball"):
            out += p.amplitude * (d2 <= p.radius**2)
        elif p.kind == "chord":
            out += 2.0 * p.amplitude * np.sqrt(np.clip(p.radius**2 - d2, 0.0, None))
        else:
            out += p.amplitude * np.exp(-d2 / (2.0 * p.radius**2))
    return out if out.ndim else float(out)


def axis_vectors(alpha: float):
    """Return ``(D, N, e2)`` for the line-detector rotation angle ``alpha``."""
    D = np.array([math.cos(alpha), 0.0, math.sin(alpha)])
    N = np.array([-math.sin(alpha), 0.0, math.cos(alpha)])
    e2 = np.array([0.0, 1.0, 0.0])
    return D, N, e2


def xray_projection(phantom: Phantom, alpha: float, h) -> np.ndarray:
    """Line integral of a 3-D phantom along ``h1 N(alpha) + h2 e2 + s D(alpha)``.

    ``h`` has shape ``(..., 2)`` with ``h1`` along ``N(alpha)`` and ``h2``
    along the vertical axis ``e2``.
    """
    if phantom.dimension != 3:
        raise ValueError("xray_projection needs a 3-D phantom")
    h = np.asarray(h, dtype=float)
    _, N, e2 = axis_vectors(alpha)
    out = np.zeros(h.shape[:-1])
    for p in phantom.primitives:
        c = np.asarray(p.center)
        rho2 = (h[..., 0] - c @ N) ** 2 + (h[..., 1] - c @ e2) ** 2
        if p.kind == "ball":
            out += 2.0 * p.amplitude * np.sqrt(np.clip(p.radius**2 - rho2, 0.0, None))
        else:
            s = p.radius
            out += p.amplitude * s * math.sqrt(2 * math.pi) * np.exp(-rho2 / (2 * s * s))
    return out if out.ndim else float(out)


def project_phantom(phantom: Phantom, alpha: float) -> Phantom:
    """2-D phantom equal to the x-ray projection along ``D(alpha)``.

    The result is expressed in the frame of the detector ring used for line
    slices: first coordinate along ``e2``, second along ``N(alpha)``, so that
    the detector at ``beta`` sits at ``R (cos beta, sin beta)``.
    """
    if phantom.dimension != 3:
        raise ValueError("project_phantom needs a 3-D phantom")
    _, N, e2 = axis_vectors(alpha)
    prims = []
    for p in phantom.primitives:
        c = np.asarray(p.center)
        center = (float(c @ e2), float(c @ N))
        if p.kind == "ball":
            prims.append(Primitive("chord", center, p.radius, p.amplitude))
        else:
            amp = p.amplitude * p.radius * math.sqrt(2 * math.pi)
            prims.append(Primitive("gaussian", center, p.radius, amp))
    return Phantom(tuple(prims), 2)


@dataclass(frozen=True)
class TimeGrid:
    dt: float
    nt: int

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("time step must be positive")
        if self.nt < 2:
            raise ValueError("need at least two time samples")

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.nt) * self.dt

    @property
    def t_max(self) -> float:
        return (self.nt - 1) * self.dt


@dataclass(frozen=True)
class DetectorRing:
    R: float
    count: int

    def __post_init__(self):
        if not self.R > 0 or self.count < 2:
            raise ValueError("ring needs R > 0 and at least two detectors")

    @property
    def angles(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.count) / self.count

    @property
    def positions(self) -> np.ndarray:
        a = self.angles
        return self.R * np.stack([np.cos(a), np.sin(a)], axis=-1)


@dataclass(frozen=True)
class DetectorSphere:
    """Gauss-Legendre nodes in ``cos(theta)`` times equispaced azimuths.

    Detector rows are ordered theta-major: row ``j * n_phi + q``.
    """

    R: float
    n_theta: int
    n_phi: int

    def __post_init__(self):
        if not self.R > 0 or self.n_theta < 1 or self.n_phi < 1:
            raise ValueError("invalid detector sphere")

    @property
    def count(self) -> int:
        return self.n_theta * self.n_phi

    @property
    def max_degree(self) -> int:
        return min(self.n_theta - 1, (self.n_phi - 1) // 2)

    def quadrature(self):
        """``(cos_theta_nodes, weights, phi_nodes)``."""
        x, w = np.polynomial.legendre.leggauss(self.n_theta)
        phi = 2 * np.pi * np.arange(self.n_phi) / self.n_phi
        return x, w, phi

    @property
    def positions(self) -> np.ndarray:
        x, _, phi = self.quadrature()
        st = np.sqrt(1 - x * x)
        X = self.R * st[:, None] * np.cos(phi)[None, :]
        Y = self.R * st[:, None] * np.sin(phi)[None, :]
        Z = self.R * np.repeat(x[:, None], self.n_phi, axis=1)
        return np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=-1)


@dataclass(frozen=True)
class LineDetectorGeometry:
    R: float
    alphas: tuple
    n_beta: int

    def __post_init__(self):
        a = np.asarray(self.alphas, dtype=float)
        object.__setattr__(self, "alphas", tuple(float(v) for v in a))
        if not self.R > 0 or self.n_beta < 2 or a.size < 1:
            raise ValueError("invalid line-detector geometry")
        if np.any(a < 0) or np.any(a >= np.pi) or np.any(np.diff(a) <= 0):
            raise ValueError("alphas must be strictly increasing within [0, pi)")

    @classmethod
    def uniform(cls, R: float, n_alpha: int, n_beta: int) -> "LineDetectorGeometry":
        return cls(R, tuple(np.pi * np.arange(n_alpha) / n_alpha), n_beta)

    @property
    def betas(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_beta) / self.n_beta

    def anchor(self, alpha: float, beta) -> np.ndarray:
        _, N, e2 = axis_vectors(alpha)
        beta = np.asarray(beta, dtype=float)[..., None]
        return self.R * np.cos(beta) * e2 + self.R * np.sin(beta) * N

    def slice(self, index: int) -> "LineSlice":
        return LineSlice(self.R, self.n_beta, self.alphas[index])


@dataclass(frozen=True)
class LineSlice:
    """One rotation of the line-detector assembly, seen as a 2-D ring."""

    R: float
    count: int
    alpha: float

    @property
    def ring(self) -> DetectorRing:
        return DetectorRing(self.R, self.count)


@dataclass(frozen=True)
class SquareBoundary:
    """Boundary nodes of the grid ``n x n`` over ``[-L, L]^2``.

    Nodes are listed counter-clockwise starting at the corner ``(-L, -L)``.
    """

    L: float
    n: int

    def __post_init__(self):
        if not self.L > 0 or self.n < 3:
            raise ValueError("square boundary needs L > 0 and n >= 3")

    @property
    def count(self) -> int:
        return 4 * (self.n - 1)

    @property
    def spacing(self) -> float:
        return 2 * self.L / (self.n - 1)

    def indices(self):
        """``(i, j)`` grid indices of the boundary nodes, in storage order."""
        m = self.n - 1
        k = np.arange(m)
        i = np.concatenate([k, np.full(m, m), m - k, np.zeros(m, dtype=int)])
        j = np.concatenate([np.zeros(m, dtype=int), k, np.full(m, m), m - k])
        return i, j

    @property
    def positions(self) -> np.ndarray:
        i, j = self.indices()
        h = self.spacing
        return np.stack([-self.L + i * h, -self.L + j * h], axis=-1)


@dataclass(frozen=True)
class SeriesData:
    """Detector-indexed time series ``values[detector, time]``."""

    geometry: object
    values: np.ndarray = field(repr=False)
    time: TimeGrid

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.shape != (self.geometry.count, self.time.nt):
            raise ValueError(
                f"series shape {v.shape} does not match geometry "
                f"({self.geometry.count} detectors x {self.time.nt} samples)"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("series contains non-finite samples")

    @property
    def kind(self) -> str:
        return {
            DetectorRing: "ring",
            DetectorSphere: "sphere",
            LineSlice: "line",
            SquareBoundary: "square",
        }[type(self.geometry)]

    def with_values(self, values) -> "SeriesData":
        return SeriesData(self.geometry, values, self.time)


@dataclass(frozen=True)
class Image:
    """Node-centred samples on ``[-L, L]^d`` with ``n`` nodes per axis."""

    values: np.ndarray = field(repr=False)
    extent: float
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim not in (2, 3) or len(set(v.shape)) != 1 or v.shape[0] < 2:
            raise ValueError("image must be a square/cubic array with n >= 2")
        if not self.extent > 0:
            raise ValueError("image extent must be positive")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def ndim(self) -> int:
        return self.values.ndim

    @property
    def spacing(self) -> float:
        return 2 * self.extent / (self.n - 1)

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.extent, self.extent, self.n)

    def points(self) -> np.ndarray:
        grids = np.meshgrid(*([self.axis] * self.ndim), indexing="ij")
        return np.stack(grids, axis=-1)

    def radius(self) -> np.ndarray:
        return np.sqrt(np.sum(self.points() ** 2, axis=-1))


def sample_phantom(phantom: Phantom, n: int, extent: float) -> Image:
    """Ground-truth image of ``phantom`` on the reconstruction grid."""
    axis = np.linspace(-extent, extent, n)
    grids = np.meshgrid(*([axis] * phantom.dimension), indexing="ij")
    return Image(eval_phantom(phantom, np.stack(grids, axis=-1)), extent)


def gaussian_phantom(centers: Sequence, sigmas: Sequence, amplitudes: Sequence | None = None) -> Phantom:
    """Convenience constructor for sums of Gaussian blobs."""
    if amplitudes is None:
        amplitudes = [1.0] * len(centers)
    prims = tuple(Primitive("gaussian", tuple(c), s, a) for c, s, a in zip(centers, sigmas, amplitudes))
    return Phantom(prims, len(centers[0]))


__all__ += ["sample_phantom", "gaussian_phantom"]
