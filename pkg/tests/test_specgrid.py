import numpy as np
import pytest

from tatrecon.specgrid import (
    PolarSpectrum,
    SphericalSpectrum,
    cartesian_axis,
    cartesian_inverse,
    polar_to_cartesian,
    radial_stencil,
    spherical_to_cartesian,
)

SHIFT2 = np.array([1.5, -2.0])
SHIFT3 = np.array([1.5, -2.0, 1.0])


def smooth2(kx, ky):
    return np.exp(-((kx - SHIFT2[0]) ** 2 + (ky - SHIFT2[1]) ** 2) / 20)


def smooth3(kx, ky, kz):
    return np.exp(-((kx - SHIFT3[0]) ** 2 + (ky - SHIFT3[1]) ** 2 + (kz - SHIFT3[2]) ** 2) / 20)


def polar_of(func, dlam, rows, n_phi):
    lam = dlam * np.arange(rows)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    vals = func(lam[:, None] * np.cos(phi), lam[:, None] * np.sin(phi)).astype(complex)
    return PolarSpectrum(lam, vals, vals[0, 0])


def spherical_of(func, dlam, rows, n_theta, n_phi):
    lam = dlam * np.arange(rows)
    th = np.linspace(0, np.pi, n_theta)[:, None]
    ph = 2 * np.pi * np.arange(n_phi)[None, :] / n_phi
    L = lam[:, None, None]
    vals = func(L * np.sin(th) * np.cos(ph), L * np.sin(th) * np.sin(ph), L * np.cos(th) + 0 * ph).astype(complex)
    return SphericalSpectrum(lam, vals, vals[0, 0, 0])


def test_radial_stencil_reproduces_cubics():
    lam = np.linspace(0, 9, 37)
    idx, w = radial_stencil(lam, 1.0, 10)
    assert np.allclose(w.sum(-1), 1)
    p = lambda x: 2 - x + 0.5 * x**2 - 0.1 * x**3  # noqa: E731
    assert np.allclose((w * p(idx.astype(float))).sum(-1), p(lam))
    _, w_out = radial_stencil(np.array([9.5]), 1.0, 10)
    assert not np.any(w_out)
    with pytest.raises(ValueError):
        radial_stencil(lam, 1.0, 3)


def test_polar_constant_and_outside():
    spec = PolarSpectrum(np.arange(8) * 0.5, np.full((8, 12), 3.0 + 1j), 3.0 + 1j)
    k = np.linspace(-2.4, 2.4, 9)
    out = polar_to_cartesian(spec, k, k)
    K1, K2 = np.meshgrid(k, k, indexing="ij")
    inside = np.hypot(K1, K2) <= 3.5
    assert np.allclose(out[inside], 3.0 + 1j) and not np.any(out[~inside])


def test_polar_node_exactness():
    spec = polar_of(smooth2, 0.5, 20, 24)
    lam, phi = 0.5 * 7, 2 * np.pi * 5 / 24
    out = polar_to_cartesian(spec, [lam * np.cos(phi)], [lam * np.sin(phi)])
    assert abs(out[0, 0] - spec.values[7, 5]) < 1e-13


def _polar_error(dlam, n_phi):
    spec = polar_of(smooth2, dlam, int(12 / dlam) + 1, n_phi)
    k = np.linspace(-8, 8, 41)
    K1, K2 = np.meshgrid(k, k, indexing="ij")
    return np.max(np.abs(polar_to_cartesian(spec, k, k) - smooth2(K1, K2)))


def test_polar_refinement_order():
    coarse, fine = _polar_error(0.4, 32), _polar_error(0.2, 64)
    assert coarse / fine >= 3.5


def _spherical_error(dlam, n_theta, n_phi):
    spec = spherical_of(smooth3, dlam, int(14 / dlam) + 1, n_theta, n_phi)
    k = np.linspace(-7, 7, 15)
    K1, K2, K3 = np.meshgrid(k, k, k, indexing="ij")
    return np.max(np.abs(spherical_to_cartesian(spec, k, k, k) - smooth3(K1, K2, K3)))


def test_spherical_refinement_order():
    coarse, fine = _spherical_error(0.4, 17, 32), _spherical_error(0.2, 33, 64)
    assert coarse / fine >= 3.5


def test_spherical_constant_and_node():
    spec = SphericalSpectrum(np.arange(6) * 0.5, np.full((6, 9, 16), 2.0 + 0j), 2.0)
    k = np.linspace(-1.5, 1.5, 5)
    out = spherical_to_cartesian(spec, k, k, k)
    K = np.meshgrid(k, k, k, indexing="ij")
    inside = np.sqrt(sum(a * a for a in K)) <= 2.5
    assert np.allclose(out[inside], 2.0) and not np.any(out[~inside])
    spec = spherical_of(smooth3, 0.5, 12, 9, 16)
    lam, th, ph = 0.5 * 4, np.pi * 3 / 8, 2 * np.pi * 5 / 16
    node = lam * np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])
    got = spherical_to_cartesian(spec, [node[0]], [node[1]], [node[2]])
    assert abs(got[0, 0, 0] - spec.values[4, 3, 5]) < 1e-12


def test_regridding_is_linear(rng):
    a = polar_of(smooth2, 0.5, 16, 20)
    vals = rng.normal(size=a.values.shape) + 1j * rng.normal(size=a.values.shape)
    b = PolarSpectrum(a.lambdas, vals, vals[0, 0])
    c = PolarSpectrum(a.lambdas, 2 * a.values - 3j * vals, 2 * a.dc - 3j * b.dc)
    k = np.linspace(-6, 6, 23)
    lhs = polar_to_cartesian(c, k, k)
    rhs = 2 * polar_to_cartesian(a, k, k) - 3j * polar_to_cartesian(b, k, k)
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_hermitian_symmetry_preserved():
    # real part even and imaginary part odd in Lambda
    func = lambda x, y: np.exp(-(x * x + y * y) / 20) * np.exp(0.3j * x - 0.2j * y)  # noqa: E731
    spec = polar_of(func, 0.5, 24, 32)
    k = np.linspace(-5, 5, 21)
    out = polar_to_cartesian(spec, k, k)
    assert np.max(np.abs(out - np.conj(out[::-1, ::-1]))) < 1e-12


def test_cartesian_inverse_gaussian():
    n, extent, sigma = 65, 1.0, 0.1
    axis, size = cartesian_axis(n, extent, 2.0)
    assert size >= 130
    x0 = np.array([0.2, -0.3])
    K1, K2 = np.meshgrid(axis, axis, indexing="ij")
    spec = np.exp(-0.5 * sigma**2 * (K1**2 + K2**2)) * np.exp(-1j * (K1 * x0[0] + K2 * x0[1]))
    img = cartesian_inverse(spec, n, extent, sign=+1, scale=1 / (2 * np.pi))
    x = np.linspace(-extent, extent, n)
    X, Y = np.meshgrid(x, x, indexing="ij")
    ref = np.exp(-((X - x0[0]) ** 2 + (Y - x0[1]) ** 2) / (2 * sigma**2)) / sigma**2
    assert np.max(np.abs(img - ref)) < 1e-10 * np.max(ref)


def test_cartesian_inverse_negative_sign_3d():
    n, extent, sigma = 33, 1.0, 0.15
    axis, _ = cartesian_axis(n, extent, 2.0)
    K = np.meshgrid(axis, axis, axis, indexing="ij")
    spec = np.exp(-0.5 * sigma**2 * sum(a * a for a in K))
    img = cartesian_inverse(spec, n, extent, sign=-1, scale=(2 * np.pi) ** -1.5)
    x = np.linspace(-extent, extent, n)
    X = np.meshgrid(x, x, x, indexing="ij")
    ref = np.exp(-sum(a * a for a in X) / (2 * sigma**2)) / sigma**3
    assert np.max(np.abs(img - ref)) < 1e-9 * np.max(ref)
