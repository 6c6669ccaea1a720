import numpy as np
import pytest

from tatrecon.forward import forward_linedet
from tatrecon.linedet import RotatingPlaneSpectrum, assemble_3d_spectrum, per_alpha_spectra, reconstruct_linedet
from tatrecon.metrics import rel_l2_error
from tatrecon.model import LineDetectorGeometry, Phantom, Primitive, SeriesData, TimeGrid, axis_vectors, sample_phantom
from tatrecon.recon2d import ring_spectrum

SHIFT = np.array([1.0, -1.5, 0.5])


def smooth(kx, ky, kz):
    return np.exp(-((kx - SHIFT[0]) ** 2 + (ky - SHIFT[1]) ** 2 + (kz - SHIFT[2]) ** 2) / 20)


def planes_of(func, n_alpha, dlam, rows, n_phi):
    alphas = np.pi * np.arange(n_alpha) / n_alpha
    lam = dlam * np.arange(rows)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    vals = np.empty((n_alpha, rows, n_phi), dtype=complex)
    for a, alpha in enumerate(alphas):
        _, N, e2 = axis_vectors(alpha)
        dirs = np.cos(phi)[:, None] * e2 + np.sin(phi)[:, None] * N
        pts = lam[:, None, None] * dirs[None]
        vals[a] = func(pts[..., 0], pts[..., 1], pts[..., 2])
    dc = func(0.0, 0.0, 0.0)
    return RotatingPlaneSpectrum(alphas, lam, vals, np.full(n_alpha, dc))


def test_assembly_of_constant():
    spec = RotatingPlaneSpectrum(np.pi * np.arange(4) / 4, 0.5 * np.arange(8), np.ones((4, 8, 16), complex), np.ones(4))
    k = np.linspace(-2, 2, 9)
    out = assemble_3d_spectrum(spec, k, k, k)
    K = np.meshgrid(k, k, k, indexing="ij")
    inside = np.sqrt(sum(a * a for a in K)) <= 3.5
    assert np.allclose(out[inside], 1) and not np.any(out[~inside])


def test_assembly_node_exactness():
    spec = planes_of(smooth, 8, 0.5, 16, 32)
    m = 5
    # Lambda = (0, 0, lam_m) lies on plane alpha = 0 at in-plane angle pi/2
    got = assemble_3d_spectrum(spec, [0.0], [0.0], [spec.lambdas[m]])[0, 0, 0]
    assert abs(got - spec.values[0, m, 32 // 4]) < 1e-13
    # a node on plane 3 away from the common axis
    _, N, e2 = axis_vectors(spec.alphas[3])
    lam, phi = spec.lambdas[6], 2 * np.pi * 5 / 32
    p = lam * (np.cos(phi) * e2 + np.sin(phi) * N)
    got = assemble_3d_spectrum(spec, [p[0]], [p[1]], [p[2]])[0, 0, 0]
    assert abs(got - spec.values[3, 6, 5]) < 1e-12


def _assembly_error(n_alpha, dlam, n_phi):
    spec = planes_of(smooth, n_alpha, dlam, int(14 / dlam) + 1, n_phi)
    k = np.linspace(-7, 7, 15)
    K = np.meshgrid(k, k, k, indexing="ij")
    return np.max(np.abs(assemble_3d_spectrum(spec, k, k, k) - smooth(*K)))


def test_assembly_refinement_order():
    coarse, fine = _assembly_error(16, 0.4, 32), _assembly_error(32, 0.2, 64)
    assert coarse / fine >= 3.5


def test_assembly_needs_two_planes():
    spec = RotatingPlaneSpectrum(np.array([0.0]), 0.5 * np.arange(8), np.ones((1, 8, 16), complex), np.ones(1))
    with pytest.raises(ValueError):
        assemble_3d_spectrum(spec, [0.0], [0.0], [0.0])


def test_dc_spread():
    spec = RotatingPlaneSpectrum(np.arange(3) * 0.5, np.arange(4.0), np.zeros((3, 4, 8), complex), np.array([1.0, 1.01, 0.99]))
    assert spec.dc == pytest.approx(1.0)
    assert spec.dc_spread() == pytest.approx(0.02)


@pytest.fixture(scope="module")
def small_scan():
    geom = LineDetectorGeometry.uniform(1.05, 16, 96)
    ph = Phantom((Primitive("gaussian", (0.15, -0.1, 0.2), 0.12, 1.0),), 3)
    return geom, ph, forward_linedet(ph, geom, TimeGrid(0.01, 400))


def test_zero_scan():
    geom = LineDetectorGeometry.uniform(1.05, 4, 32)
    tg = TimeGrid(0.02, 200)
    scan = [SeriesData(geom.slice(i), np.zeros((32, 200)), tg) for i in range(4)]
    img = reconstruct_linedet(scan, geom, 16)
    assert not np.any(img.values)


def test_scan_geometry_mismatch():
    geom = LineDetectorGeometry.uniform(1.05, 4, 32)
    tg = TimeGrid(0.02, 200)
    scan = [SeriesData(geom.slice(i), np.zeros((32, 200)), tg) for i in range(3)]
    with pytest.raises(ValueError):
        per_alpha_spectra(scan, geom)


def test_centered_ball_gives_identical_planes():
    geom = LineDetectorGeometry.uniform(1.05, 3, 16)
    ball = Phantom((Primitive("ball", (0.0, 0.0, 0.0), 0.3, 1.0),), 3)
    scan = forward_linedet(ball, geom, TimeGrid(0.02, 150))
    spec = per_alpha_spectra(scan, geom)
    scale = np.max(np.abs(spec.values))
    for a in range(1, 3):
        assert np.max(np.abs(spec.values[a] - spec.values[0])) <= 1e-10 * scale


def test_single_slice_matches_circular_pipeline(small_scan):
    geom, _, scan = small_scan
    spec = per_alpha_spectra(scan, geom)
    rs = ring_spectrum(scan[5])
    polar = rs.polar(spec.n_phi)
    assert np.array_equal(spec.values[5], polar.values)
    assert spec.dcs[5] == polar.dc


def test_reconstruct_gaussian(small_scan):
    geom, ph, scan = small_scan
    img = reconstruct_linedet(scan, geom, 40)
    assert rel_l2_error(img, sample_phantom(ph, 40, img.extent), mask_radius=0.9) < 0.10
    assert img.meta["dc_spread"] <= 0.02
