import numpy as np
import pytest

from tatrecon.metrics import rel_l2_error
from tatrecon.model import SeriesData, SquareBoundary, TimeGrid, gaussian_phantom, sample_phantom
from tatrecon.timereversal import (
    cfl_step,
    forward_square_boundary,
    leapfrog_energy,
    leapfrog_step,
    resample_time,
    time_reverse_2d,
)

PHANTOM = gaussian_phantom([(0.2, -0.1)], [0.12])


def round_trip_error(n, T, safety=0.5, L=1.05):
    sq = SquareBoundary(L, n)
    nt = int(T / cfl_step(sq.spacing, safety)) + 1
    data = forward_square_boundary(PHANTOM, sq, TimeGrid(T / (nt - 1), nt))
    img = time_reverse_2d(data)
    return rel_l2_error(img, sample_phantom(PHANTOM, n, L), mask_radius=0.9 * L)


def test_zero_boundary_gives_zero_image():
    sq = SquareBoundary(1.0, 17)
    img = time_reverse_2d(SeriesData(sq, np.zeros((sq.count, 50)), TimeGrid(0.02, 50)))
    assert img.values.shape == (17, 17) and not np.any(img.values)


def test_round_trip_n256():
    sq = SquareBoundary(1.05, 256)
    data = forward_square_boundary(PHANTOM, sq, TimeGrid(0.005, 1001))
    img = time_reverse_2d(data)
    assert rel_l2_error(img, sample_phantom(PHANTOM, 256, 1.05), mask_radius=0.9 * 1.05) <= 0.10


def test_second_order_convergence():
    # a long record keeps the truncation of the time window below the discretisation error
    coarse, fine = round_trip_error(65, 10.0), round_trip_error(129, 10.0)
    assert coarse / fine >= 3.0


def test_energy_conserved_with_zero_boundary(rng):
    n, dx = 64, 1.0 / 63
    dt = cfl_step(dx, 0.9)
    c2 = (dt / dx) ** 2
    u0 = np.zeros((n, n))
    u0[1:-1, 1:-1] = rng.normal(size=(n - 2, n - 2))
    u1 = u0.copy()
    u1[1:-1, 1:-1] += 0.01 * rng.normal(size=(n - 2, n - 2))
    e0 = leapfrog_energy(u0, u1, dx, dt)
    a, b = u0, u1
    for _ in range(2000):
        a, b = b, leapfrog_step(a, b, c2)
    assert abs(leapfrog_energy(a, b, dx, dt) - e0) <= 1e-10 * abs(e0)


def test_cfl_resampling_path():
    sq = SquareBoundary(1.05, 65)
    coarse_dt = 2.0 * cfl_step(sq.spacing)
    nt = int(3.0 / coarse_dt) + 1
    data = forward_square_boundary(PHANTOM, sq, TimeGrid(coarse_dt, nt))
    img = time_reverse_2d(data)
    assert img.meta["dt"] <= cfl_step(sq.spacing) * (1 + 1e-12)
    assert img.meta["time_levels"] > nt
    assert np.all(np.isfinite(img.values)) and np.max(np.abs(img.values)) < 10


def test_resample_time_exact_for_linear_data():
    tg = TimeGrid(0.1, 31)
    vals = np.stack([2.0 * tg.times - 1.0, -tg.times])
    out, new = resample_time(vals, tg, 0.03)
    assert new.dt <= 0.03 and abs(new.t_max - tg.t_max) < 1e-12
    assert np.allclose(out[0], 2.0 * new.times - 1.0, atol=1e-12)
    assert np.allclose(out[1], -new.times, atol=1e-12)


def test_boundary_data_symmetry_for_centered_phantom():
    sq = SquareBoundary(1.0, 21)
    ph = gaussian_phantom([(0.0, 0.0)], [0.1])
    data = forward_square_boundary(ph, sq, TimeGrid(0.05, 60))
    # the square boundary has four-fold symmetry, so rotating the node order by a quarter turn
    quarter = sq.count // 4
    assert np.allclose(np.roll(data.values, quarter, axis=0), data.values, atol=1e-14)
    assert not np.any(data.values[:, 0])


def test_support_violation():
    sq = SquareBoundary(0.5, 17)
    with pytest.raises(ValueError):
        forward_square_boundary(gaussian_phantom([(0.3, 0.0)], [0.1]), sq, TimeGrid(0.05, 20))
    from tatrecon.model import DetectorRing

    with pytest.raises(ValueError):
        time_reverse_2d(SeriesData(DetectorRing(1.0, 8), np.zeros((8, 10)), TimeGrid(0.1, 10)))
