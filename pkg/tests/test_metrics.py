import math

import numpy as np
import pytest

from tatrecon.metrics import ScalingTable, fit_exponent, rel_l2_error, scaling_probe
from tatrecon.model import Image


def image(values, extent=1.0):
    return Image(np.asarray(values, dtype=float), extent)


def test_identical_images_give_zero(rng):
    a = image(rng.normal(size=(9, 9)))
    assert rel_l2_error(a, a) == 0.0
    assert rel_l2_error(a, a, mask_radius=0.5) == 0.0


def test_double_gives_one(rng):
    b = image(rng.normal(size=(8, 8, 8)))
    assert rel_l2_error(image(2 * b.values), b) == pytest.approx(1.0, abs=1e-15)


def test_against_direct_sum(rng):
    a, b = image(rng.normal(size=(11, 11))), image(rng.normal(size=(11, 11)))
    x = np.linspace(-1, 1, 11)
    num = den = 0.0
    for i in range(11):
        for j in range(11):
            if math.hypot(x[i], x[j]) <= 0.7:
                num += (a.values[i, j] - b.values[i, j]) ** 2
                den += b.values[i, j] ** 2
    assert abs(rel_l2_error(a, b, 0.7) - math.sqrt(num / den)) <= 1e-14


def test_amplitude_scaling_symmetry(rng):
    a, b = image(rng.normal(size=(10, 10))), image(rng.normal(size=(10, 10)))
    base = rel_l2_error(a, b, 0.8)
    for c in (1e-3, 3.7, 1e4):
        assert rel_l2_error(image(c * a.values), image(c * b.values), 0.8) == pytest.approx(base, rel=1e-13)


def test_errors():
    with pytest.raises(ValueError):
        rel_l2_error(image(np.ones((4, 4))), image(np.ones((5, 5))))
    with pytest.raises(ValueError):
        rel_l2_error(image(np.ones((4, 4))), image(np.ones((4, 4)), 2.0))
    with pytest.raises(ValueError):
        rel_l2_error(image(np.ones((4, 4))), image(np.zeros((4, 4))))


def test_fit_exponent_recovers_power():
    n = np.array([64, 128, 256, 512])
    assert fit_exponent(n, 1e-6 * n**2 * np.log(n)) == pytest.approx(2.0, abs=1e-12)
    assert math.isnan(fit_exponent([64], [1.0]))


def test_probe_with_callable_and_single_size():
    calls = []
    table = scaling_probe(lambda n: calls.append(n), [16], repeats=3)
    assert calls == [16, 16, 16]
    assert table.sizes == (16,) and len(table.seconds) == 1 and math.isnan(table.exponent)


def test_probe_times_nondecreasing_for_growing_work():
    table = scaling_probe(lambda n: np.fft.fft2(np.ones((n, n))), [64, 512], repeats=3)
    assert table.seconds[1] >= table.seconds[0]


def test_probe_validation():
    with pytest.raises(ValueError):
        scaling_probe(lambda n: None, [32, 16])
    with pytest.raises(ValueError):
        scaling_probe("recon4d", [16])


def test_csv_layout():
    t = ScalingTable((128, 256), (0.1, 0.4), 2.0)
    lines = t.to_csv().splitlines()
    assert lines[0] == "n,seconds,fitted_exponent"
    assert lines[1] == "128,0.100000,2.0000" and lines[2] == "256,0.400000,2.0000"
    assert t.ratios() == [pytest.approx(4.0)]
