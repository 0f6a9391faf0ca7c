import math

import numpy as np
import pytest
from scipy.special import gamma

from opscale.quadrature import gauss_legendre, panel_rule, sphere_area, sphere_rule


def test_gauss_legendre_exact_for_polynomials():
    x, w = gauss_legendre(8)
    for k in range(16):
        exact = (1 - (-1) ** (k + 1)) / (k + 1)
        assert np.dot(w, x ** k) == pytest.approx(exact, abs=1e-14)


def test_panel_rule_integrates_exponential():
    x, w = panel_rule(np.linspace(0.0, 5.0, 6), 10)
    assert np.dot(w, np.exp(-x)) == pytest.approx(1 - math.exp(-5.0), rel=1e-14)


@pytest.mark.parametrize("N", [1, 2, 3, 4, 6])
def test_sphere_area(N):
    assert sphere_area(N) == pytest.approx(2 * math.pi ** (N / 2) / gamma(N / 2))


@pytest.mark.parametrize("N,M", [(2, 16), (3, 12), (4, 8)])
def test_half_sphere_rule_integrates_even_moments(N, M):
    omega, w = sphere_rule(N, M, True)
    # a half-sphere rule holds no antipodal pair
    d = np.linalg.norm(omega[:, None, :] + omega[None, :, :], axis=2)
    assert d.min() > 1e-8
    assert w.sum() == pytest.approx(sphere_area(N), rel=1e-12)
    # the second moment of one coordinate is area / N
    assert np.dot(w, omega[:, -1] ** 2) == pytest.approx(sphere_area(N) / N, rel=1e-10)
    # even functions of omega are integrated exactly over the full sphere
    assert np.dot(w, omega[:, 0] ** 2 * omega[:, -1] ** 2) == pytest.approx(
        sphere_area(N) / (N * (N + 2)), rel=1e-10)


def test_one_dimensional_rule():
    omega, w = sphere_rule(1, 4, True)
    assert omega.shape == (1, 1) and w[0] == 2.0
