import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from opscale import quasimetric as qm
from opscale.errors import DomainError
from opscale.exponent import project_invariant, random_spec
from opscale.specs import named_spec

from conftest import SPEC_NAMES

seeds = st.integers(0, 2 ** 32 - 1)


def quad_norm(spec, x):
    f = lambda t: np.linalg.norm(spec.exp_E(math.log(t)) @ x) / t
    return quad(f, 0.0, 1.0, epsabs=0, epsrel=1e-12, limit=400)[0]


@pytest.mark.parametrize("name", SPEC_NAMES)
def test_e_norm_matches_adaptive_quadrature(name, rng):
    spec = named_spec(name)
    for x in rng.normal(size=(5, spec.N)) * 3:
        assert qm.e_norm(spec, x) == pytest.approx(quad_norm(spec, x), rel=1e-10)


def test_one_dimensional_closed_forms():
    spec = named_spec("S1")
    assert qm.e_norm(spec, np.array([3.0])) == pytest.approx(1.5, rel=1e-13)
    # tau(x) = (|x| / a)^(1/a)
    assert qm.tau(spec, np.array([8.0])) == pytest.approx(2.0, rel=1e-13)


@given(seeds, st.floats(-4.0, 4.0))
def test_homogeneity_random_specs(seed, log_r):
    rng = np.random.default_rng(seed)
    spec = random_spec(rng, max_dim=5)
    x = rng.normal(size=(8, spec.N))
    t = qm.tau(spec, x)
    scaled = x @ spec.exp_E(log_r).T
    assert np.allclose(qm.tau(spec, scaled), math.exp(log_r) * t, rtol=1e-9)


@given(seeds)
def test_symmetry_is_exact(seed):
    rng = np.random.default_rng(seed)
    spec = random_spec(rng, max_dim=5)
    x = rng.normal(size=(16, spec.N)) * np.exp(rng.uniform(-3, 3, size=(16, 1)))
    assert np.array_equal(qm.tau(spec, x), qm.tau(spec, -x))


@given(seeds)
def test_polar_reconstruction_and_unit_direction(seed):
    rng = np.random.default_rng(seed)
    spec = random_spec(rng, max_dim=5)
    x = rng.normal(size=(16, spec.N)) * np.exp(rng.uniform(-3, 3, size=(16, 1)))
    pc = qm.polar_decompose(spec, x)
    back = pc.reconstruct(spec)
    assert np.allclose(back, x, rtol=1e-8, atol=1e-8 * np.abs(x).max())
    assert np.allclose(qm.e_norm(spec, pc.direction), 1.0, rtol=1e-10)


def test_origin_gets_zero_and_sentinel(spec):
    pc = qm.polar_decompose(spec, np.zeros(spec.N))
    assert pc.tau == 0.0
    assert np.all(np.isnan(pc.direction))


def test_continuity_at_zero(spec):
    e = np.ones(spec.N) / math.sqrt(spec.N)
    t = qm.tau(spec, np.array([2.0 ** -k * e for k in range(0, 30, 3)]))
    assert np.all(np.diff(t) < 0)
    assert t[-1] < 1e-2


def test_tau_on_ray_agrees_with_tau(spec, rng):
    v = rng.normal(size=spec.N)
    c = np.geomspace(1e-6, 1e3, 40)
    assert np.allclose(qm.tau_on_ray(spec, v, c), qm.tau(spec, c[:, None] * v), rtol=1e-11)


def test_quasi_triangle_constant_is_finite(spec):
    C = qm.estimate_quasi_triangle_constant(spec, 400, rng=1)
    assert 0.5 <= C < 50.0
    with pytest.raises(DomainError):
        qm.estimate_quasi_triangle_constant(spec, 10)


def test_projection_ratio_is_bounded(rng):
    spec = named_spec("S6")
    ratios = [qm.projection_ratio(spec, x, j) for x in rng.normal(size=(200, 3)) for j in (1, 2)]
    assert np.isfinite(ratios).all()
    assert max(ratios) < 20.0


def test_norm_window(spec, rng):
    """tau lies between two power envelopes with constants fixed across a decade of norms."""
    lo_exp, hi_exp = qm.norm_window_exponents(spec)
    d = rng.normal(size=(400, spec.N))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    for decade in (1.0, 0.1, 0.01):
        r = decade * rng.uniform(0.1, 1.0, size=400)
        t = qm.tau(spec, d * r[:, None])
        if decade == 1.0:
            C1 = np.min(t / r ** lo_exp)
            C2 = np.max(t / r ** hi_exp)
        assert np.all(t >= 0.5 * C1 * r ** lo_exp)
        assert np.all(t <= 2.0 * C2 * r ** hi_exp)


def test_dyadic_profile_has_positive_floor(spec):
    rows = qm.dyadic_tau_profile(spec, 16)
    ratios = np.array([m / first for _, m, first in rows])
    assert ratios.min() > 0.05
    assert qm.select_dyadic_levels(rows, 0.05) == list(range(1, 17))


def test_holder_envelope_jordan_cell():
    spec = named_spec("S3")
    for s in (1e-2, 1e-4, 1e-6):
        lo, hi = qm.holder_envelope(spec, np.array([0.0, s]))
        t = qm.tau(spec, np.array([0.0, s]))
        assert lo < hi
        assert 0.05 < t / lo and t / hi < 20.0
    with pytest.raises(DomainError):
        qm.holder_envelope(named_spec("S2"), np.array([0.3, 0.3]))


def test_ball_volume_scales_like_r_to_the_Q():
    """Uniform points of B_E(1) fall in B_E(1/2) with probability 2^-Q."""
    for name in ("S2", "S3", "S5"):
        spec = named_spec(name)
        pts = qm.sample_ball(spec, 1.0, 8000, np.random.default_rng(7))
        assert np.all(qm.tau(spec, pts) <= 1.0 + 1e-12)
        frac = np.mean(qm.tau(spec, pts) <= 0.5)
        p = 2.0 ** -spec.Q
        assert abs(frac - p) < 4 * math.sqrt(p * (1 - p) / len(pts))


def test_ball_extent_grows_with_radius(spec):
    assert qm.ball_extent(spec, 0.5, rng=0) < qm.ball_extent(spec, 2.0, rng=0)
    assert qm.max_norm_on_sphere(spec, rng=0) == pytest.approx(qm.ball_extent(spec, 1.0, rng=0), rel=0.05)
