import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from opscale.covariance import FieldModel
from opscale.errors import DomainError
from opscale.exponent import HVector
from opscale.harness.checks import dims_experiment, h_grid
from opscale.harness.dimensions import LEVEL_SET_BOUNDARY, boundary_continuity, dimensions
from opscale.harness.example62 import (alpha_argmin, alpha_theta, example62_curves, jordan_spec, last_decade_slope,
                                       y_point)
from opscale.harness.modulus import (_grid_lags, _max_abs_increment, band_split_statistics, dyadic_grid,
                                     estimate_lil, estimate_umc, lil_normalizer, umc_normalizer)
from opscale.harness.report import ExperimentReport, Gate, bootstrap_interval
from opscale.harness.slnd import conditional_variance, slnd_experiment, slnd_ratio
from opscale import quasimetric as qm
from opscale.specs import named_spec


# ------------------------------------------------------------------ SLND
def _bm_conditional_variance(ts):
    """Brownian bridge formula with X(0) = 0, scaled by gamma(h) = 8 pi |h|."""
    prev = np.append(ts[:-1], 0.0)
    t = ts[-1]
    left = prev[prev < t]
    right = prev[prev > t]
    if len(right) == 0:
        return 8 * math.pi * (t - left.max())
    if len(left) == 0:
        return 8 * math.pi * (right.min() - t)
    l, r = left.max(), right.min()
    return 8 * math.pi * (t - l) * (r - t) / (r - l)


@given(st.lists(st.floats(0.01, 1.0), min_size=1, max_size=6, unique=True))
def test_conditional_variance_matches_brownian_formula(ts):
    model = FieldModel(named_spec("S1"), profile="accurate")
    ts = np.array(ts)
    gaps = np.abs(ts[-1] - np.append(ts[:-1], 0.0))
    if gaps.min() < 1e-3:
        return
    expected = _bm_conditional_variance(ts) / (gaps.min() / 2.0)
    assert slnd_ratio(model, ts[:, None]) == pytest.approx(expected, rel=1e-6)


def test_conditional_variance_single_point():
    assert conditional_variance(np.array([[3.0]])) == 3.0


def test_slnd_experiment_gates():
    model = FieldModel(named_spec("S4"), profile="fast")
    rep, er = slnd_experiment(model, config_count=20, seed=3)
    assert rep.min_ratio > 0
    assert er.passed
    assert rep.scale_deviation < 1e-3
    with pytest.raises(DomainError):
        slnd_experiment(model, n_max=9)
    with pytest.raises(DomainError):
        slnd_ratio(model, np.array([[0.2, 0.2], [0.2, 0.2]]))


# ------------------------------------------------------------------ dimensions
def test_dimension_values_exact():
    rep = dimensions((1 / 3, 1 / 2), 2)
    assert rep.range_dim == 2.0
    assert abs(rep.graph_dim - 10 / 3) < 1e-12
    assert abs(rep.level_set_dim - 4 / 3) < 1e-12


def test_level_set_boundary_and_empty():
    assert dimensions((0.5, 0.5), 4).level_set_status == LEVEL_SET_BOUNDARY
    rep = dimensions((0.5, 0.5), 5)
    assert rep.level_set_status == "empty" and rep.graph_dim == 4.0 and rep.range_dim == 4.0


h_vectors = st.lists(st.floats(0.05, 0.95), min_size=1, max_size=4).map(sorted)


@given(h_vectors, st.floats(0.1, 10.0))
def test_dimension_invariants(H, d):
    rep = dimensions(H, d)
    N = len(H)
    assert N - 1e-12 <= rep.graph_dim <= N + d + 1e-12
    assert rep.range_dim <= min(d, sum(1 / h for h in H)) + 1e-12
    if rep.level_set_dim is not None:
        assert -1e-12 <= rep.level_set_dim < N


@given(h_vectors)
def test_branch_continuity(H):
    assert boundary_continuity(H) < 1e-9


def test_dims_experiment_on_grid():
    er = dims_experiment((1 / 3, 1 / 2), 2.0)
    assert er.passed and er.estimates["continuity_grid_points"] == 50
    assert all(isinstance(HVector(h), HVector) for h in h_grid(3, 50))


# ------------------------------------------------------------------ Jordan cell
def test_alpha_matches_direct_quadrature():
    """alpha(theta) = int_0^1 t^{a-1} sqrt(1 + (theta + ln t)^2) dt by a fine midpoint rule in u = -ln t."""
    a, theta = 2.0, 0.7
    u = (np.arange(400000) + 0.5) * (40.0 / 400000)
    direct = np.sum(np.exp(-a * u) * np.sqrt(1 + (theta - u) ** 2)) * (40.0 / 400000)
    assert alpha_theta(a, theta) == pytest.approx(direct, rel=1e-8)


@given(st.floats(-1000.0, 1000.0))
def test_theta_over_alpha_bounded(theta):
    assert abs(theta) / alpha_theta(2.0, theta) < 2.5


def test_alpha_argmin_is_a_minimum():
    t0, a0 = alpha_argmin(2.0)
    assert a0 <= alpha_theta(2.0, t0 - 0.05) and a0 <= alpha_theta(2.0, t0 + 0.05)


@pytest.mark.parametrize("s,theta", [(0.01, 0.0), (0.3, -2.0), (2.0, 5.0)])
def test_y_point_has_radial_part_s(s, theta):
    assert qm.tau(jordan_spec(2.0), y_point(2.0, s, theta)) == pytest.approx(s, rel=1e-9)


@pytest.mark.parametrize("curve", ["i", "ii", "iii"])
def test_curve_families_flat(curve):
    rows = example62_curves(2.0, curve, np.geomspace(1e-10, 1e-2, 9))
    assert abs(last_decade_slope(rows)) < 0.05


# ------------------------------------------------------------------ moduli
def test_normalizers():
    assert umc_normalizer(np.array([0.5]))[0] == pytest.approx(0.5 * math.sqrt(math.log(3.0)))
    # loglog is floored at log e = 1 for moderate t
    assert lil_normalizer(np.array([0.5]))[0] == pytest.approx(0.5)


def test_max_increment_against_loops():
    rng = np.random.default_rng(0)
    vals = rng.normal(size=(2, 4, 4))
    for lag in _grid_lags(2, 2, max_steps=2):
        brute = np.zeros(2)
        for i in range(4):
            for j in range(4):
                k, l = i + lag[0], j + lag[1]
                if 0 <= k < 4 and 0 <= l < 4:
                    brute = np.maximum(brute, np.abs(vals[:, k, l] - vals[:, i, j]))
        assert np.allclose(_max_abs_increment(vals, lag), brute)


def test_dyadic_grid_shape():
    g = dyadic_grid(2, 3)
    assert g.shape == (64, 2) and g.max() == 7 / 8


def test_umc_small_run():
    model = FieldModel(named_spec("S2"), profile="fast")
    rep, er = estimate_umc(model, 4, replica_count=6, master_seed=1)
    assert np.all(np.diff(rep.stats, axis=1) <= 0)
    assert np.all(rep.mean > 0)
    assert er.gate  # report built
    with pytest.raises(DomainError):
        estimate_umc(model, 7, replica_count=2)


def test_lil_small_run_and_ball_minimum():
    model = FieldModel(named_spec("S2"), profile="fast")
    rep, er = estimate_lil(model, (0.5, 0.5), replica_count=5, master_seed=2, grid_level=4,
                           radii=[0.5, 0.4])
    assert rep.counts.min() >= 50
    with pytest.raises(DomainError):
        estimate_lil(model, (0.5, 0.5), replica_count=2, grid_level=4, radii=[0.01])


def test_band_split_exact_means_decrease():
    model = FieldModel(named_spec("S2"), profile="fast")
    split = band_split_statistics(model, bands=(1, 2, 3), replica_count=20, freq_count=512)
    m = np.array(split["I2_exact_mean"])
    assert np.all(np.diff(m) < 0)
    assert np.all(np.array(split["out_of_band_fraction"]) <= 1.0)


# ------------------------------------------------------------------ reports
def test_report_json_is_stable():
    er = ExperimentReport("demo", {"b": np.float64(1.5), "a": np.arange(3)})
    er.gate("x", 0.1, "<", 1.0)
    er.gate("y", 2.0, "<=", 1.0)
    d = json.loads(er.to_json())
    assert d["passed"] is False and d["estimates"]["a"] == [0, 1, 2]
    assert er.to_json() == er.to_json()
    assert er.summary_lines()[1].startswith("FAIL y")
    assert Gate("z", 1.0, 1.0, "==").passed


def test_bootstrap_interval_brackets_mean():
    x = np.random.default_rng(0).normal(size=200)
    lo, hi = bootstrap_interval(x)
    assert lo < x.mean() < hi


def test_lil_statistic_is_stationary_in_t0():
    """Increments are stationary, so the statistic's law does not depend on t0."""
    from scipy.stats import ks_2samp
    model = FieldModel(named_spec("S2"), profile="fast")
    radii = [0.25, 0.0625]
    a, _ = estimate_lil(model, (0.0, 0.0), radii=radii, replica_count=20, master_seed=31, per_ball=50)
    b, _ = estimate_lil(model, (1.0, 1.0), radii=radii, replica_count=20, master_seed=32, per_ball=50)
    assert ks_2samp(a.stats[:, -1], b.stats[:, -1]).pvalue > 0.01
