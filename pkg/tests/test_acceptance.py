"""Acceptance criteria 1-10, one test each.

Every test prints a single ``[criterion k] PASS|FAIL ...`` line (visible with
``pytest -v`` or ``-s``) and then asserts the same verdict.  Runtime budgets
are part of each verdict.
"""
import math
import time

import numpy as np
import pytest
from scipy.linalg import expm

from opscale import quasimetric as qm
from opscale.covariance import FieldModel, comparability_ratio, variogram, variogram_batch
from opscale.exponent import assemble_matrix, random_spec
from opscale.harness.checks import example62_experiment, scaling_experiment, truncation_experiment
from opscale.harness.dimensions import boundary_continuity, dimensions
from opscale.harness.checks import h_grid
from opscale.harness.example62 import alpha_theta, example62_curves, jordan_spec, last_decade_slope
from opscale.harness.modulus import dyadic_grid, estimate_lil, estimate_umc
from opscale.harness.slnd import slnd_experiment
from opscale.sampler import replicate_values, spectral_grid, spectral_variance
from opscale.specs import NAMED_SPECS, named_spec

SPECS = list(NAMED_SPECS)


def verdict(capsys, k: int, ok: bool, elapsed: float, budget: float, detail: str):
    ok = bool(ok) and elapsed < budget
    line = f"[criterion {k}] {'PASS' if ok else 'FAIL'} {detail} (runtime {elapsed:.1f}s < {budget:g}s)"
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


def test_criterion_1_exponent_algebra(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst_fro = worst_det = 0.0
    for _ in range(100):
        spec = random_spec(rng, max_dim=6)
        c = float(np.exp(rng.uniform(np.log(0.1), np.log(10.0))))
        ours = spec.exp_E(math.log(c))
        oracle = expm(math.log(c) * assemble_matrix(spec))
        worst_fro = max(worst_fro, np.linalg.norm(ours - oracle) / np.linalg.norm(oracle))
        worst_det = max(worst_det, abs(np.linalg.det(ours) / c ** spec.Q - 1.0))
    dt = time.perf_counter() - t0
    verdict(capsys, 1, worst_fro <= 1e-10 and worst_det <= 1e-9, dt, 10,
            f"max rel Frobenius {worst_fro:.2e} <= 1e-10, max det error {worst_det:.2e} <= 1e-9")


def test_criterion_2_tau_homogeneity_symmetry(capsys):
    t0 = time.perf_counter()
    worst = 0.0
    symmetric = True
    for name in SPECS:
        spec = named_spec(name)
        rng = np.random.default_rng(7)
        x = rng.normal(size=(1000, spec.N)) * np.exp(rng.uniform(-3, 3, size=(1000, 1)))
        r = np.exp(rng.uniform(np.log(1e-3), np.log(1e3), size=1000))
        t = qm.tau(spec, x)
        scaled = np.einsum("nij,nj->ni", spec.exp_E(np.log(r)), x)
        worst = max(worst, float(np.max(np.abs(qm.tau(spec, scaled) - r * t) / (r * t))))
        symmetric &= bool(np.array_equal(qm.tau(spec, -x), t))
    dt = time.perf_counter() - t0
    verdict(capsys, 2, worst <= 1e-7 and symmetric, dt, 30,
            f"max homogeneity error {worst:.2e} <= 1e-7, symmetry exact: {symmetric}")


def test_criterion_3_jordan_cell_anchors(capsys):
    t0 = time.perf_counter()
    a = 2.0
    spec = jordan_spec(a)
    s = np.array([1e-4, 1e-2, 0.3, 1.0, 5.0])
    norm_err = float(np.max(np.abs(qm.e_norm(spec, np.column_stack([0 * s, s])) - s / a) / (s / a)))
    tau_err = float(np.max(np.abs(qm.tau(spec, np.column_stack([0 * s, a * s ** a])) - s) / s))
    far = 50.0 / alpha_theta(a, 50.0)
    slopes = [last_decade_slope(example62_curves(a, c, np.geomspace(1e-12, 1e-2, 21))) for c in ("i", "ii", "iii")]
    er = example62_experiment(a)
    dt = time.perf_counter() - t0
    ok = (norm_err <= 1e-9 and tau_err <= 1e-7 and abs(far / 2.0 - 1.0) <= 0.05
          and max(abs(x) for x in slopes) <= 0.05 and er.passed)
    verdict(capsys, 3, ok, dt, 60,
            f"norm err {norm_err:.1e}, tau err {tau_err:.1e}, 50/alpha(50) = {far:.4f}, "
            f"curve slopes {', '.join(f'{x:+.4f}' for x in slopes)}")


def test_criterion_4_one_dimensional_oracle(capsys):
    t0 = time.perf_counter()
    model = FieldModel(named_spec("S1"))
    h = np.geomspace(1e-3, 10.0, 20)
    g = variogram_batch(model, h[:, None])
    rel = float(np.max(np.abs(g / (8 * math.pi * h) - 1.0)))
    ratio = comparability_ratio(model, h[:, None])
    rdev = float(np.max(np.abs(ratio / (16 * math.pi) - 1.0)))
    dt = time.perf_counter() - t0
    verdict(capsys, 4, rel <= 1e-3 and rdev <= 5e-3, dt, 60,
            f"max rel error vs 8 pi |h| {rel:.2e} <= 1e-3, comparability deviation from 16 pi {rdev:.2e} <= 5e-3")


def test_criterion_5_variogram_operator_scaling(capsys):
    t0 = time.perf_counter()
    worst = {}
    for name in SPECS:
        er = scaling_experiment(FieldModel(named_spec(name)), factors=(0.25, 0.5, 2.0, 4.0), lag_count=20)
        worst[name] = max(er.estimates["max_relative_deviation"])
    dt = time.perf_counter() - t0
    w = max(worst.values())
    verdict(capsys, 5, w <= 5e-4, dt, 120, f"max |gamma(c^E h) - c^2 gamma(h)| / c^2 gamma(h) = {w:.2e} <= 5e-4")


FIVE_POINTS = {1: np.array([[0.1], [0.35], [0.5], [0.8], [1.0]]),
               2: np.array([[0.1, 0.2], [0.5, 0.5], [0.9, 0.1], [0.3, 0.8], [0.7, 0.9]]),
               3: np.array([[0.1, 0.2, 0.3], [0.5, 0.5, 0.1], [0.9, 0.1, 0.6], [0.3, 0.8, 0.8], [0.7, 0.9, 0.2]])}


def test_criterion_6_sampler_law(capsys):
    t0 = time.perf_counter()
    R = 10_000
    inside = total = 0
    worst_spec = 0.0
    for name in SPECS:
        model = FieldModel(named_spec(name))
        pts = FIVE_POINTS[model.N]
        vals = replicate_values(model, pts, "cholesky", R, master_seed=606)
        for i in range(5):
            for j in range(i + 1, 5):
                g = variogram(model, pts[i] - pts[j])
                se = g * math.sqrt(2.0 / R)  # sd of the mean of squared N(0, g) increments
                inside += abs(np.mean((vals[:, i] - vals[:, j]) ** 2) - g) <= 3 * se
                total += 1
        grid = spectral_grid(model, pts, freq_count=2 ** 14)
        err = np.abs(spectral_variance(grid, pts) / variogram_batch(model, pts) - 1.0)
        worst_spec = max(worst_spec, float(err.max()))
    frac = inside / total
    dt = time.perf_counter() - t0
    verdict(capsys, 6, frac >= 0.95 and worst_spec < 0.05, dt, 300,
            f"{inside}/{total} pairs within 3 SE ({frac:.1%} >= 95%), "
            f"spectral variance error {worst_spec:.2%} < 5% at 2^14 frequencies")


def test_criterion_7_slnd(capsys):
    t0 = time.perf_counter()
    mins, devs = {}, {}
    for name in SPECS:
        rep, _ = slnd_experiment(FieldModel(named_spec(name), profile="fast"), config_count=200, n_max=6, seed=77)
        mins[name], devs[name] = rep.min_ratio, rep.scale_deviation
    dt = time.perf_counter() - t0
    ok = min(mins.values()) > 0 and max(devs.values()) < 1e-3
    verdict(capsys, 7, ok, dt, 120,
            f"min ratio {min(mins.values()):.3g} > 0, rescaling deviation {max(devs.values()):.1e} < 1e-3")


def test_criterion_8_truncation_inequality(capsys):
    t0 = time.perf_counter()
    worst = 0.0
    for name in SPECS:
        er = truncation_experiment(FieldModel(named_spec(name), profile="fast"), count=100, seed=88)
        worst = max(worst, er.estimates["max_ratio"])
    dt = time.perf_counter() - t0
    verdict(capsys, 8, worst <= 1.001, dt, 120, f"max lhs/rhs {worst:.4f} <= 1.001 over 100 pairs per spec")


def test_criterion_9_modulus_concentration(capsys):
    t0 = time.perf_counter()
    model = FieldModel(named_spec("S2"), profile="fast")
    values = replicate_values(model, dyadic_grid(2, 6), "cholesky", 20, master_seed=909)
    umc, umc_er = estimate_umc(model, 6, values=values)
    lil, lil_er = estimate_lil(model, (0.5, 0.5), grid_level=6, values=values,
                               band_split={"replica_count": 200, "master_seed": 909})
    i2 = np.asarray(lil.extra["band_split"]["I2_exact_mean"])
    dt = time.perf_counter() - t0
    cv_umc, cv_lil = umc.cv[-2:], lil.cv[-2:]
    ok = np.all(cv_umc < 0.35) and np.all(cv_lil < 0.35) and np.all(np.diff(i2) < 0)
    verdict(capsys, 9, ok, dt, 900,
            f"UMC CV {cv_umc[0]:.3f}, {cv_umc[1]:.3f}; LIL CV {cv_lil[0]:.3f}, {cv_lil[1]:.3f} (< 0.35); "
            f"mean I2 by band {', '.join(f'{x:.3g}' for x in i2)} decreasing")


def test_criterion_10_dimension_calculator(capsys):
    t0 = time.perf_counter()
    rep = dimensions((1 / 3, 1 / 2), 2)
    errs = (abs(rep.range_dim - 2.0), abs(rep.graph_dim - 10 / 3), abs(rep.level_set_dim - 4 / 3))
    jump = max(boundary_continuity(H) for H in h_grid(2, 50))
    dt = time.perf_counter() - t0
    verdict(capsys, 10, max(errs) <= 1e-12 and jump <= 1e-9, dt, 1,
            f"range {rep.range_dim}, graph {rep.graph_dim:.15f}, level set {rep.level_set_dim:.15f} "
            f"(max error {max(errs):.1e}); boundary jump {jump:.1e} on 50 H-vectors")
