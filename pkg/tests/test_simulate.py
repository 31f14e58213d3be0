import numpy as np
import pytest

from conftest import make_sin_varma11
from tdvarma import examples
from tdvarma.errors import ContractError
from tdvarma.likelihood import residuals
from tdvarma.model import ParamLayout, TdVarmaModel
from tdvarma.simulate import SimPlan, innovation_correlation, make_rng, simulate
from tdvarma.timefn import Constant, MatrixTimeFunction, Param


def _zero_model():
    layout = ParamLayout(names=("s",), n_ar=0, n_ma=0, theta0=(1.0,))
    g = MatrixTimeFunction([[Param(0), Constant(0.0)], [Constant(0.0), Param(0)]])
    return TdVarmaModel(2, [], [], g, np.eye(2), layout)


def test_zero_model_returns_raw_draws():
    m = _zero_model()
    series, eps = simulate(SimPlan(m, (1.0,), 50, 77), return_innovations=True)
    np.testing.assert_array_equal(series.values, eps)
    # identical to drawing from the keyed generator directly
    direct = make_rng(77, 0).standard_normal((50, 2)) @ np.linalg.cholesky(np.eye(2)).T
    np.testing.assert_array_equal(eps, direct)


def test_bit_for_bit_determinism():
    m = examples.example1_sim_model()
    s1 = simulate(SimPlan(m, m.layout.theta0, 64, 123, 5))
    s2 = simulate(SimPlan(m, m.layout.theta0, 64, 123, 5))
    np.testing.assert_array_equal(s1.values, s2.values)
    s3 = simulate(SimPlan(m, m.layout.theta0, 64, 124, 5))
    assert s3.values[0, 0] != s1.values[0, 0]


def test_prefix_invariance_under_longer_horizon():
    m = examples.example1_sim_model()
    s1 = simulate(SimPlan(m, m.layout.theta0, 40, 9))
    s2 = simulate(SimPlan(m, m.layout.theta0, 50, 9))
    np.testing.assert_array_equal(s2.values[:40], s1.values)


def test_no_explosion_long_horizon():
    m = examples.example1_sim_model()
    series = simulate(SimPlan(m, m.layout.theta0, 100_000, 31))
    var1 = float(np.var(series.values[:, 0]))
    assert np.all(np.isfinite(series.values))
    # squared amplitudes bounded by 0.81 < 1: variance stays of modest size
    assert 0.1 < var1 < 50.0


def test_residuals_at_truth_recover_scaled_innovations(rng):
    m = make_sin_varma11(rng)
    th0 = np.array(m.layout.theta0)
    series, eps = simulate(SimPlan(m, m.layout.theta0, 80, 4), return_innovations=True)
    res = residuals(m, series, th0)
    g_all = m.g_values(np.arange(1, 81), th0)
    scaled = np.einsum("trs,ts->tr", g_all, eps)
    np.testing.assert_allclose(res.e, scaled, atol=1e-10)


def test_innovation_correlation_sweep(example2):
    th0 = np.array(example2.layout.theta0)
    vals = [innovation_correlation(example2, th0, t) for t in range(1, 201)]
    assert max(vals) == pytest.approx(0.8, abs=0.02)
    assert min(vals) == pytest.approx(-0.8, abs=0.02)


def test_innovation_correlation_trivials():
    m = _zero_model()
    assert innovation_correlation(m, (1.0,), 7) == 0.0
    layout = ParamLayout(names=("s",), n_ar=0, n_ma=0, theta0=(1.0,))
    g = MatrixTimeFunction([[Param(0), Constant(0.0)], [Constant(0.0), Param(0)]])
    m2 = TdVarmaModel(2, [], [], g, [[1.0, 0.5], [0.5, 1.0]], layout)
    assert innovation_correlation(m2, (1.0,), 3) == pytest.approx(0.5, abs=1e-15)
    lay1 = ParamLayout(names=("a",), n_ar=1, n_ma=0, theta0=(0.2,))
    m1 = TdVarmaModel(1, [MatrixTimeFunction([[Param(0)]])], [], None, [[1.0]], lay1)
    with pytest.raises(ContractError):
        innovation_correlation(m1, (0.2,), 1)


def test_descaled_residual_covariance_matches_noise_cov(example2):
    th0 = np.array(example2.layout.theta0)
    n = 100_000
    series = simulate(SimPlan(example2, example2.layout.theta0, n, 17))
    res = residuals(example2, series, th0)
    g_all = example2.g_values(np.arange(1, n + 1), th0)
    z = np.linalg.solve(g_all, res.e[..., None])[..., 0]
    emp = z.T @ z / n
    # entries are averages of products with O(1) variance: 3 mc standard errors
    se = 3.0 / np.sqrt(n)
    assert np.max(np.abs(emp - example2.sigma)) < 3 * se * 2.0
