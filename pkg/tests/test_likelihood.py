import math

import numpy as np
import pytest

from conftest import make_scalar_arma11, make_sin_varma11
from tdvarma import examples
from tdvarma.errors import ContractError, SingularCovarianceError
from tdvarma.likelihood import empirical_vw, objective, objective_value, residuals
from tdvarma.model import ParamLayout, Series, TdVarmaModel
from tdvarma.representations import build_psi
from tdvarma.simulate import SimPlan, simulate
from tdvarma.timefn import Constant, MatrixTimeFunction, Param, Sine


def test_zero_model_residuals_equal_series(rng):
    layout = ParamLayout(names=("g",), n_ar=0, n_ma=0, theta0=(1.0,))
    g = MatrixTimeFunction([[Param(0), Constant(0.0)], [Constant(0.0), Param(0)]])
    m = TdVarmaModel(2, [], [], g, np.eye(2), layout)
    x = rng.standard_normal((20, 2))
    res = residuals(m, Series(values=x), np.array([1.0]))
    np.testing.assert_array_equal(res.e, x)


def test_one_step_hand_computation():
    m = examples.example1_sim_model()
    # A_2(theta) = diag(0.5, 0.5) by direct construction of theta
    th = np.array([0.5 / math.sin(examples.FREQ_A * 2), 0.0, 0.5 / math.sin(examples.FREQ_B * 2)])
    x = np.array([[1.0, 0.0], [1.0, 1.0]])
    res = residuals(m, Series(values=x), th)
    np.testing.assert_array_equal(res.e[0], x[0])
    np.testing.assert_allclose(res.e[1], [0.5, 1.0], atol=1e-14)


def test_objective_single_observation_value():
    layout = ParamLayout(names=("a",), n_ar=1, n_ma=0, theta0=(0.0,))
    a = MatrixTimeFunction([[Param(0), Constant(0.0)], [Constant(0.0), Constant(0.0)]])
    m = TdVarmaModel(2, [a], [], None, np.eye(2), layout)
    rep = objective(m, Series(values=np.array([[1.0, 1.0]])), np.array([0.0]))
    assert rep.alphas[0] == pytest.approx(2.0, abs=1e-14)
    assert rep.q == pytest.approx(1.0 + math.log(2.0 * math.pi), abs=1e-12)
    assert rep.q == pytest.approx(0.5 * rep.alphas.sum() + 2 * 1 / 2 * math.log(2 * math.pi))


@pytest.mark.parametrize("which", ["example1_sim", "example1_theory", "example2"])
def test_gradient_matches_finite_differences(which):
    m = examples.build(which)
    th0 = np.array(m.layout.theta0)
    series = simulate(SimPlan(m, m.layout.theta0, 50, 2024))
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(20):
        th = th0 + rng.uniform(-0.05, 0.05, size=th0.size)
        rep = objective(m, series, th)
        for i in range(th.size):
            h = 1e-6 * (1.0 + abs(th[i]))
            tp = th.copy()
            tm = th.copy()
            tp[i] += h
            tm[i] -= h
            fd = (objective_value(m, series, tp) - objective_value(m, series, tm)) / (2 * h)
            worst = max(worst, abs(rep.grad[i] - fd) / max(1.0, abs(fd)))
    assert worst < 1e-6


def test_gradient_matches_fd_with_moving_average_part(rng):
    m = make_sin_varma11(rng)
    th0 = np.array(m.layout.theta0)
    series = simulate(SimPlan(m, m.layout.theta0, 60, 77))
    rep = objective(m, series, th0)
    for i in range(m.m):
        h = 1e-6
        tp = th0.copy()
        tm = th0.copy()
        tp[i] += h
        tm[i] -= h
        fd = (objective_value(m, series, tp) - objective_value(m, series, tm)) / (2 * h)
        assert rep.grad[i] == pytest.approx(fd, rel=2e-6, abs=1e-6)


def test_average_alpha_approaches_population_value():
    m = examples.example1_sim_model()
    series = simulate(SimPlan(m, m.layout.theta0, 10000, 7))
    rep = objective(m, series, np.array(m.layout.theta0))
    # identity residual covariance: log det = 0 and E[e' e] = 2
    assert rep.alphas.mean() == pytest.approx(2.0, abs=0.1)


def test_cross_representation_residual_derivatives_arma(rng):
    # recursive derivative propagation equals the MA expansion, q > 0 path
    m = make_sin_varma11(rng)
    th0 = np.array(m.layout.theta0)
    n = 60
    series, eps = simulate(SimPlan(m, m.layout.theta0, n, 3), return_innovations=True)
    res = residuals(m, series, th0, with_derivs=True)
    psi = build_psi(m, th0, th0, n, max_deriv_order=1)
    g_all = m.g_values(np.arange(1, n + 1), th0)
    scaled = np.einsum("trs,ts->tr", g_all, eps)
    worst = 0.0
    for i in range(m.m):
        rows = psi.derivs[(i,)]
        for t in range(1, n + 1):
            acc = np.zeros(m.r)
            row = rows[t - 1]
            for k in range(1, row.shape[0]):
                acc += row[k] @ scaled[t - 1 - k]
            worst = max(worst, float(np.abs(acc - res.de[i, t - 1]).max()))
    assert worst < 1e-9


def test_vhat_offdiagonal_vanishes_for_decoupled_model():
    m = examples.example1_theory_model()
    series = simulate(SimPlan(m, m.layout.theta0, 10000, 11))
    v, w = empirical_vw(m, series, np.array(m.layout.theta0))
    assert abs(v[0, 1]) < 0.05 * math.sqrt(v[0, 0] * v[1, 1])


def test_vhat_closed_form_scale_only_model():
    # A = 0, g = s I, Sigma = I: V = 0.5 tr((Sigma^-1 dSigma)^2) = 2 r / s^2
    layout = ParamLayout(names=("s",), n_ar=0, n_ma=0, theta0=(1.3,))
    g = MatrixTimeFunction([[Param(0), Constant(0.0)], [Constant(0.0), Param(0)]])
    m = TdVarmaModel(2, [], [], g, np.eye(2), layout)
    series = Series(values=np.full((25, 2), 0.7))
    v, _ = empirical_vw(m, series, np.array([1.3]))
    assert v[0, 0] == pytest.approx(0.5 * 2 * (2.0 / 1.3) ** 2, rel=1e-12)


def test_what_approx_vhat_at_truth_large_n():
    m = examples.example1_sim_model()
    series = simulate(SimPlan(m, m.layout.theta0, 10000, 13))
    v, w = empirical_vw(m, series, np.array(m.layout.theta0))
    scale = np.sqrt(np.outer(np.diag(v), np.diag(v)))
    assert np.max(np.abs(w - v) / scale) < 0.10


def test_score_rows_behave_like_martingale_differences():
    m = examples.example1_sim_model()
    th0 = np.array(m.layout.theta0)
    n = 200
    hits = 0
    for rep_i in range(200):
        series = simulate(SimPlan(m, m.layout.theta0, n, 100, rep_i))
        rep = objective(m, series, th0)
        rows = rep.score_rows
        mean = rows.mean(axis=0)
        std = rows.std(axis=0, ddof=1)
        if np.all(np.abs(mean) < 5.0 * std / math.sqrt(n)):
            hits += 1
    assert hits >= 190  # 95% of 200


def test_objective_invariant_under_parameter_relabeling():
    # permuting names/slots is pure bookkeeping
    m = examples.example1_sim_model()
    th = np.array([0.7, 0.4, -0.8])
    series = simulate(SimPlan(m, m.layout.theta0, 80, 21))
    q1 = objective_value(m, series, th)

    perm_layout = ParamLayout(names=("a22_amp", "a11_amp", "a12"), n_ar=3, n_ma=0,
                              theta0=(-0.9, 0.8, 0.5))
    a = MatrixTimeFunction(
        [
            [Sine(1, examples.FREQ_A), Param(2)],
            [Constant(0.0), Sine(0, examples.FREQ_B)],
        ]
    )
    m2 = TdVarmaModel(2, [a], [], None, np.eye(2), perm_layout)
    q2 = objective_value(m2, series, np.array([th[2], th[0], th[1]]))
    assert q1 == pytest.approx(q2, abs=1e-12)


def test_singular_covariance_names_time_index():
    layout = ParamLayout(names=("a", "g"), n_ar=1, n_ma=0)
    a = MatrixTimeFunction([[Param(0), Constant(0.0)], [Constant(0.0), Constant(0.0)]])
    # scale vanishes in channel 2 for every t: Sigma_t singular from t = 1
    g = MatrixTimeFunction([[Param(1), Constant(0.0)], [Constant(0.0), Constant(0.0)]])
    m = TdVarmaModel(2, [a], [], g, np.eye(2), layout)
    with pytest.raises(SingularCovarianceError) as err:
        residuals(m, Series(values=np.ones((5, 2))), np.array([0.2, 1.0]))
    assert err.value.t == 1


def test_dimension_mismatch_rejected():
    m = examples.example1_sim_model()
    with pytest.raises(ContractError):
        residuals(m, Series(values=np.ones((5, 1))), np.array(m.layout.theta0))
