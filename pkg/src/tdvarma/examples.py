"""Built-in bivariate example models used by the tests, the CLI and the
Monte Carlo reproduction runs.

Three variants are shipped:

* ``example1_sim``    - pure VAR(1) with sinusoidal diagonal coefficients of
  irrational period, a free constant coupling entry, and identity innovation
  covariance; three parameters (0.8, 0.5, -0.9).
* ``example1_theory`` - the same with the coupling frozen at 0.5; two
  parameters (0.8, -0.9).  This is the variant with a closed-form
  information matrix.
* ``example2``        - the two-parameter autoregression driven through a
  time-varying scale matrix with exp-of-sine diagonals exp(eta sin(ct))
  (rates 1 and -1, period 25) and innovation covariance [[1, .5], [.5, 1]];
  four parameters.  The innovation correlation sweeps [-0.8, 0.8].
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError
from .model import ParamLayout, TdVarmaModel
from .timefn import Constant, ExpSine, MatrixTimeFunction, Param, Sine

EXAMPLE_IDS = ("example1_sim", "example1_theory", "example2")

FREQ_A = 2.0 * math.pi / math.sqrt(2499.0)
FREQ_B = 2.0 * math.pi / math.sqrt(2399.0)
FREQ_C = 2.0 * math.pi / 25.0


def example1_sim_model(
    theta0=(0.8, 0.5, -0.9),
    freq_a: float = FREQ_A,
    freq_b: float = FREQ_B,
    check_horizon: int = 400,
) -> TdVarmaModel:
    """Three-parameter simulation variant: free coupling in the (1,2) slot."""
    a = MatrixTimeFunction(
        [
            [Sine(0, freq_a), Param(1)],
            [Constant(0.0), Sine(2, freq_b)],
        ]
    )
    layout = ParamLayout(
        names=("a11_amp", "a12", "a22_amp"),
        n_ar=3,
        n_ma=0,
        theta0=tuple(theta0),
    )
    return TdVarmaModel(
        r=2,
        a_funcs=[a],
        b_funcs=[],
        g_func=None,
        sigma=np.eye(2),
        layout=layout,
        check_horizon=check_horizon,
    )


def example1_theory_model(
    theta0=(0.8, -0.9),
    coupling: float = 0.5,
    freq_a: float = FREQ_A,
    freq_b: float = FREQ_B,
    check_horizon: int = 400,
) -> TdVarmaModel:
    """Two-parameter variant with the coupling entry frozen."""
    a = MatrixTimeFunction(
        [
            [Sine(0, freq_a), Constant(coupling)],
            [Constant(0.0), Sine(1, freq_b)],
        ]
    )
    layout = ParamLayout(
        names=("a11_amp", "a22_amp"),
        n_ar=2,
        n_ma=0,
        theta0=tuple(theta0),
    )
    return TdVarmaModel(
        r=2,
        a_funcs=[a],
        b_funcs=[],
        g_func=None,
        sigma=np.eye(2),
        layout=layout,
        check_horizon=check_horizon,
    )


def example2_model(
    theta0=(0.8, -0.9, 1.0, -1.0),
    coupling: float = 0.5,
    freq_a: float = FREQ_A,
    freq_b: float = FREQ_B,
    freq_c: float = FREQ_C,
    sigma=((1.0, 0.5), (0.5, 1.0)),
    check_horizon: int = 400,
) -> TdVarmaModel:
    """Heteroscedastic variant: sinusoidal VAR(1) with exp-of-sine scale."""
    a = MatrixTimeFunction(
        [
            [Sine(0, freq_a), Constant(coupling)],
            [Constant(0.0), Sine(1, freq_b)],
        ]
    )
    # Scale diagonals exp(eta * sin(freq_c t)), realized as the exp-of-scaled-sine
    # kind with a half-period phase.  This sign convention is the one consistent
    # with the finite-sample dispersion of the estimates this model is meant to
    # reproduce; the opposite sign swaps the information content of the two
    # autoregressive channels.
    g = MatrixTimeFunction(
        [
            [ExpSine(2, freq_c, phase=math.pi), Constant(1.0)],
            [Constant(-1.0), ExpSine(3, freq_c, phase=math.pi)],
        ]
    )
    layout = ParamLayout(
        names=("a11_amp", "a22_amp", "eta11", "eta22"),
        n_ar=2,
        n_ma=0,
        theta0=tuple(theta0),
    )
    return TdVarmaModel(
        r=2,
        a_funcs=[a],
        b_funcs=[],
        g_func=g,
        sigma=np.asarray(sigma, dtype=float),
        layout=layout,
        check_horizon=check_horizon,
    )


def build(which: str) -> TdVarmaModel:
    """Construct one of the shipped example models by identifier."""
    if which == "example1_sim":
        return example1_sim_model()
    if which == "example1_theory":
        return example1_theory_model()
    if which == "example2":
        return example2_model()
    raise ConfigError(f"unknown example id '{which}' (expected one of {EXAMPLE_IDS})")
