"""Finite pure-AR and pure-MA representations and their derivative tables.

Because the process starts at t = 1 with zero initial values, both
representations are exact finite sums:

    x_t = sum_{k=1}^{t-1} pi_{tk} x_{t-k} + e_t        (AR weights pi)
    x_t = e_t + sum_{k=1}^{t-1} psi_{tk} e_{t-k}       (MA weights psi)

The tables are produced by elimination recurrences that peel off one lag at
a time.  Derivatives of the AR weights (obtained by running the same
recurrence through the product rule) convolved against MA weights at the
data-generating parameter give the moving-average expansion of the residual
derivatives:

    d e_t(theta) / d theta_i = sum_k psi_{t,i,k}(theta, theta0) g_{t-k} eps_{t-k},
    psi_{t,i,k} = - sum_{u=1}^{k} (d pi_{tu}(theta) / d theta_i) psi_{t-u,k-u}(theta0),

and analogously for second and third derivative index tuples.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ContractError
from .model import TdVarmaModel
from .timefn import sorted_tuples


def _leibniz_product(xcell: dict, ymap: dict, tau: tuple[int, ...]) -> Optional[np.ndarray]:
    """Sum of (d_left x)(d_right y) over all splits of the index positions."""
    npos = len(tau)
    acc = None
    for mask in range(1 << npos):
        left = tuple(sorted(tau[p] for p in range(npos) if mask >> p & 1))
        right = tuple(sorted(tau[p] for p in range(npos) if not mask >> p & 1))
        xv = xcell.get(left)
        yv = ymap.get(right)
        if xv is None or yv is None:
            continue
        prod = xv @ yv
        acc = prod if acc is None else acc + prod
    return acc


def _cell_axpy(target: Optional[dict], xcell: dict, ymap: dict, tuples, sign: float) -> dict:
    """target += sign * (xcell 'times' ymap) under the product rule."""
    out = dict(target) if target else {}
    for tau in tuples:
        acc = _leibniz_product(xcell, ymap, tau)
        if acc is not None:
            prev = out.get(tau)
            out[tau] = sign * acc if prev is None else prev + sign * acc
    return out


def _cell_add(a: dict, b: dict) -> dict:
    out = dict(a)
    for tau, v in b.items():
        prev = out.get(tau)
        out[tau] = v if prev is None else prev + v
    return out


@dataclass
class ArWeightTable:
    """AR weights pi_{tk} and their theta-derivatives for t = 1..n.

    rows[t-1] maps a sorted derivative index tuple (() for the weight itself)
    to an array of shape (count[t-1], r, r) holding k = 1..count entries;
    weights beyond the stored count are exactly zero.
    """

    n: int
    r: int
    rows: list
    counts: np.ndarray
    max_order: int

    def weight(self, t: int, k: int, indices: Sequence[int] = ()) -> np.ndarray:
        if not 1 <= t <= self.n or k < 1:
            raise ContractError("AR weight requested outside the table")
        tau = tuple(sorted(int(i) for i in indices))
        if k > self.counts[t - 1]:
            return np.zeros((self.r, self.r))
        arr = self.rows[t - 1].get(tau)
        if arr is None:
            return np.zeros((self.r, self.r))
        return arr[k - 1]


@dataclass
class MaWeightTable:
    """MA weights and the MA expansion coefficients of residual derivatives.

    weights[t-1][k] is psi_{tk} at the data-generating parameter (k = 0
    entry is the identity).  resid[t-1][k] is the weight of g_{t-k} eps_{t-k}
    in e_t(theta); it vanishes for k >= 1 when theta equals the
    data-generating value.  derivs[tau][t-1][k] is the analogous weight in
    the derivative of e_t(theta) for the sorted index tuple tau.
    """

    n: int
    r: int
    weights: list
    resid: list
    derivs: dict
    max_order: int

    def weight(self, t: int, k: int) -> np.ndarray:
        arr = self.weights[t - 1]
        if k >= arr.shape[0]:
            return np.zeros((self.r, self.r))
        return arr[k]

    def resid_weight(self, t: int, k: int) -> np.ndarray:
        arr = self.resid[t - 1]
        if k >= arr.shape[0]:
            return np.zeros((self.r, self.r))
        return arr[k]

    def deriv_weight(self, t: int, k: int, indices: Sequence[int]) -> np.ndarray:
        tau = tuple(sorted(int(i) for i in indices))
        rows = self.derivs.get(tau)
        if rows is None:
            raise ContractError(f"derivative tuple {tau} was not built (max_order={self.max_order})")
        arr = rows[t - 1]
        if k >= arr.shape[0]:
            return np.zeros((self.r, self.r))
        return arr[k]


def _deriv_tuples(model: TdVarmaModel, max_order: int) -> list[tuple[int, ...]]:
    return sorted_tuples(range(model.m), max_order)


def build_pi(
    model: TdVarmaModel,
    theta,
    n: int,
    max_deriv_order: int = 0,
    kmax: Optional[int] = None,
) -> ArWeightTable:
    """AR weight table for t = 1..n with derivative layers up to max_deriv_order."""
    if n < 1:
        raise ContractError("horizon must be at least 1")
    theta = np.asarray(theta, dtype=float)
    r = model.r
    tuples = _deriv_tuples(model, max_deriv_order)
    kcap = n - 1 if kmax is None else int(kmax)
    rows = []
    counts = np.zeros(n, dtype=int)
    for t in range(1, n + 1):
        K = min(t - 1, kcap)
        harvested: dict[int, dict] = {}
        if K >= 1:
            pi_stage = {
                j: model.a_funcs[j - 1].deriv_map(t, theta, tuples)
                for j in range(1, min(model.p, t - 1) + 1)
            }
            rho_stage = {
                j: model.b_funcs[j - 1].deriv_map(t, theta, tuples)
                for j in range(1, min(model.q, t - 1) + 1)
            }
            for k in range(1, K + 1):
                rho_k = rho_stage.pop(k, None)
                cell = pi_stage.pop(k, {})
                if rho_k is not None:
                    cell = _cell_add(cell, rho_k)
                if cell:
                    harvested[k] = cell
                if rho_k is None:
                    if not rho_stage:
                        for j, c in pi_stage.items():
                            if j <= K and c:
                                harvested[j] = c
                        break
                    continue
                tk = t - k
                for lag in range(1, model.p + 1):
                    j = k + lag
                    if j > t - 1:
                        break
                    ymap = model.a_funcs[lag - 1].deriv_map(tk, theta, tuples)
                    pi_stage[j] = _cell_axpy(pi_stage.get(j), rho_k, ymap, tuples, -1.0)
                for lag in range(1, model.q + 1):
                    j = k + lag
                    if j > t - 1:
                        break
                    ymap = model.b_funcs[lag - 1].deriv_map(tk, theta, tuples)
                    rho_stage[j] = _cell_axpy(rho_stage.get(j), rho_k, ymap, tuples, -1.0)
        count = max(harvested) if harvested else 0
        counts[t - 1] = count
        row: dict[tuple, np.ndarray] = {}
        for k, cell in harvested.items():
            for tau, val in cell.items():
                arr = row.get(tau)
                if arr is None:
                    arr = row[tau] = np.zeros((count, r, r))
                arr[k - 1] = val
        rows.append(row)
    return ArWeightTable(n=n, r=r, rows=rows, counts=counts, max_order=max_deriv_order)


def _ma_rows_order0(model: TdVarmaModel, theta, n: int, kcap: int) -> list:
    """Order-0 MA weight rows; row t has shape (min(t-1, kcap)+1, r, r)."""
    r = model.r
    if model.p == 1 and model.q == 0:
        # running product psi_{tk} = psi_{t,k-1} A_{t-k+1}, vectorized over t
        ts = np.arange(1, n + 1)
        A = model.a_funcs[0].value(ts, theta)
        rows = [np.zeros((min(t - 1, kcap) + 1, r, r)) for t in range(1, n + 1)]
        col = np.broadcast_to(np.eye(r), (n, r, r)).copy()
        for t in range(1, n + 1):
            rows[t - 1][0] = np.eye(r)
        for k in range(1, min(n - 1, kcap) + 1):
            # psi_{t,k} = psi_{t,k-1} A_{t-k+1}; positions align t = k+1..n
            col = np.einsum("tij,tjk->tik", col[1:], A[1 : n - k + 1])
            for pos, t in enumerate(range(k + 1, n + 1)):
                rows[t - 1][k] = col[pos]
        return rows

    tuples = [()]
    rows = []
    for t in range(1, n + 1):
        K = min(t - 1, kcap)
        out = np.zeros((K + 1, r, r))
        out[0] = np.eye(r)
        if K >= 1:
            psi_stage = {
                j: model.b_funcs[j - 1].deriv_map(t, theta, tuples)
                for j in range(1, min(model.q, t - 1) + 1)
            }
            til_stage = {
                j: model.a_funcs[j - 1].deriv_map(t, theta, tuples)
                for j in range(1, min(model.p, t - 1) + 1)
            }
            for k in range(1, K + 1):
                til_k = til_stage.pop(k, None)
                cell = psi_stage.pop(k, {})
                if til_k is not None:
                    cell = _cell_add(cell, til_k)
                if cell:
                    out[k] = cell[()]
                if til_k is None:
                    if not til_stage:
                        for j, c in psi_stage.items():
                            if j <= K and c:
                                out[j] = c[()]
                        break
                    continue
                tk = t - k
                for lag in range(1, model.q + 1):
                    j = k + lag
                    if j > t - 1:
                        break
                    ymap = model.b_funcs[lag - 1].deriv_map(tk, theta, tuples)
                    psi_stage[j] = _cell_axpy(psi_stage.get(j), til_k, ymap, tuples, +1.0)
                for lag in range(1, model.p + 1):
                    j = k + lag
                    if j > t - 1:
                        break
                    ymap = model.a_funcs[lag - 1].deriv_map(tk, theta, tuples)
                    til_stage[j] = _cell_axpy(til_stage.get(j), til_k, ymap, tuples, +1.0)
        rows.append(out)
    return rows


def build_psi(
    model: TdVarmaModel,
    theta_eval,
    theta_truth,
    n: int,
    max_deriv_order: int = 0,
    kmax: Optional[int] = None,
) -> MaWeightTable:
    """MA weight table plus residual-derivative expansion coefficients.

    theta_truth drives the order-0 MA weights of the observed process;
    theta_eval drives the AR weights and their derivatives.  The two
    coincide when expanding at the data-generating parameter.
    """
    if n < 1:
        raise ContractError("horizon must be at least 1")
    theta_eval = np.asarray(theta_eval, dtype=float)
    theta_truth = np.asarray(theta_truth, dtype=float)
    r = model.r
    kcap = n - 1 if kmax is None else int(kmax)

    psi0 = _ma_rows_order0(model, theta_truth, n, kcap)
    pi = build_pi(model, theta_eval, n, max_deriv_order=max_deriv_order, kmax=kcap)

    tuples = [tau for tau in _deriv_tuples(model, max_deriv_order) if tau]

    resid = []
    derivs: dict[tuple, list] = {tau: [] for tau in tuples}
    for t in range(1, n + 1):
        K = min(t - 1, kcap)
        res_row = np.zeros((K + 1, r, r))
        res_row[0] = np.eye(r)
        if K >= 1:
            res_row[1:] = psi0[t - 1][1 : K + 1]
        drows = {tau: np.zeros((K + 1, r, r)) for tau in tuples}
        prow = pi.rows[t - 1]
        pi0 = prow.get(())
        count = int(pi.counts[t - 1])
        for u in range(1, min(count, K) + 1):
            base = psi0[t - u - 1]
            length = min(K - u, base.shape[0] - 1)
            seg = base[: length + 1]
            if pi0 is not None and pi0[u - 1].any():
                res_row[u : u + length + 1] -= np.einsum("rs,ksu->kru", pi0[u - 1], seg)
            for tau in tuples:
                arr = prow.get(tau)
                if arr is None:
                    continue
                dpi = arr[u - 1]
                if not dpi.any():
                    continue
                drows[tau][u : u + length + 1] -= np.einsum("rs,ksu->kru", dpi, seg)
        resid.append(res_row)
        for tau in tuples:
            derivs[tau].append(drows[tau])

    return MaWeightTable(
        n=n,
        r=r,
        weights=psi0,
        resid=resid,
        derivs=derivs,
        max_order=max_deriv_order,
    )


# -- closed forms used as oracles -------------------------------------------


def varma11_psi_closed(model: TdVarmaModel, theta, t: int, k: int) -> np.ndarray:
    """Product form of the MA weights for orders (1, 1):
    psi_{tk} = A_t A_{t-1} ... A_{t-k+2} (B_{t-k+1} + A_{t-k+1})."""
    if (model.p, model.q) != (1, 1):
        raise ContractError("closed-form MA weight requires orders (1, 1)")
    if not 1 <= k <= t - 1:
        raise ContractError("closed-form MA weight requires 1 <= k <= t-1")
    out = np.eye(model.r)
    for l in range(0, k - 1):
        out = out @ model.a_funcs[0].value(t - l, theta)
    tail = model.b_funcs[0].value(t - k + 1, theta) + model.a_funcs[0].value(t - k + 1, theta)
    return out @ tail


def varma11_pi_closed(model: TdVarmaModel, theta, t: int, k: int) -> np.ndarray:
    """Product form of the AR weights for orders (1, 1):
    pi_{tk} = (-1)^{k-1} B_t ... B_{t-k+2} (A_{t-k+1} + B_{t-k+1})."""
    if (model.p, model.q) != (1, 1):
        raise ContractError("closed-form AR weight requires orders (1, 1)")
    if not 1 <= k <= t - 1:
        raise ContractError("closed-form AR weight requires 1 <= k <= t-1")
    out = np.eye(model.r)
    for l in range(0, k - 1):
        out = out @ model.b_funcs[0].value(t - l, theta)
    tail = model.a_funcs[0].value(t - k + 1, theta) + model.b_funcs[0].value(t - k + 1, theta)
    return float((-1) ** (k - 1)) * (out @ tail)


def varma11_pi_deriv_closed(model: TdVarmaModel, theta, t: int, k: int, i: int) -> np.ndarray:
    """First derivative of the (1,1) AR weight via the factor-by-factor rule."""
    if (model.p, model.q) != (1, 1):
        raise ContractError("closed-form AR weight derivative requires orders (1, 1)")
    a, b = model.a_funcs[0], model.b_funcs[0]

    def factor(h: int, differentiate: bool) -> np.ndarray:
        th = t + 1 - h
        if h < k:
            return b.deriv(th, theta, (i,)) if differentiate else b.value(th, theta)
        return (
            a.deriv(th, theta, (i,)) + b.deriv(th, theta, (i,))
            if differentiate
            else a.value(th, theta) + b.value(th, theta)
        )

    total = np.zeros((model.r, model.r))
    for l in range(1, k + 1):
        prod = np.eye(model.r)
        for h in range(1, k + 1):
            prod = prod @ factor(h, differentiate=(h == l))
        total = total + prod
    return float((-1) ** (k - 1)) * total


def triangular_var1_product(
    a11: float,
    a22: float,
    freq_a: float,
    freq_b: float,
    coupling: float,
    t: int,
    k: int,
) -> np.ndarray:
    """Closed form for prod_{l=1}^{k-1} A_{t-l} when
    A_t = [[a11 sin(freq_a t), coupling], [0, a22 sin(freq_b t)]]."""
    if k < 1 or t - (k - 1) < 1:
        raise ContractError("product requires k >= 1 and t-k+1 >= 1")
    if k == 1:
        return np.eye(2)
    ls = np.arange(1, k)
    top = a11 ** (k - 1) * np.prod(np.sin(freq_a * (t - ls)))
    bot = a22 ** (k - 1) * np.prod(np.sin(freq_b * (t - ls)))
    off = 0.0
    for l in range(1, k):
        term = a11 ** (k - l - 1) * a22 ** (l - 1)
        for f in range(1, k - 1):
            if l + f <= k - 1:
                term *= np.sin(freq_a * (t - f))
            else:
                term *= np.sin(freq_b * (t - f - 1))
        off += term
    return np.array([[top, coupling * off], [0.0, bot]])


def var1_transition_power(model: TdVarmaModel, theta0, t: int, k: int) -> np.ndarray:
    """Matrix product prod_{l=1}^{k-1} A_{t-l}(theta0) for upper-triangular
    sinusoidal VAR(1) models, via the closed form."""
    a11, a22, freq_a, freq_b, coupling = _triangular_var1_params(model, theta0)
    return triangular_var1_product(a11, a22, freq_a, freq_b, coupling, t, k)


def _triangular_var1_params(model: TdVarmaModel, theta0):
    from .timefn import Constant, Param, Sine

    if (model.p, model.q) != (1, 0) or model.r != 2:
        raise ContractError("expected a bivariate pure VAR(1) model")
    theta0 = np.asarray(theta0, dtype=float)
    e = model.a_funcs[0].entries
    d_ok = isinstance(e[0][0], Sine) and isinstance(e[1][1], Sine)
    lower = isinstance(e[1][0], Constant) and e[1][0].c == 0.0
    if not (d_ok and lower):
        raise ContractError("expected upper-triangular sinusoidal VAR(1) coefficients")
    off = e[0][1]
    if isinstance(off, Constant):
        coupling = off.c
    elif isinstance(off, Param):
        coupling = float(theta0[off.slot])
    else:
        raise ContractError("expected a constant or single-parameter (1,2) coefficient")
    return (
        float(theta0[e[0][0].slot]),
        float(theta0[e[1][1].slot]),
        e[0][0].omega,
        e[1][1].omega,
        coupling,
    )
