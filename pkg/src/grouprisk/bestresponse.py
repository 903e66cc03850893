"""Optimal weight split for a single bank choosing between two groups.

With every other row of the weight matrix held fixed, bank ``i``'s total
allocation as a function of its row ``(t, 1 - t)`` is piecewise smooth: a
quadratic in ``t`` on the open interval (bank in both groups, doubled log
term with the enlarged tolerance ``beta' = beta + 1/alpha_i``) plus two
corner values at ``(1, 0)`` and ``(0, 1)`` where one membership switches off.
The quadratic is

    risk(t) = const - a * t + (b1 * t^2 + b2 * (1 - t)^2) / 2 + linear-in-others,

whose stationary point is ``t* = (a + b2) / (b1 + b2)``; it lies inside
``(0, 1)`` iff ``-b2 < a < b1``.  Because membership is discontinuous at zero
weight, the engine never decides by case analysis alone: it evaluates every
candidate row through the generic deviation evaluator and takes the argmin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyCounterparty
from .market import WEIGHT_EPS, GaussianMarket
from .overlap import WeightMatrix, row_risk, split_risk_profile

#: Ties between candidate rows within this risk margin resolve to the current
#: row, which keeps best-response dynamics from cycling on plateaus.
TIE_EPS = 1e-12

_FALLBACK_GRID = 2000


@dataclass(frozen=True)
class _SplitInputs:
    """Fixed-market quantities entering every two-group formula for one bank."""

    alpha_i: float
    mu_i: float
    sig_ii: float
    tol: tuple[float, float]  # risk tolerance of the *other* members, per group
    p: tuple[float, float]    # others' weighted covariance with bank i
    q: tuple[float, float]    # others' weighted covariance quadratic form
    counterparties: tuple[int, int]

    @property
    def beta(self) -> tuple[float, float]:
        return (self.tol[0] + 1.0 / self.alpha_i, self.tol[1] + 1.0 / self.alpha_i)

    @property
    def beta_single(self) -> float:
        return self.tol[0] + self.tol[1] + 1.0 / self.alpha_i

    @property
    def beta_split(self) -> float:
        return self.beta_single + 1.0 / self.alpha_i


def _split_inputs(market: GaussianMarket, w: WeightMatrix, i: int) -> _SplitInputs:
    if w.h != 2:
        raise DimensionMismatch("two-group analysis requires h == 2")
    tol, p, q, counts = [], [], [], []
    for j in (0, 1):
        col = np.array(w.w[:, j], copy=True)
        col[i] = 0.0
        col[col <= WEIGHT_EPS] = 0.0
        others = np.flatnonzero(col)
        counts.append(int(others.size))
        tol.append(float(np.sum(1.0 / market.alpha[others])))
        p.append(float(col @ market.sigma[:, i]))
        q.append(float(col @ market.sigma @ col))
    return _SplitInputs(
        alpha_i=float(market.alpha[i]),
        mu_i=float(market.mu[i]),
        sig_ii=float(market.sigma[i, i]),
        tol=(tol[0], tol[1]),
        p=(p[0], p[1]),
        q=(q[0], q[1]),
        counterparties=(counts[0], counts[1]),
    )


@dataclass(frozen=True)
class SplitCoefficients:
    """Coefficients of the interior risk quadratic for one bank.

    ``a`` collects the covariance asymmetry between the two groups; ``b1`` and
    ``b2`` are the own-variance curvatures (both positive whenever the bank
    has positive variance, since ``beta_j >= 1/alpha_i``).  ``beta1``/``beta2``
    include the bank itself; ``beta_single`` is the system tolerance when the
    bank sits in one group, ``beta_split`` the enlarged one when it splits.
    """

    a: float
    b1: float
    b2: float
    beta1: float
    beta2: float
    beta_single: float
    beta_split: float


def coefficients(market: GaussianMarket, w: WeightMatrix, i: int) -> SplitCoefficients:
    """Interior-quadratic coefficients for bank ``i`` at the current weights.

    Requires at least one other member in each group (otherwise the corner
    cases would change the group structure itself); raises EmptyCounterparty.
    """
    s = _split_inputs(market, w, i)
    if min(s.counterparties) == 0:
        raise EmptyCounterparty(
            f"bank {i} needs another member in both groups, got {s.counterparties}"
        )
    return _coefficients_from_inputs(s)


def _coefficients_from_inputs(s: _SplitInputs) -> SplitCoefficients:
    b1_, b2_ = s.beta
    a = (s.p[0] / (b1_ * b1_ * s.alpha_i) - s.p[1] / (b2_ * b2_ * s.alpha_i)) - (
        s.p[0] / b1_ - s.p[1] / b2_
    )
    b1 = (2.0 / b1_ - 1.0 / (b1_ * b1_ * s.alpha_i)) * s.sig_ii
    b2 = (2.0 / b2_ - 1.0 / (b2_ * b2_ * s.alpha_i)) * s.sig_ii
    return SplitCoefficients(
        a=float(a),
        b1=float(b1),
        b2=float(b2),
        beta1=b1_,
        beta2=b2_,
        beta_single=s.beta_single,
        beta_split=s.beta_split,
    )


def interior_optimum(coeffs: SplitCoefficients) -> float:
    """Stationary point ``(a + b2) / (b1 + b2)`` of the interior quadratic.

    Curvature ``b1 + b2`` is positive whenever the bank is non-degenerate, so
    this is a minimizer; it may fall outside [0, 1].
    """
    return (coeffs.a + coeffs.b2) / (coeffs.b1 + coeffs.b2)


def interior_condition(coeffs: SplitCoefficients) -> bool:
    """True iff the interior optimum lies strictly inside ``(0, 1)``."""
    return -coeffs.b2 < coeffs.a < coeffs.b1


def boundary_risk(market: GaussianMarket, w: WeightMatrix, i: int, group: int) -> float:
    """Analytic risk of bank ``i`` putting full weight on ``group`` (0 or 1)."""
    s = _split_inputs(market, w, i)
    bj = s.beta[group]
    log_term = np.log(s.beta_single / -market.budget)
    return float(
        log_term / s.alpha_i
        - s.mu_i
        + (s.p[group] + s.sig_ii) / bj
        - (s.q[group] + 2.0 * s.p[group] + s.sig_ii) / (2.0 * bj * bj * s.alpha_i)
    )


def interior_risk(market: GaussianMarket, w: WeightMatrix, i: int, t: float) -> float:
    """Analytic risk of the split row ``(t, 1 - t)`` with ``0 < t < 1``."""
    s = _split_inputs(market, w, i)
    out = 2.0 * np.log(s.beta_split / -market.budget) / s.alpha_i - s.mu_i
    for j, wj in ((0, t), (1, 1.0 - t)):
        bj = s.beta[j]
        out += wj * (s.p[j] + wj * s.sig_ii) / bj
        out -= (s.q[j] + 2.0 * wj * s.p[j] + wj * wj * s.sig_ii) / (
            2.0 * bj * bj * s.alpha_i
        )
    return float(out)


def decision_margins(market: GaussianMarket, w: WeightMatrix, i: int) -> tuple[float, float]:
    """Risk of the optimal split minus the risk of each corner, in closed form.

    Returns ``(vs_group_1_corner, vs_group_2_corner)``; the split strictly
    beats both corners iff both margins are negative.  Only meaningful when
    the interior condition holds.
    """
    s = _split_inputs(market, w, i)
    c = _coefficients_from_inputs(s)
    log_gap = (
        2.0 * np.log(c.beta_split / -market.budget)
        - np.log(c.beta_single / -market.budget)
    ) / s.alpha_i
    twice_curv = 2.0 * (c.b1 + c.b2)
    vs_first = (
        log_gap
        - (c.a - c.b1) ** 2 / twice_curv
        - s.q[1] / (2.0 * c.beta2 * c.beta2 * s.alpha_i)
    )
    vs_second = (
        log_gap
        - (c.a + c.b2) ** 2 / twice_curv
        - s.q[0] / (2.0 * c.beta1 * c.beta1 * s.alpha_i)
    )
    return float(vs_first), float(vs_second)


def sufficient_interior_condition(market: GaussianMarket, w: WeightMatrix, i: int) -> bool:
    """Covariance-size bound implying the interior condition (one-directional).

    Bounds the asymmetry ``a`` by total absolute covariance with the other
    banks: if both

        (1/beta1 - 1/(beta1^2 alpha_i)) * sum_k |sigma_ki| < b2-and-
        (1/beta2 - 1/(beta2^2 alpha_i)) * sum_k |sigma_ki| < b1-coefficients

    hold, then ``-b2 < a < b1`` regardless of the particular weights.
    """
    c = coefficients(market, w, i)  # enforces the counterparty precondition
    abs_cov = float(np.sum(np.abs(market.sigma[:, i]))) - abs(float(market.sigma[i, i]))
    alpha_i = float(market.alpha[i])
    sig_ii = float(market.sigma[i, i])
    lo = (1.0 / c.beta1 - 1.0 / (c.beta1 * c.beta1 * alpha_i)) * abs_cov < (
        2.0 / c.beta2 - 1.0 / (c.beta2 * c.beta2 * alpha_i)
    ) * sig_ii
    hi = (1.0 / c.beta2 - 1.0 / (c.beta2 * c.beta2 * alpha_i)) * abs_cov < (
        2.0 / c.beta1 - 1.0 / (c.beta1 * c.beta1 * alpha_i)
    ) * sig_ii
    return bool(lo and hi)


def best_response_two_groups(
    market: GaussianMarket, w: WeightMatrix, i: int
) -> tuple[np.ndarray, float]:
    """Row minimizing bank ``i``'s total allocation over two groups.

    Candidates are the two corners and, when defined, the interior optimum;
    every candidate is scored through the generic deviation evaluator so that
    membership changes are priced consistently.  When the bank lacks a
    counterparty in some group the interior candidate comes from a dense grid
    plus an exact parabolic refinement instead of the closed form.

    Returns ``(row, risk)``; on ties within ``TIE_EPS`` the current row wins.
    """
    if w.h != 2:
        raise DimensionMismatch("best response implemented for h == 2 only")
    current = np.array(w.w[i], copy=True)
    current_risk = row_risk(market, w, i, current)

    candidates: list[np.ndarray] = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    s = _split_inputs(market, w, i)
    c = _coefficients_from_inputs(s)
    curvature = c.b1 + c.b2
    if min(s.counterparties) > 0:
        if curvature > 0.0:
            t_star = interior_optimum(c)
            if 0.0 < t_star < 1.0:
                candidates.append(np.array([t_star, 1.0 - t_star]))
    elif curvature > 0.0:
        grid = np.arange(1, _FALLBACK_GRID) / _FALLBACK_GRID
        prof = split_risk_profile(market, w, i, grid)
        k = int(np.argmin(prof))
        t = grid[k]
        if 0 < k < grid.size - 1:
            denom = prof[k + 1] - 2.0 * prof[k] + prof[k - 1]
            if denom > 0.0:
                t = t - 0.5 / _FALLBACK_GRID * (prof[k + 1] - prof[k - 1]) / denom
        t = min(max(t, 1.0 / _FALLBACK_GRID), 1.0 - 1.0 / _FALLBACK_GRID)
        candidates.append(np.array([t, 1.0 - t]))

    best_row, best_risk = None, np.inf
    for row in candidates:
        risk = row_risk(market, w, i, row)
        if risk < best_risk:
            best_row, best_risk = row, risk
    if current_risk <= best_risk + TIE_EPS:
        return current, float(current_risk)
    return best_row, float(best_risk)
