"""Risk allocation when banks split their risk factor across overlapping groups.

Strategies are row-stochastic ``n x h`` weight matrices: bank ``i`` puts the
share ``w[i, j]`` of its risk factor into group ``j`` and belongs to every
group where its weight is positive.  Group ``j`` pools ``S_j = sum_i w[i,j] X_i``
and carries the deterministic total

    d_j = beta_j * log(beta / -B) - mean(S_j) + var(S_j) / (2 beta_j),

where ``beta_j`` counts ``1/alpha_i`` once per member of group ``j`` and
``beta = sum_j beta_j`` counts a bank once per membership, so splitting
raises the system tolerance.  The allocation of bank ``i`` in group ``j`` is

    rho_ij = log(beta / -B) / alpha_i - w_ij mu_i
             + (w_ij / beta_j) (a_j @ sigma)_i - var(S_j) / (2 beta_j^2 alpha_i)

and the bank's total allocation sums this over the groups it belongs to.
The tilt behind these formulas shifts Gaussian means by ``-cov(., S_j)/beta_j``
and leaves covariances unchanged, which is what the sensitivity formulas
below exploit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidSplit,
    InvalidWeights,
    NotMember,
    ZeroWeight,
)
from .market import WEIGHT_EPS, GaussianMarket, _frozen, _var_floor

#: Step used by all central finite-difference cross-checks.
FD_STEP = 1e-5


@dataclass(frozen=True)
class WeightMatrix:
    """Row-stochastic risk-splitting weights, one row per bank.

    Entries at or below ``WEIGHT_EPS`` are snapped to exact zeros and the row
    is renormalized: membership feeds an indicator inside the group
    tolerances, so a crisp zero threshold is required.
    """

    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if w.ndim != 2 or w.shape[1] < 1:
            raise DimensionMismatch("weight matrix must be n x h with h >= 1")
        if np.any(w < -WEIGHT_EPS) or np.any(w > 1.0 + WEIGHT_EPS):
            raise InvalidWeights("weights must lie in [0, 1]")
        w = np.clip(w, 0.0, 1.0)
        sums = w.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-9):
            bad = int(np.argmax(np.abs(sums - 1.0)))
            raise InvalidWeights(f"row {bad} sums to {sums[bad]:.12g}, expected 1")
        w[w <= WEIGHT_EPS] = 0.0
        w = w / w.sum(axis=1, keepdims=True)
        object.__setattr__(self, "w", _frozen(w))

    @property
    def n(self) -> int:
        return self.w.shape[0]

    @property
    def h(self) -> int:
        return self.w.shape[1]

    def members(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.w[:, j] > 0.0)

    def row(self, i: int) -> np.ndarray:
        return self.w[i]

    def with_row(self, i: int, row) -> "WeightMatrix":
        new = np.array(self.w, copy=True)
        new[i] = np.asarray(row, dtype=float)
        return WeightMatrix(new)

    def canonical(self) -> "WeightMatrix":
        """Columns sorted descending-lexicographically; resolves column relabeling."""
        order = sorted(range(self.h), key=lambda j: tuple(self.w[:, j]), reverse=True)
        return WeightMatrix(self.w[:, order])

    @classmethod
    def uniform(cls, n: int, h: int) -> "WeightMatrix":
        return cls(np.full((n, h), 1.0 / h))

    @classmethod
    def random(cls, n: int, h: int, rng: np.random.Generator) -> "WeightMatrix":
        return cls(rng.dirichlet(np.ones(h), size=n))

    @classmethod
    def from_partition(cls, partition, h: int | None = None) -> "WeightMatrix":
        if h is None:
            h = partition.h
        if h < partition.h:
            raise DimensionMismatch("partition has more blocks than columns")
        w = np.zeros((partition.n, h))
        for j, blk in enumerate(partition.blocks):
            w[list(blk), j] = 1.0
        return cls(w)


@dataclass(frozen=True)
class ShockVector:
    """Perturbation ``Z`` of the risk factors, deterministic or jointly Gaussian.

    ``cov_xz[a, b] = Cov(X_a, Z_b)``.  Deterministic shocks carry zero
    covariances, so all the tilt corrections vanish.
    """

    mean: np.ndarray
    cov: np.ndarray
    cov_xz: np.ndarray
    deterministic: bool

    @classmethod
    def deterministic_shock(cls, z) -> "ShockVector":
        z = np.atleast_1d(np.asarray(z, dtype=float))
        n = z.shape[0]
        zero = np.zeros((n, n))
        return cls(_frozen(z), _frozen(zero), _frozen(zero), True)

    @classmethod
    def gaussian(cls, mean, cov, cov_xz=None) -> "ShockVector":
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        n = mean.shape[0]
        cov = np.asarray(cov, dtype=float)
        if cov.shape != (n, n):
            raise DimensionMismatch("shock covariance must be n x n")
        if cov_xz is None:
            cov_xz = np.zeros((n, n))
        cov_xz = np.asarray(cov_xz, dtype=float)
        if cov_xz.shape != (n, n):
            raise DimensionMismatch("cross covariance must be n x n")
        return cls(_frozen(mean), _frozen(cov), _frozen(cov_xz), False)

    @classmethod
    def equal_to_risk(cls, market: GaussianMarket) -> "ShockVector":
        """The shock ``Z = X`` (fully co-moving with the risk factors)."""
        return cls.gaussian(market.mu, market.sigma, market.sigma)


@dataclass(frozen=True)
class OverlapReport:
    """Per-(bank, group) allocations, group constants, and totals."""

    rho_ij: np.ndarray
    rho: np.ndarray
    d: np.ndarray
    total: float
    beta_groups: np.ndarray
    beta: float

    def to_dict(self) -> dict:
        return {
            "rho_ij": self.rho_ij.tolist(),
            "rho": self.rho.tolist(),
            "d": self.d.tolist(),
            "total": self.total,
            "beta_groups": self.beta_groups.tolist(),
            "beta": self.beta,
        }


def _weight_array(w) -> np.ndarray:
    return w.w if isinstance(w, WeightMatrix) else np.asarray(w, dtype=float)


def betas_overlap(market: GaussianMarket, w) -> tuple[np.ndarray, float]:
    """Group tolerances (one ``1/alpha`` per membership) and their total.

    Empty groups contribute zero; the total grows whenever a bank splits.
    """
    wm = _weight_array(w)
    if wm.shape[0] != market.n:
        raise DimensionMismatch("weight matrix rows must match market size")
    member = wm > WEIGHT_EPS
    beta_j = (member / market.alpha[:, None]).sum(axis=0)
    return beta_j, float(beta_j.sum())


def allocation_overlap(market: GaussianMarket, w) -> OverlapReport:
    """Closed-form allocation report for a weight matrix.

    A 0/1 matrix with exactly one 1 per row reproduces the disjoint report on
    the induced partition.
    """
    wm = _weight_array(w)
    beta_j, beta = betas_overlap(market, wm)
    n, h = wm.shape
    log_term = np.log(beta / -market.budget)
    rho_ij = np.zeros((n, h))
    d = np.zeros(h)
    for j in range(h):
        col = wm[:, j]
        members = np.flatnonzero(col > WEIGHT_EPS)
        if members.size == 0:
            continue
        a_sigma = col @ market.sigma
        mu_s = float(col @ market.mu)
        var_s = _var_floor(float(col @ a_sigma))
        bj = beta_j[j]
        d[j] = bj * log_term - mu_s + var_s / (2.0 * bj)
        i = members
        rho_ij[i, j] = (
            log_term / market.alpha[i]
            - col[i] * market.mu[i]
            + col[i] * a_sigma[i] / bj
            - var_s / (2.0 * bj * bj * market.alpha[i])
        )
    rho = rho_ij.sum(axis=1)
    return OverlapReport(
        rho_ij=_frozen(rho_ij),
        rho=_frozen(rho),
        d=_frozen(d),
        total=float(d.sum()),
        beta_groups=_frozen(beta_j),
        beta=beta,
    )


def bank_total_risk(market: GaussianMarket, w, i: int) -> float:
    """Total allocation of bank ``i`` (sum of its per-group entries)."""
    wm = _weight_array(w)
    beta_j, beta = betas_overlap(market, wm)
    log_term = np.log(beta / -market.budget)
    total = 0.0
    for j in np.flatnonzero(wm[i] > WEIGHT_EPS):
        col = wm[:, j]
        a_sigma_i = float(col @ market.sigma[:, i])
        var_s = _var_floor(float(col @ market.sigma @ col))
        bj = beta_j[j]
        total += (
            log_term / market.alpha[i]
            - col[i] * market.mu[i]
            + col[i] * a_sigma_i / bj
            - var_s / (2.0 * bj * bj * market.alpha[i])
        )
    return float(total)


def row_risk(market: GaussianMarket, w: WeightMatrix, i: int, row) -> float:
    """Total allocation of bank ``i`` after unilaterally switching to ``row``.

    Memberships (and hence all group tolerances) are recomputed for the
    candidate row, which makes this the uniformly safe deviation evaluator:
    the indicator inside ``beta`` makes the objective discontinuous at zero
    weights, so candidates must never be compared through stale tolerances.
    """
    return bank_total_risk(market, w.with_row(i, row), i)


def split_risk_profile(
    market: GaussianMarket, w: WeightMatrix, i: int, first_weights
) -> np.ndarray:
    """Vectorized ``row_risk`` over interior two-group rows ``(t, 1 - t)``.

    Only valid for ``h == 2`` and strictly interior ``t`` (both memberships
    active).  Agrees with :func:`row_risk` point by point.
    """
    if w.h != 2:
        raise DimensionMismatch("interior profile is defined for h == 2 only")
    t = np.asarray(first_weights, dtype=float)
    if np.any(t <= 0.0) or np.any(t >= 1.0):
        raise InvalidWeights("profile weights must be strictly interior")
    wm = w.w
    alpha_i = market.alpha[i]
    sig_ii = market.sigma[i, i]
    out = np.zeros_like(t)
    others_tol = 0.0
    for j in (0, 1):
        others = np.flatnonzero(wm[:, j] > WEIGHT_EPS)
        others = others[others != i]
        col = np.zeros(market.n)
        col[others] = wm[others, j]
        p_j = float(col @ market.sigma[:, i])
        q_j = float(col @ market.sigma @ col)
        tol_j = float(np.sum(1.0 / market.alpha[others]))
        others_tol += tol_j
        beta_j = tol_j + 1.0 / alpha_i
        wj = t if j == 0 else 1.0 - t
        out += (
            -wj * market.mu[i]
            + wj * (p_j + wj * sig_ii) / beta_j
            - (q_j + 2.0 * wj * p_j + wj * wj * sig_ii)
            / (2.0 * beta_j * beta_j * alpha_i)
        )
    beta_split = others_tol + 2.0 / alpha_i
    out += 2.0 * np.log(beta_split / -market.budget) / alpha_i
    return out


# ---------------------------------------------------------------------------
# Sensitivity of the allocation to shocks on the risk factors and to weights.
# ---------------------------------------------------------------------------


def _group_column(w, j: int) -> np.ndarray:
    wm = _weight_array(w)
    return wm[:, j]


def _require_member(w, i: int, j: int) -> float:
    wij = float(_weight_array(w)[i, j])
    if wij <= WEIGHT_EPS:
        raise NotMember(f"bank {i} has no weight in group {j}")
    return wij


def marginal_group_risk(market: GaussianMarket, w, j: int, shock: ShockVector) -> float:
    """Derivative of the group constant ``d_j`` along ``X + eps Z`` at ``eps = 0``.

    Equals minus the tilted mean of the shocked group sum
    ``S_j^Z = sum_i w_ij Z_i``; the tilt shifts that mean by
    ``-Cov(S_j^Z, S_j) / beta_j``.
    """
    col = _group_column(w, j)
    beta_j, _ = betas_overlap(market, w)
    if beta_j[j] <= 0.0:
        return 0.0
    mean_sz = float(col @ shock.mean)
    cov_sz_s = float(col @ shock.cov_xz.T @ col)
    return -(mean_sz - cov_sz_s / beta_j[j])


def local_causal_responsibility(
    market: GaussianMarket, w, i: int, j: int, shock: ShockVector
) -> float:
    """Shock derivative of bank ``i``'s group-``j`` allocation at frozen tilt."""
    wij = _require_member(w, i, j)
    col = _group_column(w, j)
    beta_j, _ = betas_overlap(market, w)
    cov_zi_s = float(col @ shock.cov_xz[:, i])
    return -wij * (float(shock.mean[i]) - cov_zi_s / beta_j[j])


def marginal_risk_allocation(
    market: GaussianMarket, w, i: int, j: int, shock: ShockVector
) -> float:
    """Full shock derivative of bank ``i``'s group-``j`` allocation.

    Three terms: the bank's own shock under the tilt, the co-movement of the
    bank with the shocked group sum, and the group-level compensation spread
    by ``1/alpha_i``.  Summed over a group's members this telescopes to
    :func:`marginal_group_risk`.
    """
    wij = _require_member(w, i, j)
    col = _group_column(w, j)
    beta_j, _ = betas_overlap(market, w)
    bj = beta_j[j]
    own = local_causal_responsibility(market, w, i, j, shock)
    cov_xi_sz = float(shock.cov_xz[i] @ col)
    cov_s_sz = float(col @ shock.cov_xz @ col)
    return own + wij * cov_xi_sz / bj - cov_s_sz / (market.alpha[i] * bj * bj)


def weight_sensitivity(market: GaussianMarket, w, i: int, j: int) -> float:
    """Derivative of bank ``i``'s group-``j`` allocation in its own weight.

    Taken at fixed membership (no renormalization of the row, tolerances
    frozen), so it is only defined at strictly positive weights.
    """
    wij = float(_weight_array(w)[i, j])
    if wij <= WEIGHT_EPS:
        raise ZeroWeight(f"bank {i} has zero weight in group {j}")
    col = _group_column(w, j)
    beta_j, _ = betas_overlap(market, w)
    bj = beta_j[j]
    a_sigma_i = float(col @ market.sigma[:, i])
    return float(
        -(market.mu[i] - a_sigma_i / bj)
        - a_sigma_i / (market.alpha[i] * bj * bj)
        + wij * market.sigma[i, i] / bj
    )


# -- central finite-difference twins ----------------------------------------


def _perturbed_group_constant(
    market: GaussianMarket, col: np.ndarray, beta_j: float, beta: float,
    shock: ShockVector, eps: float,
) -> float:
    mu_s = float(col @ (market.mu + eps * shock.mean))
    var_s = (
        float(col @ market.sigma @ col)
        + 2.0 * eps * float(col @ shock.cov_xz @ col)
        + eps * eps * float(col @ shock.cov @ col)
    )
    return beta_j * np.log(beta / -market.budget) - mu_s + var_s / (2.0 * beta_j)


def fd_marginal_group_risk(
    market: GaussianMarket, w, j: int, shock: ShockVector, step: float = FD_STEP
) -> float:
    col = _group_column(w, j)
    beta_j, beta = betas_overlap(market, w)
    up = _perturbed_group_constant(market, col, beta_j[j], beta, shock, step)
    dn = _perturbed_group_constant(market, col, beta_j[j], beta, shock, -step)
    return (up - dn) / (2.0 * step)


def fd_local_causal_responsibility(
    market: GaussianMarket, w, i: int, j: int, shock: ShockVector, step: float = FD_STEP
) -> float:
    """Finite difference holding the tilted measure at ``eps = 0`` fixed."""
    wij = _require_member(w, i, j)
    col = _group_column(w, j)
    beta_j, beta = betas_overlap(market, w)
    bj = beta_j[j]
    a_sigma = col @ market.sigma
    mean_x_q = market.mu[i] - a_sigma[i] / bj
    mean_z_q = shock.mean[i] - float(col @ shock.cov_xz[:, i]) / bj
    mean_s_q = float(col @ market.mu) - float(col @ a_sigma) / bj
    mean_sz_q = float(col @ shock.mean) - float(col @ shock.cov_xz.T @ col) / bj

    def value(eps: float) -> float:
        d_eps = _perturbed_group_constant(market, col, bj, beta, shock, eps)
        return (
            -wij * (mean_x_q + eps * mean_z_q)
            + (mean_s_q + eps * mean_sz_q + d_eps) / (market.alpha[i] * bj)
        )

    return (value(step) - value(-step)) / (2.0 * step)


def fd_marginal_risk_allocation(
    market: GaussianMarket, w, i: int, j: int, shock: ShockVector, step: float = FD_STEP
) -> float:
    """Finite difference of the allocation entry under the shifted market law."""
    _require_member(w, i, j)
    wm = _weight_array(w)
    beta_j, beta = betas_overlap(market, w)
    col = wm[:, j]
    bj = beta_j[j]

    def value(eps: float) -> float:
        mu = market.mu + eps * shock.mean
        sigma = (
            market.sigma
            + eps * (shock.cov_xz + shock.cov_xz.T)
            + eps * eps * shock.cov
        )
        a_sigma_i = float(col @ sigma[:, i])
        var_s = float(col @ sigma @ col)
        return (
            np.log(beta / -market.budget) / market.alpha[i]
            - col[i] * mu[i]
            + col[i] * a_sigma_i / bj
            - var_s / (2.0 * bj * bj * market.alpha[i])
        )

    return (value(step) - value(-step)) / (2.0 * step)


def fd_weight_sensitivity(
    market: GaussianMarket, w, i: int, j: int, step: float = FD_STEP
) -> float:
    """Finite difference in ``w[i, j]`` with the rest of the row held fixed."""
    wij = float(_weight_array(w)[i, j])
    if wij <= WEIGHT_EPS:
        raise ZeroWeight(f"bank {i} has zero weight in group {j}")
    wm = _weight_array(w)
    beta_j, beta = betas_overlap(market, w)
    bj = beta_j[j]

    def value(eps: float) -> float:
        col = np.array(wm[:, j], copy=True)
        col[i] = wij + eps
        a_sigma_i = float(col @ market.sigma[:, i])
        var_s = float(col @ market.sigma @ col)
        return (
            np.log(beta / -market.budget) / market.alpha[i]
            - col[i] * market.mu[i]
            + col[i] * a_sigma_i / bj
            - var_s / (2.0 * bj * bj * market.alpha[i])
        )

    return (value(step) - value(-step)) / (2.0 * step)


# ---------------------------------------------------------------------------
# Splitting one group into two never lowers the total risk.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SplitComparison:
    """Both sides of the split inequality plus the group-constant comparison.

    ``lhs <= rhs`` holds unconditionally; ``d_group <= d_sub + d_rest``
    additionally needs the two sub-sums to be (essentially) nonnegative.
    """

    lhs: float
    rhs: float
    holds: bool
    d_group: float
    d_sub: float
    d_rest: float

    @property
    def total_split_holds(self) -> bool:
        return self.d_group <= self.d_sub + self.d_rest + 1e-9


def monotonicity_check(
    market: GaussianMarket, w, m: int, sub_weights
) -> SplitComparison:
    """Compare group ``m`` against splitting it into a sub-group and remainder.

    ``sub_weights[k]`` is the weight bank ``k`` moves into the sub-group; it
    must satisfy ``0 < sub_weights[k] <= w[k, m]`` wherever positive, and the
    remainder keeps ``w[k, m] - sub_weights[k]``.  The left side is the
    current group's tilted expectation of the sub-group's scaled allocations;
    the right side is the sub-group's stand-alone total computed with the
    enlarged system tolerance.  The inequality quantifies why merging groups
    (fewer, larger pools) is collectively cheaper.
    """
    wm = _weight_array(w)
    col = wm[:, m]
    sub = np.atleast_1d(np.asarray(sub_weights, dtype=float))
    if sub.shape[0] != market.n:
        raise DimensionMismatch("sub-group weights must have one entry per bank")
    active = sub > WEIGHT_EPS
    if not np.any(active):
        raise InvalidSplit("sub-group is empty")
    if np.any(active & (col <= WEIGHT_EPS)):
        raise InvalidSplit("sub-group weight on a bank outside the group")
    if np.any(sub > col + 1e-12):
        raise InvalidSplit("sub-group weight exceeds the group weight")
    sub = np.where(active, np.minimum(sub, col), 0.0)
    rest = np.where(col - sub > WEIGHT_EPS, col - sub, 0.0)

    beta_j, beta = betas_overlap(market, wm)
    beta_m = float(beta_j[m])
    inv_alpha = 1.0 / market.alpha
    beta_sub = float(inv_alpha[sub > 0.0].sum())
    beta_rest = float(inv_alpha[rest > 0.0].sum())
    beta_new = beta - beta_m + beta_sub + beta_rest

    eta = float(np.sum(np.where(active, sub / np.where(active, col, 1.0), 0.0) * inv_alpha))
    mu_m = float(col @ market.mu)
    var_m = float(col @ market.sigma @ col)
    mu_t = float(sub @ market.mu)
    var_t = float(sub @ market.sigma @ sub)
    cov_t_s = float(sub @ market.sigma @ col)
    d_m = beta_m * np.log(beta / -market.budget) - mu_m + var_m / (2.0 * beta_m)

    lhs = (
        (eta / beta_m) * (mu_m - var_m / beta_m)
        - (mu_t - cov_t_s / beta_m)
        + (eta / beta_m) * d_m
    )
    rhs = eta * np.log(beta_new / -market.budget) - mu_t + var_t / (2.0 * eta)

    mu_r = float(rest @ market.mu)
    var_r = float(rest @ market.sigma @ rest)
    d_sub = beta_sub * np.log(beta_new / -market.budget) - mu_t + var_t / (2.0 * beta_sub)
    if beta_rest > 0.0:
        d_rest = (
            beta_rest * np.log(beta_new / -market.budget) - mu_r + var_r / (2.0 * beta_rest)
        )
    else:
        d_rest = 0.0

    return SplitComparison(
        lhs=float(lhs),
        rhs=float(rhs),
        holds=bool(lhs <= rhs + 1e-9),
        d_group=float(d_m),
        d_sub=float(d_sub),
        d_rest=float(d_rest),
    )
