"""Independent Monte Carlo ground truth for every closed form in the package.

Sampling draws from ``N(mu, sigma)`` by Cholesky factorization (eigenvalue
factorization for singular covariances) in fixed-size chunks, each chunk on
its own spawned PRNG substream; the chunk layout is part of the determinism
contract, so a given ``seed`` always reproduces the same matrix and chunks
may be generated in parallel without changing the result.

Tilted expectations ``E[f(X) exp(-S/beta)] / E[exp(-S/beta)]`` are estimated
by self-normalized importance weighting with a delta-method standard error;
comparisons against closed forms are scored in standard errors rather than
fixed tolerances because the estimator variance depends on the tilt.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .disjoint import Partition, betas_disjoint, block_constant
from .errors import DegenerateWeights, DimensionMismatch, NonPositiveBeta, NotIID
from .market import WEIGHT_EPS, GaussianMarket, _var_floor, _weights_of
from .overlap import WeightMatrix, betas_overlap

#: Draws per PRNG substream; part of the reproducibility contract.
CHUNK_SIZE = 1 << 17


def _factor(sigma: np.ndarray) -> np.ndarray:
    """Matrix ``L`` with ``L @ L.T = sigma`` (Cholesky, or eigen for singular)."""
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        eigval, eigvec = np.linalg.eigh(sigma)
        return eigvec * np.sqrt(np.clip(eigval, 0.0, None))


def sample_X(market: GaussianMarket, count: int, seed: int) -> np.ndarray:
    """``count`` draws from the market law, shape ``(count, n)``, seed-deterministic."""
    if count < 1:
        raise DimensionMismatch("need at least one draw")
    factor = _factor(market.sigma)
    n_chunks = (count + CHUNK_SIZE - 1) // CHUNK_SIZE
    streams = np.random.SeedSequence(seed).spawn(n_chunks)
    out = np.empty((count, market.n))
    for c, stream in enumerate(streams):
        lo = c * CHUNK_SIZE
        hi = min(lo + CHUNK_SIZE, count)
        z = np.random.default_rng(stream).standard_normal((hi - lo, market.n))
        out[lo:hi] = market.mu + z @ factor.T
    return out


def mean_and_se(values: np.ndarray) -> tuple[float, float]:
    """Sample mean and its standard error (0 for a single draw)."""
    values = np.asarray(values, dtype=float)
    m = values.shape[0]
    se = float(values.std(ddof=1) / np.sqrt(m)) if m > 1 else 0.0
    return float(values.mean()), se


def z_score(closed: float, estimate: float, se: float) -> float:
    """Standardized deviation with a dust floor on the standard error.

    Deterministic quantities (a deterministic group sum, a singleton bank's
    allocation) estimate exactly, leaving ``se`` at rounding level; the floor
    keeps those comparisons at z ~ 0 instead of 0/0.
    """
    return (estimate - closed) / max(se, 1e-12 * (1.0 + abs(closed)))


def tilt_weights(samples: np.ndarray, a, beta: float) -> np.ndarray:
    """Unnormalized importance weights ``exp(-(a @ x) / beta)`` per draw."""
    if not beta > 0.0:
        raise NonPositiveBeta(f"beta must be strictly positive, got {beta}")
    s = samples @ _weights_of(a)
    return np.exp(-s / beta)


def tilted_estimate(samples: np.ndarray, a, beta: float, f) -> tuple[float, float]:
    """Self-normalized estimate of the tilted mean of ``f`` with its SE.

    ``f`` is either a callable mapping the sample matrix to one value per
    draw, or a precomputed vector of such values.  Raises DegenerateWeights
    when the effective sample size falls below 10.
    """
    if not beta > 0.0:
        raise NonPositiveBeta(f"beta must be strictly positive, got {beta}")
    # self-normalization is shift-invariant in the log-weights, so center
    # them at their maximum to keep extreme tilts finite
    logw = -(samples @ _weights_of(a)) / beta
    wt = np.exp(logw - logw.max())
    values = np.asarray(f(samples) if callable(f) else f, dtype=float)
    if values.shape[0] != samples.shape[0]:
        raise DimensionMismatch("per-draw values must align with the samples")
    wt_sum = float(wt.sum())
    ess = wt_sum * wt_sum / float((wt * wt).sum())
    if ess < 10.0:
        raise DegenerateWeights(f"effective sample size {ess:.2f} < 10")
    estimate = float((wt * values).sum() / wt_sum)
    resid = wt * (values - estimate)
    se = float(np.linalg.norm(resid) / wt_sum)
    return estimate, se


def raw_tilted_moments(
    samples: np.ndarray, a, beta: float
) -> dict[str, tuple[float, float]]:
    """MC twins of the closed-form moments: plain means with plain SEs.

    Keys ``z0``, ``s1`` map to (estimate, se); ``xi`` maps to a list of
    per-bank pairs.
    """
    w = _weights_of(a)
    wt = tilt_weights(samples, w, beta)
    s = samples @ w
    out: dict[str, object] = {
        "z0": mean_and_se(wt),
        "s1": mean_and_se(s * wt),
        "xi": [mean_and_se(samples[:, i] * wt) for i in range(samples.shape[1])],
    }
    return out


def budget_check(
    market: GaussianMarket,
    strategy,
    samples: np.ndarray,
    d_offset: float = 0.0,
) -> tuple[float, float]:
    """MC estimate of the expected aggregated utility at the optimal allocation.

    For the closed-form optimum the estimate must match the budget ``B``
    (statistically); ``d_offset`` shifts every group constant and serves as a
    negative control, moving the estimate off ``B`` by a detectable factor.
    """
    x = np.asarray(samples, dtype=float)
    alpha = market.alpha
    total = np.zeros(x.shape[0])
    if isinstance(strategy, Partition):
        beta_m, _ = betas_disjoint(market, strategy)
        for m, blk in enumerate(strategy.blocks):
            idx = list(blk)
            d = block_constant(market, blk) + d_offset
            s = x[:, idx].sum(axis=1)
            post = (s + d)[:, None] / (alpha[idx] * beta_m[m])
            total += (-np.exp(-alpha[idx] * post) / alpha[idx]).sum(axis=1)
    elif isinstance(strategy, WeightMatrix):
        beta_j, beta = betas_overlap(market, strategy)
        log_term = np.log(beta / -market.budget)
        for j in range(strategy.h):
            col = strategy.w[:, j]
            members = np.flatnonzero(col > WEIGHT_EPS)
            if members.size == 0:
                continue
            mu_s = float(col @ market.mu)
            var_s = _var_floor(float(col @ market.sigma @ col))
            d = beta_j[j] * log_term - mu_s + var_s / (2.0 * beta_j[j]) + d_offset
            s = x @ col
            post = (s + d)[:, None] / (alpha[members] * beta_j[j])
            total += (-np.exp(-alpha[members] * post) / alpha[members]).sum(axis=1)
    else:
        raise DimensionMismatch("strategy must be a Partition or a WeightMatrix")
    return mean_and_se(total)


@dataclass(frozen=True)
class TrivialNashBound:
    """Per-bank budget bounds under which full pooling survives splitting.

    ``critical_budget[i]`` is the most negative budget at which bank ``i``
    still has no profitable two-group split of the all-in-one matrix;
    ``overall`` requires every bank's condition, in which case the single
    group is a Nash profile of the overlapping game.
    """

    per_bank: np.ndarray
    overall: bool
    critical_budget: np.ndarray


def trivial_nash_B_bound(market: GaussianMarket) -> TrivialNashBound:
    """Budget condition for the single all-bank group to survive in the
    overlapping game, for independent banks with a common variance.

    For each bank the worst split is the interior optimum of a quadratic in
    the retained weight; the bank stays put iff ``log(-B)/alpha_i`` is below
    the closed-form threshold, i.e. iff ``B >= critical_budget[i]``.
    """
    n = market.n
    scale = max(float(np.max(np.abs(market.sigma))), 1.0)
    off = market.sigma - np.diag(np.diag(market.sigma))
    diag = np.diag(market.sigma)
    if float(np.max(np.abs(off))) > 1e-12 * scale:
        raise NotIID("banks must be independent (diagonal covariance)")
    if float(diag.max() - diag.min()) > 1e-12 * scale:
        raise NotIID("banks must share a common variance")
    var = float(diag[0])
    beta = market.beta_total
    per_bank = np.empty(n, dtype=bool)
    critical = np.empty(n)
    for i in range(n):
        alpha_i = float(market.alpha[i])
        b1_, b2_ = beta, 1.0 / alpha_i
        beta_split = b1_ + b2_
        curv1 = (2.0 / b1_ - 1.0 / (b1_ * b1_ * alpha_i)) * var
        curv2 = (2.0 / b2_ - 1.0 / (b2_ * b2_ * alpha_i)) * var
        t = curv2 / (curv1 + curv2)
        keep = t * t / b1_ + (1.0 - t) ** 2 / b2_
        keep2 = t * t / (b1_ * b1_) + (1.0 - t) ** 2 / (b2_ * b2_)
        rhs = (
            np.log(beta_split * beta_split / beta) / alpha_i
            - (1.0 / b1_ - keep) * var
            - (keep2 - 1.0 / (b1_ * b1_)) * var / (2.0 * alpha_i)
        )
        critical[i] = -np.exp(alpha_i * rhs)
        per_bank[i] = np.log(-market.budget) / alpha_i <= rhs
    return TrivialNashBound(
        per_bank=per_bank, overall=bool(per_bank.all()), critical_budget=critical
    )
