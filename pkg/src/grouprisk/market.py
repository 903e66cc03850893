"""Market data model, validation, and exact Gaussian tilted-moment identities.

A :class:`GaussianMarket` bundles the joint Gaussian law of the banks' risk
factors (mean vector ``mu``, covariance ``sigma``) with the banks'
exponential-utility risk aversions ``alpha`` and the system-wide
expected-utility budget ``budget`` (< 0).  Group-level sums are described by
a weight vector ``a`` with entries in [0, 1]; the group sum ``S = a @ X`` is
Gaussian, and all expectations of the form ``E[g(X) exp(-S / beta)]`` used by
the allocation formulas have closed forms collected in
:func:`tilted_moments`.

Every function here is pure and operates on immutable inputs, so concurrent
use is safe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    NonNegativeBudget,
    NonPositiveAlpha,
    NonPositiveBeta,
    NotPSD,
)

#: Weights at or below this threshold are treated as exact zeros (non-members).
WEIGHT_EPS = 1e-9

#: Relative tolerance for the symmetry check on covariance matrices.
SYMMETRY_RTOL = 1e-12

#: Eigenvalues above ``-EIG_RTOL * max_eigenvalue`` are clipped to zero;
#: anything lower is rejected as not positive semi-definite.
EIG_RTOL = 1e-10


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class GaussianMarket:
    """Validated market data: ``X ~ N(mu, sigma)``, ``alpha > 0``, ``budget < 0``.

    Construct through :func:`validate_market` (or ``from_arrays``), which
    symmetrizes the covariance and clips slightly negative eigenvalues.
    """

    mu: np.ndarray
    sigma: np.ndarray
    alpha: np.ndarray
    budget: float

    @property
    def n(self) -> int:
        return self.mu.shape[0]

    @property
    def beta_total(self) -> float:
        """System risk tolerance when every bank is counted once."""
        return float(np.sum(1.0 / self.alpha))

    @classmethod
    def from_arrays(cls, mu, sigma, alpha, budget, *, psd_check: bool = True) -> "GaussianMarket":
        return validate_market(mu, sigma, alpha, budget, psd_check=psd_check)


def validate_market(mu, sigma, alpha, budget, *, psd_check: bool = True) -> GaussianMarket:
    """Validate raw market data and return an immutable :class:`GaussianMarket`.

    The covariance is symmetrized as ``(sigma + sigma.T) / 2``; eigenvalues in
    ``[-EIG_RTOL * lambda_max, 0)`` are clipped to zero (real correlation
    estimates are routinely near-singular).  ``psd_check=False`` skips the
    eigenvalue gate entirely, which is occasionally useful for formula-level
    studies with formally indefinite matrices; such markets cannot be sampled.

    Raises: DimensionMismatch, NotPSD, NonPositiveAlpha, NonNegativeBudget.
    """
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    sigma = np.asarray(sigma, dtype=float)
    n = mu.shape[0]
    if mu.ndim != 1 or alpha.ndim != 1:
        raise DimensionMismatch("mu and alpha must be one-dimensional")
    if alpha.shape[0] != n:
        raise DimensionMismatch(f"alpha has length {alpha.shape[0]}, expected {n}")
    if sigma.shape != (n, n):
        raise DimensionMismatch(f"sigma has shape {sigma.shape}, expected {(n, n)}")

    scale = max(float(np.max(np.abs(sigma))), 1.0) if sigma.size else 1.0
    if float(np.max(np.abs(sigma - sigma.T))) > SYMMETRY_RTOL * scale:
        raise DimensionMismatch("sigma is not symmetric within tolerance")
    sigma = 0.5 * (sigma + sigma.T)

    if psd_check:
        eigval, eigvec = np.linalg.eigh(sigma)
        lam_max = max(float(eigval[-1]), 0.0)
        floor = -EIG_RTOL * lam_max
        if float(eigval[0]) < floor:
            raise NotPSD(
                f"covariance eigenvalue {eigval[0]:.6g} below tolerance {floor:.6g}"
            )
        if float(eigval[0]) < 0.0:
            clipped = np.clip(eigval, 0.0, None)
            sigma = (eigvec * clipped) @ eigvec.T
            sigma = 0.5 * (sigma + sigma.T)

    if np.any(alpha <= 0.0):
        raise NonPositiveAlpha("all risk aversions must be strictly positive")
    budget = float(budget)
    if not budget < 0.0:
        raise NonNegativeBudget(f"budget must be strictly negative, got {budget}")

    return GaussianMarket(_frozen(mu), _frozen(sigma), _frozen(alpha), budget)


@dataclass(frozen=True)
class GroupVector:
    """Risk-splitting weights of one group: entries in [0, 1], zeros = non-members."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if w.ndim != 1:
            raise DimensionMismatch("group vector must be one-dimensional")
        if np.any(w < -WEIGHT_EPS) or np.any(w > 1.0 + WEIGHT_EPS):
            raise DimensionMismatch("group vector entries must lie in [0, 1]")
        w = np.clip(w, 0.0, 1.0)
        w[w <= WEIGHT_EPS] = 0.0
        object.__setattr__(self, "weights", _frozen(w))

    @property
    def members(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0.0)

    @classmethod
    def from_members(cls, n: int, members) -> "GroupVector":
        w = np.zeros(n)
        w[list(members)] = 1.0
        return cls(w)


def _weights_of(a) -> np.ndarray:
    if isinstance(a, GroupVector):
        return a.weights
    return np.atleast_1d(np.asarray(a, dtype=float))


def _var_floor(v: float) -> float:
    """Zero out rounding dust in quadratic forms without masking real negatives.

    Clipped covariances can produce variances like ``-1e-17``; genuinely
    negative values (possible only for unchecked, indefinite matrices) pass
    through so formula-level evaluation stays faithful.
    """
    return 0.0 if -1e-9 < v < 0.0 else v


def group_stats(market: GaussianMarket, a) -> tuple[float, float]:
    """Mean and variance of the group sum ``S = a @ X``.

    Returns ``(a @ mu, a @ sigma @ a)``; the variance is floored at zero to
    absorb rounding on clipped covariances.
    """
    w = _weights_of(a)
    if w.shape[0] != market.n:
        raise DimensionMismatch("group vector length does not match market size")
    mu_s = float(w @ market.mu)
    var_s = _var_floor(float(w @ market.sigma @ w))
    return mu_s, var_s


@dataclass(frozen=True)
class TiltedMoments:
    """Closed-form moments of ``X`` against the factor ``exp(-S / beta)``.

    With ``S = a @ X ~ N(mu_s, var_s)``:

    * ``z0 = E[exp(-S/beta)] = exp(-mu_s/beta + var_s/(2 beta^2))``
    * ``xi[i] = E[X_i exp(-S/beta)] = (mu_i - (a @ sigma)_i / beta) * z0``
    * ``s1 = E[S exp(-S/beta)] = (mu_s - var_s/beta) * z0``

    so ``s1 == a @ xi`` by linearity.  Dividing by ``z0`` turns these into
    moments under the exponentially tilted measure, which for Gaussians is a
    pure mean shift: covariances are unchanged.
    """

    z0: float
    xi: np.ndarray
    s1: float
    mu_s: float
    var_s: float


def tilted_moments(market: GaussianMarket, a, beta: float) -> TiltedMoments:
    """Exact moments of the Gaussian market against ``exp(-(a @ X) / beta)``."""
    if not beta > 0.0:
        raise NonPositiveBeta(f"beta must be strictly positive, got {beta}")
    w = _weights_of(a)
    mu_s, var_s = group_stats(market, w)
    z0 = float(np.exp(-mu_s / beta + var_s / (2.0 * beta * beta)))
    a_sigma = w @ market.sigma
    xi = (market.mu - a_sigma / beta) * z0
    s1 = (mu_s - var_s / beta) * z0
    return TiltedMoments(z0=z0, xi=_frozen(xi), s1=float(s1), mu_s=mu_s, var_s=var_s)
