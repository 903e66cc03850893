"""Fair risk allocation on a disjoint partition of the banks.

Each block ``I`` of the partition pools its members' risk factors into
``S = sum_{k in I} X_k`` and carries a deterministic total ``d_I`` (the
block's share of the systemic risk).  The per-bank allocation is the mean of
the bank's optimal random allocation under the block's exponentially tilted
measure; for Gaussian markets both quantities are closed-form:

    d_I   = beta_I * log(beta / -B) - mean(S) + var(S) / (2 beta_I)
    rho_k = -mu_k + log(beta / -B) / alpha_k
            + (a_I @ sigma)_k / beta_I - var(S) / (2 beta_I^2 alpha_k)

with ``beta_I = sum_{k in I} 1 / alpha_k`` the block's risk tolerance and
``beta = sum_n 1 / alpha_n`` the system tolerance.  ``beta`` is deliberately
partition-independent, which makes equilibrium comparisons independent of the
budget and the means.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DimensionMismatch, SingleBlock
from .market import GaussianMarket, GroupVector, _frozen, _var_floor, group_stats


@dataclass(frozen=True)
class Partition:
    """Disjoint, nonempty blocks covering ``{0, ..., n-1}``, in canonical form.

    Canonical form sorts members inside each block and orders blocks by their
    smallest member, so equivalent strategy profiles compare equal.
    """

    blocks: tuple[tuple[int, ...], ...]
    n: int

    @classmethod
    def from_blocks(cls, blocks, n: int | None = None) -> "Partition":
        cleaned = [tuple(sorted(int(i) for i in b)) for b in blocks if len(b) > 0]
        if not cleaned:
            raise DimensionMismatch("partition needs at least one nonempty block")
        flat = [i for b in cleaned for i in b]
        if n is None:
            n = max(flat) + 1
        if sorted(flat) != list(range(n)):
            raise DimensionMismatch(
                f"blocks must cover 0..{n - 1} exactly once, got {sorted(flat)}"
            )
        cleaned.sort(key=lambda b: b[0])
        return cls(blocks=tuple(cleaned), n=n)

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls.from_blocks([(i,) for i in range(n)], n)

    @classmethod
    def single_block(cls, n: int) -> "Partition":
        return cls.from_blocks([tuple(range(n))], n)

    @property
    def h(self) -> int:
        return len(self.blocks)

    def block_index_of(self, bank: int) -> int:
        for m, b in enumerate(self.blocks):
            if bank in b:
                return m
        raise DimensionMismatch(f"bank {bank} not covered by partition")

    def group_vectors(self) -> list[GroupVector]:
        return [GroupVector.from_members(self.n, b) for b in self.blocks]

    def __str__(self) -> str:
        return "|".join(",".join(str(i + 1) for i in b) for b in self.blocks)


@dataclass(frozen=True)
class AllocationReport:
    """Per-bank allocations, per-block constants, and their common total."""

    rho: np.ndarray
    d: np.ndarray
    total: float
    beta_groups: np.ndarray
    beta: float

    def to_dict(self) -> dict:
        return {
            "rho": self.rho.tolist(),
            "d": self.d.tolist(),
            "total": self.total,
            "beta_groups": self.beta_groups.tolist(),
            "beta": self.beta,
        }


def betas_disjoint(market: GaussianMarket, partition: Partition) -> tuple[np.ndarray, float]:
    """Block risk tolerances ``beta_m`` and the (partition-independent) total."""
    inv = 1.0 / market.alpha
    beta_m = np.array([float(inv[list(b)].sum()) for b in partition.blocks])
    return beta_m, market.beta_total


def block_constant(market: GaussianMarket, members) -> float:
    """Deterministic total ``d`` carried by the block with the given members."""
    members = list(members)
    beta_blk = float(np.sum(1.0 / market.alpha[members]))
    a = GroupVector.from_members(market.n, members)
    mu_s, var_s = group_stats(market, a)
    log_term = np.log(market.beta_total / -market.budget)
    return float(beta_blk * log_term - mu_s + var_s / (2.0 * beta_blk))


def group_constant(market: GaussianMarket, partition: Partition, m: int) -> float:
    """Group constant ``d_m`` of block ``m`` of the partition."""
    return block_constant(market, partition.blocks[m])


def block_allocation(market: GaussianMarket, members, bank: int) -> float:
    """Allocation of ``bank`` when its block has exactly the given members.

    This is the primitive behind deviation checks: a bank's allocation depends
    on the partition only through its own block (the system tolerance ``beta``
    counts every bank regardless of grouping).
    """
    members = list(members)
    if bank not in members:
        raise DimensionMismatch(f"bank {bank} not in block {members}")
    beta_blk = float(np.sum(1.0 / market.alpha[members]))
    a = GroupVector.from_members(market.n, members).weights
    var_s = _var_floor(float(a @ market.sigma @ a))
    cov_k = float(a @ market.sigma[:, bank])
    log_term = np.log(market.beta_total / -market.budget)
    return float(
        -market.mu[bank]
        + log_term / market.alpha[bank]
        + cov_k / beta_blk
        - var_s / (2.0 * beta_blk * beta_blk * market.alpha[bank])
    )


def allocation_disjoint(market: GaussianMarket, partition: Partition) -> AllocationReport:
    """Closed-form allocation report for a market and partition."""
    beta_m, beta = betas_disjoint(market, partition)
    rho = np.empty(market.n)
    d = np.empty(partition.h)
    for m, blk in enumerate(partition.blocks):
        d[m] = block_constant(market, blk)
        for bank in blk:
            rho[bank] = block_allocation(market, blk, bank)
    return AllocationReport(
        rho=_frozen(rho),
        d=_frozen(d),
        total=float(d.sum()),
        beta_groups=_frozen(beta_m),
        beta=beta,
    )


def sample_optimal_Y(market: GaussianMarket, partition: Partition, x_sample) -> np.ndarray:
    """Optimal random allocations ``Y_i = -x_i + (S_m + d_m) / (alpha_i beta_m)``.

    ``x_sample`` may be a single draw of shape ``(n,)`` or a matrix of draws
    of shape ``(count, n)``; the result has the same shape.  Within each block
    the allocations sum to ``d_m`` identically, draw by draw.
    """
    x = np.asarray(x_sample, dtype=float)
    squeeze = x.ndim == 1
    x2 = np.atleast_2d(x)
    if x2.shape[1] != market.n:
        raise DimensionMismatch("draws must have one column per bank")
    y = np.empty_like(x2)
    beta_m, _ = betas_disjoint(market, partition)
    for m, blk in enumerate(partition.blocks):
        idx = list(blk)
        d = block_constant(market, blk)
        s = x2[:, idx].sum(axis=1)
        y[:, idx] = -x2[:, idx] + (s + d)[:, None] / (market.alpha[idx] * beta_m[m])
    return y[0] if squeeze else y


def variance_share(market: GaussianMarket, partition: Partition, k: int) -> float:
    """Grouping-dependent coefficient of the common variance in bank ``k``'s risk.

    For exchangeable markets (common variance ``s2``, zero means) the
    allocation is ``const(k) + s2 * variance_share``, so comparisons across
    partitions for a fixed bank reduce to comparing this quantity.  Within a
    block it is increasing in ``alpha_k``; for a singleton it equals
    ``alpha_k / 2``.
    """
    m = partition.block_index_of(k)
    blk = partition.blocks[m]
    beta_blk = float(np.sum(1.0 / market.alpha[list(blk)]))
    size = len(blk)
    return float((1.0 - size / (2.0 * market.alpha[k] * beta_blk)) / beta_blk)


class ScreenVerdict(Enum):
    NOT_NASH_STRICT = "not_nash_strict"
    INCONCLUSIVE = "inconclusive"


def not_nash_screen(market: GaussianMarket, partition: Partition) -> ScreenVerdict:
    """Quick sufficient test that a multi-block partition is not an equilibrium.

    Valid for exchangeable markets (identical variances, arbitrary alphas):
    take each block's head (largest risk aversion) and, among heads, the one
    with the largest :func:`variance_share`.  If that top head's aversion is
    strictly below ``(1 + 1/|I|) * alpha_head`` for some other block ``I``,
    moving it into that block strictly lowers its variance share, so the
    partition cannot be Nash.  The test is one-directional: INCONCLUSIVE says
    nothing either way.
    """
    if partition.h < 2:
        raise SingleBlock("screen needs at least two blocks")
    heads = []
    for m, blk in enumerate(partition.blocks):
        head = max(blk, key=lambda k: (market.alpha[k], -k))
        heads.append((m, head, variance_share(market, partition, head)))
    top_m, top_head, _ = max(heads, key=lambda t: (t[2], -t[1]))
    for m, head, _ in heads:
        if m == top_m:
            continue
        size = len(partition.blocks[m])
        if market.alpha[top_head] / market.alpha[head] < 1.0 + 1.0 / size:
            return ScreenVerdict.NOT_NASH_STRICT
    return ScreenVerdict.INCONCLUSIVE
