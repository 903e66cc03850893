"""Nash verification and equilibrium search for both game modes.

Disjoint game: each bank chooses one bucket; profiles are partitions up to
relabeling, handled by the canonical form.  A partition is Nash when no bank
can strictly lower its allocation by joining another block or going alone.
Because a bank's allocation depends on the partition only through its own
block, deviation checks memoize on (bank, block) pairs, which makes the
exhaustive search over all set partitions cheap for small systems.

Overlapping game: profiles are row-stochastic weight matrices; a profile is
Nash when every row is a best response.  Verification at ``h == 2`` trusts
the closed-form best response but always cross-checks against a dense grid
of candidate rows evaluated through the generic deviation evaluator.

Both dynamics follow randomized best response: start from the finest
strategy (singletons / the supplied initial weights), repeatedly pick a bank
uniformly at random and replace its strategy by a best response, and stop
once a full window of ``n`` consecutive picks produces no accepted change
and the terminal profile passes the corresponding Nash check.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import inf
from typing import Iterator, Union

import numpy as np

from .bestresponse import TIE_EPS, best_response_two_groups
from .disjoint import Partition, block_allocation
from .errors import DimensionMismatch, NotConverged, TooLarge
from .market import GaussianMarket
from .overlap import WeightMatrix, row_risk, split_risk_profile

#: Strict-improvement threshold for the disjoint game.
DISJOINT_TOL = 1e-12

#: Strict-improvement threshold for the overlapping game.
OVERLAP_TOL = 1e-9

#: Default picks budget for the best-response dynamics.
MAX_ITER = 10_000

#: Largest system for exhaustive partition enumeration (Bell(10) = 115975).
BRUTE_FORCE_LIMIT = 10


@dataclass(frozen=True)
class Move:
    """One accepted change of a single bank's strategy."""

    step: int
    bank: int
    old: object
    new: object
    delta: float

    def to_dict(self) -> dict:
        def enc(x):
            if isinstance(x, tuple):
                return [int(v) + 1 for v in x]
            if isinstance(x, np.ndarray):
                return x.tolist()
            return x

        return {
            "step": self.step,
            "bank": self.bank + 1,
            "old": enc(self.old),
            "new": enc(self.new),
            "delta": self.delta,
        }


@dataclass(frozen=True)
class EquilibriumResult:
    """Terminal profile of the dynamics plus its audit trail."""

    mode: str
    terminal: Union[Partition, WeightMatrix]
    trajectory: tuple[Move, ...]
    converged: bool
    iterations: int
    seed: int

    def to_dict(self) -> dict:
        if isinstance(self.terminal, Partition):
            terminal = [[i + 1 for i in b] for b in self.terminal.blocks]
        else:
            terminal = self.terminal.w.tolist()
        return {
            "mode": self.mode,
            "terminal": terminal,
            "converged": self.converged,
            "iterations": self.iterations,
            "seed": self.seed,
            "trajectory": [m.to_dict() for m in self.trajectory],
        }


class _DeviationCache:
    """Memoized per-(bank, block) allocations for one market."""

    def __init__(self, market: GaussianMarket):
        self.market = market
        self._cache: dict[tuple[int, frozenset[int]], float] = {}

    def alloc(self, bank: int, members) -> float:
        key = (bank, frozenset(members))
        val = self._cache.get(key)
        if val is None:
            val = block_allocation(self.market, sorted(key[1]), bank)
            self._cache[key] = val
        return val


def is_nash_disjoint(
    market: GaussianMarket,
    partition: Partition,
    tol: float = DISJOINT_TOL,
    _cache: _DeviationCache | None = None,
) -> bool:
    """True iff no bank can improve beyond ``tol`` by moving to another bucket.

    Deviations considered for each bank: joining each other block, or opening
    a fresh singleton.  Equivalent relabelings are identical by canonical
    form, so they never count as deviations.
    """
    cache = _cache or _DeviationCache(market)
    for bank in range(market.n):
        m = partition.block_index_of(bank)
        home = partition.blocks[m]
        current = cache.alloc(bank, home)
        for other_idx, blk in enumerate(partition.blocks):
            if other_idx == m:
                continue
            if cache.alloc(bank, blk + (bank,)) < current - tol:
                return False
        if len(home) > 1 and cache.alloc(bank, (bank,)) < current - tol:
            return False
    return True


def iter_partitions(n: int) -> Iterator[tuple[tuple[int, ...], ...]]:
    """All set partitions of ``{0..n-1}`` in canonical order."""

    def rec(i: int, blocks: list[list[int]]):
        if i == n:
            yield tuple(tuple(b) for b in blocks)
            return
        for b in blocks:
            b.append(i)
            yield from rec(i + 1, blocks)
            b.pop()
        blocks.append([i])
        yield from rec(i + 1, blocks)
        blocks.pop()

    yield from rec(0, [])


def brute_force_nash_disjoint(market: GaussianMarket) -> list[Partition]:
    """All Nash partitions by exhaustive enumeration (``n <= 10``)."""
    if market.n > BRUTE_FORCE_LIMIT:
        raise TooLarge(f"refusing to enumerate partitions of {market.n} > 10 banks")
    cache = _DeviationCache(market)
    found = []
    for blocks in iter_partitions(market.n):
        p = Partition(blocks=blocks, n=market.n)
        if is_nash_disjoint(market, p, _cache=cache):
            found.append(p)
    found.sort(key=lambda p: p.blocks)
    return found


def fictitious_play_disjoint(
    market: GaussianMarket, seed: int, max_iter: int = MAX_ITER
) -> EquilibriumResult:
    """Randomized best-response dynamics over buckets, from all-singletons.

    Ties within ``DISJOINT_TOL`` keep the bank where it is; among equally
    good destination blocks the one earliest in canonical order wins.  Raises
    :class:`NotConverged` (carrying the partial result) when the pick budget
    runs out.
    """
    if max_iter < 1:
        raise DimensionMismatch("max_iter must be at least 1")
    n = market.n
    rng = np.random.default_rng(seed)
    cache = _DeviationCache(market)
    blocks: list[set[int]] = [{i} for i in range(n)]
    trajectory: list[Move] = []
    no_change = 0
    iterations = 0

    def snapshot() -> Partition:
        return Partition.from_blocks([tuple(sorted(b)) for b in blocks], n)

    while iterations < max_iter:
        iterations += 1
        bank = int(rng.integers(n))
        ordered = sorted(range(len(blocks)), key=lambda k: min(blocks[k]))
        home_pos = next(k for k in ordered if bank in blocks[k])
        home = blocks[home_pos]
        current = cache.alloc(bank, home)
        best_val, best_target = inf, None
        for k in ordered:
            if k == home_pos:
                continue
            val = cache.alloc(bank, blocks[k] | {bank})
            if val < best_val:
                best_val, best_target = val, k
        if len(home) > 1:
            val = cache.alloc(bank, {bank})
            if val < best_val:
                best_val, best_target = val, "fresh"
        if best_target is not None and best_val < current - DISJOINT_TOL:
            old = tuple(sorted(home))
            home.discard(bank)
            if best_target == "fresh":
                new_block = {bank}
                blocks.append(new_block)
            else:
                new_block = blocks[best_target]
                new_block.add(bank)
            if not home:
                blocks.remove(home)
            new = tuple(sorted(new_block))
            trajectory.append(Move(iterations, bank, old, new, best_val - current))
            no_change = 0
        else:
            no_change += 1
        if no_change >= n:
            terminal = snapshot()
            if is_nash_disjoint(market, terminal, _cache=cache):
                return EquilibriumResult(
                    mode="disjoint",
                    terminal=terminal,
                    trajectory=tuple(trajectory),
                    converged=True,
                    iterations=iterations,
                    seed=seed,
                )
            no_change = 0

    partial = EquilibriumResult(
        mode="disjoint",
        terminal=snapshot(),
        trajectory=tuple(trajectory),
        converged=False,
        iterations=iterations,
        seed=seed,
    )
    raise NotConverged(f"no stable grouping within {max_iter} picks", result=partial)


# ---------------------------------------------------------------------------
# Overlapping game.
# ---------------------------------------------------------------------------


def _simplex_rows(h: int, steps: int) -> Iterator[np.ndarray]:
    for cuts in itertools.combinations(range(steps + h - 1), h - 1):
        parts = []
        prev = -1
        for c in cuts:
            parts.append(c - prev - 1)
            prev = c
        parts.append(steps + h - 2 - prev)
        yield np.array(parts, dtype=float) / steps


def _grid_best_row(
    market: GaussianMarket, w: WeightMatrix, i: int, steps: int
) -> tuple[np.ndarray, float]:
    """Best row over the simplex grid, via the generic deviation evaluator."""
    if w.h == 2:
        grid = np.arange(1, steps) / steps
        prof = split_risk_profile(market, w, i, grid)
        rows = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
        risks = [row_risk(market, w, i, r) for r in rows]
        k = int(np.argmin(prof))
        rows.append(np.array([grid[k], 1.0 - grid[k]]))
        risks.append(float(prof[k]))
        best = int(np.argmin(risks))
        return rows[best], float(risks[best])
    best_row, best_risk = None, inf
    for row in _simplex_rows(w.h, steps):
        risk = row_risk(market, w, i, row)
        if risk < best_risk:
            best_row, best_risk = row, risk
    return best_row, float(best_risk)


def is_nash_overlap(
    market: GaussianMarket,
    w: WeightMatrix,
    grid: int = 200,
    risk_tol: float = OVERLAP_TOL,
    weight_tol: float = 0.0,
) -> bool:
    """True iff no single row can be changed to improve beyond ``risk_tol``.

    At ``h == 2`` the closed-form best response is used and cross-checked
    against a ``grid + 1``-point scan of candidate rows; larger ``h`` falls
    back to the simplex grid alone.  ``weight_tol`` ignores improving rows
    within that entrywise distance of the current row: printed matrices are
    rounded, so verifying them needs a tolerance matching their precision.
    """
    for i in range(market.n):
        current = row_risk(market, w, i, w.w[i])
        challengers: list[tuple[np.ndarray, float]] = []
        if w.h == 2:
            challengers.append(best_response_two_groups(market, w, i))
        challengers.append(_grid_best_row(market, w, i, grid))
        for row, risk in challengers:
            if risk >= current - risk_tol:
                continue
            if np.max(np.abs(row - w.w[i])) > weight_tol:
                return False
    return True


def _initial_weights(market, h, w0, rng) -> WeightMatrix:
    if isinstance(w0, WeightMatrix):
        return w0
    if isinstance(w0, str):
        if w0 == "uniform":
            return WeightMatrix.uniform(market.n, h)
        if w0 == "random":
            return WeightMatrix.random(market.n, h, rng)
        raise DimensionMismatch(f"unknown initial-weight spec {w0!r}")
    return WeightMatrix(np.asarray(w0, dtype=float))


def fictitious_play_overlap(
    market: GaussianMarket,
    h: int,
    w0,
    seed: int,
    max_iter: int = MAX_ITER,
    grid: int = 200,
) -> EquilibriumResult:
    """Randomized best-response dynamics over weight rows.

    ``w0`` may be a :class:`WeightMatrix`, a raw matrix, ``"uniform"`` or
    ``"random"`` (one draw per row from the flat simplex distribution).  A
    pick is accepted when the best-response row moves some entry by more than
    ``OVERLAP_TOL``.  The terminal matrix is column-canonicalized.
    """
    if h < 2:
        raise DimensionMismatch("overlapping dynamics need h >= 2")
    rng = np.random.default_rng(seed)
    w = _initial_weights(market, h, w0, rng)
    if w.h != h or w.n != market.n:
        raise DimensionMismatch("initial weights have the wrong shape")
    trajectory: list[Move] = []
    no_change = 0
    iterations = 0
    while iterations < max_iter:
        iterations += 1
        bank = int(rng.integers(market.n))
        if h == 2:
            row, risk = best_response_two_groups(market, w, bank)
        else:
            row, risk = _grid_best_row(market, w, bank, grid)
            current = row_risk(market, w, bank, w.w[bank])
            if current <= risk + TIE_EPS:
                row, risk = np.array(w.w[bank], copy=True), current
        if np.max(np.abs(row - w.w[bank])) > OVERLAP_TOL:
            old = np.array(w.w[bank], copy=True)
            delta = risk - row_risk(market, w, bank, old)
            w = w.with_row(bank, row)
            trajectory.append(Move(iterations, bank, old, np.array(row), delta))
            no_change = 0
        else:
            no_change += 1
        if no_change >= market.n:
            if is_nash_overlap(market, w, grid=grid):
                return EquilibriumResult(
                    mode="overlap",
                    terminal=w.canonical(),
                    trajectory=tuple(trajectory),
                    converged=True,
                    iterations=iterations,
                    seed=seed,
                )
            no_change = 0

    partial = EquilibriumResult(
        mode="overlap",
        terminal=w.canonical(),
        trajectory=tuple(trajectory),
        converged=False,
        iterations=iterations,
        seed=seed,
    )
    raise NotConverged(f"no stable weights within {max_iter} picks", result=partial)
