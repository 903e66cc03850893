"""Embedded benchmark scenarios with their published reference outputs.

Each fixture bundles the exact inputs of one published scenario (block
correlation threshold claims, the four numerical equilibrium studies) with
the outputs printed in the source material, and a ``reproduce`` runner that
recomputes everything and reports per-assertion pass/fail.

Two caveats, verified at length and recorded in the project notes:

* The 4.2 and 4.3 scenarios print formally indefinite covariance matrices
  (most negative eigenvalues -8.48 and -0.77).  All allocation formulas are
  algebraic in the covariance, so the fixtures construct these markets with
  the positive-semidefinite gate disabled; they cannot be sampled.
* The printed 4.3 interior rows and the whole printed 4.4 matrix are not
  best-response fixed points of their own printed inputs (improvements of
  3e-4 and 4e-3 remain available; the exact equilibria sit 0.02 and 0.1
  away).  The corresponding checks compare against the printed values
  regardless and fail honestly.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .disjoint import Partition
from .equilibrium import (
    brute_force_nash_disjoint,
    fictitious_play_overlap,
    is_nash_disjoint,
    is_nash_overlap,
)
from .errors import NotConverged, UnknownExample
from .market import GaussianMarket, validate_market
from .overlap import WeightMatrix

# ---------------------------------------------------------------------------
# Markets.
# ---------------------------------------------------------------------------


def claim_n4_market(rho: float, sigma: float = 1.0, budget: float = -1.0) -> GaussianMarket:
    """Four banks, unit aversions, two uncorrelated pairs with inner correlation rho."""
    corr = np.array(
        [[1, rho, 0, 0], [rho, 1, 0, 0], [0, 0, 1, rho], [0, 0, rho, 1]], dtype=float
    )
    return validate_market(
        np.zeros(4), sigma * sigma * corr, np.ones(4), budget, psd_check=False
    )


def claim_n5_market(rho: float, sigma: float = 1.0, budget: float = -1.0) -> GaussianMarket:
    """Five banks: a correlated pair and a correlated triple, blocks independent."""
    corr = np.eye(5)
    corr[0, 1] = corr[1, 0] = rho
    for a in (2, 3, 4):
        for b in (2, 3, 4):
            if a != b:
                corr[a, b] = rho
    return validate_market(
        np.zeros(5), sigma * sigma * corr, np.ones(5), budget, psd_check=False
    )


def iid_uniform_market(
    n: int, rho: float, sigma: float = 1.0, alpha: float = 1.0, budget: float = -1.0
) -> GaussianMarket:
    """Exchangeable market: common variance and one correlation for all pairs."""
    corr = np.full((n, n), rho)
    np.fill_diagonal(corr, 1.0)
    return validate_market(
        np.zeros(n), sigma * sigma * corr, np.full(n, alpha), budget, psd_check=False
    )


def example_41_market(sigma: float = 1.0, budget: float = -1.0) -> GaussianMarket:
    """Four banks, nearly-block correlations 0.4 / 0.05, unit aversions.

    The published scenario leaves sigma and the budget open; grouping
    comparisons in the disjoint game are invariant to both, so the fixture
    pins sigma = 1 and budget = -1.
    """
    corr = np.array(
        [
            [1.0, 0.4, 0.0, 0.0],
            [0.4, 1.0, 0.05, 0.0],
            [0.0, 0.05, 1.0, 0.4],
            [0.0, 0.0, 0.4, 1.0],
        ]
    )
    return validate_market(np.full(4, 10.0), sigma * sigma * corr, np.ones(4), budget)


def example_42_market() -> GaussianMarket:
    """Ten banks, uniform 0.8 correlation except one -0.3 pair (banks 1 and 9)."""
    sd = np.array([4.0, 2.8, 1.6, 1.0, 3.8, 2.8, 0.9, 1.1, 4.2, 1.8])
    corr = np.full((10, 10), 0.8)
    np.fill_diagonal(corr, 1.0)
    corr[0, 8] = corr[8, 0] = -0.3
    mu = np.array([1.0, 1, 1, 2, 2, 3, 6, 6, 6, 7])
    alpha = np.array([0.4, 1.2, 1.8, 2.2, 0.4, 0.9, 2.8, 2.2, 0.4, 1.9])
    return validate_market(mu, np.outer(sd, sd) * corr, alpha, -8.0, psd_check=False)


EXAMPLE_42_W0 = np.tile([0.3, 0.7], (10, 1))

EXAMPLE_42_EQUILIBRIUM = np.array(
    [
        [1.00, 0.00],
        [0.51, 0.49],
        [0.48, 0.52],
        [0.44, 0.56],
        [0.00, 1.00],
        [0.49, 0.51],
        [0.44, 0.56],
        [0.45, 0.55],
        [1.00, 0.00],
        [0.49, 0.51],
    ]
)


def example_43_market() -> GaussianMarket:
    """Ten banks: two central ones (4, 5) and two peripheries, block correlations."""
    corr = np.eye(10)
    periph_a, core_a, core_b, periph_b = [0, 1, 2], 3, 4, [5, 6, 7, 8, 9]
    for a in periph_a:
        for b in periph_a:
            if a != b:
                corr[a, b] = -0.25
    for a in periph_b:
        for b in periph_b:
            if a != b:
                corr[a, b] = -0.25
    for a in periph_a:
        corr[a, core_a] = corr[core_a, a] = -0.12
        corr[a, core_b] = corr[core_b, a] = -0.09
        for b in periph_b:
            corr[a, b] = corr[b, a] = 0.05
    for b in periph_b:
        corr[core_a, b] = corr[b, core_a] = -0.09
        corr[core_b, b] = corr[b, core_b] = -0.12
    corr[core_a, core_b] = corr[core_b, core_a] = 0.7
    sd = np.array([4.0, 2.8, 2.2, 1.7, 1.4, 3.2, 3.8, 1.9, 4.2, 2.5])
    mu = np.array([1.0, 1, 2, 2, 3, 4, 5, 5, 6, 7])
    alpha = np.array([0.4, 1.0, 1.1, 2.2, 2.8, 0.9, 0.8, 1.4, 0.6, 1.3])
    return validate_market(mu, np.outer(sd, sd) * corr, alpha, -8.0, psd_check=False)


EXAMPLE_43_EQUILIBRIUM = np.array(
    [[1, 0], [1, 0], [1, 0], [0.46, 0.54], [0.32, 0.68], [0, 1], [0, 1], [0, 1], [0, 1], [0, 1]],
    dtype=float,
)

#: Seed for the uniform-random initial weights of the 4.3 run.
EXAMPLE_43_SEED = 1


def example_44_market() -> GaussianMarket:
    """Six clearing members, correlations and volatilities estimated from stock prices."""
    corr = np.array(
        [
            [1.00, 0.82, 0.61, 0.87, -0.27, 0.86],
            [0.82, 1.00, 0.86, 0.83, 0.04, 0.79],
            [0.61, 0.86, 1.00, 0.65, 0.25, 0.60],
            [0.87, 0.83, 0.65, 1.00, -0.35, 0.89],
            [-0.27, 0.04, 0.25, -0.35, 1.00, -0.24],
            [0.86, 0.79, 0.60, 0.89, -0.24, 1.00],
        ]
    )
    sd = np.array([0.262, 0.245, 0.235, 0.264, 0.236, 0.233])
    alpha = np.array([2.0, 1.8, 1.7, 1.9, 1.2, 0.85])
    return validate_market(np.zeros(6), np.outer(sd, sd) * corr, alpha, -8.0)


EXAMPLE_44_EQUILIBRIUM = np.array(
    [[0.73, 0.27], [0.61, 0.39], [0.56, 0.44], [0.54, 0.46], [1.0, 0.0], [0.0, 1.0]]
)

EXAMPLE_44_SEED = 0


# ---------------------------------------------------------------------------
# Reproduction runners.
# ---------------------------------------------------------------------------


def _check(checks: list, label: str, passed: bool, detail: str) -> None:
    checks.append({"check": label, "passed": bool(passed), "detail": detail})


def _match_up_to_columns(term: WeightMatrix, target: np.ndarray, tol: float) -> float:
    """Entrywise deviation from the target after canonical column ordering."""
    cand = term.canonical().w
    ref = WeightMatrix(target).canonical().w
    return float(np.max(np.abs(cand - ref)))


def _reproduce_25a() -> list[dict]:
    checks: list[dict] = []
    th_low, th_high = -3.0 / 13.0, 3.0 / 8.0
    pair = Partition.from_blocks([(0, 1), (2, 3)], 4)
    cross = Partition.from_blocks([(0, 2), (1, 3)], 4)
    for rho, part, expect, label in [
        (th_low - 1e-4, pair, True, "1,2|3,4 Nash just below -3/13"),
        (th_low + 1e-4, pair, False, "1,2|3,4 not Nash just above -3/13"),
        (th_high - 1e-4, cross, False, "1,3|2,4 not Nash just below 3/8"),
        (th_high + 1e-4, cross, True, "1,3|2,4 Nash just above 3/8"),
    ]:
        got = is_nash_disjoint(claim_n4_market(rho), part)
        _check(checks, label, got == expect, f"rho={rho:.6f} is_nash={got} expected={expect}")
    return checks


def _reproduce_25b() -> list[dict]:
    checks: list[dict] = []
    split = Partition.from_blocks([(0, 1), (2, 3, 4)], 5)
    bad = Partition.from_blocks([(0, 1, 2), (3, 4)], 5)
    got = is_nash_disjoint(claim_n5_market(-0.3), split)
    _check(checks, "1,2|3,4,5 Nash at rho=-0.3", got, f"is_nash={got}")
    got = is_nash_disjoint(claim_n5_market(-0.28), split)
    _check(checks, "1,2|3,4,5 not Nash at rho=-0.28", not got, f"is_nash={got}")
    for rho in (-0.9, -0.5, 0.0, 0.5, 0.9):
        got = is_nash_disjoint(claim_n5_market(rho), bad)
        _check(checks, f"1,2,3|4,5 never Nash (rho={rho})", not got, f"is_nash={got}")
    return checks


def _reproduce_25c() -> list[dict]:
    checks: list[dict] = []
    for rho in (-0.3, 0.0, 0.5):
        nash = brute_force_nash_disjoint(iid_uniform_market(4, rho))
        only_trivial = [str(p) for p in nash] == ["1,2,3,4"]
        _check(
            checks,
            f"exchangeable rho={rho}: full pooling is the only equilibrium",
            only_trivial,
            f"equilibria={[str(p) for p in nash]}",
        )
    return checks


def _reproduce_41() -> list[dict]:
    checks: list[dict] = []
    nash = brute_force_nash_disjoint(example_41_market())
    got = [str(p) for p in nash]
    expect = ["1,2,3,4", "1,3|2,4"]
    _check(checks, "equilibrium set is {full pooling, 1,3|2,4}", got == expect, f"got={got}")
    return checks


def _run_overlap(market, w0, seed) -> tuple[WeightMatrix | None, bool, int]:
    try:
        res = fictitious_play_overlap(market, 2, w0, seed)
        return res.terminal, res.converged, res.iterations
    except NotConverged as exc:
        return exc.result.terminal, False, exc.result.iterations


def _reproduce_42(seed: int = 0) -> list[dict]:
    checks: list[dict] = []
    market = example_42_market()
    term, converged, iters = _run_overlap(market, WeightMatrix(EXAMPLE_42_W0), seed)
    _check(checks, "dynamics converged", converged, f"iterations={iters} seed={seed}")
    dev = _match_up_to_columns(term, EXAMPLE_42_EQUILIBRIUM, 0.01)
    _check(
        checks,
        "terminal matches published 10x2 matrix within 0.01",
        dev <= 0.01,
        f"max entry deviation {dev:.4f}",
    )
    ok = is_nash_overlap(market, WeightMatrix(EXAMPLE_42_EQUILIBRIUM), weight_tol=0.01)
    _check(checks, "published matrix verifies as stable (weight_tol=0.01)", ok, f"is_nash={ok}")
    return checks


def _reproduce_43(seed: int = EXAMPLE_43_SEED) -> list[dict]:
    checks: list[dict] = []
    market = example_43_market()
    term, converged, iters = _run_overlap(market, "random", seed)
    _check(checks, "dynamics converged", converged, f"iterations={iters} seed={seed}")
    w = term.canonical().w
    ref = WeightMatrix(EXAMPLE_43_EQUILIBRIUM).canonical().w
    corner = float(np.max(np.abs(w[[0, 1, 2, 5, 6, 7, 8, 9]] - ref[[0, 1, 2, 5, 6, 7, 8, 9]])))
    _check(
        checks,
        "peripheral rows at the published corners",
        corner <= 0.01,
        f"max corner deviation {corner:.4f}",
    )
    interior = float(np.max(np.abs(w[[3, 4]] - ref[[3, 4]])))
    _check(
        checks,
        "central rows match published (0.46,0.54)/(0.32,0.68) within 0.01",
        interior <= 0.01,
        f"max interior deviation {interior:.4f} "
        f"(exact equilibrium of the printed inputs sits at {w[3,0]:.4f}/{w[4,0]:.4f})",
    )
    return checks


def _reproduce_44(seed: int = EXAMPLE_44_SEED) -> list[dict]:
    checks: list[dict] = []
    market = example_44_market()
    term, converged, iters = _run_overlap(market, "random", seed)
    _check(checks, "dynamics converged", converged, f"iterations={iters} seed={seed}")
    dev = _match_up_to_columns(term, EXAMPLE_44_EQUILIBRIUM, 0.01)
    _check(
        checks,
        "terminal matches published 6x2 matrix within 0.01",
        dev <= 0.01,
        f"max entry deviation {dev:.4f} (published inputs are rounded; "
        "their exact equilibria differ, see project notes)",
    )
    ok = is_nash_overlap(market, WeightMatrix(EXAMPLE_44_EQUILIBRIUM), weight_tol=0.01)
    _check(checks, "published matrix verifies as stable (weight_tol=0.01)", ok, f"is_nash={ok}")
    return checks


_RUNNERS: dict[str, Callable[[], list[dict]]] = {
    "2.5a": _reproduce_25a,
    "2.5b": _reproduce_25b,
    "2.5c": _reproduce_25c,
    "4.1": _reproduce_41,
    "4.2": _reproduce_42,
    "4.3": _reproduce_43,
    "4.4": _reproduce_44,
}

EXAMPLES = tuple(sorted(_RUNNERS))


def reproduce(name: str) -> dict:
    """Re-run one embedded scenario; returns a machine-readable check report."""
    runner = _RUNNERS.get(name)
    if runner is None:
        raise UnknownExample(f"no fixture named {name!r}; known: {list(EXAMPLES)}")
    checks = runner()
    return {
        "example": name,
        "passed": all(c["passed"] for c in checks),
        "checks": checks,
    }
