"""Shared builders for randomized markets and strategies (all seeded)."""

from __future__ import annotations

import numpy as np
import pytest

from grouprisk.disjoint import Partition
from grouprisk.equilibrium import iter_partitions
from grouprisk.market import GaussianMarket, validate_market
from grouprisk.overlap import WeightMatrix


def random_market(
    rng: np.random.Generator,
    n: int | None = None,
    budget: float | None = None,
    positive_means: bool = False,
) -> GaussianMarket:
    """A well-conditioned random market with n in 3..6 unless pinned."""
    if n is None:
        n = int(rng.integers(3, 7))
    a = rng.normal(size=(n, n))
    sigma = a @ a.T / n + 0.1 * np.eye(n)
    mu = rng.normal(size=n)
    if positive_means:
        mu = np.abs(mu) + 1.0
    alpha = rng.uniform(0.4, 3.0, n)
    if budget is None:
        budget = -float(rng.uniform(0.5, 4.0))
    return validate_market(mu, sigma, alpha, budget)


def random_partition(rng: np.random.Generator, n: int) -> Partition:
    labels = rng.integers(0, n, size=n)
    blocks: dict[int, list[int]] = {}
    for i, lab in enumerate(labels):
        blocks.setdefault(int(lab), []).append(i)
    return Partition.from_blocks(list(blocks.values()), n)


def random_weights(rng: np.random.Generator, n: int, h: int = 2) -> WeightMatrix:
    return WeightMatrix(rng.dirichlet(np.ones(h), size=n))


def all_partitions(n: int) -> list[Partition]:
    return [Partition(blocks=b, n=n) for b in iter_partitions(n)]


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
