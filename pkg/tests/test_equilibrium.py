"""Nash checks, exhaustive search, and best-response dynamics."""

import numpy as np
import pytest

from grouprisk.disjoint import Partition, ScreenVerdict, not_nash_screen
from grouprisk.equilibrium import (
    brute_force_nash_disjoint,
    fictitious_play_disjoint,
    fictitious_play_overlap,
    is_nash_disjoint,
    is_nash_overlap,
    iter_partitions,
)
from grouprisk.errors import NotConverged, TooLarge
from grouprisk.fixtures import (
    EXAMPLE_42_EQUILIBRIUM,
    EXAMPLE_42_W0,
    claim_n4_market,
    claim_n5_market,
    example_41_market,
    example_42_market,
    iid_uniform_market,
)
from grouprisk.market import validate_market
from grouprisk.overlap import WeightMatrix

from conftest import random_market, random_partition


BELL = {1: 1, 2: 2, 3: 5, 4: 15, 5: 52, 6: 203, 7: 877}


def test_partition_enumeration_counts():
    for n, bell in BELL.items():
        assert sum(1 for _ in iter_partitions(n)) == bell


def test_enumeration_is_canonical_and_unique():
    seen = set()
    for blocks in iter_partitions(5):
        p = Partition.from_blocks(blocks, 5)
        assert p.blocks == blocks  # already canonical
        seen.add(blocks)
    assert len(seen) == BELL[5]


class TestIsNashDisjoint:
    def test_identical_banks_pool(self):
        m = iid_uniform_market(4, 0.0)
        assert is_nash_disjoint(m, Partition.single_block(4))
        for blocks in iter_partitions(4):
            p = Partition.from_blocks(blocks, 4)
            if p.h > 1:
                assert not is_nash_disjoint(m, p)

    def test_pair_threshold_negative(self):
        p = Partition.from_blocks([(0, 1), (2, 3)], 4)
        assert is_nash_disjoint(claim_n4_market(-3 / 13 - 1e-4), p)
        assert not is_nash_disjoint(claim_n4_market(-3 / 13 + 1e-4), p)

    def test_cross_threshold_positive(self):
        p = Partition.from_blocks([(0, 2), (1, 3)], 4)
        assert not is_nash_disjoint(claim_n4_market(3 / 8 - 1e-4), p)
        assert is_nash_disjoint(claim_n4_market(3 / 8 + 1e-4), p)

    def test_threshold_sharpness_sweep(self):
        # stepping rho by 1e-4 flips the verdict within one step of the
        # predicted boundaries -3/13 and 3/8
        for threshold, blocks, nash_side in [
            (-3 / 13, [(0, 1), (2, 3)], "below"),
            (3 / 8, [(0, 2), (1, 3)], "above"),
        ]:
            p = Partition.from_blocks(blocks, 4)
            rhos = threshold + np.arange(-10, 11) * 1e-4
            verdicts = [is_nash_disjoint(claim_n4_market(r), p) for r in rhos]
            flips = [k for k in range(len(rhos) - 1) if verdicts[k] != verdicts[k + 1]]
            assert len(flips) == 1
            flip_rho = rhos[flips[0]]
            assert abs(flip_rho - threshold) <= 1e-4 + 1e-12
            expected_low = nash_side == "below"
            assert verdicts[0] == expected_low

    def test_five_bank_claims(self):
        split = Partition.from_blocks([(0, 1), (2, 3, 4)], 5)
        assert is_nash_disjoint(claim_n5_market(-0.3), split)
        assert not is_nash_disjoint(claim_n5_market(-0.28), split)
        bad = Partition.from_blocks([(0, 1, 2), (3, 4)], 5)
        for rho in (-0.9, -0.5, 0.0, 0.5, 0.9):
            assert not is_nash_disjoint(claim_n5_market(rho), bad)

    def test_two_banks_pool_uniquely(self, rng):
        for _ in range(10):
            alpha = np.sort(rng.uniform(0.3, 4.0, 2))
            m = validate_market(np.zeros(2), np.eye(2), alpha, -1.0)
            nash = brute_force_nash_disjoint(m)
            assert [str(p) for p in nash] == ["1,2"]


class TestBruteForce:
    def test_benchmark_four_banks(self):
        nash = brute_force_nash_disjoint(example_41_market())
        assert [str(p) for p in nash] == ["1,2,3,4", "1,3|2,4"]

    def test_five_bank_negative_block(self):
        nash = brute_force_nash_disjoint(claim_n5_market(-0.5))
        assert "1,2|3,4,5" in [str(p) for p in nash]

    def test_never_contains_unbalanced_split(self):
        for rho in (-0.4, 0.0, 0.4):
            nash = brute_force_nash_disjoint(claim_n5_market(rho))
            assert "1,2,3|4,5" not in [str(p) for p in nash]

    def test_always_contains_full_pooling(self, rng):
        for _ in range(10):
            m = random_market(rng, n=5)
            nash = brute_force_nash_disjoint(m)
            assert any(p.h == 1 for p in nash)

    def test_size_guard(self):
        m = iid_uniform_market(11, 0.0)
        with pytest.raises(TooLarge):
            brute_force_nash_disjoint(m)


class TestScreenSoundness:
    def test_strict_flag_implies_not_nash(self, rng):
        flagged = 0
        for _ in range(300):
            n = int(rng.integers(3, 7))
            m = iid_uniform_market(n, 0.0, alpha=1.0)
            m = validate_market(np.zeros(n), np.eye(n), rng.uniform(0.3, 5.0, n), -1.0)
            p = random_partition(rng, n)
            if p.h < 2:
                continue
            if not_nash_screen(m, p) is ScreenVerdict.NOT_NASH_STRICT:
                flagged += 1
                assert not is_nash_disjoint(m, p)
        assert flagged > 50


class TestFictitiousPlayDisjoint:
    def test_identical_banks_reach_full_pooling(self):
        m = iid_uniform_market(5, 0.0)
        res = fictitious_play_disjoint(m, seed=0)
        assert res.converged
        assert res.terminal == Partition.single_block(5)

    def test_benchmark_terminals(self):
        m = example_41_market()
        terminals = set()
        for seed in range(100):
            res = fictitious_play_disjoint(m, seed)
            assert res.converged
            assert is_nash_disjoint(m, res.terminal)
            terminals.add(str(res.terminal))
        assert terminals <= {"1,2,3,4", "1,3|2,4"}
        assert "1,3|2,4" in terminals

    def test_deterministic_market_stabilizes_immediately(self):
        m = validate_market(np.full(4, 2.0), np.zeros((4, 4)), np.ones(4), -1.0)
        res = fictitious_play_disjoint(m, seed=1)
        assert res.converged
        assert res.terminal == Partition.singletons(4)
        assert res.trajectory == ()

    def test_trajectory_reproducible(self):
        m = example_41_market()
        a = fictitious_play_disjoint(m, seed=7)
        b = fictitious_play_disjoint(m, seed=7)
        assert a.terminal == b.terminal
        assert a.trajectory == b.trajectory
        assert a.iterations == b.iterations

    def test_budget_exhaustion_raises_with_partial_result(self):
        m = example_41_market()
        with pytest.raises(NotConverged) as exc:
            fictitious_play_disjoint(m, seed=0, max_iter=2)
        partial = exc.value.result
        assert not partial.converged
        assert partial.iterations == 2


class TestIsNashOverlap:
    def test_benchmark_matrix_stable_at_print_precision(self):
        m = example_42_market()
        assert is_nash_overlap(m, WeightMatrix(EXAMPLE_42_EQUILIBRIUM), weight_tol=0.01)

    def test_perturbed_row_detected(self):
        m = example_42_market()
        w = np.array(EXAMPLE_42_EQUILIBRIUM, copy=True)
        w[1] = [w[1, 0] - 0.1, w[1, 1] + 0.1]
        assert not is_nash_overlap(m, WeightMatrix(w), weight_tol=0.01)

    def test_invariant_under_column_permutation(self, rng):
        m = random_market(rng, n=4)
        for _ in range(5):
            w = rng.dirichlet(np.ones(2), size=4)
            a = is_nash_overlap(m, WeightMatrix(w))
            b = is_nash_overlap(m, WeightMatrix(w[:, ::-1]))
            assert a == b


class TestFictitiousPlayOverlap:
    def test_benchmark_convergence(self):
        m = example_42_market()
        res = fictitious_play_overlap(m, 2, WeightMatrix(EXAMPLE_42_W0), seed=0)
        assert res.converged
        dev = np.max(np.abs(res.terminal.canonical().w - EXAMPLE_42_EQUILIBRIUM))
        assert dev <= 0.01

    def test_terminal_passes_nash_check(self, rng):
        for seed in range(3):
            m = random_market(rng, n=4, budget=-2.0)
            res = fictitious_play_overlap(m, 2, "random", seed)
            assert res.converged
            assert is_nash_overlap(m, res.terminal)

    def test_trajectory_reproducible(self):
        m = example_42_market()
        a = fictitious_play_overlap(m, 2, "random", seed=3)
        b = fictitious_play_overlap(m, 2, "random", seed=3)
        assert np.allclose(a.terminal.w, b.terminal.w)
        assert a.iterations == b.iterations

    def test_budget_exhaustion_carries_partial_result(self):
        m = example_42_market()
        with pytest.raises(NotConverged) as exc:
            fictitious_play_overlap(m, 2, WeightMatrix(EXAMPLE_42_W0), seed=0, max_iter=3)
        assert exc.value.result.iterations == 3
        assert not exc.value.result.converged

    def test_result_serialization(self):
        m = example_41_market()
        res = fictitious_play_disjoint(m, seed=2)
        d = res.to_dict()
        assert d["seed"] == 2
        assert d["converged"] is True
        assert all(isinstance(b, list) for b in d["terminal"])
