"""Two-group optimal weights: coefficients, interior optimum, candidate engine."""

import numpy as np
import pytest

from grouprisk.bestresponse import (
    best_response_two_groups,
    boundary_risk,
    coefficients,
    decision_margins,
    interior_condition,
    interior_optimum,
    interior_risk,
    sufficient_interior_condition,
)
from grouprisk.errors import EmptyCounterparty
from grouprisk.fixtures import EXAMPLE_42_EQUILIBRIUM, example_42_market
from grouprisk.market import validate_market
from grouprisk.overlap import WeightMatrix, row_risk, split_risk_profile

from conftest import random_market, random_weights


def grid_best_response(market, w, i, steps=2000):
    """Independent oracle: scan corners plus a dense interior grid."""
    cands = [
        (np.array([1.0, 0.0]), row_risk(market, w, i, [1, 0])),
        (np.array([0.0, 1.0]), row_risk(market, w, i, [0, 1])),
    ]
    grid = np.arange(1, steps) / steps
    prof = split_risk_profile(market, w, i, grid)
    k = int(np.argmin(prof))
    cands.append((np.array([grid[k], 1.0 - grid[k]]), float(prof[k])))
    return min(cands, key=lambda t: t[1])


class TestCoefficients:
    def test_symmetric_groups_have_no_drift(self, rng):
        # identical columns and equal tolerances kill the asymmetry term
        m = random_market(rng, n=4)
        w = WeightMatrix(np.full((4, 2), 0.5))
        c = coefficients(m, w, 0)
        assert c.a == pytest.approx(0.0, abs=1e-14)
        assert interior_optimum(c) == pytest.approx(0.5)

    def test_diagonal_covariance_has_no_drift(self, rng):
        m = validate_market(np.zeros(4), np.diag([1.0, 2, 3, 4]), np.ones(4), -1.0)
        w = random_weights(rng, 4)
        for i in range(4):
            try:
                c = coefficients(m, w, i)
            except EmptyCounterparty:
                continue
            assert c.a == pytest.approx(0.0, abs=1e-14)

    def test_curvatures_positive(self, rng):
        for _ in range(50):
            m = random_market(rng)
            w = random_weights(rng, m.n)
            i = int(rng.integers(m.n))
            try:
                c = coefficients(m, w, i)
            except EmptyCounterparty:
                continue
            assert c.b1 > 0.0 and c.b2 > 0.0
            assert c.beta_split == pytest.approx(c.beta_single + 1.0 / m.alpha[i])

    def test_requires_counterparties(self):
        m = validate_market(np.zeros(3), np.eye(3), np.ones(3), -1.0)
        w = WeightMatrix(np.array([[1.0, 0], [1, 0], [1, 0]]))
        with pytest.raises(EmptyCounterparty):
            coefficients(m, w, 0)

    def test_benchmark_interior_weight(self):
        # ten-bank benchmark: bank 2's optimal retained share at the published profile
        m = example_42_market()
        w = WeightMatrix(EXAMPLE_42_EQUILIBRIUM)
        c = coefficients(m, w, 1)
        assert abs(interior_optimum(c) - 0.51) < 0.01


class TestInteriorOptimum:
    def test_symmetric_case_is_half(self):
        from grouprisk.bestresponse import SplitCoefficients

        c = SplitCoefficients(a=0.0, b1=2.0, b2=2.0, beta1=2, beta2=2, beta_single=3, beta_split=4)
        assert interior_optimum(c) == 0.5
        assert interior_condition(c)

    def test_boundary_touch(self):
        from grouprisk.bestresponse import SplitCoefficients

        c = SplitCoefficients(a=2.0, b1=2.0, b2=2.0, beta1=2, beta2=2, beta_single=3, beta_split=4)
        assert interior_optimum(c) == 1.0
        assert not interior_condition(c)

    def test_grid_attains_minimum_at_vertex(self, rng):
        hits = 0
        while hits < 25:
            m = random_market(rng)
            w = random_weights(rng, m.n)
            i = int(rng.integers(m.n))
            try:
                c = coefficients(m, w, i)
            except EmptyCounterparty:
                continue
            t = interior_optimum(c)
            if not 0.0 < t < 1.0:
                continue
            grid = np.arange(1, 1000) / 1000.0
            prof = split_risk_profile(m, w, i, grid)
            assert abs(grid[int(np.argmin(prof))] - t) <= 1e-3
            hits += 1

    def test_condition_iff_interior(self, rng):
        checked = 0
        for _ in range(1000):
            m = random_market(rng)
            w = random_weights(rng, m.n)
            i = int(rng.integers(m.n))
            try:
                c = coefficients(m, w, i)
            except EmptyCounterparty:
                continue
            assert interior_condition(c) == (0.0 < interior_optimum(c) < 1.0)
            checked += 1
        assert checked > 800


class TestDecisionConditions:
    def test_margins_equal_direct_risk_differences(self, rng):
        verified = 0
        for _ in range(250):
            m = random_market(rng)
            w = random_weights(rng, m.n)
            i = int(rng.integers(m.n))
            try:
                c = coefficients(m, w, i)
            except EmptyCounterparty:
                continue
            if not interior_condition(c):
                continue
            t = interior_optimum(c)
            vs1, vs2 = decision_margins(m, w, i)
            assert vs1 == pytest.approx(
                interior_risk(m, w, i, t) - boundary_risk(m, w, i, 0), abs=1e-10
            )
            assert vs2 == pytest.approx(
                interior_risk(m, w, i, t) - boundary_risk(m, w, i, 1), abs=1e-10
            )
            verified += 1
        assert verified > 100

    def test_analytic_risks_match_generic_evaluator(self, rng):
        m = random_market(rng, n=5)
        w = random_weights(rng, 5)
        for i in range(5):
            assert boundary_risk(m, w, i, 0) == pytest.approx(
                row_risk(m, w, i, [1, 0]), abs=1e-12
            )
            assert boundary_risk(m, w, i, 1) == pytest.approx(
                row_risk(m, w, i, [0, 1]), abs=1e-12
            )
            assert interior_risk(m, w, i, 0.37) == pytest.approx(
                row_risk(m, w, i, [0.37, 0.63]), abs=1e-12
            )


class TestSufficientCondition:
    def test_uniform_positive_correlation_admits_interior(self):
        corr = np.full((4, 4), 0.5)
        np.fill_diagonal(corr, 1.0)
        m = validate_market(np.zeros(4), corr, np.ones(4), -1.0)
        w = WeightMatrix(np.full((4, 2), 0.5))
        assert sufficient_interior_condition(m, w, 0)

    def test_tiny_own_variance_fails_the_bound(self):
        sd = np.array([0.05, 2.0, 2.0, 2.0])
        corr = np.full((4, 4), 0.6)
        np.fill_diagonal(corr, 1.0)
        m = validate_market(np.zeros(4), np.outer(sd, sd) * corr, np.ones(4), -1.0)
        w = WeightMatrix(np.full((4, 2), 0.5))
        assert not sufficient_interior_condition(m, w, 0)

    def test_implies_interior_condition(self, rng):
        true_count = 0
        for _ in range(1000):
            m = random_market(rng)
            w = random_weights(rng, m.n)
            i = int(rng.integers(m.n))
            try:
                suff = sufficient_interior_condition(m, w, i)
                c = coefficients(m, w, i)
            except EmptyCounterparty:
                continue
            if suff:
                true_count += 1
                assert interior_condition(c)
        assert true_count > 100


class TestBestResponse:
    def test_near_zero_budget_forces_single_group(self, rng):
        # with the budget just below zero, the doubled log penalty of
        # splitting dominates and a full corner wins
        m0 = random_market(rng, n=4)
        m = validate_market(m0.mu, m0.sigma, m0.alpha, -1e-6)
        w = random_weights(rng, 4)
        for i in range(4):
            row, _ = best_response_two_groups(m, w, i)
            assert sorted(row.tolist()) == [0.0, 1.0]

    def test_benchmark_risk_seeker_goes_alone(self):
        # bank 1 (very small aversion) keeps everything in one pool
        m = example_42_market()
        w = WeightMatrix(EXAMPLE_42_EQUILIBRIUM)
        row, _ = best_response_two_groups(m, w, 0)
        assert np.allclose(row, [1.0, 0.0])

    def test_matches_grid_oracle(self, rng):
        for _ in range(200):
            m = random_market(rng)
            w = random_weights(rng, m.n)
            i = int(rng.integers(m.n))
            row, risk = best_response_two_groups(m, w, i)
            grow, grisk = grid_best_response(m, w, i)
            assert risk <= grisk + 1e-8
            if abs(risk - grisk) <= 1e-8:
                assert np.max(np.abs(row - grow)) <= 1e-3

    def test_missing_counterparty_falls_back_to_grid(self, rng):
        m = random_market(rng, n=3)
        w = WeightMatrix(np.array([[1.0, 0], [1, 0], [1, 0]]))
        for i in range(3):
            row, risk = best_response_two_groups(m, w, i)
            grow, grisk = grid_best_response(m, w, i)
            assert risk <= grisk + 1e-8

    def test_tie_keeps_current_row(self):
        # with no randomness both corners price identically; the bank stays
        # on its current corner instead of hopping to the equally good one
        m = validate_market(np.zeros(3), np.zeros((3, 3)), np.ones(3), -1e-6)
        w = WeightMatrix(np.array([[0.0, 1.0], [0.5, 0.5], [0.5, 0.5]]))
        row, _ = best_response_two_groups(m, w, 0)
        assert np.allclose(row, [0.0, 1.0])

    def test_returned_risk_never_beaten_by_candidates(self, rng):
        for _ in range(100):
            m = random_market(rng)
            w = random_weights(rng, m.n)
            i = int(rng.integers(m.n))
            row, risk = best_response_two_groups(m, w, i)
            for cand in ([1.0, 0.0], [0.0, 1.0]):
                assert risk <= row_risk(m, w, i, cand) + 1e-12
