"""Market validation and the exact tilted-moment identities."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grouprisk.errors import (
    DimensionMismatch,
    NonNegativeBudget,
    NonPositiveAlpha,
    NonPositiveBeta,
    NotPSD,
)
from grouprisk.market import (
    GroupVector,
    group_stats,
    tilted_moments,
    validate_market,
)
from grouprisk.montecarlo import mean_and_se, sample_X, tilt_weights

from conftest import random_market


class TestValidation:
    def test_accepts_identity_covariance(self):
        m = validate_market([0, 0], np.eye(2), [1, 1], -1.0)
        assert m.n == 2
        assert m.beta_total == pytest.approx(2.0)

    def test_rejects_indefinite_matrix(self):
        with pytest.raises(NotPSD):
            validate_market([0, 0], [[1, 2], [2, 1]], [1, 1], -1.0)

    def test_rejects_positive_budget(self):
        with pytest.raises(NonNegativeBudget):
            validate_market([0, 0], np.eye(2), [1, 1], 1.0)
        with pytest.raises(NonNegativeBudget):
            validate_market([0, 0], np.eye(2), [1, 1], 0.0)

    def test_rejects_nonpositive_alpha(self):
        with pytest.raises(NonPositiveAlpha):
            validate_market([0, 0], np.eye(2), [1, 0], -1.0)

    def test_rejects_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            validate_market([0, 0, 0], np.eye(2), [1, 1], -1.0)
        with pytest.raises(DimensionMismatch):
            validate_market([0, 0], np.eye(3), [1, 1], -1.0)

    def test_symmetrizes_within_tolerance(self):
        sigma = np.eye(2)
        sigma[0, 1] = 1e-14
        m = validate_market([0, 0], sigma, [1, 1], -1.0)
        assert m.sigma[0, 1] == m.sigma[1, 0]

    def test_rejects_gross_asymmetry(self):
        sigma = np.eye(2)
        sigma[0, 1] = 1e-3
        with pytest.raises(DimensionMismatch):
            validate_market([0, 0], sigma, [1, 1], -1.0)

    def test_clips_rounding_level_negative_eigenvalue(self):
        # eigenvalues 2 and -1e-12: inside the clip band, comes out PSD
        v = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
        sigma = (v * np.array([2.0, -1e-12])) @ v.T
        m = validate_market([0, 0], sigma, [1, 1], -1.0)
        assert np.linalg.eigvalsh(m.sigma).min() >= 0.0

    def test_unchecked_mode_keeps_indefinite_matrix(self):
        m = validate_market([0, 0], [[1, 2], [2, 1]], [1, 1], -1.0, psd_check=False)
        assert m.sigma[0, 1] == 2.0

    def test_market_is_immutable(self):
        m = validate_market([0, 0], np.eye(2), [1, 1], -1.0)
        with pytest.raises(ValueError):
            m.mu[0] = 1.0


class TestGroupStats:
    def test_sum_of_independents(self):
        m = validate_market([0, 0], np.eye(2), [1, 1], -1.0)
        assert group_stats(m, [1, 1]) == (pytest.approx(0.0), pytest.approx(2.0))

    def test_uncorrelated_pair_in_block_model(self):
        corr = np.array([[1, 0.5, 0, 0], [0.5, 1, 0, 0], [0, 0, 1, 0.5], [0, 0, 0.5, 1]])
        m = validate_market(np.zeros(4), corr, np.ones(4), -1.0)
        _, var = group_stats(m, [1, 0, 0, 1])
        assert var == pytest.approx(2.0)

    def test_fractional_weights(self):
        m = validate_market([1, 2], np.eye(2), [1, 1], -1.0)
        mu_s, var_s = group_stats(m, [0.3, 0.7])
        assert mu_s == pytest.approx(1.7)
        assert var_s == pytest.approx(0.58)

    def test_invariant_under_symmetrization(self, rng):
        # the quadratic form only sees the symmetric part
        raw = rng.normal(size=(4, 4))
        sym = 0.5 * (raw + raw.T)
        a = rng.uniform(0, 1, 4)
        assert a @ raw @ a == pytest.approx(a @ sym @ a, rel=1e-12)

    def test_group_vector_membership(self):
        g = GroupVector([0.5, 0.0, 1e-12, 1.0])
        assert g.members.tolist() == [0, 3]
        assert g.weights[2] == 0.0


class TestTiltedMoments:
    def test_normalizer_closed_form(self):
        # group sum ~ N(0, 2), tilt scale 2
        m = validate_market([0, 0], np.eye(2), [1, 1], -1.0)
        tm = tilted_moments(m, [1, 1], 2.0)
        assert tm.z0 == pytest.approx(np.exp(0.25))
        assert tm.z0 == pytest.approx(1.28403, abs=5e-6)

    def test_bank_moment_closed_form(self):
        m = validate_market([0, 0], np.eye(2), [1, 1], -1.0)
        tm = tilted_moments(m, [1, 1], 2.0)
        # (a @ sigma)_0 = 1, so xi_0 = (0 - 1/2) z0
        assert tm.xi[0] == pytest.approx(-0.5 * tm.z0)

    def test_group_moment_is_weighted_bank_moment_sum(self, rng):
        for _ in range(25):
            m = random_market(rng)
            a = rng.uniform(0, 1, m.n)
            tm = tilted_moments(m, a, float(rng.uniform(0.5, 3.0)))
            assert tm.s1 == pytest.approx(float(a @ tm.xi), rel=1e-10)

    def test_rejects_nonpositive_beta(self):
        m = validate_market([0, 0], np.eye(2), [1, 1], -1.0)
        with pytest.raises(NonPositiveBeta):
            tilted_moments(m, [1, 1], 0.0)

    def test_degenerate_group_sum(self):
        m = validate_market([1, 2], np.zeros((2, 2)), [1, 1], -1.0)
        tm = tilted_moments(m, [1, 1], 1.0)
        assert tm.var_s == 0.0
        assert tm.z0 == pytest.approx(np.exp(-3.0))

    def test_montecarlo_agrees_with_closed_forms(self, rng):
        # the sampling oracle reproduces z0, xi, s1 within 4 standard errors
        m = random_market(rng, n=4)
        x = sample_X(m, 1_000_000, seed=5)
        a = np.array([1.0, 0.0, 1.0, 0.6])
        beta = 2.0
        tm = tilted_moments(m, a, beta)
        wt = tilt_weights(x, a, beta)
        est, se = mean_and_se(wt)
        assert abs(est - tm.z0) <= 4 * se
        # 3-standard-error band for the headline normalizer check
        assert abs(est - tm.z0) <= 3 * se
        s = x @ a
        est, se = mean_and_se(s * wt)
        assert abs(est - tm.s1) <= 4 * se
        for i in range(4):
            est, se = mean_and_se(x[:, i] * wt)
            assert abs(est - tm.xi[i]) <= 4 * se


@settings(max_examples=60, deadline=None)
@given(
    weights=st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=1, max_size=6),
    beta=st.floats(0.1, 5.0, allow_nan=False),
)
def test_normalizer_positive_and_moment_identity(weights, beta):
    n = len(weights)
    m = validate_market(np.zeros(n), np.eye(n), np.ones(n), -1.0)
    tm = tilted_moments(m, weights, beta)
    assert tm.z0 > 0.0
    assert tm.s1 == pytest.approx(float(np.asarray(weights) @ tm.xi), rel=1e-10, abs=1e-12)
