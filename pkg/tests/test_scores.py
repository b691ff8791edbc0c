import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scoreinv import scores
from scoreinv.scores import (
    HybridCoeffs,
    ScoreKind,
    banded_time_weights,
    constant_weights,
    empirical_crps,
    energy_score,
    energy_score_grad,
    hybrid_score,
    hybrid_score_grad,
    inverse_distance_weights,
    mean_score,
    score,
    variogram_score,
    variogram_score_grad,
)


def fd_ensemble_grad(fun, ens, rel_step=1e-6):
    """Central finite differences of a scalar score w.r.t. every entry."""
    g = np.zeros_like(ens)
    for idx in np.ndindex(ens.shape):
        h = rel_step * (1.0 + abs(ens[idx]))
        ep, em = ens.copy(), ens.copy()
        ep[idx] += h
        em[idx] -= h
        g[idx] = (fun(ep) - fun(em)) / (2 * h)
    return g


def rel_err(a, b):
    return np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-12)


class TestCrps:
    def test_point_mass_at_observation(self):
        assert empirical_crps([1.7], 1.7) == 0.0

    def test_hand_value(self):
        # first term (1+1)/2 = 1, second (0+2+2+0)/8 = 0.5
        assert empirical_crps([0.0, 2.0], 1.0) == pytest.approx(0.5, abs=1e-15)

    def test_degenerate_ensemble(self):
        c, y = 2.5, -1.0
        assert empirical_crps([c] * 7, y) == pytest.approx(abs(c - y), abs=1e-14)

    def test_empty_errors(self):
        with pytest.raises(ValueError, match="empty ensemble"):
            empirical_crps([], 0.0)


class TestEnergyScore:
    def test_single_member_identity(self):
        d = np.array([[0.3], [1.2], [-0.5]])
        assert energy_score(d, d[:, 0]) == 0.0

    def test_m1_equals_crps(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            s = rng.standard_normal(rng.integers(1, 9))
            y = float(rng.standard_normal())
            assert energy_score(s[None, :], np.array([y])) == empirical_crps(s, y)

    def test_hand_value_m2(self):
        ens = np.array([[0.0, 2.0], [0.0, 0.0]])
        obs = np.array([1.0, 0.0])
        assert energy_score(ens, obs) == pytest.approx(0.5, abs=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            energy_score(np.ones((3, 2)), np.ones(4))

    def test_nonnegative_random(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            ens = rng.standard_normal((3, 5))
            obs = rng.standard_normal(3)
            assert energy_score(ens, obs) >= 0.0

    def test_shift_changes_es(self):
        rng = np.random.default_rng(3)
        ens = rng.standard_normal((3, 4))
        obs = rng.standard_normal(3)
        assert energy_score(ens + 5.0, obs + 5.0) == pytest.approx(
            energy_score(ens, obs), rel=1e-12)
        assert energy_score(ens + 5.0, obs) != pytest.approx(
            energy_score(ens, obs), rel=1e-6)


class TestEnergyScoreGrad:
    def test_single_sample_scalar(self):
        g, degenerate = energy_score_grad(np.array([[3.0]]), np.array([1.0]))
        assert g[0, 0] == 1.0
        assert not degenerate

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        worst = 0.0
        for _ in range(100):
            m, ns = rng.integers(1, 9), rng.integers(1, 9)
            ens = rng.standard_normal((m, ns))
            obs = rng.standard_normal(m)
            g, _ = energy_score_grad(ens, obs)
            g_fd = fd_ensemble_grad(lambda e: energy_score(e, obs), ens)
            worst = max(worst, rel_err(g_fd, g))
        assert worst <= 1e-6

    def test_symmetric_two_sample(self):
        d = np.array([0.4, -1.1, 2.0])
        ens = np.column_stack([d, -d])
        g, _ = energy_score_grad(ens, np.zeros(3))
        np.testing.assert_allclose(g[:, 0], -g[:, 1], atol=1e-14)

    def test_degeneracy_flag_and_zero_subgradient(self):
        ens = np.array([[1.0, 1.0], [2.0, 2.0]])  # coincident columns
        g, degenerate = energy_score_grad(ens, np.array([0.0, 0.0]))
        assert degenerate
        assert np.all(np.isfinite(g))
        g2, degenerate2 = energy_score_grad(np.array([[1.0]]), np.array([1.0]))
        assert degenerate2
        np.testing.assert_array_equal(g2, 0.0)


class TestVariogramScore:
    def test_zero_when_matching(self):
        ens = np.array([[0.1], [0.7]])
        assert variogram_score(ens, ens[:, 0], constant_weights(2)) == 0.0

    def test_hand_value(self):
        ens = np.array([[0.0], [2.0]])
        obs = np.array([0.0, 1.0])
        assert variogram_score(ens, obs, constant_weights(2)) == pytest.approx(18.0)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(-50, 50))
    def test_shift_invariance(self, c):
        rng = np.random.default_rng(5)
        ens = rng.standard_normal((4, 3))
        obs = rng.standard_normal(4)
        w = constant_weights(4)
        assert variogram_score(ens + c, obs + c, w) == pytest.approx(
            variogram_score(ens, obs, w), rel=1e-9, abs=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            variogram_score(np.ones((3, 2)), np.ones(3), constant_weights(4))


class TestVariogramScoreGrad:
    def test_zero_at_global_minimum(self):
        ens = np.array([[0.0, 0.0], [1.0, 1.0]])  # ensemble variogram == observed
        g = variogram_score_grad(ens, np.array([5.0, 6.0]), constant_weights(2))
        np.testing.assert_allclose(g, 0.0, atol=1e-14)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(13)
        worst = 0.0
        for _ in range(100):
            m, ns = rng.integers(2, 9), rng.integers(1, 9)
            ens = rng.standard_normal((m, ns))
            obs = rng.standard_normal(m)
            w = constant_weights(m)
            g = variogram_score_grad(ens, obs, w)
            g_fd = fd_ensemble_grad(lambda e: variogram_score(e, obs, w), ens)
            worst = max(worst, rel_err(g_fd, g))
        assert worst <= 1e-6

    def test_hand_value(self):
        # residual C = 1 - 4 = -3; exact derivative of the implemented
        # (both-orderings) score, cross-checked against central differences
        ens = np.array([[0.0], [2.0]])
        obs = np.array([0.0, 1.0])
        w = constant_weights(2)
        g = variogram_score_grad(ens, obs, w)
        np.testing.assert_allclose(g.ravel(), [-48.0, 48.0], rtol=1e-12)
        g_fd = fd_ensemble_grad(lambda e: variogram_score(e, obs, w), ens)
        assert rel_err(g_fd, g) <= 1e-6

    def test_p_not_two_rejected(self):
        with pytest.raises(ValueError, match="p=2"):
            variogram_score_grad(np.ones((2, 1)), np.zeros(2),
                                 constant_weights(2, p=1.0))


class TestHybrid:
    def test_degenerate_combination_matches_es(self):
        rng = np.random.default_rng(2)
        ens = rng.standard_normal((3, 4))
        obs = rng.standard_normal(3)
        w = constant_weights(3)
        hs = hybrid_score(ens, obs, w, HybridCoeffs(alpha=1.0, beta=1e-300))
        assert hs == pytest.approx(energy_score(ens, obs), rel=1e-12)

    def test_paper_coefficients_default(self):
        c = HybridCoeffs()
        assert (c.alpha, c.beta) == (0.1, 0.9)

    def test_linearity(self):
        rng = np.random.default_rng(4)
        ens = rng.standard_normal((3, 4))
        obs = rng.standard_normal(3)
        w = constant_weights(3)
        c = HybridCoeffs(alpha=0.1, beta=0.9)
        assert hybrid_score(ens, obs, w, c) == pytest.approx(
            0.1 * energy_score(ens, obs) + 0.9 * variogram_score(ens, obs, w),
            rel=1e-14)

    def test_grad_matches_finite_differences(self):
        rng = np.random.default_rng(6)
        c = HybridCoeffs(alpha=0.3, beta=0.7)
        worst = 0.0
        for _ in range(30):
            m, ns = rng.integers(2, 7), rng.integers(1, 7)
            ens = rng.standard_normal((m, ns))
            obs = rng.standard_normal(m)
            w = constant_weights(m)
            g, _ = hybrid_score_grad(ens, obs, w, c)
            g_fd = fd_ensemble_grad(lambda e: hybrid_score(e, obs, w, c), ens)
            worst = max(worst, rel_err(g_fd, g))
        assert worst <= 1e-6

    def test_positivity_required(self):
        with pytest.raises(ValueError):
            HybridCoeffs(alpha=0.0, beta=1.0)


class TestMeanScore:
    def test_single_batch_is_instantaneous(self):
        rng = np.random.default_rng(8)
        ens = rng.standard_normal((3, 5))
        obs = rng.standard_normal(3)
        kind = ScoreKind("es")
        assert mean_score(kind, ens, obs[None, :]) == pytest.approx(
            score(kind, ens, obs), rel=1e-14)

    def test_identical_rows(self):
        rng = np.random.default_rng(9)
        ens = rng.standard_normal((3, 5))
        obs = rng.standard_normal(3)
        kind = ScoreKind("vs", weights=constant_weights(3))
        batch = np.vstack([obs, obs])
        assert mean_score(kind, ens, batch) == pytest.approx(
            score(kind, ens, obs), rel=1e-14)

    def test_two_batches_average(self):
        rng = np.random.default_rng(10)
        ens = rng.standard_normal((4, 3))
        o1, o2 = rng.standard_normal(4), rng.standard_normal(4)
        kind = ScoreKind("hs", weights=constant_weights(4))
        s1, s2 = score(kind, ens, o1), score(kind, ens, o2)
        assert mean_score(kind, ens, np.vstack([o1, o2])) == pytest.approx(
            (s1 + s2) / 2, rel=1e-14)

    def test_empty_batch_errors(self):
        with pytest.raises(ValueError):
            mean_score(ScoreKind("es"), np.ones((2, 2)), np.empty((0, 2)))


class TestPermutationInvariance:
    def test_scores_and_grads(self):
        rng = np.random.default_rng(12)
        ens = rng.standard_normal((4, 6))
        obs = rng.standard_normal(4)
        w = constant_weights(4)
        perm = rng.permutation(6)
        pens = ens[:, perm]
        assert energy_score(pens, obs) == pytest.approx(energy_score(ens, obs), rel=1e-13)
        assert variogram_score(pens, obs, w) == pytest.approx(
            variogram_score(ens, obs, w), rel=1e-13)
        g, _ = energy_score_grad(ens, obs)
        gp, _ = energy_score_grad(pens, obs)
        np.testing.assert_allclose(gp, g[:, perm], atol=1e-13)
        gv = variogram_score_grad(ens, obs, w)
        gvp = variogram_score_grad(pens, obs, w)
        np.testing.assert_allclose(gvp, gv[:, perm], atol=1e-12)


class TestPropriety:
    """Monte-Carlo propriety: the true-distribution ensemble wins on average."""

    def test_es_prefers_true_mean(self):
        rng = np.random.default_rng(42)
        n_trials, ns = 2000, 20
        diffs = np.empty(n_trials)
        for t in range(n_trials):
            y = rng.standard_normal(3)
            true_ens = rng.standard_normal((3, ns))
            shifted = rng.standard_normal((3, ns)) + 1.0
            diffs[t] = energy_score(true_ens, y) - energy_score(shifted, y)
        assert np.mean(diffs) < 0.0
        # one-sided paired test at the 1% level
        tstat = np.mean(diffs) / (np.std(diffs, ddof=1) / np.sqrt(n_trials))
        assert tstat < -2.33

    def test_vs_prefers_true_correlation(self):
        rng = np.random.default_rng(43)
        n_trials, ns = 2000, 20
        cov = np.array([[1.0, 0.6, 0.0], [0.6, 1.0, 0.6], [0.0, 0.6, 1.0]])
        chol = np.linalg.cholesky(cov)
        w = constant_weights(3)
        diffs = np.empty(n_trials)
        for t in range(n_trials):
            y = rng.standard_normal(3)
            true_ens = rng.standard_normal((3, ns))
            miss = chol @ rng.standard_normal((3, ns))
            diffs[t] = variogram_score(true_ens, y, w) - variogram_score(miss, y, w)
        tstat = np.mean(diffs) / (np.std(diffs, ddof=1) / np.sqrt(n_trials))
        assert np.mean(diffs) < 0.0
        assert tstat < -2.33


class TestWeights:
    def test_constant(self):
        w = constant_weights(3)
        assert np.all(np.diag(w.w) == 0)
        assert np.all(w.w[~np.eye(3, dtype=bool)] == 1.0)

    def test_inverse_distance(self):
        pts = np.array([[0.0, 0.0], [3.0, 4.0]])
        w = inverse_distance_weights(pts)
        assert w.w[0, 1] == pytest.approx(1.0 / 5.0)

    def test_banded_structure(self):
        w = banded_time_weights(steps=6, channels=2, band=2)
        assert w.w.shape == (12, 12)
        assert w.w[0, 2] == 1.0 and w.w[0, 3] == 0.0   # within-channel band
        assert w.w[0, 6] == 1.0 and w.w[0, 7] == 0.0   # cross-channel equal time
        np.testing.assert_array_equal(w.w, w.w.T)

    def test_validation(self):
        with pytest.raises(ValueError, match="symmetric"):
            scores.VariogramWeights(np.array([[0.0, 1.0], [2.0, 0.0]]))
        with pytest.raises(ValueError, match="diagonal"):
            scores.VariogramWeights(np.ones((2, 2)))
        with pytest.raises(ValueError, match="positive"):
            scores.VariogramWeights(np.zeros((2, 2)), p=0.0)

    def test_kind_validation(self):
        with pytest.raises(ValueError, match="weights"):
            ScoreKind("vs")
        with pytest.raises(ValueError, match="unknown"):
            ScoreKind("mse")
