"""Tests for recovery metrics."""

import numpy as np
import pytest

from dspg import linalg
from dspg.linalg import NotPositiveDefinite
from dspg.metrics import entropy_loss, quadratic_loss, support_scores


def random_spd(n, rng, shift=0.5):
    a = rng.normal(size=(n, n))
    return linalg.symmetrize(a @ a.T / n + shift * np.eye(n))


class TestEntropyLoss:
    def test_zero_at_exact_inverse(self):
        rng = np.random.default_rng(1)
        sigma = random_spd(6, rng)
        x = linalg.inverse_from_factor(linalg.cholesky(sigma))
        assert abs(entropy_loss(sigma, x)) <= 1e-12

    def test_scaled_identity(self):
        # (tr - logdet - n) / n of 2 I is 1 - log 2 for every n
        for n in (2, 5):
            val = entropy_loss(np.eye(n), 2.0 * np.eye(n))
            assert val == pytest.approx(1.0 - np.log(2.0), rel=1e-14)

    def test_diagonal_inverse(self):
        assert abs(entropy_loss(np.diag([1.0, 4.0]), np.diag([1.0, 0.25]))) <= 1e-15

    def test_nonnegative_and_discriminating(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            sigma = random_spd(5, rng)
            x = random_spd(5, rng)
            loss = entropy_loss(sigma, x)
            assert loss >= -1e-12
            inv = linalg.inverse_from_factor(linalg.cholesky(sigma))
            if np.abs(x - inv).max() > 1e-6:
                assert loss > 0

    def test_indefinite_product_raises(self):
        with pytest.raises(NotPositiveDefinite):
            entropy_loss(np.eye(2), np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            entropy_loss(np.eye(2), np.eye(3))


class TestQuadraticLoss:
    def test_zero_at_exact_inverse(self):
        assert quadratic_loss(np.diag([2.0, 0.5]), np.diag([0.5, 2.0])) == 0.0

    def test_identity_factor_of_four(self):
        # ||2 I - I||_F / 4 = 2/4 over n = 4
        assert quadratic_loss(np.eye(4), 2.0 * np.eye(4)) == pytest.approx(0.5)

    def test_diagonal(self):
        assert quadratic_loss(np.eye(2), np.diag([1.0, 3.0])) == pytest.approx(1.0)


class TestSupportScores:
    def truth(self):
        t = np.eye(5)
        for (i, j) in [(0, 1), (1, 2), (2, 3)]:
            t[i, j] = t[j, i] = 0.4
        return t

    def test_exact_recovery(self):
        t = self.truth()
        rep = support_scores(t, linalg.inverse_from_factor(linalg.cholesky(
            linalg.inverse_from_factor(linalg.cholesky(t)))), threshold=1e-8)
        assert rep.sensitivity == 1.0
        assert rep.specificity == 1.0
        assert rep.fp == 0 and rep.fn == 0

    def test_confusion_partition(self):
        t = self.truth()
        rng = np.random.default_rng(3)
        x = random_spd(5, rng)
        rep = support_scores(t, x, threshold=0.05)
        assert rep.tp + rep.tn + rep.fp + rep.fn == 5 * 4 // 2

    def test_sensitivity_ratio(self):
        # truth has 10 nonzero pairs, the estimate recovers 9 of them
        n = 6
        t = np.eye(n)
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)][:10]
        for (i, j) in pairs:
            t[i, j] = t[j, i] = 0.1
        x = np.eye(n)
        for (i, j) in pairs[:9]:
            x[i, j] = x[j, i] = 0.1
        rep = support_scores(t, x, threshold=0.05)
        assert rep.tp == 9 and rep.fn == 1
        assert rep.sensitivity == pytest.approx(0.9)

    def test_dense_truth_vacuous_specificity(self):
        n = 4
        t = np.eye(n) + 0.1 * (np.ones((n, n)) - np.eye(n))
        rep = support_scores(t, np.eye(n), threshold=0.05)
        assert rep.tn + rep.fp == 0
        assert rep.specificity == 1.0

    def test_nnz_includes_diagonal(self):
        t = self.truth()
        x = np.eye(5)
        x[0, 1] = x[1, 0] = 0.2
        rep = support_scores(t, x, threshold=0.05)
        assert rep.nnz == 5 + 2

    def test_threshold_is_inclusive(self):
        t = self.truth()
        x = np.eye(5)
        x[0, 1] = x[1, 0] = 0.05
        rep = support_scores(t, x, threshold=0.05)
        assert rep.tp == 1

    def test_permutation_invariance(self):
        rng = np.random.default_rng(4)
        t = self.truth()
        x = random_spd(5, rng)
        perm = rng.permutation(5)
        a = support_scores(t, x, threshold=0.05)
        b = support_scores(t[np.ix_(perm, perm)], x[np.ix_(perm, perm)], threshold=0.05)
        assert (a.tp, a.tn, a.fp, a.fn, a.nnz) == (b.tp, b.tn, b.fp, b.fn, b.nnz)
        assert a.loss_e == pytest.approx(b.loss_e, rel=1e-9)
        assert a.loss_q == pytest.approx(b.loss_q, rel=1e-9)

    def test_negative_threshold_rejected(self):
        with pytest.raises(ValueError):
            support_scores(np.eye(2), np.eye(2), threshold=-0.1)
