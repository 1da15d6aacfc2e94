"""Truncated SVD, latent-space neighbors, prediction, Top-N and the MF baseline."""

import math
import warnings

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from opinionrec.recommend import (RatingModel, UnknownUserError, baseline_mf, cosine, impute,
                                  truncated_svd, user_similarity)


def _triples(M, mask=None):
    out = []
    for a in range(M.shape[0]):
        for j in range(M.shape[1]):
            if mask is None or mask[a, j]:
                out.append((f"u{a}", f"i{j}", float(M[a, j])))
    return out


def rank_r(m, n, r, seed):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(m, r)) @ rng.normal(size=(r, n))


class TestSvd:
    def test_rank_one_example(self):
        res = truncated_svd(np.array([[2.0, 4.0], [1.0, 2.0]]), 2, center=False)
        assert abs(res.singular_values[0] - 5.0) <= 1e-12
        assert abs(res.singular_values[1]) <= 1e-8
        np.testing.assert_allclose(res.P @ res.Q.T, [[2, 4], [1, 2]], atol=1e-8)

    def test_identity(self):
        res = truncated_svd(np.eye(2), 2, center=False)
        np.testing.assert_allclose(res.singular_values, [1.0, 1.0], atol=1e-12)

    def test_sparse_zeros_are_missing(self):
        dense, *_ = impute(sp.csr_matrix(np.eye(2)), center=False)
        np.testing.assert_allclose(dense, np.ones((2, 2)))

    def test_rank_three_reconstruction(self):
        M = rank_r(100, 80, 3, seed=1)
        res = truncated_svd(M, 3)
        target, *_ = impute(M)
        err = np.linalg.norm(res.P @ res.Q.T - target) / np.linalg.norm(target)
        assert err <= 1e-6

    @settings(max_examples=15, deadline=None)
    @given(st.integers(5, 60), st.integers(5, 60), st.integers(1, 5), st.integers(0, 4),
           st.integers(0, 2**31))
    def test_dense_oracle(self, m, n, r, extra, seed):
        r = min(r, m, n)
        f = min(r + extra, m, n)
        M = rank_r(m, n, r, seed)
        res = truncated_svd(M, f, seed=seed)
        target, *_ = impute(M)
        oracle = np.linalg.svd(target, compute_uv=False)[:f]
        np.testing.assert_allclose(res.singular_values, oracle, atol=1e-6 * max(1, oracle[0]))
        assert np.all(np.diff(res.singular_values) <= 1e-12)
        err = np.linalg.norm(res.P @ res.Q.T - target) / np.linalg.norm(target)
        assert err <= 1e-6

    def test_imputation_rule(self):
        m = sp.csr_matrix(np.array([[4.0, 0.0], [2.0, 2.0]]))  # one missing cell
        dense, mu, mu_u, mu_i = impute(m, center=False)
        assert mu == pytest.approx(8 / 3)
        assert dense[0, 1] == pytest.approx(mu_u[0] + mu_i[1] - mu)
        centered, *_ = impute(m)
        np.testing.assert_allclose(centered, dense - mu_u[:, None])

    def test_rank_clamped_with_warning(self):
        with pytest.warns(UserWarning):
            res = truncated_svd(rank_r(4, 3, 2, 0), 10)
        assert res.P.shape == (4, 3)

    def test_errors(self):
        with pytest.raises(ValueError):
            truncated_svd(np.ones((3, 3)), 0)
        with pytest.raises(ValueError):
            truncated_svd(sp.csr_matrix((3, 3)), 2)
        with pytest.raises(ValueError):
            truncated_svd(np.zeros((0, 3)), 1)

    def test_seeded(self):
        M = rank_r(30, 20, 4, 3) + 3
        a, b = truncated_svd(M, 4, seed=5), truncated_svd(M, 4, seed=5)
        assert np.array_equal(a.P, b.P) and np.array_equal(a.Q, b.Q)


class TestSimilarity:
    @pytest.mark.parametrize("u,v,expected", [((1, 2), (1, 2), 1.0), ((1, 0), (0, 1), 0.0),
                                              ((1, 1), (1, 0), 1 / math.sqrt(2)),
                                              ((0, 0), (1, 0), 0.0)])
    def test_cosine(self, u, v, expected):
        assert cosine(np.array(u, float), np.array(v, float)) == pytest.approx(expected, abs=1e-12)

    def test_user_similarity_bounds(self):
        P = np.array([[1.0, 1.0], [1.0, 0.0]])
        assert user_similarity(P, 0, 1) == pytest.approx(0.70711, abs=1e-5)
        with pytest.raises(UnknownUserError):
            user_similarity(P, 0, 5)

    def test_model_similarity_unknown(self):
        model = RatingModel.fit([("a", "x", 4.0), ("b", "x", 2.0)], f=1)
        with pytest.raises(UnknownUserError):
            model.similarity("a", "nobody")


def _hand_prediction(model, a, j):
    """Independent evaluation of the neighborhood formula from the fitted factors."""
    dense = model.ratings.toarray()
    P = model.svd.P
    mu_u = model.svd.user_means
    cands = []
    for v in range(len(P)):
        if v == a or dense[v, j] == 0:
            continue
        na, nv = math.sqrt(P[a] @ P[a]), math.sqrt(P[v] @ P[v])
        s = 0.0 if na == 0 or nv == 0 else float(P[a] @ P[v]) / (na * nv)
        if s > 0:
            cands.append((-s, v))
    cands.sort()
    cands = cands[:model.k_nn]
    if not cands:
        value = mu_u[a] + model.svd.item_means[j] - model.svd.global_mean
    else:
        num = sum(-s * (dense[v, j] - mu_u[v]) for s, v in cands)
        value = mu_u[a] + num / sum(-s for s, _ in cands)
    return min(5.0, max(1.0, value))


class TestPredict:
    def test_duplicate_user_single_neighbor(self):
        trip = [("u", "a", 3.0), ("u", "b", 2.0), ("u", "c", 4.0),
                ("v", "a", 3.0), ("v", "b", 2.0), ("v", "c", 4.0), ("v", "i", 5.0)]
        model = RatingModel.fit(trip, f=2, k_nn=1)
        assert model.user_means[0] == 3.0
        # v has mean 3.5; deviation on i is 1.5
        assert model.predict("u", "i") == pytest.approx(3.0 + 1.5, abs=1e-12)

    def test_identical_users_example(self):
        # mu_u = mu_v = 3, v rated i as 5, identical latent vectors -> 5
        trip = [("u", "a", 3.0), ("v", "a", 1.0), ("v", "i", 5.0)]
        model = RatingModel.fit(trip, f=1, k_nn=30)
        model.svd.P[:] = 1.0
        model.svd.user_means[:] = 3.0
        model = RatingModel(model.user_ids, model.item_ids, model.ratings, model.svd, 30)
        assert model.predict("u", "i") == 5.0

    def test_cold_start(self):
        model = RatingModel.fit([("a", "x", 4.0), ("b", "x", 2.0), ("b", "y", 5.0)], f=1)
        assert model.predict("nobody", "nothing") == pytest.approx(11 / 3)
        assert model.predict("nobody", "y") == pytest.approx(5.0)
        assert model.predict("a", "nothing") == pytest.approx(4.0)

    def test_three_user_fixture(self):
        trip = [("u1", "i1", 5.0), ("u1", "i2", 3.0), ("u1", "i3", 4.0),
                ("u2", "i1", 4.0), ("u2", "i2", 2.0), ("u2", "i4", 5.0),
                ("u3", "i1", 1.0), ("u3", "i3", 5.0), ("u3", "i4", 2.0)]
        model = RatingModel.fit(trip, f=2, k_nn=2)
        for u in ("u1", "u2", "u3"):
            for i in ("i1", "i2", "i3", "i4"):
                a, j = model.user_index[u], model.item_index[i]
                assert abs(model.predict(u, i) - _hand_prediction(model, a, j)) <= 1e-12

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**31), st.integers(1, 10))
    def test_random_matches_hand_formula_and_clamps(self, seed, k):
        rng = np.random.default_rng(seed)
        M = rng.integers(1, 6, (8, 6)).astype(float)
        mask = rng.random(M.shape) < 0.6
        mask[:, 0] = True
        mask[0, :] = True
        model = RatingModel.fit(_triples(M, mask), f=3, k_nn=k)
        for a in range(8):
            for j in range(6):
                p = model.predict_index(a, j)
                assert 1.0 <= p <= 5.0
                assert abs(p - _hand_prediction(model, a, j)) <= 1e-12

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**31))
    def test_duplicate_reproduces_ratings(self, seed):
        rng = np.random.default_rng(seed)
        M = rng.uniform(1, 5, (7, 6))
        M = np.vstack([M, M[0]])  # user 7 duplicates user 0
        model = RatingModel.fit(_triples(M), f=4, k_nn=1, seed=seed)
        if sum(cosine(model.svd.P[0], model.svd.P[v]) >= 1 - 1e-12 for v in range(1, 7)):
            return  # another user is collinear; the tie rule could pick it
        for j in range(6):
            assert model.predict("u7", f"i{j}") == pytest.approx(M[0, j], abs=1e-9)

    def test_deterministic(self):
        M = rank_r(20, 15, 3, 2) + 3
        trip = _triples(np.clip(M, 1, 5), np.random.default_rng(0).random(M.shape) < 0.5)
        a = RatingModel.fit(trip, f=3, seed=4)
        b = RatingModel.fit(trip, f=3, seed=4)
        assert [a.predict(f"u{u}", f"i{i}") for u in range(20) for i in range(15)] == \
            [b.predict(f"u{u}", f"i{i}") for u in range(20) for i in range(15)]


class TestTopN:
    def _model(self):
        trip = [("a", "y", 4.0), ("b", "y", 4.0), ("c", "z", 4.0), ("d", "w", 2.0),
                ("d", "v", 4.0), ("a", "q", 4.0), ("e", "q", 4.0)]
        return RatingModel.fit(trip, f=2)

    def test_ties_by_popularity_then_id(self):
        model = self._model()
        # unknown user scores each item by its mean: y, z, v, q tie at 4
        ranked = model.top_n("stranger", n=10)
        assert [i for i, _ in ranked] == ["q", "y", "v", "z", "w"]

    def test_n_larger_than_unseen(self):
        model = self._model()
        assert len(model.top_n("a", n=50)) == len(model.item_ids) - 2

    def test_all_seen(self):
        model = self._model()
        assert model.top_n("a", seen=model.item_ids) == []

    def test_sorted(self):
        model = self._model()
        scores = [s for _, s in model.top_n("d", n=5)]
        assert scores == sorted(scores, reverse=True)


class TestBaselineMf:
    def _fixture(self):
        rng = np.random.default_rng(0)
        u, v = rng.uniform(1, 2, 20), rng.uniform(1, 2, 20)
        return _triples(np.outer(u, v))

    def test_lr_zero_keeps_initial_state(self):
        trip = self._fixture()
        mu = np.mean([t[2] for t in trip])
        model = baseline_mf(trip, f=4, epochs=3, lr=0.0, init_scale=0.0)
        assert all(model.predict(u, i) == pytest.approx(mu, abs=1e-12) for u, i, _ in trip[:50])
        nonzero = baseline_mf(trip, f=4, epochs=3, lr=0.0, seed=2)
        assert np.all(nonzero.bu == 0) and np.all(nonzero.bi == 0)

    def test_rmse_decreases(self):
        h = []
        baseline_mf(self._fixture(), f=5, epochs=5, history=h)
        assert all(b < a for a, b in zip(h, h[1:]))

    def test_rank_one_fits(self):
        h = []
        baseline_mf(self._fixture(), f=1, epochs=200, reg=0.0, history=h)
        assert h[-1] <= 0.05

    def test_divergence(self):
        with pytest.raises(FloatingPointError):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                baseline_mf(self._fixture(), f=5, epochs=50, lr=10.0)

    def test_empty(self):
        with pytest.raises(ValueError):
            baseline_mf([])
