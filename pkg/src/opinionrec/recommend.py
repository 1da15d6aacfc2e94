"""Truncated-SVD latent space + user-based collaborative filtering.

The (weighted) user x item rating matrix is mean-imputed, centered by user
means and factorized with a seeded randomized SVD. Users are compared by
cosine similarity of their latent vectors; a prediction is the user's mean
plus the similarity-weighted deviations of the most similar users who rated
the item.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

logger = logging.getLogger(__name__)


class UnknownUserError(KeyError):
    pass


def randomized_svd(a: np.ndarray, rank: int, n_iter: int = 5, oversample: int = 8,
                   seed: int = 0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Top-``rank`` SVD by randomized subspace iteration (Halko et al. style).

    Returns (U, s, Vt) with s non-increasing.
    """
    m, n = a.shape
    width = min(rank + oversample, m, n)
    rng = np.random.default_rng(seed)
    y = a @ rng.standard_normal((n, width))
    q, _ = np.linalg.qr(y)
    for _ in range(n_iter):
        z, _ = np.linalg.qr(a.T @ q)
        q, _ = np.linalg.qr(a @ z)
    b = q.T @ a
    ub, s, vt = np.linalg.svd(b, full_matrices=False)
    return (q @ ub)[:, :rank], s[:rank], vt[:rank]


@dataclass
class SvdResult:
    P: np.ndarray  # (U, f) user factors, U_f * sqrt(S_f)
    Q: np.ndarray  # (I, f) item factors, V_f * sqrt(S_f)
    singular_values: np.ndarray
    user_means: np.ndarray
    item_means: np.ndarray
    global_mean: float


def _means(m: sp.csr_matrix):
    obs = m.copy()
    obs.data = np.ones_like(obs.data)
    n_user = np.asarray(obs.sum(axis=1)).ravel()
    n_item = np.asarray(obs.sum(axis=0)).ravel()
    s_user = np.asarray(m.sum(axis=1)).ravel()
    s_item = np.asarray(m.sum(axis=0)).ravel()
    mu = m.data.sum() / m.nnz
    with np.errstate(invalid="ignore", divide="ignore"):
        mu_u = np.where(n_user > 0, s_user / n_user, mu)
        mu_i = np.where(n_item > 0, s_item / n_item, mu)
    return mu, mu_u, mu_i, n_item


def impute(matrix, center: bool = True) -> tuple[np.ndarray, float, np.ndarray, np.ndarray]:
    """Dense matrix with missing cells set to mu_u + mu_i - mu, optionally minus mu_u.

    A sparse input observes only its stored nonzero entries; a dense array is
    taken as fully observed.
    """
    if not sp.issparse(matrix):
        dense = np.array(matrix, dtype=float)
        if dense.size == 0:
            raise ValueError("rating matrix has no observed entries")
        mu_u, mu_i = dense.mean(axis=1), dense.mean(axis=0)
        mu = float(dense.mean())
        if center:
            dense -= mu_u[:, None]
        return dense, mu, mu_u, mu_i
    m = sp.csr_matrix(matrix)
    m.eliminate_zeros()
    if m.nnz == 0:
        raise ValueError("rating matrix has no observed entries")
    mu, mu_u, mu_i, _ = _means(m)
    dense = mu_u[:, None] + mu_i[None, :] - mu
    coo = m.tocoo()
    dense[coo.row, coo.col] = coo.data
    if center:
        dense -= mu_u[:, None]
    return dense, mu, mu_u, mu_i


def truncated_svd(matrix, f: int, iters: int = 5, seed: int = 0, center: bool = True,
                  oversample: int = 8) -> SvdResult:
    """Rank-``f`` factors of the imputed (and user-centered) matrix.

    In a sparse input stored zeros count as missing; ratings live in [1, 5]
    so no true rating is 0.
    """
    if f < 1:
        raise ValueError("f must be >= 1")
    dense, mu, mu_u, mu_i = impute(matrix, center)
    limit = min(dense.shape)
    if f > limit:
        warnings.warn(f"rank {f} exceeds min(U, I) = {limit}; clamped")
        f = limit
    u, s, vt = randomized_svd(dense, f, n_iter=max(iters, 5), oversample=oversample, seed=seed)
    root = np.sqrt(s)
    return SvdResult(u * root, vt.T * root, s, mu_u, mu_i, mu)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


class RatingModel:
    """Fitted recommender over string user and item ids."""

    def __init__(self, user_ids: list[str], item_ids: list[str], ratings: sp.csr_matrix,
                 svd: SvdResult, k_nn: int = 30):
        self.user_ids = list(user_ids)
        self.item_ids = list(item_ids)
        self.user_index = {u: i for i, u in enumerate(self.user_ids)}
        self.item_index = {i: j for j, i in enumerate(self.item_ids)}
        self.ratings = sp.csr_matrix(ratings)
        self.by_item = self.ratings.tocsc()
        self.svd = svd
        self.k_nn = k_nn
        self.item_counts = np.diff(self.by_item.indptr)
        norms = np.linalg.norm(svd.P, axis=1, keepdims=True)
        self._unit = np.divide(svd.P, norms, out=np.zeros_like(svd.P), where=norms > 0)

    @property
    def global_mean(self) -> float:
        return self.svd.global_mean

    @property
    def user_means(self) -> np.ndarray:
        return self.svd.user_means

    def item_bias(self, j: int) -> float:
        return float(self.svd.item_means[j] - self.svd.global_mean)

    @classmethod
    def fit(cls, triples, f: int = 20, k_nn: int = 30, seed: int = 0, iters: int = 5,
            user_ids=None, item_ids=None) -> "RatingModel":
        """Fit from (user, item, rating) triples; id order is first appearance unless given."""
        triples = list(triples)
        if not triples:
            raise ValueError("no ratings to fit")
        if user_ids is None:
            user_ids = list(dict.fromkeys(t[0] for t in triples))
        if item_ids is None:
            item_ids = list(dict.fromkeys(t[1] for t in triples))
        ui = {u: i for i, u in enumerate(user_ids)}
        ii = {x: j for j, x in enumerate(item_ids)}
        rows = np.array([ui[t[0]] for t in triples])
        cols = np.array([ii[t[1]] for t in triples])
        vals = np.array([float(t[2]) for t in triples])
        m = sp.csr_matrix((vals, (rows, cols)), shape=(len(user_ids), len(item_ids)))
        m.sum_duplicates()
        svd = truncated_svd(m, min(f, min(m.shape)), iters=iters, seed=seed)
        return cls(user_ids, item_ids, m, svd, k_nn)

    def similarity(self, u: str, v: str) -> float:
        try:
            a, b = self.user_index[u], self.user_index[v]
        except KeyError as exc:
            raise UnknownUserError(exc.args[0]) from None
        return cosine(self.svd.P[a], self.svd.P[b])

    def neighbors(self, a: int, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Top-k users (by latent cosine, > 0) among those who rated item j, excluding a."""
        lo, hi = self.by_item.indptr[j], self.by_item.indptr[j + 1]
        raters = self.by_item.indices[lo:hi]
        keep = raters != a
        raters = raters[keep]
        if raters.size == 0:
            return raters, np.empty(0)
        sims = self._unit[raters] @ self._unit[a]
        pos = sims > 0
        raters, sims = raters[pos], sims[pos]
        # descending similarity, ties by lower user index
        order = np.lexsort((raters, -sims))[: self.k_nn]
        return raters[order], sims[order]

    def predict_index(self, a: int, j: int) -> float:
        mu_u = self.user_means
        nbrs, sims = self.neighbors(a, j)
        if nbrs.size:
            r = self.ratings[nbrs, j].toarray().ravel()
            dev = sims @ (r - mu_u[nbrs]) / np.abs(sims).sum()
            value = mu_u[a] + dev
        else:
            value = mu_u[a] + self.item_bias(j)
        return float(np.clip(value, 1.0, 5.0))

    def predict(self, user: str, item: str) -> float:
        a = self.user_index.get(user)
        j = self.item_index.get(item)
        if a is None:
            value = self.global_mean + (self.item_bias(j) if j is not None else 0.0)
            return float(np.clip(value, 1.0, 5.0))
        if j is None:
            return float(np.clip(self.user_means[a], 1.0, 5.0))
        return self.predict_index(a, j)

    def top_n(self, user: str, n: int = 5, seen=None) -> list[tuple[str, float]]:
        """Best ``n`` unseen items; ties by popularity (descending) then item id."""
        if seen is None:
            a = self.user_index.get(user)
            seen = set()
            if a is not None:
                row = self.ratings[a]
                seen = {self.item_ids[j] for j in row.indices}
        seen = set(seen)
        scored = []
        for j, item in enumerate(self.item_ids):
            if item in seen:
                continue
            scored.append((-self.predict(user, item), -int(self.item_counts[j]), item))
        scored.sort()
        return [(item, -neg) for neg, _, item in scored[:n]]


def user_similarity(P: np.ndarray, u: int, v: int) -> float:
    if not (0 <= u < len(P) and 0 <= v < len(P)):
        raise UnknownUserError((u, v))
    return cosine(P[u], P[v])


# ---------------------------------------------------------------------------
# baseline

@dataclass
class MFModel:
    """Biased matrix factorization r = mu + b_u + b_i + p_u . q_i."""

    user_index: dict
    item_index: dict
    mu: float
    bu: np.ndarray
    bi: np.ndarray
    P: np.ndarray
    Q: np.ndarray

    def predict(self, user, item) -> float:
        a = self.user_index.get(user)
        j = self.item_index.get(item)
        value = self.mu
        if a is not None:
            value += self.bu[a]
        if j is not None:
            value += self.bi[j]
        if a is not None and j is not None:
            value += self.P[a] @ self.Q[j]
        return float(np.clip(value, 1.0, 5.0))


def baseline_mf(triples, f: int = 20, epochs: int = 20, lr: float = 0.01, reg: float = 0.02,
                seed: int = 0, init_scale: float = 0.1, history: list | None = None) -> MFModel:
    """Plain SGD matrix factorization over observed ratings, seeded visiting order."""
    triples = list(triples)
    if not triples:
        raise ValueError("no ratings to fit")
    users = list(dict.fromkeys(t[0] for t in triples))
    items = list(dict.fromkeys(t[1] for t in triples))
    ui = {u: i for i, u in enumerate(users)}
    ii = {x: j for j, x in enumerate(items)}
    rows = np.array([ui[t[0]] for t in triples])
    cols = np.array([ii[t[1]] for t in triples])
    vals = np.array([float(t[2]) for t in triples])
    rng = np.random.default_rng(seed)
    mu = float(vals.mean())
    bu = np.zeros(len(users))
    bi = np.zeros(len(items))
    P = rng.normal(0, init_scale, (len(users), f))
    Q = rng.normal(0, init_scale, (len(items), f))
    for epoch in range(epochs):
        for k in rng.permutation(len(vals)):
            a, j = rows[k], cols[k]
            err = vals[k] - (mu + bu[a] + bi[j] + P[a] @ Q[j])
            bu[a] += lr * (err - reg * bu[a])
            bi[j] += lr * (err - reg * bi[j])
            pa = P[a].copy()
            P[a] += lr * (err * Q[j] - reg * P[a])
            Q[j] += lr * (err * pa - reg * Q[j])
        pred = mu + bu[rows] + bi[cols] + np.einsum("ij,ij->i", P[rows], Q[cols])
        train_rmse = math.sqrt(float(np.mean((pred - vals) ** 2)))
        if not math.isfinite(train_rmse):
            raise FloatingPointError(f"matrix factorization diverged at epoch {epoch}")
        if history is not None:
            history.append(train_rmse)
    return MFModel(ui, ii, mu, bu, bi, P, Q)
