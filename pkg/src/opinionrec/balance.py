"""SMOTE oversampling of under-represented polarity classes."""

from __future__ import annotations

import warnings
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .corpus import PolarityLabel, TokenSeq
from .embeddings import EmbeddingTable
from .rng import Lcg64
from .tagger import N_TAGS, one_hot_matrix


@dataclass
class FeatureSample:
    features: np.ndarray
    label: PolarityLabel
    synthetic: bool = False
    # provenance of synthetic samples (indices into the input list)
    base: int | None = None
    neighbor: int | None = None
    delta: float | None = None


def nearest_neighbors(points: np.ndarray, k: int) -> np.ndarray:
    """Row i: indices of the k nearest other rows, by Euclidean distance then index."""
    n = len(points)
    d2 = np.empty((n, n))
    for i in range(n):
        diff = points - points[i]
        d2[i] = np.einsum("ij,ij->i", diff, diff)
    np.fill_diagonal(d2, np.inf)
    # stable sort keeps the lower index first among equal distances
    return np.argsort(d2, axis=1, kind="stable")[:, :k]


def smote(samples: list[FeatureSample], k: int = 5, seed: int = 0) -> list[FeatureSample]:
    """Append synthetic samples until every class matches the largest one.

    Base samples cycle round-robin through each minority class. For each
    synthetic sample the generator draws the interpolation factor first and
    then the neighbor slot among the base's ``k`` nearest same-class samples.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    by_label: dict[PolarityLabel, list[int]] = defaultdict(list)
    for idx, s in enumerate(samples):
        by_label[s.label].append(idx)
    if len(by_label) < 2:
        raise ValueError("smote needs at least two classes")
    dims = {s.features.shape for s in samples}
    if len(dims) != 1:
        raise ValueError("all samples must share one feature dimension")

    target = max(len(v) for v in by_label.values())
    gen = Lcg64(seed)
    out = list(samples)
    for label in sorted(by_label):
        members = by_label[label]
        deficit = target - len(members)
        if deficit == 0:
            continue
        if len(members) < 2:
            raise ValueError("insufficient minority samples")
        k_eff = k
        if k >= len(members):
            k_eff = len(members) - 1
            warnings.warn(f"k={k} >= minority size {len(members)}; using k={k_eff}")
        points = np.stack([samples[i].features for i in members])
        nbrs = nearest_neighbors(points, k_eff)
        for j in range(deficit):
            b = j % len(members)
            delta = gen.uniform()
            n = nbrs[b, gen.randbelow(k_eff)]
            x = points[b] + delta * (points[n] - points[b])
            out.append(FeatureSample(x, label, True, members[b], members[n], delta))
    return out


def embed_for_smote(seq: TokenSeq, emb: EmbeddingTable, length: int) -> FeatureSample:
    """Flatten the (length x d_w) word matrix and (length x 45) POS matrix into one vector."""
    if seq.pos is None:
        raise ValueError("sequence has no POS tags")
    if seq.label is None:
        raise ValueError("sequence has no polarity label")
    word = emb.embed(seq.stems, length)
    pos = one_hot_matrix(seq.pos, length)
    return FeatureSample(np.concatenate([word.ravel(), pos.ravel()]), seq.label)


def split_features(features: np.ndarray, length: int, word_dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of the flattening in :func:`embed_for_smote`."""
    cut = length * word_dim
    return features[:cut].reshape(length, word_dim), features[cut:].reshape(length, N_TAGS)
