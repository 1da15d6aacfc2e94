"""Aspect mentions, lexicon scoring, clustering and cluster weights.

Tagged reviews become aspect mentions; each mention gets a star-scale
rating from opinion words around it. Mention head stems are clustered by
embedding similarity, per-(user, item, cluster) ratings are collected in a
sparse tensor, and a masked CP decomposition of that tensor gives every
cluster a global weight. The weights blend aspect ratings with the
overall star rating into the matrix the recommender factorizes.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Mapping, NamedTuple

import numpy as np


# ---------------------------------------------------------------------------
# spans


class Span(NamedTuple):
    start: int
    end: int
    head: str


def decode_bio(tags, stems: list[str]) -> list[Span]:
    """Maximal B I* runs; a stray I (after O or at position 0) opens a new span."""
    if len(tags) != len(stems):
        raise ValueError("tags and tokens differ in length")
    spans = []
    start = None
    for t, tag in enumerate(tags):
        if tag == "B" or (tag == "I" and start is None):
            if start is not None:
                spans.append(Span(start, t, stems[t - 1]))
            start = t
        elif tag == "O":
            if start is not None:
                spans.append(Span(start, t, stems[t - 1]))
            start = None
    if start is not None:
        spans.append(Span(start, len(tags), stems[-1]))
    return spans


def encode_bio(length: int, spans) -> list[str]:
    tags = ["O"] * length
    for span in spans:
        start, end = span[0], span[1]
        tags[start] = "B"
        for t in range(start + 1, end):
            tags[t] = "I"
    return tags


def match_terms(stems: list[str], terms: list[tuple[str, ...]]) -> list[Span]:
    """Greedy left-to-right longest match of known aspect terms (as stem tuples)."""
    by_first = defaultdict(list)
    for term in terms:
        by_first[term[0]].append(term)
    for first in by_first:
        by_first[first].sort(key=len, reverse=True)
    spans = []
    t = 0
    while t < len(stems):
        for term in by_first.get(stems[t], ()):
            if tuple(stems[t:t + len(term)]) == term:
                spans.append(Span(t, t + len(term), stems[t + len(term) - 1]))
                t += len(term)
                break
        else:
            t += 1
    return spans


# ---------------------------------------------------------------------------
# lexicon scoring


@dataclass
class OpinionLexicon:
    polarity: dict[str, float]
    negations: frozenset[str] = frozenset({"not", "no", "never"})

    def __post_init__(self):
        for term, p in self.polarity.items():
            if not (math.isfinite(p) and -1.0 <= p <= 1.0):
                raise ValueError(f"polarity of {term!r} outside [-1, 1]")


def _data(name: str) -> Path:
    return Path(str(resources.files("opinionrec") / "data" / name))


def load_opinion_lexicon(path=None, negations_path=None) -> OpinionLexicon:
    polarity = {}
    with open(path or _data("opinion_lexicon.tsv"), encoding="utf-8") as fh:
        for line in fh:
            if not line.strip() or line.startswith("#"):
                continue
            stem, value = line.split("\t")
            polarity[stem.strip()] = float(value)
    negations = set()
    with open(negations_path or _data("negations.txt"), encoding="utf-8") as fh:
        for line in fh:
            word = line.split("#", 1)[0].strip()
            if word:
                negations.add(word)
    return OpinionLexicon(polarity, frozenset(negations))


def score_mention(span, stems: list[str], lexicon: OpinionLexicon, window: int = 4) -> float:
    """tanh of summed polarities within ``window`` tokens either side of the span.

    A polarity flips sign when a negation word sits in the two tokens before it.
    """
    start, end = span[0], span[1]
    if not 0 <= start < end <= len(stems):
        raise ValueError(f"span {start}:{end} outside sequence of {len(stems)}")
    positions = list(range(max(0, start - window), start)) + \
        list(range(end, min(len(stems), end + window)))
    raw = 0.0
    for t in positions:
        p = lexicon.polarity.get(stems[t])
        if p is None:
            continue
        if any(stems[j] in lexicon.negations for j in range(max(0, t - 2), t)):
            p = -p
        raw += p
    return math.tanh(raw)


def star_rating(score: float) -> float:
    return 3.0 + 2.0 * score


@dataclass
class AspectMention:
    user_id: str
    item_id: str
    start: int
    end: int
    head: str
    score: float

    @property
    def rating(self) -> float:
        return star_rating(self.score)


# ---------------------------------------------------------------------------
# clustering


@dataclass
class AspectCluster:
    id: int
    members: list[str]
    medoid: str
    weight: float = 0.0


def _cos(a, b) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(a @ b / (na * nb))


def _medoid(members: list[str], vec: Callable[[str], np.ndarray]) -> str:
    best, best_score = None, -math.inf
    for m in sorted(members):
        score = sum(_cos(vec(m), vec(o)) for o in members) / len(members)
        if score > best_score:
            best, best_score = m, score
    return best


def cluster_aspects(counts: Mapping[str, int], vectors, theta: float = 0.6) -> list[AspectCluster]:
    """Greedy single pass over stems by descending frequency (ties by stem).

    A stem joins the first cluster whose medoid has cosine >= ``theta``,
    otherwise it founds a new cluster. ``vectors`` maps stem -> vector or is
    a callable.
    """
    vec = vectors if callable(vectors) else vectors.__getitem__
    clusters: list[AspectCluster] = []
    for stem in sorted(counts, key=lambda s: (-counts[s], s)):
        v = vec(stem)
        for c in clusters:
            if _cos(v, vec(c.medoid)) >= theta:
                c.members.append(stem)
                c.medoid = _medoid(c.members, vec)
                break
        else:
            clusters.append(AspectCluster(len(clusters), [stem], stem))
    return clusters


def cluster_lookup(clusters: list[AspectCluster]) -> dict[str, int]:
    return {m: c.id for c in clusters for m in c.members}


# ---------------------------------------------------------------------------
# tensor


@dataclass
class AspectTensor:
    user_ids: list[str]
    item_ids: list[str]
    n_clusters: int
    index: np.ndarray  # (n, 3) integer (user, item, cluster)
    values: np.ndarray  # (n,) mean star ratings

    @property
    def shape(self) -> tuple[int, int, int]:
        return len(self.user_ids), len(self.item_ids), self.n_clusters

    def mask(self) -> np.ndarray:
        m = np.zeros(self.shape, bool)
        if len(self.values):
            m[tuple(self.index.T)] = True
        return m

    def dense(self) -> np.ndarray:
        d = np.zeros(self.shape)
        if len(self.values):
            d[tuple(self.index.T)] = self.values
        return d

    def scaled(self, factor: float) -> "AspectTensor":
        return AspectTensor(self.user_ids, self.item_ids, self.n_clusters, self.index,
                            self.values * factor)

    @classmethod
    def from_dense(cls, values: np.ndarray, mask: np.ndarray | None = None) -> "AspectTensor":
        if mask is None:
            mask = np.ones(values.shape, bool)
        idx = np.argwhere(mask)
        u, i, k = values.shape
        return cls([str(x) for x in range(u)], [str(x) for x in range(i)], k, idx,
                   values[mask].astype(float))


def build_tensor(mentions: list[AspectMention], clusters: list[AspectCluster]) -> AspectTensor:
    lookup = cluster_lookup(clusters)
    users = list(dict.fromkeys(m.user_id for m in mentions))
    items = list(dict.fromkeys(m.item_id for m in mentions))
    ui = {u: n for n, u in enumerate(users)}
    ii = {x: n for n, x in enumerate(items)}
    sums = defaultdict(float)
    counts = defaultdict(int)
    for m in mentions:
        key = (ui[m.user_id], ii[m.item_id], lookup[m.head])
        sums[key] += m.rating
        counts[key] += 1
    keys = sorted(sums)
    index = np.array(keys, dtype=int).reshape(-1, 3)
    values = np.array([sums[k] / counts[k] for k in keys])
    return AspectTensor(users, items, len(clusters), index, values)


# ---------------------------------------------------------------------------
# CP weights


@dataclass
class CpResult:
    weights: np.ndarray
    factors: tuple[np.ndarray, np.ndarray, np.ndarray]
    iterations: int
    residual: float  # ||T - T_hat|| / ||T|| over observed entries
    history: list[float] = field(default_factory=list)


def _solve_mode(index, values, factors, mode, n_rows, rank, damping):
    others = [m for m in range(3) if m != mode]
    z = factors[others[0]][index[:, others[0]]] * factors[others[1]][index[:, others[1]]]
    rows = index[:, mode]
    gram = np.zeros((n_rows, rank, rank))
    np.add.at(gram, rows, z[:, :, None] * z[:, None, :])
    rhs = np.zeros((n_rows, rank))
    np.add.at(rhs, rows, z * values[:, None])
    # ridge relative to the data scale keeps the fit invariant to rescaling
    level = float(np.einsum("nr,nr->", z, z)) / (n_rows * rank)
    gram += damping * (level if level > 0 else 1.0) * np.eye(rank)
    return np.linalg.solve(gram, rhs[:, :, None])[:, :, 0]


def _balance(factors):
    """Give each component equal column norms across the three modes."""
    norms = [np.linalg.norm(f, axis=0) for f in factors]
    total = np.prod(norms, axis=0)
    live = total > 0
    out = []
    for f, n in zip(factors, norms):
        scale = np.ones_like(n)
        scale[live] = np.cbrt(total[live]) / n[live]
        out.append(f * scale)
    return out


def cp_fit(tensor: AspectTensor, rank: int = 3, iters: int = 200, seed: int = 0,
           tol: float = 1e-12, damping: float = 1e-9) -> CpResult:
    """Masked CP-ALS: every least-squares solve only sees observed entries."""
    if rank < 1:
        raise ValueError("rank must be >= 1")
    U, I, K = tensor.shape
    if K < 1:
        raise ValueError("tensor needs at least one cluster")
    rng = np.random.default_rng(seed)
    factors = [rng.random((n, rank)) for n in (U, I, K)]
    idx, vals = tensor.index, tensor.values
    norm_t = float(np.linalg.norm(vals))
    history = []
    it = 0
    if len(vals) == 0:
        return CpResult(np.full(K, 1.0 / K), tuple(factors), 0, 0.0)
    for it in range(1, iters + 1):
        for mode, n in enumerate((U, I, K)):
            f = _solve_mode(idx, vals, factors, mode, n, rank, damping)
            if not np.all(np.isfinite(f)):
                raise FloatingPointError(f"CP-ALS produced non-finite factors at iteration {it}")
            factors[mode] = f
        factors = _balance(factors)
        fit = np.prod([factors[m][idx[:, m]] for m in range(3)], axis=0).sum(axis=1)
        resid = float(np.linalg.norm(vals - fit)) / (norm_t or 1.0)
        history.append(resid)
        if len(history) > 1 and abs(history[-2] - resid) <= tol:
            break
    C = factors[2]
    sq = np.einsum("kr,kr->k", C, C)
    total = sq.sum()
    weights = sq / total if total > 0 else np.full(K, 1.0 / K)
    return CpResult(weights, tuple(factors), it, history[-1], history)


def cp_weights(tensor: AspectTensor, rank: int = 3, iters: int = 200, seed: int = 0) -> np.ndarray:
    """Cluster weights w_k = ||C_k||^2 / sum_j ||C_j||^2 from a masked CP fit."""
    return cp_fit(tensor, rank, iters, seed).weights


def weighted_rating_matrix(tensor: AspectTensor, weights, overall: Mapping[tuple[str, str], float],
                           alpha: float = 0.5) -> dict[tuple[str, str], float]:
    """Blend overall stars with the weight-averaged aspect ratings per (user, item).

    The aspect average renormalizes over the clusters observed for that pair.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    weights = np.asarray(weights, dtype=float)
    num = defaultdict(float)
    den = defaultdict(float)
    plain = defaultdict(list)
    for (u, i, k), v in zip(tensor.index, tensor.values):
        key = (tensor.user_ids[u], tensor.item_ids[i])
        num[key] += weights[k] * v
        den[key] += weights[k]
        plain[key].append(v)
    out = {}
    for key in dict.fromkeys(list(overall) + list(plain)):
        aspect = None
        if key in plain:
            aspect = num[key] / den[key] if den[key] > 0 else float(np.mean(plain[key]))
        r = overall.get(key)
        if aspect is None:
            out[key] = float(r)
        elif r is None:
            out[key] = aspect
        else:
            out[key] = alpha * r + (1.0 - alpha) * aspect
    return out

