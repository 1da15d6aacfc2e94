"""Train/test splitting and evaluation metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .rng import Lcg64


class EvalPair(NamedTuple):
    user: str
    item: str
    predicted: float
    actual: float


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class TagScores:
    precision: float
    recall: float
    f1: float
    counts: ConfusionCounts


def split(records: Sequence, train_fraction: float = 0.8, seed: int = 0) -> tuple[list, list]:
    """Seeded shuffle, then the first floor(n * fraction) records train."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    if len(records) < 2:
        raise ValueError("need at least two records to split")
    shuffled = Lcg64(seed).shuffle(list(records))
    cut = int(math.floor(len(shuffled) * train_fraction))
    return shuffled[:cut], shuffled[cut:]


def split_indices(n: int, train_fraction: float = 0.8, seed: int = 0) -> tuple[list[int], list[int]]:
    return split(range(n), train_fraction, seed)


def _check(pairs):
    if not pairs:
        raise ValueError("no evaluation pairs")


def mae(pairs: Sequence[EvalPair]) -> float:
    _check(pairs)
    return sum(abs(p.predicted - p.actual) for p in pairs) / len(pairs)


def rmse(pairs: Sequence[EvalPair]) -> float:
    _check(pairs)
    return math.sqrt(sum((p.predicted - p.actual) ** 2 for p in pairs) / len(pairs))


def _positive(tag) -> bool:
    return tag in ("B", "I", 0, 1)


def tag_f1(pred: Sequence, gold: Sequence) -> TagScores:
    """Token-level precision/recall/F1 with B and I as the positive class.

    Tags may be strings (B/I/O) or indices in that order. 0/0 counts as 0.
    """
    if len(pred) != len(gold):
        raise ValueError("prediction and gold sequences differ in length")
    tp = fp = fn = tn = 0
    for p, g in zip(pred, gold):
        pp, gp = _positive(p), _positive(g)
        if pp and gp:
            tp += 1
        elif pp:
            fp += 1
        elif gp:
            fn += 1
        else:
            tn += 1
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return TagScores(precision, recall, f1, ConfusionCounts(tp, fp, fn, tn))


def sentiment_accuracy(pred: Sequence, gold: Sequence) -> float:
    if len(pred) != len(gold):
        raise ValueError("prediction and gold sequences differ in length")
    if not gold:
        raise ValueError("no labels to score")
    return sum(int(p) == int(g) for p, g in zip(pred, gold)) / len(gold)
