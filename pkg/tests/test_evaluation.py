"""Splitting and metrics against hand values and brute-force oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from opinionrec.evaluation import (ConfusionCounts, EvalPair, mae, rmse, sentiment_accuracy,
                                   split, split_indices, tag_f1)


def _pairs(pred, actual):
    return [EvalPair("u", "i", p, a) for p, a in zip(pred, actual)]


# oracles written against numpy arrays, independent of the library loops

def oracle_mae(pred, actual):
    return float(np.mean(np.abs(np.asarray(pred) - np.asarray(actual))))


def oracle_rmse(pred, actual):
    return float(np.sqrt(np.mean((np.asarray(pred) - np.asarray(actual)) ** 2)))


def oracle_f1(pred, gold):
    p = np.isin(np.asarray(pred), ["B", "I"])
    g = np.isin(np.asarray(gold), ["B", "I"])
    tp, fp, fn = int(np.sum(p & g)), int(np.sum(p & ~g)), int(np.sum(~p & g))
    prec = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 0.0
    return prec, rec, (2 * prec * rec / (prec + rec) if prec + rec else 0.0)


def oracle_accuracy(pred, gold):
    return float(np.mean(np.asarray(pred) == np.asarray(gold)))


def random_case(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 200))
    pred, actual = rng.uniform(1, 5, n), rng.integers(1, 6, n).astype(float)
    tags_p = list(rng.choice(["B", "I", "O"], n))
    tags_g = list(rng.choice(["B", "I", "O"], n))
    lab_p, lab_g = list(rng.integers(0, 2, n)), list(rng.integers(0, 2, n))
    return pred, actual, tags_p, tags_g, lab_p, lab_g


class TestSplit:
    def test_ten_records(self):
        train, test = split(list(range(10)), 0.8, seed=1)
        assert len(train) == 8 and len(test) == 2

    def test_same_seed(self):
        assert split(list("abcdefgh"), seed=3) == split(list("abcdefgh"), seed=3)

    @given(st.integers(2, 300), st.integers(0, 2**63), st.floats(0.01, 0.99))
    def test_partition(self, n, seed, frac):
        train, test = split_indices(n, frac, seed)
        assert sorted(train + test) == list(range(n))
        assert not set(train) & set(test)
        assert len(train) == math.floor(n * frac)

    @pytest.mark.parametrize("args", [([1], 0.8), ([1, 2], 0.0), ([1, 2], 1.0)])
    def test_errors(self, args):
        with pytest.raises(ValueError):
            split(*args)


class TestRatingMetrics:
    def test_perfect(self):
        p = _pairs([1, 2, 3], [1, 2, 3])
        assert mae(p) == 0.0 and rmse(p) == 0.0

    def test_constant_error(self):
        p = _pairs([1, 2], [3, 4])
        assert mae(p) == 2.0 and rmse(p) == 2.0

    def test_hand_values(self):
        p = _pairs([2, 4], [3, 1])
        assert mae(p) == 2.0
        assert abs(rmse(p) - 2.2360680) < 1e-7

    def test_empty(self):
        with pytest.raises(ValueError):
            mae([])
        with pytest.raises(ValueError):
            rmse([])


class TestTagF1:
    def test_identical(self):
        s = tag_f1(list("OBIO"), list("OBIO"))
        assert s.f1 == 1.0

    def test_no_predicted_positives(self):
        s = tag_f1(list("OOO"), list("BIO"))
        assert s.precision == 0.0 and s.f1 == 0.0

    def test_hand_counts(self):
        s = tag_f1(list("BBIO"), list("BIOI"))
        assert s.counts == ConfusionCounts(tp=2, fp=1, fn=1, tn=0)
        assert s.precision == s.recall == s.f1 == pytest.approx(2 / 3, abs=1e-15)

    def test_index_tags(self):
        assert tag_f1([0, 1, 2], ["B", "I", "O"]).f1 == 1.0

    def test_mismatch(self):
        with pytest.raises(ValueError):
            tag_f1(["B"], ["B", "O"])

    @given(st.lists(st.tuples(st.sampled_from("BIO"), st.sampled_from("BIO")), max_size=40))
    def test_mirror(self, rows):
        p, g = [r[0] for r in rows], [r[1] for r in rows]
        a, b = tag_f1(p, g), tag_f1(g, p)
        assert a.precision == b.recall and a.recall == b.precision and a.f1 == b.f1
        assert sum(vars(a.counts).values()) == len(rows)


class TestAccuracy:
    @pytest.mark.parametrize("pred,gold,acc", [([1, 0], [1, 0], 1.0), ([1, 0], [0, 1], 0.0),
                                               ([1, 1, 0, 0], [1, 1, 0, 1], 0.75)])
    def test_examples(self, pred, gold, acc):
        assert sentiment_accuracy(pred, gold) == acc

    def test_empty(self):
        with pytest.raises(ValueError):
            sentiment_accuracy([], [])


@pytest.mark.parametrize("seed", range(100))
def test_metrics_match_oracles(seed):
    pred, actual, tp, tg, lp, lg = random_case(seed)
    pairs = _pairs(pred, actual)
    assert abs(mae(pairs) - oracle_mae(pred, actual)) <= 1e-12
    assert abs(rmse(pairs) - oracle_rmse(pred, actual)) <= 1e-12
    assert rmse(pairs) >= mae(pairs)
    s = tag_f1(tp, tg)
    for got, want in zip((s.precision, s.recall, s.f1), oracle_f1(tp, tg)):
        assert abs(got - want) <= 1e-12
    assert abs(sentiment_accuracy(lp, lg) - oracle_accuracy(lp, lg)) <= 1e-12
