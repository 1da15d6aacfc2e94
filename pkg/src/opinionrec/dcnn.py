"""Two-channel convolutional network for aspect tagging and review polarity.

A word-embedding channel and a POS one-hot channel each run two parallel
same-padded convolutions (default widths 5 and 3). The four ReLU feature
maps concatenate per token. A softmax head tags every token B/I/O; a
sigmoid head reads the global max-pool of the same features and scores
polarity. Forward and backward passes are written out by hand in numpy.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .tagger import N_TAGS

logger = logging.getLogger(__name__)

BIO = ("B", "I", "O")
BIO_INDEX = {t: i for i, t in enumerate(BIO)}
PROB_FLOOR = 1e-12
_MAX_NLL = -math.log(PROB_FLOOR)


class StaleCacheError(RuntimeError):
    pass


class TrainingDiverged(FloatingPointError):
    pass


@dataclass
class ConvBlock:
    kernel: np.ndarray  # (F, width, C)
    bias: np.ndarray  # (F,)
    padding: str = "same"

    @property
    def width(self) -> int:
        return self.kernel.shape[1]


def _windows(x: np.ndarray, width: int, padding: str) -> np.ndarray:
    """(B, L, C) -> (B, L', width*C) sliding windows, zero-padded for 'same'."""
    if padding == "same":
        left = (width - 1) // 2
        x = np.pad(x, ((0, 0), (left, width - 1 - left), (0, 0)))
    elif padding != "valid":
        raise ValueError(f"unknown padding {padding!r}")
    if x.shape[1] < width:
        raise ValueError(f"sequence length {x.shape[1]} shorter than kernel width {width}")
    win = np.lib.stride_tricks.sliding_window_view(x, width, axis=1)  # (B, L', C, w)
    b, n, c, w = win.shape
    return win.transpose(0, 1, 3, 2).reshape(b, n, w * c)


def conv1d_forward(x: np.ndarray, block: ConvBlock) -> np.ndarray:
    """ReLU(bias + sum_j,c kernel[f,j,c] * x[t+j-offset, c]) for one (L, C) input."""
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError("input must be (L, C) with L >= 1")
    cols = _windows(x[None], block.width, block.padding)[0]
    f = block.kernel.shape[0]
    z = cols @ block.kernel.reshape(f, -1).T + block.bias
    return np.maximum(z, 0.0)


def global_max_pool(features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column maxima of an (L, F) matrix and their first argmax rows."""
    if features.shape[0] < 1:
        raise ValueError("need at least one row")
    idx = np.argmax(features, axis=0)
    return features[idx, np.arange(features.shape[1])], idx


@dataclass
class DcnnConfig:
    word_dim: int = 300
    pos_dim: int = N_TAGS
    word_filters: tuple[int, ...] = (128, 128)
    pos_filters: tuple[int, ...] = (32, 32)
    widths: tuple[int, ...] = (5, 3)
    dropout: float = 0.5
    seq_len: int = 100

    @property
    def feature_width(self) -> int:
        return sum(self.word_filters) + sum(self.pos_filters)

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in self.__dict__.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "DcnnConfig":
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


class DcnnModel:
    """Parameters of the network, keyed by name in a fixed order."""

    def __init__(self, config: DcnnConfig, params: dict[str, np.ndarray] | None = None,
                 seed: int = 0, dtype=np.float64):
        self.config = config
        self.version = 0
        self.params = params if params is not None else self._init_params(seed, dtype)

    def _blocks(self):
        cfg = self.config
        for channel, filters, depth in (("word", cfg.word_filters, cfg.word_dim),
                                        ("pos", cfg.pos_filters, cfg.pos_dim)):
            for f, w in zip(filters, cfg.widths):
                yield f"{channel}{w}", f, w, depth

    def _init_params(self, seed, dtype):
        rng = np.random.default_rng(seed)
        params = {}
        for name, f, w, depth in self._blocks():
            limit = math.sqrt(6.0 / (w * depth + f))
            params[f"{name}.kernel"] = rng.uniform(-limit, limit, (f, w, depth)).astype(dtype)
            params[f"{name}.bias"] = np.zeros(f, dtype)
        h = self.config.feature_width
        limit = math.sqrt(6.0 / (h + 3))
        params["tag.W"] = rng.uniform(-limit, limit, (h, 3)).astype(dtype)
        params["tag.b"] = np.zeros(3, dtype)
        limit = math.sqrt(6.0 / (h + 1))
        params["sent.W"] = rng.uniform(-limit, limit, (h, 1)).astype(dtype)
        params["sent.b"] = np.zeros(1, dtype)
        return params

    def block(self, name: str) -> ConvBlock:
        return ConvBlock(self.params[f"{name}.kernel"], self.params[f"{name}.bias"], "same")

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self.params.values())

    def touch(self):
        """Mark parameters as modified; invalidates earlier forward caches."""
        self.version += 1

    def copy(self) -> "DcnnModel":
        m = DcnnModel(self.config, {k: v.copy() for k, v in self.params.items()})
        return m


@dataclass
class ForwardCache:
    version: int
    lengths: np.ndarray
    cols: dict[str, np.ndarray]
    pre: dict[str, np.ndarray]
    features: np.ndarray  # (B, L, H) after ReLU, before dropout
    dropped: np.ndarray  # features after dropout (== features in eval mode)
    mask: np.ndarray | None
    tag_logits: np.ndarray
    pooled: np.ndarray
    pool_idx: np.ndarray
    sent_logit: np.ndarray


@dataclass
class ForwardResult:
    tag_probs: np.ndarray  # (B, L, 3) or (L, 3)
    sentiment_prob: np.ndarray  # (B,) or scalar
    cache: ForwardCache


def _softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _sigmoid(z):
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))),
                    np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))


def forward(model: DcnnModel, word_emb: np.ndarray, pos_emb: np.ndarray,
            train_mode: bool = False, seed: int = 0,
            lengths: np.ndarray | None = None) -> ForwardResult:
    """Run the network on one (L, d) pair of channel inputs or a (B, L, d) batch.

    ``lengths`` marks real tokens; max pooling only looks at positions
    before the length (at least position 0). Dropout uses an inverted mask
    drawn from ``seed`` and only in ``train_mode``.
    """
    single = word_emb.ndim == 2
    if single:
        word_emb, pos_emb = word_emb[None], pos_emb[None]
    if word_emb.shape[:2] != pos_emb.shape[:2]:
        raise ValueError(f"channel shapes disagree: {word_emb.shape} vs {pos_emb.shape}")
    cfg = model.config
    if word_emb.shape[2] != cfg.word_dim or pos_emb.shape[2] != cfg.pos_dim:
        raise ValueError("input depth does not match the model")
    b, L, _ = word_emb.shape
    if lengths is None:
        lengths = np.full(b, L)
    lengths = np.asarray(lengths)

    cols, pre, acts = {}, {}, []
    for name, f, w, _depth in model._blocks():
        x = word_emb if name.startswith("word") else pos_emb
        c = _windows(x, w, "same")
        kernel = model.params[f"{name}.kernel"]
        z = c @ kernel.reshape(f, -1).T + model.params[f"{name}.bias"]
        cols[name], pre[name] = c, z
        acts.append(np.maximum(z, 0.0))
    feats = np.concatenate(acts, axis=2)

    mask = None
    dropped = feats
    if train_mode and cfg.dropout > 0:
        keep = 1.0 - cfg.dropout
        mask = (np.random.default_rng(seed).random(feats.shape) < keep) / keep
        dropped = feats * mask

    tag_logits = dropped @ model.params["tag.W"] + model.params["tag.b"]
    tag_probs = _softmax(tag_logits)

    valid = np.arange(L)[None, :] < np.maximum(lengths, 1)[:, None]
    masked = np.where(valid[:, :, None], feats, -np.inf)
    pool_idx = np.argmax(masked, axis=1)  # (B, H)
    pooled = np.take_along_axis(feats, pool_idx[:, None, :], axis=1)[:, 0, :]
    sent_logit = pooled @ model.params["sent.W"][:, 0] + model.params["sent.b"][0]
    sent_prob = _sigmoid(sent_logit)

    cache = ForwardCache(model.version, lengths, cols, pre, feats, dropped, mask,
                         tag_logits, pooled, pool_idx, sent_logit)
    if single:
        return ForwardResult(tag_probs[0], float(sent_prob[0]), cache)
    return ForwardResult(tag_probs, sent_prob, cache)


def loss(tag_probs, gold_tags, sentiment_prob, gold_label, lam: float = 1.0) -> float:
    """Mean token cross-entropy plus ``lam`` times the polarity cross-entropy.

    ``gold_tags=None`` (synthetic samples) drops the token term and
    ``gold_label=None`` drops the polarity term. Probabilities are floored at
    1e-12 before the log.
    """
    total = 0.0
    if gold_tags is not None and len(gold_tags):
        gold = np.asarray([BIO_INDEX[t] if isinstance(t, str) else t for t in gold_tags])
        p = np.asarray(tag_probs)[np.arange(len(gold)), gold]
        total += float(np.mean(-np.log(np.maximum(p, PROB_FLOOR))))
    if gold_label is not None:
        q = sentiment_prob if int(gold_label) == 1 else 1.0 - sentiment_prob
        total += lam * -math.log(max(q, PROB_FLOOR))
    return total


def _tag_terms(cache: ForwardCache, gold: np.ndarray, has_tags: np.ndarray):
    """Per-sample mean token NLL and d/dlogits, both zero where tags are absent."""
    logits = cache.tag_logits
    b, L, _ = logits.shape
    valid = (np.arange(L)[None, :] < cache.lengths[:, None]) & has_tags[:, None]
    n = np.maximum(valid.sum(axis=1), 1)
    zmax = logits.max(axis=2, keepdims=True)
    lse = (zmax + np.log(np.exp(logits - zmax).sum(axis=2, keepdims=True)))[..., 0]
    gold_logit = np.take_along_axis(logits, gold[:, :, None], axis=2)[..., 0]
    nll = lse - gold_logit
    clamped = nll > _MAX_NLL
    nll = np.minimum(nll, _MAX_NLL)
    per_sample = np.where(valid, nll, 0.0).sum(axis=1) / n
    probs = _softmax(logits)
    onehot = np.zeros_like(probs)
    np.put_along_axis(onehot, gold[:, :, None], 1.0, axis=2)
    weight = np.where(valid & ~clamped, 1.0, 0.0) / n[:, None]
    return per_sample, (probs - onehot) * weight[:, :, None]


def _sent_terms(cache: ForwardCache, labels: np.ndarray, has_label: np.ndarray, lam: float):
    z = cache.sent_logit
    y = labels.astype(float)
    # -log sigmoid(z) for y=1, -log(1 - sigmoid(z)) for y=0, in stable form
    bce = np.logaddexp(0.0, z) - y * z
    clamped = bce > _MAX_NLL
    bce = np.minimum(bce, _MAX_NLL)
    grad = np.where(has_label & ~clamped, _sigmoid(z) - y, 0.0) * lam
    return np.where(has_label, lam * bce, 0.0), grad


def _gold_arrays(gold_tags, gold_labels, b, L):
    gold = np.full((b, L), BIO_INDEX["O"], dtype=int)
    has_tags = np.zeros(b, bool)
    for i, tags in enumerate(gold_tags):
        if tags is None:
            continue
        has_tags[i] = True
        idx = [BIO_INDEX[t] if isinstance(t, str) else int(t) for t in tags[:L]]
        gold[i, :len(idx)] = idx
    labels = np.zeros(b, dtype=int)
    has_label = np.zeros(b, bool)
    for i, lab in enumerate(gold_labels):
        if lab is not None:
            labels[i], has_label[i] = int(lab), True
    return gold, has_tags, labels, has_label


def batch_loss(cache: ForwardCache, gold_tags, gold_labels, lam: float = 1.0) -> float:
    """Mean over the batch of the per-sample objective, computed from logits."""
    b, L, _ = cache.tag_logits.shape
    gold, has_tags, labels, has_label = _gold_arrays(gold_tags, gold_labels, b, L)
    tag_l, _ = _tag_terms(cache, gold, has_tags)
    sent_l, _ = _sent_terms(cache, labels, has_label, lam)
    return float(np.mean(tag_l + sent_l))


def backward(model: DcnnModel, cache: ForwardCache, gold_tags, gold_labels,
             lam: float = 1.0, scale: float = 1.0) -> tuple[float, dict[str, np.ndarray]]:
    """Loss value and exact gradients of ``scale`` times the batch loss.

    Embedding inputs are frozen, so no input gradient is produced.
    """
    if cache.version != model.version:
        raise StaleCacheError("forward cache predates the latest parameter update")
    b, L, h = cache.features.shape
    gold, has_tags, labels, has_label = _gold_arrays(gold_tags, gold_labels, b, L)
    tag_l, d_logits = _tag_terms(cache, gold, has_tags)
    sent_l, d_sent = _sent_terms(cache, labels, has_label, lam)
    value = float(np.mean(tag_l + sent_l))

    s = scale / b
    d_logits = d_logits * s
    d_sent = d_sent * s
    p = model.params
    grads = {}
    grads["tag.W"] = np.einsum("blh,blk->hk", cache.dropped, d_logits)
    grads["tag.b"] = d_logits.sum(axis=(0, 1))
    grads["sent.W"] = (cache.pooled.T @ d_sent)[:, None]
    grads["sent.b"] = np.array([d_sent.sum()])

    d_feats = d_logits @ p["tag.W"].T
    if cache.mask is not None:
        d_feats = d_feats * cache.mask
    d_pooled = d_sent[:, None] * p["sent.W"][:, 0][None, :]
    bi, hi = np.meshgrid(np.arange(b), np.arange(h), indexing="ij")
    np.add.at(d_feats, (bi, cache.pool_idx, hi), d_pooled)

    offset = 0
    for name, f, w, depth in model._blocks():
        dz = d_feats[:, :, offset:offset + f] * (cache.pre[name] > 0)
        offset += f
        grads[f"{name}.kernel"] = np.einsum("blk,blf->fk", cache.cols[name], dz).reshape(f, w, depth)
        grads[f"{name}.bias"] = dz.sum(axis=(0, 1))
    return value, {k: grads[k] for k in p}


# ---------------------------------------------------------------------------
# data and training

@dataclass
class Sample:
    """One network input. ``tags`` is None for SMOTE synthetics, ``label`` None when unlabeled."""

    word: np.ndarray  # (L, d_w)
    pos: np.ndarray  # (L, 45)
    length: int
    tags: list | None = None
    label: int | None = None


def stack(samples: list[Sample]):
    word = np.stack([s.word for s in samples])
    pos = np.stack([s.pos for s in samples])
    lengths = np.array([s.length for s in samples])
    return word, pos, lengths, [s.tags for s in samples], [s.label for s in samples]


@dataclass
class TrainReport:
    epoch_losses: list[float] = field(default_factory=list)
    steps: int = 0


class Adam:
    def __init__(self, params: dict[str, np.ndarray], lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for k, g in grads.items():
            self.m[k] = self.beta1 * self.m[k] + (1 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1 - self.beta2) * g * g
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def train(model: DcnnModel, dataset: list[Sample], epochs: int = 10, batch_size: int = 32,
          lr: float = 1e-3, seed: int = 0, lam: float = 1.0, callback=None) -> TrainReport:
    """Mini-batch Adam over seeded shuffles; deterministic given ``seed``."""
    if not dataset:
        raise ValueError("empty training set")
    rng = np.random.default_rng(seed)
    opt = Adam(model.params, lr=lr)
    report = TrainReport()
    n = len(dataset)
    for epoch in range(epochs):
        order = rng.permutation(n)
        total, count = 0.0, 0
        for start in range(0, n, batch_size):
            batch = [dataset[i] for i in order[start:start + batch_size]]
            word, pos, lengths, tags, labels = stack(batch)
            res = forward(model, word, pos, train_mode=True,
                          seed=int(rng.integers(2**63)), lengths=lengths)
            value, grads = backward(model, res.cache, tags, labels, lam)
            if not math.isfinite(value):
                raise TrainingDiverged(
                    f"non-finite loss {value} at epoch {epoch}, step {report.steps}")
            opt.step(model.params, grads)
            model.touch()
            report.steps += 1
            total += value * len(batch)
            count += len(batch)
        report.epoch_losses.append(total / count)
        logger.info("epoch %d loss %.6f", epoch, report.epoch_losses[-1])
        if callback is not None and callback(epoch, model, report):
            break
    return report


def predict(model: DcnnModel, samples: list[Sample], batch_size: int = 256):
    """Eval-mode argmax tags (list of int arrays, trimmed to length) and polarity probabilities."""
    tags, probs = [], []
    for start in range(0, len(samples), batch_size):
        batch = samples[start:start + batch_size]
        word, pos, lengths, _, _ = stack(batch)
        res = forward(model, word, pos, lengths=lengths)
        best = res.tag_probs.argmax(axis=2)
        tags.extend(best[i, :lengths[i]] for i in range(len(batch)))
        probs.extend(res.sentiment_prob.tolist())
    return tags, np.array(probs)


# ---------------------------------------------------------------------------
# gradient checking

@dataclass
class GradCheckReport:
    max_rel_error: float = 0.0
    worst: tuple[str, tuple] | None = None
    n_checked: int = 0
    per_param: dict[str, float] = field(default_factory=dict)
    tolerance: float = 1e-4

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tolerance

    @property
    def offending(self) -> tuple[str, tuple] | None:
        return None if self.passed else self.worst


def relative_error(analytic: float, numeric: float, floor: float = 1e-7) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def gradient_check(model: DcnnModel, samples: list[Sample], eps: float = 1e-5,
                   tolerance: float = 1e-4, lam: float = 1.0, train_mode: bool = False,
                   dropout_seed: int = 0, names=None, max_entries: int = 10_000,
                   seed: int = 0, grad_fn=None) -> GradCheckReport:
    """Compare analytic gradients with central differences of the batch loss.

    Relative error is ``|a - n| / max(|a|, |n|, 1e-7)``. With more than
    ``max_entries`` scalar parameters a seeded subsample is checked.
    ``grad_fn(model, cache, tags, labels, lam)`` overrides the analytic
    gradient (negative controls).
    """
    if names is None:
        names = list(model.params)
    if not names or not model.params:
        return GradCheckReport(tolerance=tolerance)
    word, pos, lengths, tags, labels = stack(samples)

    def objective():
        res = forward(model, word, pos, train_mode, dropout_seed, lengths)
        return res, batch_loss(res.cache, tags, labels, lam)

    res, _ = objective()
    _, grads = (grad_fn or backward)(model, res.cache, tags, labels, lam)

    entries = [(n, i) for n in names for i in np.ndindex(model.params[n].shape)]
    if len(entries) > max_entries:
        rng = np.random.default_rng(seed)
        pick = np.sort(rng.choice(len(entries), max_entries, replace=False))
        entries = [entries[i] for i in pick]

    report = GradCheckReport(tolerance=tolerance)
    for name, idx in entries:
        p = model.params[name]
        orig = p[idx]
        p[idx] = orig + eps
        f_plus = objective()[1]
        p[idx] = orig - eps
        f_minus = objective()[1]
        p[idx] = orig
        numeric = (f_plus - f_minus) / (2 * eps)
        err = relative_error(float(grads[name][idx]), numeric)
        report.n_checked += 1
        report.per_param[name] = max(report.per_param.get(name, 0.0), err)
        if err > report.max_rel_error:
            report.max_rel_error = err
            report.worst = (name, idx)
    return report
