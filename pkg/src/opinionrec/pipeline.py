"""Pipeline stages. Each reads the artifacts of earlier stages from ``config.out``.

Order: preprocess -> train -> extract -> recommend -> evaluate. Every artifact
records the config hash and seed; a stage refuses inputs written under a
different configuration.
"""

from __future__ import annotations

import json
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import artifacts
from .aspects import (AspectCluster, AspectMention, build_tensor, cluster_aspects,
                      cluster_lookup, cp_fit, decode_bio, encode_bio, load_opinion_lexicon,
                      match_terms, score_mention, weighted_rating_matrix)
from .balance import FeatureSample, smote, split_features
from .config import ConfigError, PipelineConfig
from .corpus import (Token, TokenSeq, Vocabulary, build_vocabulary, derive_label,
                     load_contractions, load_reviews, load_stopwords, normalize)
from .dcnn import BIO, DcnnConfig, DcnnModel, Sample, predict, train
from .embeddings import EmbeddingTable, load_word2vec_text
from .evaluation import EvalPair, mae, rmse, sentiment_accuracy, split_indices, tag_f1
from .recommend import RatingModel, baseline_mf
from .tagger import load_lexicon, one_hot_matrix, tag_sequence

logger = logging.getLogger(__name__)

CORPUS = "corpus.jsonl"
VOCAB = "vocab.tsv"
PREPROCESS = "preprocess.json"
MODEL = "model.json"
TRAIN_REPORT = "train_report.json"
ASPECTS = "aspects.tsv"
CLUSTERS = "clusters.json"
RATING_MODEL = "rating_model.json"
RECOMMENDATIONS = "recommendations.tsv"
METRICS = "metrics.json"


class StageMissing(FileNotFoundError):
    """An input artifact from an earlier stage is absent."""


class ArtifactMismatch(ConfigError):
    """An artifact was written under a different configuration."""


def _out(cfg: PipelineConfig) -> Path:
    return Path(cfg.out)


def _dump(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _stamp(cfg: PipelineConfig) -> dict:
    return {"config_hash": cfg.hash(), "seed": cfg.seed}


def _need(cfg: PipelineConfig, name: str, stage: str) -> Path:
    path = _out(cfg) / name
    if not path.exists():
        raise StageMissing(f"{path} not found: run stage {stage} first")
    return path


def _check(meta: dict, cfg: PipelineConfig, what: str):
    if meta.get("config_hash") != cfg.hash():
        raise ArtifactMismatch(
            f"{what} was produced with config hash {meta.get('config_hash')!r}, "
            f"current config is {cfg.hash()!r}; rerun the earlier stages")


def _read_json(cfg, name, stage) -> dict:
    meta = json.loads(_need(cfg, name, stage).read_text())
    _check(meta, cfg, name)
    return meta


# ---------------------------------------------------------------------------
# shared loading


@dataclass
class Row:
    """One preprocessed review as stored in corpus.jsonl."""

    user: str
    item: str
    rating: float
    label: int | None
    split: str
    surface: list[str]
    stem: list[str]
    pos: list[str]
    bio: list[str]

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)


def _aspect_terms(path) -> list[tuple[str, ...]]:
    terms = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                stems = tuple(t.stem for t in normalize(line))
                if stems:
                    terms.append(stems)
    return terms


def load_rows(cfg: PipelineConfig) -> list[Row]:
    _read_json(cfg, PREPROCESS, "preprocess")
    with open(_need(cfg, CORPUS, "preprocess"), encoding="utf-8") as fh:
        return [Row(**json.loads(line)) for line in fh]


def embedding_table(cfg: PipelineConfig, vocab: Vocabulary) -> EmbeddingTable:
    cfg.require("embeddings")
    vectors, dim = load_word2vec_text(cfg.embeddings)
    if dim != cfg.word_dim:
        raise ConfigError(f"embeddings have dimension {dim}, config word_dim is {cfg.word_dim}")
    return EmbeddingTable.from_vectors(vocab, vectors, dim)


def _sample(row: Row, emb: EmbeddingTable, L: int) -> Sample:
    return Sample(emb.embed(row.stem, L), one_hot_matrix(row.pos, L), min(len(row.stem), L),
                  list(row.bio[:L]), row.label)


def _context(cfg):
    cfg.require("embeddings")
    vocab = Vocabulary.load(_need(cfg, VOCAB, "preprocess"))
    return load_rows(cfg), vocab, embedding_table(cfg, vocab)


# ---------------------------------------------------------------------------
# stages


def cmd_preprocess(cfg: PipelineConfig) -> dict:
    """Normalize, POS-tag, silver-tag aspects and split; writes corpus and vocabulary."""
    cfg.require("dataset", "aspect_terms")
    stopwords = load_stopwords(cfg.stopwords)
    contractions = load_contractions(cfg.contractions)
    tags = load_lexicon(cfg.tagger_lexicon, cfg.tagger_override)
    terms = _aspect_terms(cfg.aspect_terms)
    records = load_reviews(cfg.dataset)
    if len(records) < 2:
        raise ValueError("dataset needs at least two usable records")
    train_idx, _ = split_indices(len(records), cfg.train_fraction, cfg.seed)
    in_train = set(train_idx)
    rows = []
    for n, rec in enumerate(records):
        tokens = normalize(rec.text, stopwords, contractions)
        stems = [t.stem for t in tokens]
        surfaces = [t.surface for t in tokens]
        label = derive_label(rec.rating)
        rows.append(Row(rec.user_id, rec.item_id, rec.rating,
                        None if label is None else int(label),
                        "train" if n in in_train else "test", surfaces, stems,
                        tag_sequence(surfaces, tags),
                        encode_bio(len(stems), match_terms(stems, terms))))
    vocab = build_vocabulary([_seq(r) for r in rows], cfg.min_count)
    out = _out(cfg)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / CORPUS, "w", encoding="utf-8") as fh:
        for r in rows:
            fh.write(r.to_json() + "\n")
    vocab.save(out / VOCAB)
    summary = {
        **_stamp(cfg),
        "n_records": len(rows),
        "skipped": records.skipped,
        "malformed": records.malformed,
        "n_train": len(train_idx),
        "n_test": len(rows) - len(train_idx),
        "vocab_size": len(vocab),
        "vocab_hash": vocab.digest(),
        "labels": dict(sorted(Counter(str(r.label) for r in rows).items())),
    }
    _dump(out / PREPROCESS, summary)
    return summary


def _seq(row: Row) -> TokenSeq:
    return TokenSeq([Token(s, t) for s, t in zip(row.surface, row.stem)])


def dcnn_config(cfg: PipelineConfig) -> DcnnConfig:
    return DcnnConfig(word_dim=cfg.word_dim, word_filters=tuple(cfg.word_filters),
                      pos_filters=tuple(cfg.pos_filters), widths=tuple(cfg.widths),
                      dropout=cfg.dropout, seq_len=cfg.seq_len)


def oversample(samples: list[Sample], k: int, seed: int, word_dim: int) -> list[Sample]:
    """SMOTE over the labeled samples' flattened features; returns only the synthetics."""
    labeled = [s for s in samples if s.label is not None]
    if len({s.label for s in labeled}) < 2:
        logger.warning("fewer than two polarity classes in training data; SMOTE skipped")
        return []
    L = labeled[0].word.shape[0]
    feats = [FeatureSample(np.concatenate([s.word.ravel(), s.pos.ravel()]), s.label)
             for s in labeled]
    out = []
    for fs in smote(feats, k=k, seed=seed)[len(feats):]:
        word, pos = split_features(fs.features, L, word_dim)
        length = max(labeled[fs.base].length, labeled[fs.neighbor].length)
        out.append(Sample(word, pos, length, None, int(fs.label)))
    return out


def cmd_train(cfg: PipelineConfig) -> dict:
    """Oversample the labeled training split, then fit the network."""
    rows, vocab, emb = _context(cfg)
    L = cfg.seq_len
    samples = [_sample(r, emb, L) for r in rows if r.split == "train"]
    synthetic = oversample(samples, cfg.smote_k, cfg.seed, cfg.word_dim)
    model = DcnnModel(dcnn_config(cfg), seed=cfg.seed)
    report = train(model, samples + synthetic, epochs=cfg.epochs, batch_size=cfg.batch_size,
                   lr=cfg.lr, seed=cfg.seed, lam=cfg.lam)
    meta = {
        **_stamp(cfg),
        "vocab_hash": vocab.digest(),
        "hyperparameters": {"lr": cfg.lr, "epochs": cfg.epochs, "batch_size": cfg.batch_size,
                            "lam": cfg.lam, "smote_k": cfg.smote_k},
    }
    artifacts.save_dcnn(model, _out(cfg), meta, name=Path(MODEL).stem)
    before = Counter(s.label for s in samples if s.label is not None)
    after = before + Counter(s.label for s in synthetic)
    summary = {
        **_stamp(cfg),
        "n_train": len(samples),
        "n_synthetic": len(synthetic),
        "class_counts_before": {str(k): v for k, v in sorted(before.items())},
        "class_counts_after": {str(k): v for k, v in sorted(after.items())},
        "epoch_losses": report.epoch_losses,
        "steps": report.steps,
    }
    _dump(_out(cfg) / TRAIN_REPORT, summary)
    return summary


def load_model(cfg: PipelineConfig) -> DcnnModel:
    model, meta = artifacts.load_dcnn(_need(cfg, MODEL, "train"))
    _check(meta, cfg, MODEL)
    return model


def _predict_rows(model, rows, emb, L):
    tags, probs = predict(model, [_sample(r, emb, L) for r in rows])
    # tokens past the model's window are untagged
    full = [[BIO[t] for t in tg] + ["O"] * (len(r.stem) - len(tg)) for tg, r in zip(tags, rows)]
    return full, probs


def cmd_extract(cfg: PipelineConfig) -> dict:
    """Tag aspects with the trained network, score, cluster and weight them."""
    rows, vocab, emb = _context(cfg)
    model = load_model(cfg)
    lexicon = load_opinion_lexicon(cfg.lexicon, cfg.negations)
    tags, _ = _predict_rows(model, rows, emb, cfg.seq_len)
    mentions: list[tuple[AspectMention, str]] = []
    for row, tg in zip(rows, tags):
        for span in decode_bio(tg, row.stem):
            s = score_mention(span, row.stem, lexicon, cfg.window)
            mentions.append((AspectMention(row.user, row.item, span.start, span.end, span.head, s),
                             row.split))
    counts = Counter(m.head for m, _ in mentions)
    clusters = cluster_aspects(counts, emb.vector, cfg.theta)
    lookup = cluster_lookup(clusters)
    train_mentions = [m for m, part in mentions if part == "train"]
    tensor = build_tensor(train_mentions, clusters)
    if clusters:
        fit = cp_fit(tensor, cfg.cp_rank, cfg.cp_iters, cfg.seed)
        for c, w in zip(clusters, fit.weights):
            c.weight = float(w)
        residual, iterations = fit.residual, fit.iterations
    else:
        residual, iterations = 0.0, 0
    out = _out(cfg)
    with open(out / ASPECTS, "w", encoding="utf-8") as fh:
        fh.write("user\titem\tstart\tend\thead\ta\ts\tcluster\n")
        for m, _ in mentions:
            fh.write(f"{m.user_id}\t{m.item_id}\t{m.start}\t{m.end}\t{m.head}\t"
                     f"{m.rating:.6f}\t{m.score:.6f}\t{lookup[m.head]}\n")
    summary = {
        **_stamp(cfg),
        "n_mentions": len(mentions),
        "n_train_mentions": len(train_mentions),
        "tensor_shape": list(tensor.shape),
        "tensor_entries": int(len(tensor.values)),
        "cp_residual": residual,
        "cp_iterations": iterations,
        "clusters": [{"id": c.id, "medoid": c.medoid, "members": c.members, "weight": c.weight}
                     for c in clusters],
    }
    _dump(out / CLUSTERS, summary)
    return summary


def _train_pairs(rows: list[Row]) -> dict[tuple[str, str], float]:
    """Overall stars per training (user, item); repeated pairs are averaged."""
    acc = defaultdict(list)
    for r in rows:
        if r.split == "train":
            acc[(r.user, r.item)].append(r.rating)
    return {k: float(np.mean(v)) for k, v in acc.items()}


def _read_mentions(cfg, rows) -> list[AspectMention]:
    train_pairs = {(r.user, r.item) for r in rows if r.split == "train"}
    out = []
    with open(_need(cfg, ASPECTS, "extract"), encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            user, item, start, end, head, _a, s, _k = line.rstrip("\n").split("\t")
            if (user, item) in train_pairs:
                out.append(AspectMention(user, item, int(start), int(end), head, float(s)))
    return out


def weighted_triples(cfg: PipelineConfig, rows: list[Row]) -> list[tuple[str, str, float]]:
    report = _read_json(cfg, CLUSTERS, "extract")
    clusters = [AspectCluster(c["id"], c["members"], c["medoid"], c["weight"])
                for c in report["clusters"]]
    overall = _train_pairs(rows)
    mentions = _read_mentions(cfg, rows)
    if clusters and mentions:
        tensor = build_tensor(mentions, clusters)
        weights = [c.weight for c in clusters]
        blended = weighted_rating_matrix(tensor, weights, overall, cfg.alpha)
    else:
        blended = dict(overall)
    return [(u, i, blended[(u, i)]) for (u, i) in overall]


def cmd_recommend(cfg: PipelineConfig, user: str | None = None, n: int | None = None) -> dict:
    """Fit the rating model on the weighted training matrix and write top-n lists."""
    rows = load_rows(cfg)
    triples = weighted_triples(cfg, rows)
    users = sorted({r.user for r in rows})
    items = sorted({r.item for r in rows})
    model = RatingModel.fit(triples, f=cfg.svd_rank, k_nn=cfg.k_nn, seed=cfg.seed,
                            iters=cfg.svd_iters, user_ids=users, item_ids=items)
    out = _out(cfg)
    artifacts.save_rating_model(model, out, {**_stamp(cfg), "alpha": cfg.alpha,
                                             "svd_rank": cfg.svd_rank},
                                name=Path(RATING_MODEL).stem)
    n = n or cfg.top_n
    targets = [user] if user is not None else users
    with open(out / RECOMMENDATIONS, "w", encoding="utf-8") as fh:
        fh.write("user\titem\trank\tpredicted_rating\n")
        for u in targets:
            for rank, (item, score) in enumerate(model.top_n(u, n), 1):
                fh.write(f"{u}\t{item}\t{rank}\t{score:.6f}\n")
    return {**_stamp(cfg), "n_users": len(targets), "n": n, "n_ratings": len(triples)}


def cmd_evaluate(cfg: PipelineConfig) -> dict:
    """Score held-out ratings, aspect tags and polarity; writes metrics.json."""
    rows, _vocab, emb = _context(cfg)
    model = load_model(cfg)
    _read_json(cfg, CLUSTERS, "extract")
    rating_model, meta = artifacts.load_rating_model(_need(cfg, RATING_MODEL, "recommend"))
    _check(meta, cfg, RATING_MODEL)
    test = [r for r in rows if r.split == "test"]
    if not test:
        raise ValueError("test split is empty")
    pairs = [EvalPair(r.user, r.item, rating_model.predict(r.user, r.item), r.rating)
             for r in test]
    tags, probs = _predict_rows(model, test, emb, cfg.seq_len)
    scores = tag_f1([t for seq in tags for t in seq], [t for r in test for t in r.bio])
    labeled = [(int(p >= 0.5), r.label) for p, r in zip(probs, test) if r.label is not None]
    accuracy = sentiment_accuracy(*zip(*labeled)) if labeled else 0.0
    mf = baseline_mf([(r.user, r.item, r.rating) for r in rows if r.split == "train"],
                     f=cfg.mf_factors, epochs=cfg.mf_epochs, lr=cfg.mf_lr, reg=cfg.mf_reg,
                     seed=cfg.seed)
    mf_pairs = [EvalPair(r.user, r.item, mf.predict(r.user, r.item), r.rating) for r in test]
    metrics = {
        **_stamp(cfg),
        "mae": mae(pairs),
        "rmse": rmse(pairs),
        "precision": scores.precision,
        "recall": scores.recall,
        "f1": scores.f1,
        "accuracy": accuracy,
        "n_test": len(test),
        "n_test_labeled": len(labeled),
        "baseline_mf": {"mae": mae(mf_pairs), "rmse": rmse(mf_pairs)},
    }
    _dump(_out(cfg) / METRICS, metrics)
    return metrics


def cmd_pipeline(cfg: PipelineConfig) -> dict:
    """All five stages in order; identical to running them one by one."""
    cfg.require("dataset", "aspect_terms", "embeddings")
    return {
        "preprocess": cmd_preprocess(cfg),
        "train": cmd_train(cfg),
        "extract": cmd_extract(cfg),
        "recommend": cmd_recommend(cfg),
        "evaluate": cmd_evaluate(cfg),
    }
