"""Synthetic data with known ground truth.

``planted_reviews`` writes Amazon-style reviews whose aspect terms and
opinion words come from fixed inventories, so gold BIO tags can be
recovered by term matching. ``write_bundle`` produces the corpus, aspect
term list and word vectors shipped under ``opinionrec/data/synthetic``.
``planted_samples`` turns planted reviews into network inputs with silver
tags. ``structured_ratings`` builds exact low-rank rating matrices for
recommender checks.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np

from .aspects import encode_bio, match_terms
from .corpus import derive_label, normalize
from .dcnn import Sample
from .embeddings import hashed_vector, save_word2vec_text
from .tagger import load_lexicon, one_hot_matrix, tag_sequence

CATEGORIES = ("Musical Instruments", "Automotive", "Amazon Instant Video")

ASPECT_GROUPS = {
    "sound": ["sound", "tone", "audio"],
    "price": ["price", "cost"],
    "strings": ["strings", "tuning pegs"],
    "shipping": ["shipping", "delivery", "packaging"],
    "battery": ["battery life", "battery"],
    "installation": ["installation", "setup"],
    "fit": ["fit", "size"],
    "picture": ["picture quality", "resolution"],
    "story": ["story", "plot", "script"],
    "acting": ["acting", "cast"],
    "service": ["customer service", "support"],
}

CATEGORY_ASPECTS = {
    "Musical Instruments": ["sound", "price", "strings", "shipping", "service"],
    "Automotive": ["installation", "fit", "price", "battery", "shipping", "service"],
    "Amazon Instant Video": ["picture", "story", "acting", "sound", "price"],
}

POSITIVE = ["great", "excellent", "amazing", "superb", "fantastic", "wonderful", "perfect",
            "awesome", "good", "solid", "impressive", "nice", "decent", "reliable"]
NEGATIVE = ["terrible", "awful", "horrible", "poor", "bad", "flimsy", "cheap",
            "disappointing", "weak", "mediocre", "useless", "annoying", "unreliable"]

TEMPLATES = [
    "The {a} is {o}.",
    "The {a} was really {o}!",
    "{O} {a}.",
    "I think the {a} is {o}.",
    "Overall the {a} feels {o}.",
    "The {a} is {o} for {n} dollars.",
    "Honestly the {a} seemed {o} to me.",
]
NEGATED_TEMPLATES = [
    "The {a} isn't {o}.",
    "Honestly the {a} was not {o} at all.",
    "I'd say the {a} is never {o}.",
]
FILLERS = [
    "Bought this for my son last month.",
    "It arrived on Tuesday.",
    "<br />I've used it for {n} weeks now.",
    "We'll see how it holds up.",
    "Works as described.",
    "My wife uses it every day.",
    "Came in a plain box.",
    "I'm a hobbyist with {n} years of experience.",
    "Paid {n} dollars on sale.",
    "Would buy from this seller again.",
    "<p>Ordered a second one for the garage.</p>",
    "Café owner here, use it on weekends.",
    "Don't overthink it.",
    "Compared it with {n} other options.",
]


def aspect_terms() -> list[str]:
    return [t for group in ASPECT_GROUPS.values() for t in group]


def _review_text(rng, rating: int, aspects: list[str]) -> str:
    sentences = []
    n_mentions = int(rng.integers(1, 4))
    for group in rng.choice(aspects, size=min(n_mentions, len(aspects)), replace=False):
        term = str(rng.choice(ASPECT_GROUPS[str(group)]))
        if rating >= 4:
            positive = rng.random() < 0.85
        elif rating <= 2:
            positive = rng.random() < 0.15
        else:
            positive = rng.random() < 0.5
        negated = rng.random() < 0.15
        # negated phrasing uses the opposite word
        pool = POSITIVE if positive != negated else NEGATIVE
        word = str(rng.choice(pool))
        template = str(rng.choice(NEGATED_TEMPLATES if negated else TEMPLATES))
        text = template.format(a=term, o=word, O=word.capitalize(), n=int(rng.integers(2, 400)))
        sentences.append(text[0].upper() + text[1:])
    for _ in range(int(rng.integers(1, 3))):
        sentences.append(str(rng.choice(FILLERS)).format(n=int(rng.integers(2, 60))))
    order = rng.permutation(len(sentences))
    return " ".join(sentences[i] for i in order)


def planted_reviews(n_reviews: int = 500, n_users: int = 60, n_items: int = 40, seed: int = 7,
                    neutral: bool = True) -> list[dict]:
    """Amazon-format review dicts with ratings from a user/item latent model.

    ``neutral=False`` keeps ratings off 3 so every review carries a polarity label.
    """
    rng = np.random.default_rng(seed)
    if n_reviews > n_users * n_items:
        raise ValueError("more reviews than user/item pairs")
    user_bias = rng.normal(0, 0.6, n_users)
    item_bias = rng.normal(0, 0.6, n_items)
    uf = rng.normal(0, 0.6, (n_users, 2))
    vf = rng.normal(0, 0.6, (n_items, 2))
    pairs = rng.choice(n_users * n_items, size=n_reviews, replace=False)
    out = []
    for p in pairs:
        u, i = divmod(int(p), n_items)
        raw = 3.7 + user_bias[u] + item_bias[i] + uf[u] @ vf[i] + rng.normal(0, 0.3)
        rating = int(np.clip(np.rint(raw), 1, 5))
        if not neutral and rating == 3:
            rating = 4 if raw >= 3 else 2
        category = CATEGORIES[i * len(CATEGORIES) // n_items]
        out.append({
            "reviewerID": f"U{u:04d}",
            "asin": f"B{i:09d}",
            "overall": float(rating),
            "reviewText": _review_text(rng, rating, CATEGORY_ASPECTS[category]),
            "category": category,
        })
    return out


def planted_vectors(reviews: list[dict], dim: int = 32, seed: int = 11,
                    holdout: float = 0.05) -> dict[str, np.ndarray]:
    """Stem vectors: aspect synonyms share a direction, polarity words share one per sign.

    A ``holdout`` fraction of the other stems is left out so lookups exercise
    the hashed fallback.
    """
    rng = np.random.default_rng(seed)

    def unit(v):
        return v / np.linalg.norm(v)

    vectors: dict[str, np.ndarray] = {}
    for group in ASPECT_GROUPS.values():
        center = unit(rng.normal(size=dim))
        for term in group:
            for tok in normalize(term):
                vectors.setdefault(tok.stem, unit(center + 0.25 * unit(rng.normal(size=dim))))
    pos_center = unit(rng.normal(size=dim))
    neg_center = unit(-pos_center + 0.5 * unit(rng.normal(size=dim)))
    for words, center in ((POSITIVE, pos_center), (NEGATIVE, neg_center)):
        for w in words:
            for tok in normalize(w):
                vectors.setdefault(tok.stem, unit(center + 0.3 * unit(rng.normal(size=dim))))
    stems = sorted({t.stem for r in reviews for t in normalize(r["reviewText"])})
    for stem in stems:
        if stem in vectors:
            continue
        v = unit(rng.normal(size=dim))
        if rng.random() >= holdout:
            vectors[stem] = v
    return dict(sorted(vectors.items()))


# pipeline settings for the bundled corpus; ``out`` is left to the caller
BUNDLE_CONFIG = {
    "seed": 13,
    "dataset": "reviews.jsonl",
    "embeddings": "embeddings.txt",
    "aspect_terms": "aspects.txt",
    "seq_len": 32,
    "word_dim": 32,
    "epochs": 15,
    "svd_rank": 10,
}


def planted_samples(n: int, seq_len: int, dim: int = 32, seed: int = 7,
                    neutral: bool = False) -> list[Sample]:
    """Network inputs for ``n`` planted reviews with silver BIO tags and polarity labels.

    Stems get their planted vectors (hashed vectors for the held-out ones),
    tags come from matching the known aspect terms.
    """
    reviews = planted_reviews(n, n_users=40, n_items=30, seed=seed, neutral=neutral)
    vectors = planted_vectors(reviews, dim)
    terms = [tuple(t.stem for t in normalize(a)) for a in aspect_terms()]
    lexicon = load_lexicon()
    out = []
    for r in reviews:
        tokens = normalize(r["reviewText"])
        stems = [t.stem for t in tokens]
        word = np.zeros((seq_len, dim))
        for t, s in enumerate(stems[:seq_len]):
            word[t] = vectors[s] if s in vectors else hashed_vector(s, dim)
        pos = one_hot_matrix(tag_sequence([t.surface for t in tokens], lexicon), seq_len)
        bio = encode_bio(len(stems), match_terms(stems, terms))[:seq_len]
        label = derive_label(r["overall"])
        out.append(Sample(word, pos, min(len(stems), seq_len), bio,
                          None if label is None else int(label)))
    return out


def bundle_dir() -> Path:
    return Path(str(resources.files("opinionrec") / "data" / "synthetic"))


def write_bundle(directory, n_reviews: int = 500, seed: int = 7, dim: int = 32) -> dict[str, Path]:
    """Write reviews.jsonl, aspects.txt, embeddings.txt and config.json into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    reviews = planted_reviews(n_reviews, seed=seed)
    paths = {
        "dataset": directory / "reviews.jsonl",
        "aspect_terms": directory / "aspects.txt",
        "embeddings": directory / "embeddings.txt",
        "config": directory / "config.json",
    }
    with open(paths["dataset"], "w", encoding="utf-8") as fh:
        for r in reviews:
            fh.write(json.dumps(r, ensure_ascii=False) + "\n")
    paths["aspect_terms"].write_text("\n".join(aspect_terms()) + "\n")
    save_word2vec_text(paths["embeddings"], planted_vectors(reviews, dim))
    config = dict(BUNDLE_CONFIG, word_dim=dim)
    paths["config"].write_text(json.dumps(config, indent=2) + "\n")
    return paths


def structured_ratings(n_users: int = 200, n_items: int = 100, density: float = 0.1,
                       noise: float = 0.1, seed: int = 0, scale: float = 0.5):
    """Exactly rank-3 ratings 3 + a_u + b_i + c_u d_i (each term std ``scale``), noisy and clamped.

    Returns (full matrix, observed (row, col) pairs in seeded random order).
    """
    rng = np.random.default_rng(seed)
    a = rng.normal(0, scale, n_users)
    b = rng.normal(0, scale, n_items)
    c = rng.normal(0, np.sqrt(scale), n_users)
    d = rng.normal(0, np.sqrt(scale), n_items)
    clean = 3.0 + a[:, None] + b[None, :] + np.outer(c, d)
    full = np.clip(clean + rng.normal(0, noise, clean.shape), 1.0, 5.0)
    cells = np.argwhere(rng.random(full.shape) < density)
    return full, cells[rng.permutation(len(cells))]
