"""Deterministic lexicon + suffix-rule part-of-speech tagger over the Penn tag set."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

# word-class tags in alphabetical order, then the nine punctuation tags
WORD_TAGS = (
    "CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD", "NN",
    "NNP", "NNPS", "NNS", "PDT", "POS", "PRP", "PRP$", "RB", "RBR", "RBS", "RP",
    "SYM", "TO", "UH", "VB", "VBD", "VBG", "VBN", "VBP", "VBZ", "WDT", "WP",
    "WP$", "WRB",
)
PUNCT_TAGS = ("#", "$", "''", "``", "-LRB-", "-RRB-", ",", ".", ":")
PENN_TAGS = WORD_TAGS + PUNCT_TAGS
N_TAGS = len(PENN_TAGS)
TAG_INDEX = {t: i for i, t in enumerate(PENN_TAGS)}

DEFAULT_SUFFIX_RULES = (
    ("ing", "VBG"), ("ed", "VBD"), ("ly", "RB"), ("s", "NNS"),
    ("est", "JJS"), ("er", "JJR"),
)
DEFAULT_TAG = "NN"
MIN_STEM = 3


@dataclass
class TagLexicon:
    words: dict[str, str] = field(default_factory=dict)
    suffix_rules: tuple[tuple[str, str], ...] = DEFAULT_SUFFIX_RULES
    default: str = DEFAULT_TAG

    def __post_init__(self):
        for tag in list(self.words.values()) + [t for _, t in self.suffix_rules] + [self.default]:
            if tag not in TAG_INDEX:
                raise ValueError(f"unknown POS tag {tag!r}")
        # longest suffix first; stable for equal lengths
        self.suffix_rules = tuple(sorted(self.suffix_rules, key=lambda r: -len(r[0])))

    def tag(self, word: str) -> str:
        hit = self.words.get(word)
        if hit is not None:
            return hit
        for suffix, tag in self.suffix_rules:
            if word.endswith(suffix) and len(word) - len(suffix) >= MIN_STEM:
                return tag
        return self.default

    def merged(self, overrides: dict[str, str]) -> "TagLexicon":
        return TagLexicon({**self.words, **overrides}, self.suffix_rules, self.default)


def read_tag_file(path) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            word, tag = line.split("\t")
            out[word.lower()] = tag
    return out


def load_lexicon(path=None, override=None) -> TagLexicon:
    if path is None:
        path = Path(str(resources.files("opinionrec") / "data" / "pos_lexicon.tsv"))
    lex = TagLexicon(read_tag_file(path))
    if override is not None:
        lex = lex.merged(read_tag_file(override))
    return lex


def tag_sequence(tokens: list[str], lexicon: TagLexicon) -> list[str]:
    return [lexicon.tag(t) for t in tokens]


def one_hot(tag: str) -> np.ndarray:
    v = np.zeros(N_TAGS)
    v[TAG_INDEX[tag]] = 1.0
    return v


def one_hot_matrix(tags: list[str], length: int) -> np.ndarray:
    """(length, 45) one-hot rows, truncated or zero-padded to ``length``."""
    out = np.zeros((length, N_TAGS))
    for t, tag in enumerate(tags[:length]):
        out[t, TAG_INDEX[tag]] = 1.0
    return out
