"""Review ingestion and text normalization.

Raw review text goes through a fixed chain: markup removal, contraction
expansion, non-ASCII removal, numbers spelled out as words, lowercasing,
punctuation removal, whitespace tokenization, stopword removal and Porter
stemming.
"""

from __future__ import annotations

import enum
import hashlib
import html
import json
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, NamedTuple

from .porter import porter_stem

logger = logging.getLogger(__name__)


class PolarityLabel(enum.IntEnum):
    NEGATIVE = 0
    POSITIVE = 1


@dataclass(frozen=True)
class ReviewRecord:
    user_id: str
    item_id: str
    rating: float
    text: str
    category: str | None = None

    def __post_init__(self):
        if not self.user_id or not self.item_id:
            raise ValueError("user_id and item_id must be non-empty")
        if not (math.isfinite(self.rating) and 1.0 <= self.rating <= 5.0):
            raise ValueError(f"rating {self.rating!r} outside [1, 5]")


class Token(NamedTuple):
    surface: str
    stem: str


@dataclass
class TokenSeq:
    """Normalized review: aligned tokens plus optional per-token annotations."""

    tokens: list[Token]
    label: PolarityLabel | None = None
    source: tuple[str, str] = ("", "")
    pos: list[str] | None = None
    bio: list[str] | None = None
    rating: float | None = None

    def __len__(self):
        return len(self.tokens)

    @property
    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]

    @property
    def stems(self) -> list[str]:
        return [t.stem for t in self.tokens]


class ReviewList(list):
    """List of ReviewRecord carrying load statistics."""

    skipped: int = 0
    malformed: int = 0


class DatasetError(ValueError):
    pass


# ---------------------------------------------------------------------------
# loading

def load_reviews(path, format: str = "amazon-jsonl") -> ReviewList:
    """Read newline-delimited Amazon review JSON.

    Records lacking ``reviewText`` or ``overall`` are skipped and counted in
    ``.skipped``; lines that are not valid records count in ``.malformed``.
    More than half the lines malformed raises :class:`DatasetError`.
    """
    if format != "amazon-jsonl":
        raise ValueError(f"unsupported dataset format {format!r}")
    out = ReviewList()
    n_lines = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            n_lines += 1
            try:
                obj = json.loads(line)
                if not isinstance(obj, dict):
                    raise ValueError("not an object")
            except ValueError:
                out.malformed += 1
                logger.warning("%s:%d: malformed JSON line", path, lineno)
                continue
            text = obj.get("reviewText")
            rating = obj.get("overall")
            if text is None or rating is None or not str(text).strip():
                out.skipped += 1
                continue
            try:
                rec = ReviewRecord(
                    user_id=str(obj.get("reviewerID") or ""),
                    item_id=str(obj.get("asin") or ""),
                    rating=float(rating),
                    text=str(text),
                    category=obj.get("category"),
                )
            except (TypeError, ValueError) as exc:
                out.malformed += 1
                logger.warning("%s:%d: invalid record (%s)", path, lineno, exc)
                continue
            out.append(rec)
    if n_lines and out.malformed * 2 > n_lines:
        raise DatasetError(f"{path}: {out.malformed} of {n_lines} lines malformed")
    return out


def derive_label(rating: float) -> PolarityLabel | None:
    if not (math.isfinite(rating) and 1.0 <= rating <= 5.0):
        raise ValueError(f"rating {rating!r} outside [1, 5]")
    if rating < 3:
        return PolarityLabel.NEGATIVE
    if rating > 3:
        return PolarityLabel.POSITIVE
    return None


# ---------------------------------------------------------------------------
# resources

def _data_path(name: str) -> Path:
    return Path(str(resources.files("opinionrec") / "data" / name))


def _content_lines(path) -> Iterable[str]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                yield line


def load_stopwords(path=None) -> frozenset[str]:
    return frozenset(w.lower() for w in _content_lines(path or _data_path("stopwords.txt")))


def load_contractions(path=None) -> dict[str, str]:
    table = {}
    with open(path or _data_path("contractions.tsv"), encoding="utf-8") as fh:
        for line in fh:
            if not line.strip() or line.startswith("#"):
                continue
            key, expansion = line.rstrip("\n").split("\t")
            table[key.lower()] = expansion
    return table


# ---------------------------------------------------------------------------
# text transforms

_TAG_RE = re.compile(r"<[^>]*(?:>|$)", re.DOTALL)


def strip_markup(text: str) -> str:
    """Drop ``<...>`` spans (an unclosed tag runs to the end) and decode entities."""
    return html.unescape(_TAG_RE.sub("", text))


_DEFAULT_CONTRACTIONS: dict[str, str] | None = None
_CONTRACTION_RE_CACHE: dict[tuple, re.Pattern] = {}
_GENERIC_NT = re.compile(r"\b([A-Za-z]+)n't\b", re.IGNORECASE)


def _contraction_pattern(table: dict[str, str]) -> re.Pattern:
    key = tuple(table)
    pat = _CONTRACTION_RE_CACHE.get(key)
    if pat is None:
        alts = "|".join(re.escape(k) for k in sorted(table, key=len, reverse=True))
        pat = re.compile(rf"(?<![\w'])({alts})(?![\w'])", re.IGNORECASE)
        _CONTRACTION_RE_CACHE[key] = pat
    return pat


def expand_contractions(text: str, table: dict[str, str] | None = None) -> str:
    global _DEFAULT_CONTRACTIONS
    if table is None:
        if _DEFAULT_CONTRACTIONS is None:
            _DEFAULT_CONTRACTIONS = load_contractions()
        table = _DEFAULT_CONTRACTIONS
    text = text.replace("’", "'")

    def repl(m):
        found = m.group(1)
        expansion = table[found.lower()]
        if found[0].isupper():
            expansion = expansion[0].upper() + expansion[1:]
        return expansion

    text = _contraction_pattern(table).sub(repl, text)
    return _GENERIC_NT.sub(r"\1 not", text)


_ONES = ["zero", "one", "two", "three", "four", "five", "six", "seven", "eight",
         "nine", "ten", "eleven", "twelve", "thirteen", "fourteen", "fifteen",
         "sixteen", "seventeen", "eighteen", "nineteen"]
_TENS = ["", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy",
         "eighty", "ninety"]


def _below_thousand(n: int) -> list[str]:
    words = []
    hundreds, rest = divmod(n, 100)
    if hundreds:
        words += [_ONES[hundreds], "hundred"]
    if rest >= 20:
        tens, ones = divmod(rest, 10)
        words.append(_TENS[tens])
        if ones:
            words.append(_ONES[ones])
    elif rest:
        words.append(_ONES[rest])
    return words


def spell_number(n: int) -> str:
    """English words for 0 <= n <= 999,999,999, no "and" and no hyphens."""
    if not 0 <= n <= 999_999_999:
        raise ValueError("out of range")
    if n == 0:
        return "zero"
    millions, rest = divmod(n, 1_000_000)
    thousands, units = divmod(rest, 1000)
    words = []
    if millions:
        words += _below_thousand(millions) + ["million"]
    if thousands:
        words += _below_thousand(thousands) + ["thousand"]
    words += _below_thousand(units)
    return " ".join(words)


_DIGITS = re.compile(r"\d+")


def number_to_words(text: str) -> str:
    def repl(m):
        run = m.group(0)
        if len(run) > 9:
            return run
        words = spell_number(int(run))
        start, end = m.span()
        if start > 0 and text[start - 1].isalpha():
            words = " " + words
        if end < len(text) and text[end].isalpha():
            words = words + " "
        return words

    return _DIGITS.sub(repl, text)


_NON_ASCII = re.compile(r"[^\x00-\x7f]")
_APOSTROPHE = re.compile(r"'")
_NON_LETTER = re.compile(r"[^a-z\s]")


def normalize(text: str, stopwords: frozenset[str] | None = None,
              contractions: dict[str, str] | None = None) -> list[Token]:
    """Run the full normalization chain and return aligned (surface, stem) tokens.

    >>> normalize("<b>Great sound!</b> 5 stars")
    [Token(surface='great', stem='great'), Token(surface='sound', stem='sound'), Token(surface='five', stem='five'), Token(surface='stars', stem='star')]
    """
    if stopwords is None:
        stopwords = _default_stopwords()
    text = strip_markup(text)
    text = expand_contractions(text, contractions)
    text = _NON_ASCII.sub("", text)
    text = number_to_words(text)
    text = text.lower()
    text = _APOSTROPHE.sub("", text)
    # digit runs left verbatim (over nine digits) go here too
    text = _NON_LETTER.sub(" ", text)
    out = []
    for surface in text.split():
        if surface in stopwords:
            continue
        stem = porter_stem(surface)
        if stem in stopwords:
            continue
        out.append(Token(surface, stem))
    return out


_STOPWORDS: frozenset[str] | None = None


def _default_stopwords() -> frozenset[str]:
    global _STOPWORDS
    if _STOPWORDS is None:
        _STOPWORDS = load_stopwords()
    return _STOPWORDS


# ---------------------------------------------------------------------------
# vocabulary

PAD_ID = 0


@dataclass
class Vocabulary:
    """stem -> id; 0 is padding, in-vocabulary stems are 1..n, n+1 is OOV."""

    ids: dict[str, int] = field(default_factory=dict)

    @property
    def oov_id(self) -> int:
        return len(self.ids) + 1

    @property
    def size(self) -> int:
        """Rows needed in an embedding table (padding and OOV included)."""
        return len(self.ids) + 2

    def __len__(self):
        return len(self.ids)

    def __contains__(self, stem):
        return stem in self.ids

    def __getitem__(self, stem: str) -> int:
        return self.ids.get(stem, self.oov_id)

    def encode(self, stems: Iterable[str]) -> list[int]:
        return [self[s] for s in stems]

    def stems(self) -> list[str]:
        return sorted(self.ids, key=self.ids.__getitem__)

    def digest(self) -> str:
        return hashlib.sha256("\n".join(self.stems()).encode()).hexdigest()

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for stem in self.stems():
                fh.write(f"{stem}\t{self.ids[stem]}\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        ids = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                stem, idx = line.rstrip("\n").split("\t")
                ids[stem] = int(idx)
        return cls(ids)


def build_vocabulary(seqs: Iterable[TokenSeq], min_count: int = 1) -> Vocabulary:
    """Ids by descending frequency, ties lexicographic; rare stems fall to OOV."""
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts = Counter()
    for seq in seqs:
        counts.update(seq.stems)
    if not counts:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    kept = sorted((s for s, c in counts.items() if c >= min_count),
                  key=lambda s: (-counts[s], s))
    return Vocabulary({s: i for i, s in enumerate(kept, start=1)})
