"""Pipeline configuration: one flat JSON object plus command-line overrides."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field, fields
from pathlib import Path


class ConfigError(ValueError):
    pass


PATH_FIELDS = ("dataset", "embeddings", "aspect_terms", "stopwords", "contractions", "lexicon",
               "negations", "tagger_lexicon", "tagger_override", "out")


@dataclass
class PipelineConfig:
    seed: int
    dataset: str = ""
    embeddings: str = ""
    aspect_terms: str = ""
    stopwords: str | None = None
    contractions: str | None = None
    lexicon: str | None = None
    negations: str | None = None
    tagger_lexicon: str | None = None
    tagger_override: str | None = None
    out: str = "out"
    # text and network
    seq_len: int = 100
    word_dim: int = 300
    word_filters: list = field(default_factory=lambda: [128, 128])
    pos_filters: list = field(default_factory=lambda: [32, 32])
    widths: list = field(default_factory=lambda: [5, 3])
    dropout: float = 0.5
    lam: float = 1.0
    lr: float = 1e-3
    epochs: int = 10
    batch_size: int = 32
    min_count: int = 1
    # balancing, aspects, recommender
    smote_k: int = 5
    window: int = 4
    theta: float = 0.6
    cp_rank: int = 3
    cp_iters: int = 200
    alpha: float = 0.5
    svd_rank: int = 20
    svd_iters: int = 5
    k_nn: int = 30
    top_n: int = 5
    train_fraction: float = 0.8
    mf_factors: int = 20
    mf_epochs: int = 20
    mf_lr: float = 0.01
    mf_reg: float = 0.02

    def __post_init__(self):
        self.validate()

    def validate(self):
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(isinstance(self.seed, int) and not isinstance(self.seed, bool) and self.seed >= 0,
             "seed must be a non-negative integer")
        for name in ("seq_len", "word_dim", "epochs", "batch_size", "min_count", "smote_k",
                     "cp_rank", "cp_iters", "svd_rank", "svd_iters", "k_nn", "top_n",
                     "mf_factors", "mf_epochs"):
            v = getattr(self, name)
            need(isinstance(v, int) and not isinstance(v, bool) and v >= 1,
                 f"{name} must be a positive integer, got {v!r}")
        need(self.window >= 0, "window must be >= 0")
        need(0.0 <= self.dropout < 1.0, "dropout must lie in [0, 1)")
        need(self.lam >= 0.0, "lam must be >= 0")
        need(self.lr > 0.0 and self.mf_lr > 0.0, "learning rates must be positive")
        need(self.mf_reg >= 0.0, "mf_reg must be >= 0")
        need(0.0 <= self.alpha <= 1.0, "alpha must lie in [0, 1]")
        need(-1.0 <= self.theta <= 2.0, "theta must lie in [-1, 2]")
        need(0.0 < self.train_fraction < 1.0, "train_fraction must lie in (0, 1)")
        need(len(self.word_filters) == len(self.widths) == len(self.pos_filters),
             "word_filters, pos_filters and widths must have equal lengths")
        need(all(int(w) >= 1 for w in self.widths), "kernel widths must be >= 1")
        need(all(int(f) >= 1 for f in list(self.word_filters) + list(self.pos_filters)),
             "filter counts must be >= 1")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def hash(self) -> str:
        """sha256 of the canonical JSON of every field except the output directory."""
        d = self.to_dict()
        d.pop("out")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def path(self, name: str) -> Path | None:
        value = getattr(self, name)
        return Path(value) if value else None

    def require(self, *names: str):
        """Raise ConfigError unless each named input path is set and exists."""
        for name in names:
            p = self.path(name)
            if p is None:
                raise ConfigError(f"config field {name!r} is required")
            if not p.exists():
                raise ConfigError(f"{name} path does not exist: {p}")


def _known() -> dict[str, dataclasses.Field]:
    return {f.name: f for f in fields(PipelineConfig)}


def _resolve(data: dict, base_dir) -> dict:
    data = dict(data)
    for name in PATH_FIELDS:
        value = data.get(name)
        if value and not Path(value).is_absolute():
            data[name] = str(Path(base_dir) / value)
    return data


def from_dict(data: dict, base_dir=None) -> PipelineConfig:
    """Build a config; relative paths resolve against ``base_dir`` when given."""
    known = _known()
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    if data.get("seed") is None:
        raise ConfigError("seed is mandatory")
    if base_dir is not None:
        data = _resolve(data, base_dir)
    try:
        return PipelineConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path=None, overrides: dict | None = None) -> PipelineConfig:
    """Read a flat JSON config and apply non-None overrides on top.

    Relative paths in the file resolve against the file's directory; paths
    given as overrides are taken as they are.
    """
    data: dict = {}
    if path is not None:
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        data = _resolve(data, path.parent)
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    return from_dict(data)
