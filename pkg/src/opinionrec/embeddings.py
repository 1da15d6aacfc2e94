"""Pre-trained word vectors: text-format loader, lookup table and hashed fallbacks."""

from __future__ import annotations

import numpy as np

from .corpus import Vocabulary
from .rng import Lcg64, fnv1a64


def hashed_vector(stem: str, dim: int) -> np.ndarray:
    """Deterministic unit vector for a stem with no pre-trained embedding."""
    gen = Lcg64(fnv1a64(stem.encode("utf-8")))
    v = np.array([gen.uniform_range(-0.5, 0.5) for _ in range(dim)])
    norm = np.linalg.norm(v)
    return v / norm if norm > 0 else v


def load_word2vec_text(path) -> tuple[dict[str, np.ndarray], int]:
    """Read ``<count> <dim>`` header then ``<word> <floats...>`` lines."""
    vectors = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: expected '<count> <dim>' header")
        count, dim = int(header[0]), int(header[1])
        for lineno, line in enumerate(fh, 2):
            parts = line.rstrip().split(" ")
            if len(parts) != dim + 1:
                raise ValueError(f"{path}:{lineno}: expected {dim} values")
            vectors[parts[0]] = np.array(parts[1:], dtype=np.float64)
    if len(vectors) != count:
        raise ValueError(f"{path}: header says {count} vectors, found {len(vectors)}")
    return vectors, dim


def save_word2vec_text(path, vectors: dict[str, np.ndarray]):
    dim = len(next(iter(vectors.values())))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(vectors)} {dim}\n")
        for word, vec in vectors.items():
            fh.write(word + " " + " ".join(f"{x:.6f}" for x in vec) + "\n")


class EmbeddingTable:
    """Frozen V x d matrix aligned with a vocabulary.

    Row 0 (padding) and the OOV row are zero. Stems outside the vocabulary
    are looked up through :func:`hashed_vector` rather than the OOV row.
    """

    def __init__(self, matrix: np.ndarray, vocab: Vocabulary):
        if matrix.shape[0] != vocab.size:
            raise ValueError("matrix rows must equal vocabulary size")
        if np.any(matrix[0] != 0):
            raise ValueError("padding row must be zero")
        self.matrix = matrix
        self.matrix.setflags(write=False)
        self.vocab = vocab
        self._fallback: dict[str, np.ndarray] = {}

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    @classmethod
    def from_vectors(cls, vocab: Vocabulary, vectors: dict[str, np.ndarray], dim: int):
        mat = np.zeros((vocab.size, dim))
        for stem, idx in vocab.ids.items():
            vec = vectors.get(stem)
            mat[idx] = vec if vec is not None else hashed_vector(stem, dim)
        return cls(mat, vocab)

    def vector(self, stem: str) -> np.ndarray:
        if stem in self.vocab:
            return self.matrix[self.vocab[stem]]
        vec = self._fallback.get(stem)
        if vec is None:
            vec = self._fallback[stem] = hashed_vector(stem, self.dim)
        return vec

    def embed(self, stems: list[str], length: int) -> np.ndarray:
        """(length, d) matrix, truncated or zero-padded."""
        out = np.zeros((length, self.dim))
        for t, stem in enumerate(stems[:length]):
            out[t] = self.vector(stem)
        return out
