"""Word vectors, label embeddings, and the video-feature projector.

Class names are embedded as the mean of their word vectors (X_q); pooled
video features are mapped by a learned affine projection into the same
300-dimensional space (X_z). Word vectors come either from a GloVe-format
text file or from a deterministic hashed fallback that needs no data files.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .taxonomy import LabelTaxonomy

EMBED_DIM = 300

_OOV_POLICIES = ("zero", "hashed")


def hashed_vector(word: str, seed: int = 0) -> np.ndarray:
    """Deterministic unit-norm pseudo word vector.

    The word and seed are hashed (blake2b) into a PRNG seed, from which a
    300-dim normal draw is taken and normalized. Pure function of (word, seed)
    on every platform.
    """
    digest = hashlib.blake2b(f"{seed}:{word}".encode("utf-8"), digest_size=8).digest()
    rng = np.random.Generator(np.random.PCG64(int.from_bytes(digest, "little")))
    v = rng.standard_normal(EMBED_DIM)
    return v / np.linalg.norm(v)


@dataclass
class WordVectorTable:
    """Immutable word -> 300-dim vector lookup with an out-of-vocabulary policy."""

    vectors: dict[str, np.ndarray] = field(default_factory=dict)
    oov_policy: str = "hashed"
    seed: int = 0

    def __post_init__(self):
        if self.oov_policy not in _OOV_POLICIES:
            raise ValueError(f"oov_policy must be one of {_OOV_POLICIES}")
        for w, v in self.vectors.items():
            if v.shape != (EMBED_DIM,):
                raise ValueError(f"vector for {w!r} has shape {v.shape}, want ({EMBED_DIM},)")

    def __len__(self) -> int:
        return len(self.vectors)

    def __contains__(self, word: str) -> bool:
        return word in self.vectors

    def get(self, word: str) -> np.ndarray:
        v = self.vectors.get(word)
        if v is not None:
            return v
        if self.oov_policy == "zero":
            return np.zeros(EMBED_DIM)
        return hashed_vector(word, self.seed)


def load_word_vectors(
    source: str | Path = "hashed", oov_policy: str | None = None, seed: int = 0
) -> WordVectorTable:
    """Build a WordVectorTable from a text file or the hashed mode.

    ``source="hashed"`` returns an empty table whose every lookup is a hashed
    pseudo-vector (the test substitute for real embeddings). Any other value
    is a path to a text file with lines ``word v1 ... v300``; malformed lines
    and wrong dimensionality are reported with their line number. File-backed
    tables default to the ``zero`` OOV policy.
    """
    if isinstance(source, str) and source == "hashed":
        return WordVectorTable(vectors={}, oov_policy=oov_policy or "hashed", seed=seed)
    path = Path(source)
    vectors: dict[str, np.ndarray] = {}
    with open(path) as f:
        for num, line in enumerate(f, 1):
            parts = line.rstrip("\n").split(" ")
            if not parts or parts == [""]:
                continue
            word, values = parts[0], parts[1:]
            if len(values) != EMBED_DIM:
                raise ValueError(
                    f"{path}:{num}: expected {EMBED_DIM} values for {word!r}, got {len(values)}"
                )
            try:
                vec = np.array([float(x) for x in values], dtype=np.float64)
            except ValueError as e:
                raise ValueError(f"{path}:{num}: malformed number: {e}")
            if not np.all(np.isfinite(vec)):
                raise ValueError(f"{path}:{num}: non-finite vector for {word!r}")
            vectors[word] = vec
    return WordVectorTable(vectors=vectors, oov_policy=oov_policy or "zero", seed=seed)


def embed_label(words, table: WordVectorTable) -> np.ndarray:
    """Mean of per-word vectors; the label's point X_q in the joint space."""
    words = list(words)
    if not words:
        raise ValueError("cannot embed a label with no words")
    acc = np.zeros(EMBED_DIM)
    for w in words:
        acc += table.get(w)
    return acc / len(words)


def label_embedding_matrix(taxonomy: LabelTaxonomy, table: WordVectorTable) -> np.ndarray:
    """Stack X_q for every fine class: shape (num_fine, 300), float64."""
    return np.stack([embed_label(f.words, table) for f in taxonomy.fine_labels])


class FeatureProjector(nn.Module):
    """Affine map from the pooled video feature (32C) into the 300-dim space.

    ``depth`` > 1 inserts hidden affine+rectifier layers of the input width;
    the default single layer is the minimal reading of "mapped into a joint
    embedding space".
    """

    def __init__(self, in_dim: int, out_dim: int = EMBED_DIM, depth: int = 1):
        super().__init__()
        if in_dim < 1 or out_dim < 1 or depth < 1:
            raise ValueError("in_dim, out_dim and depth must be positive")
        layers: list[nn.Module] = []
        for _ in range(depth - 1):
            layers += [nn.Linear(in_dim, in_dim), nn.ReLU()]
        layers.append(nn.Linear(in_dim, out_dim))
        self.net = nn.Sequential(*layers)
        self.in_dim = in_dim
        self.out_dim = out_dim

    def forward(self, pooled: torch.Tensor) -> torch.Tensor:
        if pooled.shape[-1] != self.in_dim:
            raise ValueError(f"expected feature width {self.in_dim}, got {pooled.shape[-1]}")
        return self.net(pooled)
