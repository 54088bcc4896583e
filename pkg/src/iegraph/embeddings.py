"""Per-sentence multi-layer subword embeddings with subword-to-token
alignment, decoupled from any concrete language model.

Two providers ship: a deterministic hash provider (seeded, keyed on token
text) for tests and desk-scale training, and a JSON-lines file provider for
externally computed embeddings (e.g. an XLM-R adapter writing the documented
record format).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol

import numpy as np

from .corpus import Sentence


class EmbeddingError(ValueError):
    pass


@dataclass
class EmbeddingBundle:
    sentence_id: str
    layers: int
    dim: int
    vectors: np.ndarray  # (layers, n_subwords, dim)
    alignment: tuple[tuple[int, ...], ...]  # per token: its subword indices, in order

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float32)
        if self.vectors.ndim != 3 or self.vectors.shape[0] != self.layers or self.vectors.shape[2] != self.dim:
            raise EmbeddingError(
                f"{self.sentence_id}: vectors shape {self.vectors.shape} does not match "
                f"(layers={self.layers}, *, dim={self.dim})")
        if not np.isfinite(self.vectors).all():
            raise EmbeddingError(f"{self.sentence_id}: non-finite embedding values")
        n_subwords = self.vectors.shape[1]
        if n_subwords < len(self.alignment):
            raise EmbeddingError(f"{self.sentence_id}: fewer subwords than tokens")
        seen: set[int] = set()
        for token_index, subwords in enumerate(self.alignment):
            if len(subwords) == 0:
                raise EmbeddingError(f"{self.sentence_id}: token {token_index} has no subwords")
            for s in subwords:
                if not 0 <= s < n_subwords:
                    raise EmbeddingError(f"{self.sentence_id}: subword index {s} out of range")
                if s in seen:
                    raise EmbeddingError(f"{self.sentence_id}: subword {s} assigned to two tokens")
                seen.add(s)

    @property
    def n_tokens(self) -> int:
        return len(self.alignment)


class EmbeddingProvider(Protocol):
    def bundle(self, sentence: Sentence) -> EmbeddingBundle: ...

    def provenance(self) -> dict: ...


def _hash_rng(*key_parts) -> np.random.Generator:
    digest = hashlib.blake2b(":".join(str(p) for p in key_parts).encode("utf-8"), digest_size=8).digest()
    return np.random.default_rng(int.from_bytes(digest, "little"))


class HashEmbeddingProvider:
    """Deterministic embeddings keyed on (seed, token text).

    Each token splits into 1..max_subwords_per_token subwords (the count is
    itself text-keyed, so multi-subword pooling gets exercised); every
    (text, subword slot, layer) triple maps to a fixed unit-norm vector.
    """

    name = "hash"

    def __init__(self, layers: int = 3, dim: int = 64, seed: int = 0, max_subwords_per_token: int = 2):
        if layers < 1 or dim < 1 or max_subwords_per_token < 1:
            raise EmbeddingError("layers, dim and max_subwords_per_token must be positive")
        self.layers = layers
        self.dim = dim
        self.seed = seed
        self.max_subwords_per_token = max_subwords_per_token

    def _n_subwords(self, text: str) -> int:
        digest = hashlib.blake2b(f"{self.seed}:count:{text}".encode("utf-8"), digest_size=2).digest()
        return 1 + int.from_bytes(digest, "little") % self.max_subwords_per_token

    def token_vectors(self, text: str) -> np.ndarray:
        """(layers, n_subwords, dim) block for one token text."""
        n_sub = self._n_subwords(text)
        out = np.empty((self.layers, n_sub, self.dim), dtype=np.float32)
        for layer in range(self.layers):
            for sub in range(n_sub):
                vec = _hash_rng(self.seed, "vec", text, layer, sub).standard_normal(self.dim)
                out[layer, sub] = vec / np.linalg.norm(vec)
        return out

    def bundle(self, sentence: Sentence) -> EmbeddingBundle:
        blocks = [self.token_vectors(token.text) for token in sentence.tokens]
        alignment = []
        cursor = 0
        for block in blocks:
            n_sub = block.shape[1]
            alignment.append(tuple(range(cursor, cursor + n_sub)))
            cursor += n_sub
        if blocks:
            vectors = np.concatenate(blocks, axis=1)
        else:
            vectors = np.zeros((self.layers, 0, self.dim), dtype=np.float32)
        return EmbeddingBundle(sentence.id, self.layers, self.dim, vectors, tuple(alignment))

    def provenance(self) -> dict:
        return {"provider": self.name, "seed": self.seed, "layers": self.layers,
                "dim": self.dim, "max_subwords_per_token": self.max_subwords_per_token}


class FileEmbeddingProvider:
    """JSON-lines embeddings: one record per sentence with keys
    sentence_id, layers, dim, alignment, vectors (layers x subwords x dim)."""

    name = "file"

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._bundles: dict[str, EmbeddingBundle] = {}
        with open(self.path, encoding="utf-8") as handle:
            for line_no, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as err:
                    raise EmbeddingError(f"{self.path}:{line_no}: invalid JSON ({err})") from None
                bundle = EmbeddingBundle(
                    sentence_id=str(record["sentence_id"]),
                    layers=int(record["layers"]),
                    dim=int(record["dim"]),
                    vectors=np.asarray(record["vectors"], dtype=np.float32),
                    alignment=tuple(tuple(int(i) for i in token) for token in record["alignment"]),
                )
                if bundle.sentence_id in self._bundles:
                    raise EmbeddingError(f"{self.path}: duplicate sentence id {bundle.sentence_id!r}")
                self._bundles[bundle.sentence_id] = bundle
        if not self._bundles:
            raise EmbeddingError(f"{self.path}: no embedding records")
        first = next(iter(self._bundles.values()))
        self.layers = first.layers
        self.dim = first.dim
        for bundle in self._bundles.values():
            if bundle.layers != self.layers or bundle.dim != self.dim:
                raise EmbeddingError(f"{self.path}: inconsistent layers/dim across records")

    def bundle(self, sentence: Sentence) -> EmbeddingBundle:
        try:
            bundle = self._bundles[sentence.id]
        except KeyError:
            raise EmbeddingError(f"no embeddings for sentence {sentence.id!r} in {self.path}") from None
        if bundle.n_tokens != len(sentence.tokens):
            raise EmbeddingError(
                f"sentence {sentence.id!r}: embedding alignment covers {bundle.n_tokens} tokens, "
                f"sentence has {len(sentence.tokens)}")
        return bundle

    def provenance(self) -> dict:
        return {"provider": self.name, "path": str(self.path),
                "layers": self.layers, "dim": self.dim}


def write_embeddings(path: str | Path, bundles: Iterable[EmbeddingBundle]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for bundle in bundles:
            record = {
                "sentence_id": bundle.sentence_id,
                "layers": bundle.layers,
                "dim": bundle.dim,
                "alignment": [list(token) for token in bundle.alignment],
                "vectors": bundle.vectors.astype(float).tolist(),
            }
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def provider_from_spec(spec: str | dict, default_seed: int = 0) -> HashEmbeddingProvider | FileEmbeddingProvider:
    """Build a provider from a CLI spec ("hash" or "file:<path>") or a
    stored provenance dict."""
    if isinstance(spec, dict):
        if spec.get("provider") == "hash":
            return HashEmbeddingProvider(
                layers=int(spec.get("layers", 3)), dim=int(spec.get("dim", 64)),
                seed=int(spec.get("seed", default_seed)),
                max_subwords_per_token=int(spec.get("max_subwords_per_token", 2)))
        if spec.get("provider") == "file":
            return FileEmbeddingProvider(spec["path"])
        raise EmbeddingError(f"unknown embedding provider spec {spec!r}")
    if spec == "hash":
        return HashEmbeddingProvider(seed=default_seed)
    if spec.startswith("file:"):
        return FileEmbeddingProvider(spec[len("file:"):])
    raise EmbeddingError(f"unknown embedding provider spec {spec!r}")
