"""Verified neural building blocks: layer-weighted subword pooling,
bilinear/biaffine attention and single-layer feed-forward classifiers.

Shapes follow the set-scoring convention: bilinear/biaffine map a set of N1
left vectors and N2 right vectors to an (N1, K, N2) score tensor, one score
per ordered pair and output channel:

    score[i, k, j] = x1[i] @ U[:, k, :] @ x2[j]                  (bilinear)
    score[i, k, j] = bilinear + W[k] @ (x1[i] (+) x2[j]) + b[k]  (biaffine)
"""

from __future__ import annotations

import torch
import torch.nn as nn
import torch.nn.functional as F

from .embeddings import EmbeddingBundle

_ACTIVATIONS = {
    "gelu": F.gelu,
    "tanh": torch.tanh,
    "relu": F.relu,
    "identity": lambda x: x,
}


def activation_fn(name: str):
    try:
        return _ACTIVATIONS[name]
    except KeyError:
        raise ValueError(f"unknown activation {name!r}; choose from {sorted(_ACTIVATIONS)}") from None


def bilinear(x1: torch.Tensor, x2: torch.Tensor, u: torch.Tensor) -> torch.Tensor:
    """x1: (N1, D1), x2: (N2, D2), u: (D1, K, D2) -> (N1, K, N2)."""
    if x1.shape[-1] != u.shape[0] or x2.shape[-1] != u.shape[2]:
        raise ValueError(f"bilinear shape mismatch: x1 {tuple(x1.shape)}, u {tuple(u.shape)}, "
                         f"x2 {tuple(x2.shape)}")
    return torch.einsum("id,dke,je->ikj", x1, u, x2)


def biaffine(x1: torch.Tensor, x2: torch.Tensor, u: torch.Tensor,
             w: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Bilinear term plus a linear map of the concatenated pair and a bias.

    w: (K, D1 + D2), b: (K,) -> (N1, K, N2).
    """
    d1 = x1.shape[-1]
    if w.shape[1] != d1 + x2.shape[-1] or w.shape[0] != b.shape[0] or w.shape[0] != u.shape[1]:
        raise ValueError(f"biaffine shape mismatch: u {tuple(u.shape)}, w {tuple(w.shape)}, "
                         f"b {tuple(b.shape)}")
    scores = bilinear(x1, x2, u)
    scores = scores + (x1 @ w[:, :d1].T).unsqueeze(2)
    scores = scores + (x2 @ w[:, d1:].T).T.unsqueeze(0)
    return scores + b.view(1, -1, 1)


class Bilinear(nn.Module):
    def __init__(self, dim1: int, dim2: int, channels: int = 1):
        super().__init__()
        self.u = nn.Parameter(torch.zeros(dim1, channels, dim2))

    def forward(self, x1: torch.Tensor, x2: torch.Tensor) -> torch.Tensor:
        return bilinear(x1, x2, self.u)


class Biaffine(nn.Module):
    """Pairwise scorer; zero-initialized so scores start at zero and the
    channel structure is learned from gradients through u/w/b."""

    def __init__(self, dim1: int, dim2: int, channels: int = 1):
        super().__init__()
        self.u = nn.Parameter(torch.zeros(dim1, channels, dim2))
        self.w = nn.Parameter(torch.zeros(channels, dim1 + dim2))
        self.b = nn.Parameter(torch.zeros(channels))

    def forward(self, x1: torch.Tensor, x2: torch.Tensor) -> torch.Tensor:
        return biaffine(x1, x2, self.u, self.w, self.b)


class FeedForward(nn.Module):
    """Single linear layer followed by a fixed smooth activation."""

    def __init__(self, dim_in: int, dim_out: int, activation: str = "gelu"):
        super().__init__()
        self.linear = nn.Linear(dim_in, dim_out)
        self.activation = activation
        self._act = activation_fn(activation)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self._act(self.linear(x))


class SubwordLayerPooling(nn.Module):
    """Collapse (layers, subwords, dim) sentence embeddings to one vector per
    token: a learned attention over each token's subwords within every layer,
    then a softmax-weighted mix across layers.

    The subword scorer is shared across layers; attention weights still
    differ per layer because each layer's vectors differ. A single-subword
    token reduces to the plain layer mix.
    """

    def __init__(self, layers: int, dim: int):
        super().__init__()
        self.layers = layers
        self.dim = dim
        self.layer_weights = nn.Parameter(torch.zeros(layers))
        self.subword_scorer = nn.Linear(dim, 1)

    def layer_mix(self) -> torch.Tensor:
        return torch.softmax(self.layer_weights, dim=0)

    def forward(self, vectors: torch.Tensor, alignment) -> torch.Tensor:
        """vectors: (layers, subwords, dim); alignment: per-token subword
        index lists. Returns (tokens, dim)."""
        if vectors.shape[0] != self.layers or vectors.shape[2] != self.dim:
            raise ValueError(f"expected ({self.layers}, *, {self.dim}) vectors, got {tuple(vectors.shape)}")
        n_tokens = len(alignment)
        if n_tokens == 0:
            return vectors.new_zeros((0, self.dim))
        if any(len(token) == 0 for token in alignment):
            raise ValueError("token with zero subwords")

        width = max(len(token) for token in alignment)
        index = vectors.new_zeros((n_tokens, width), dtype=torch.long)
        mask = vectors.new_zeros((n_tokens, width), dtype=torch.bool)
        for t, subwords in enumerate(alignment):
            index[t, :len(subwords)] = torch.as_tensor(list(subwords), device=vectors.device)
            mask[t, :len(subwords)] = True

        gathered = vectors[:, index, :]                              # (L, T, width, D)
        scores = self.subword_scorer(gathered).squeeze(-1)           # (L, T, width)
        scores = scores.masked_fill(~mask, float("-inf"))
        attention = torch.softmax(scores, dim=-1)
        pooled = torch.einsum("ltw,ltwd->ltd", attention, gathered)  # (L, T, D)
        return torch.einsum("l,ltd->td", self.layer_mix(), pooled)

    def pool_bundle(self, bundle: EmbeddingBundle) -> torch.Tensor:
        dtype = self.layer_weights.dtype
        vectors = torch.as_tensor(bundle.vectors, dtype=dtype)
        return self(vectors, bundle.alignment)


def pool_embeddings(bundle: EmbeddingBundle, pooling: SubwordLayerPooling) -> torch.Tensor:
    """Convenience wrapper: (tokens, dim) embeddings for one sentence."""
    return pooling.pool_bundle(bundle)
