"""Query-based graph parser: token embeddings map to per-token query slots,
a self-attention encoder contextualizes the queries, feed-forward and
biaffine heads predict node labels, anchors and edges, and a constrained
decoder turns raw scores into a structurally valid information graph.

Every token owns `query_length` query slots, so several co-anchored nodes
(e.g. one trigger word evoking two events) can be emitted from one token.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn

from .corpus import Ontology, ontology_from_dict, ontology_to_dict
from .embeddings import EmbeddingBundle
from .graph import TRIGGER_LABEL, GraphEdge, GraphNode, IEGraph, NodeKind, _node_sort_key
from .neural import Biaffine, FeedForward, SubwordLayerPooling

NULL_LABEL = "<null>"


class ParserError(ValueError):
    pass


@dataclass
class ParserConfig:
    """Architecture and decoding knobs. Sizes and dropouts default to the
    shared hyperparameter configuration; embedding layers/dim must match the
    embedding provider."""

    query_length: int = 2
    n_transformer_layers: int = 3
    n_attention_heads: int = 8
    hidden_size: int = 256
    ff_multiplier: int = 4
    hidden_size_anchor: int = 256
    hidden_size_edge_presence: int = 256
    hidden_size_edge_label: int = 256
    dropout_transformer: float = 0.25
    dropout_transformer_attention: float = 0.1
    activation: str = "gelu"
    anchor_threshold: float = 0.5
    edge_threshold: float = 0.5
    embedding_layers: int = 3
    embedding_dim: int = 64
    include_ent_rel: bool = True

    def __post_init__(self):
        for name in ("query_length", "n_transformer_layers", "n_attention_heads", "hidden_size",
                     "ff_multiplier", "hidden_size_anchor", "hidden_size_edge_presence",
                     "hidden_size_edge_label", "embedding_layers", "embedding_dim"):
            if getattr(self, name) < 1:
                raise ParserError(f"{name} must be positive")
        for name in ("anchor_threshold", "edge_threshold"):
            value = getattr(self, name)
            if not (0.0 < value < 1.0):
                raise ParserError(f"{name} must lie strictly between 0 and 1")
        if self.hidden_size % self.n_attention_heads != 0:
            raise ParserError("hidden_size must be divisible by n_attention_heads")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ParserConfig":
        return cls(**data)


class LabelSpace:
    """Index spaces for node labels and edge labels, plus the edge-label
    masks implementing the structural constraints: root edges carry event
    types, trigger-to-entity edges carry roles, entity-to-entity edges carry
    relation types, and every other endpoint shape is illegal."""

    def __init__(self, ontology: Ontology, include_ent_rel: bool = True):
        self.source_ontology = ontology
        self.include_ent_rel = include_ent_rel
        self.ontology = ontology if include_ent_rel else ontology.reduced()

        self.node_labels: tuple[str, ...] = (NULL_LABEL, TRIGGER_LABEL) + self.ontology.entity_types
        self._node_index = {label: i for i, label in enumerate(self.node_labels)}

        o = self.ontology
        self.edge_labels: tuple[str, ...] = o.event_types + o.argument_roles + o.relation_types
        self._edge_index = {label: i for i, label in enumerate(self.edge_labels)}

        n_events = len(o.event_types)
        n_roles = len(o.argument_roles)
        total = len(self.edge_labels)

        def mask(start: int, stop: int) -> np.ndarray:
            out = np.zeros(total, dtype=bool)
            out[start:stop] = True
            return out

        self.edge_masks: dict[tuple[NodeKind, NodeKind], np.ndarray] = {
            (NodeKind.ROOT, NodeKind.TRIGGER): mask(0, n_events),
            (NodeKind.TRIGGER, NodeKind.ENTITY): mask(n_events, n_events + n_roles),
            (NodeKind.ENTITY, NodeKind.ENTITY): mask(n_events + n_roles, total),
        }

    @property
    def n_node_labels(self) -> int:
        return len(self.node_labels)

    @property
    def n_edge_labels(self) -> int:
        return len(self.edge_labels)

    def node_label_index(self, label: str) -> int:
        return self._node_index[label]

    def edge_label_index(self, label: str) -> int:
        return self._edge_index[label]

    def allowed_edge_labels(self, src: NodeKind, dst: NodeKind) -> np.ndarray:
        empty = np.zeros(self.n_edge_labels, dtype=bool)
        return self.edge_masks.get((src, dst), empty)


@dataclass
class ParserOutput:
    """Raw scores for one sentence. Edge tensors cover the root (position 0)
    followed by the selected queries in ascending query order."""

    node_label_logits: torch.Tensor      # (Q, C)
    anchor_logits: torch.Tensor          # (Q, T)
    edge_presence_logits: torch.Tensor   # (N, N)
    edge_label_logits: torch.Tensor      # (N, N, R)
    selected_queries: tuple[int, ...]    # node-bearing query slots, ascending

    @property
    def n_queries(self) -> int:
        return self.node_label_logits.shape[0]

    @property
    def n_nodes(self) -> int:
        return len(self.selected_queries) + 1

    @property
    def query_to_node(self) -> dict[int, int]:
        return {q: i + 1 for i, q in enumerate(self.selected_queries)}


class QueryEncoderLayer(nn.Module):
    """Post-norm self-attention encoder layer without positional encoding
    (queries already carry token identity), hence permutation-equivariant."""

    def __init__(self, hidden: int, heads: int, ff_size: int, dropout: float,
                 attention_dropout: float, activation: str = "gelu"):
        super().__init__()
        self.attention = nn.MultiheadAttention(hidden, heads, dropout=attention_dropout,
                                               batch_first=True)
        self.ff = nn.Sequential(
            FeedForward(hidden, ff_size, activation),
            nn.Linear(ff_size, hidden),
        )
        self.norm_attention = nn.LayerNorm(hidden)
        self.norm_ff = nn.LayerNorm(hidden)
        self.dropout = nn.Dropout(dropout)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        attended, _ = self.attention(x, x, x, need_weights=False)
        x = self.norm_attention(x + self.dropout(attended))
        return self.norm_ff(x + self.dropout(self.ff(x)))


class GraphParser(nn.Module):
    """The full model. `pooling` holds the encoder-side parameters (the
    stand-in for language-model fine-tuning); everything else belongs to the
    decoder parameter group."""

    def __init__(self, config: ParserConfig, ontology: Ontology):
        super().__init__()
        self.config = config
        self.label_space = LabelSpace(ontology, config.include_ent_rel)

        hidden = config.hidden_size
        act = config.activation
        self.pooling = SubwordLayerPooling(config.embedding_layers, config.embedding_dim)
        self.query_map = nn.Linear(config.embedding_dim, config.query_length * hidden)
        self.encoder = nn.ModuleList([
            QueryEncoderLayer(hidden, config.n_attention_heads, config.ff_multiplier * hidden,
                              config.dropout_transformer, config.dropout_transformer_attention, act)
            for _ in range(config.n_transformer_layers)
        ])
        self.node_label_head = FeedForward(hidden, self.label_space.n_node_labels, act)

        self.anchor_query = nn.Linear(hidden, config.hidden_size_anchor)
        self.anchor_token = nn.Linear(config.embedding_dim, config.hidden_size_anchor)
        self.anchor_scorer = Biaffine(config.hidden_size_anchor, config.hidden_size_anchor, 1)

        self.root_embedding = nn.Parameter(torch.randn(hidden) * 0.02)
        self.edge_presence_src = FeedForward(hidden, config.hidden_size_edge_presence, act)
        self.edge_presence_dst = FeedForward(hidden, config.hidden_size_edge_presence, act)
        self.edge_presence_scorer = Biaffine(config.hidden_size_edge_presence,
                                             config.hidden_size_edge_presence, 1)
        self.edge_label_src = FeedForward(hidden, config.hidden_size_edge_label, act)
        self.edge_label_dst = FeedForward(hidden, config.hidden_size_edge_label, act)
        self.edge_label_scorer = Biaffine(config.hidden_size_edge_label, config.hidden_size_edge_label,
                                          self.label_space.n_edge_labels)

    # -- parameter groups ---------------------------------------------------

    def encoder_parameters(self):
        return list(self.pooling.parameters())

    def decoder_parameters(self):
        encoder_ids = {id(p) for p in self.pooling.parameters()}
        return [p for p in self.parameters() if id(p) not in encoder_ids]

    # -- forward pieces -----------------------------------------------------

    def embed_tokens(self, bundle: EmbeddingBundle) -> torch.Tensor:
        if bundle.layers != self.config.embedding_layers or bundle.dim != self.config.embedding_dim:
            raise ParserError(
                f"bundle ({bundle.layers} layers, dim {bundle.dim}) does not match model "
                f"({self.config.embedding_layers} layers, dim {self.config.embedding_dim})")
        return self.pooling.pool_bundle(bundle)

    def make_queries(self, e: torch.Tensor) -> torch.Tensor:
        """(T, D) -> (T * query_length, H); slot order is token-major."""
        n_tokens = e.shape[0]
        q = self.query_map(e)
        return q.reshape(n_tokens * self.config.query_length, self.config.hidden_size)

    def encode_queries(self, q: torch.Tensor) -> torch.Tensor:
        h = q.unsqueeze(0)
        for layer in self.encoder:
            h = layer(h)
        return h.squeeze(0)

    def predict_nodes(self, h: torch.Tensor, e: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        node_label_logits = self.node_label_head(h)
        anchor = self.anchor_scorer(self.anchor_query(h), self.anchor_token(e))
        return node_label_logits, anchor[:, 0, :]

    def predict_edges(self, h_nodes: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """h_nodes: (N, H) with the root representation at position 0."""
        presence = self.edge_presence_scorer(self.edge_presence_src(h_nodes),
                                             self.edge_presence_dst(h_nodes))
        labels = self.edge_label_scorer(self.edge_label_src(h_nodes),
                                        self.edge_label_dst(h_nodes))
        return presence[:, 0, :], labels.permute(0, 2, 1)

    def _forward(self, bundle: EmbeddingBundle, slots: tuple[int, ...] | None) -> ParserOutput:
        e = self.embed_tokens(bundle)
        n_tokens = e.shape[0]
        if n_tokens == 0:
            empty = e.new_zeros
            return ParserOutput(empty((0, self.label_space.n_node_labels)), empty((0, 0)),
                                empty((1, 1)), empty((1, 1, self.label_space.n_edge_labels)), ())
        q = self.make_queries(e)
        h = self.encode_queries(q)
        node_label_logits, anchor_logits = self.predict_nodes(h, e)
        if slots is None:
            labels = node_label_logits.argmax(dim=-1)
            slots = tuple(int(i) for i in torch.nonzero(labels != 0, as_tuple=False).flatten())
        else:
            slots = tuple(sorted(slots))
            if any(not 0 <= s < h.shape[0] for s in slots):
                raise ParserError(f"query slot out of range for {h.shape[0]} queries")
        h_nodes = torch.cat([self.root_embedding.unsqueeze(0), h[list(slots)]], dim=0)
        presence, labels_logits = self.predict_edges(h_nodes)
        return ParserOutput(node_label_logits, anchor_logits, presence, labels_logits, slots)

    def forward_parse(self, bundle: EmbeddingBundle) -> ParserOutput:
        """Inference path: node-bearing queries chosen by label argmax."""
        return self._forward(bundle, None)

    def forward_teacher(self, bundle: EmbeddingBundle, slots: tuple[int, ...]) -> ParserOutput:
        """Training path: edges scored over the gold-assigned query slots."""
        return self._forward(bundle, slots)


# ---------------------------------------------------------------------------
# Constrained decoding


def decode_predictions(output: ParserOutput, config: ParserConfig, label_space: LabelSpace,
                       sentence_id: str, n_tokens: int) -> IEGraph:
    """Scores -> valid graph, total for arbitrary finite logits.

    Queries whose label argmax is non-null become nodes; anchors are the
    tokens whose sigmoid probability clears `anchor_threshold` (nodes left
    with no anchor are dropped); edges clear `edge_threshold` and take the
    best label allowed for their endpoint shape, every illegal shape being
    discarded; a trigger survives only if its root edge survives.
    """
    node_labels = output.node_label_logits.detach().cpu().numpy()
    anchor_prob = torch.sigmoid(output.anchor_logits.detach()).cpu().numpy()
    presence_prob = torch.sigmoid(output.edge_presence_logits.detach()).cpu().numpy()
    label_logits = output.edge_label_logits.detach().cpu().numpy()

    kinds: dict[int, NodeKind] = {0: NodeKind.ROOT}
    labels: dict[int, str | None] = {0: None}
    anchors: dict[int, frozenset[int]] = {0: frozenset()}
    kept: list[int] = [0]
    for query, position in output.query_to_node.items():
        label = label_space.node_labels[int(np.argmax(node_labels[query]))]
        if label == NULL_LABEL:
            continue  # only reachable with teacher-forced slots
        anchor = frozenset(int(t) for t in np.nonzero(anchor_prob[query] > config.anchor_threshold)[0])
        if not anchor:
            continue
        kinds[position] = NodeKind.TRIGGER if label == TRIGGER_LABEL else NodeKind.ENTITY
        labels[position] = label if label != TRIGGER_LABEL else TRIGGER_LABEL
        anchors[position] = anchor
        kept.append(position)

    edges: dict[tuple[int, int], str] = {}
    for i in kept:
        for j in kept:
            if i == j or j == 0:
                continue
            mask = label_space.allowed_edge_labels(kinds[i], kinds[j])
            if not mask.any():
                continue
            if presence_prob[i, j] <= config.edge_threshold:
                continue
            scores = np.where(mask, label_logits[i, j], -np.inf)
            edges[(i, j)] = label_space.edge_labels[int(np.argmax(scores))]

    surviving = []
    for position in kept:
        if kinds[position] == NodeKind.TRIGGER and (0, position) not in edges:
            continue
        surviving.append(position)
    alive = set(surviving)
    edges = {pair: label for pair, label in edges.items() if pair[0] in alive and pair[1] in alive}

    order = sorted(
        (p for p in surviving if p != 0),
        key=lambda p: _node_sort_key(kinds[p], anchors[p], labels[p], f"{p:06d}"),
    )
    remap = {0: 0}
    nodes = [GraphNode(0, NodeKind.ROOT, None, frozenset())]
    for position in order:
        remap[position] = len(nodes)
        nodes.append(GraphNode(len(nodes), kinds[position], labels[position], anchors[position]))
    out_edges = sorted(
        (GraphEdge(remap[i], remap[j], label) for (i, j), label in edges.items()),
        key=lambda e: (e.src, e.dst, e.label),
    )
    return IEGraph(sentence_id, n_tokens, tuple(nodes), tuple(out_edges), label_space.ontology)


def parse(model: GraphParser, sentence, bundle: EmbeddingBundle) -> IEGraph:
    """Deterministic sentence -> graph inference."""
    if bundle.n_tokens != len(sentence.tokens):
        raise ParserError(
            f"sentence {sentence.id!r}: bundle aligns {bundle.n_tokens} tokens, "
            f"sentence has {len(sentence.tokens)}")
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            output = model.forward_parse(bundle)
    finally:
        model.train(was_training)
    return decode_predictions(output, model.config, model.label_space,
                              sentence.id, len(sentence.tokens))


# ---------------------------------------------------------------------------
# Checkpoints


@dataclass
class Checkpoint:
    model: GraphParser
    parser_config: ParserConfig
    ontology: Ontology
    provenance: dict
    train_config: dict | None = None
    extra: dict = field(default_factory=dict)


def save_checkpoint(directory: str | Path, model: GraphParser, provenance: dict,
                    train_config: dict | None = None, extra: dict | None = None) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    config = {
        "format_version": 1,
        "parser": model.config.to_dict(),
        "train": train_config,
        "extra": extra or {},
    }
    (directory / "config.json").write_text(json.dumps(config, indent=2, sort_keys=True) + "\n",
                                           encoding="utf-8")
    (directory / "ontology.json").write_text(
        json.dumps(ontology_to_dict(model.label_space.source_ontology), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    (directory / "provenance.json").write_text(json.dumps(provenance, indent=2, sort_keys=True) + "\n",
                                               encoding="utf-8")
    torch.save(model.state_dict(), directory / "params.bin")
    return directory


def load_checkpoint(directory: str | Path) -> Checkpoint:
    directory = Path(directory)
    config = json.loads((directory / "config.json").read_text(encoding="utf-8"))
    if config.get("format_version") != 1:
        raise ParserError(f"unsupported checkpoint format in {directory}")
    parser_config = ParserConfig.from_dict(config["parser"])
    ontology = ontology_from_dict(json.loads((directory / "ontology.json").read_text(encoding="utf-8")))
    provenance = json.loads((directory / "provenance.json").read_text(encoding="utf-8"))
    model = GraphParser(parser_config, ontology)
    state = torch.load(directory / "params.bin", map_location="cpu", weights_only=True)
    model.load_state_dict(state)
    model.eval()
    return Checkpoint(model=model, parser_config=parser_config, ontology=ontology,
                      provenance=provenance, train_config=config.get("train"),
                      extra=config.get("extra", {}))
