"""Anchored information graph: lossless conversion between sentence
annotations and a root/trigger/entity node graph with typed edges, plus
structural validation, the event-only reduction and JSON serialization.

Nodes anchor to token index sets; a node's span is recovered as
[min(anchor), max(anchor) + 1). Distinct annotations always map to distinct
nodes, so co-anchored triggers (one trigger word evoking several events)
and nested spans are represented without loss.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Iterable, Mapping

from .corpus import (
    GENERIC_ENTITY_TYPE,
    Corpus,
    CorpusError,
    EntityMention,
    EventMention,
    Ontology,
    RelationMention,
    Sentence,
    Span,
    corpus_to_dict,
    ontology_from_dict,
    ontology_to_dict,
    sentence_from_dict,
    sentence_to_dict,
    validate_corpus,
)

TRIGGER_LABEL = "trigger"


class NodeKind(enum.Enum):
    ROOT = "root"
    TRIGGER = "trigger"
    ENTITY = "entity"


_KIND_RANK = {NodeKind.ROOT: 0, NodeKind.TRIGGER: 1, NodeKind.ENTITY: 2}


class GraphError(ValueError):
    """Raised when a sentence cannot be encoded or a graph refuses to decode."""

    def __init__(self, message: str, violations: list[str] | None = None, sentence_id: str | None = None):
        self.violations = violations or []
        self.sentence_id = sentence_id
        if sentence_id is not None:
            message = f"sentence {sentence_id!r}: {message}"
        if violations:
            message += "\n  - " + "\n  - ".join(violations)
        super().__init__(message)


@dataclass(frozen=True)
class GraphNode:
    node_id: int
    kind: NodeKind
    label: str | None
    anchor: frozenset[int]
    source_id: str | None = None

    def span(self) -> Span:
        return Span(min(self.anchor), max(self.anchor) + 1)


@dataclass(frozen=True)
class GraphEdge:
    src: int
    dst: int
    label: str
    source_id: str | None = None


@dataclass(frozen=True)
class IEGraph:
    sentence_id: str
    n_tokens: int
    nodes: tuple[GraphNode, ...]
    edges: tuple[GraphEdge, ...]
    ontology: Ontology | None = None

    @property
    def root(self) -> GraphNode:
        return self.nodes[0]

    def nodes_of_kind(self, kind: NodeKind) -> list[GraphNode]:
        return [n for n in self.nodes if n.kind == kind]


def _node_sort_key(kind: NodeKind, anchor: Iterable[int], label: str | None, aux: str):
    anchor = sorted(anchor)
    return (anchor[0], anchor[-1], _KIND_RANK[kind], label or "", aux)


# ---------------------------------------------------------------------------
# Encoding


def encode(sentence: Sentence, ontology: Ontology | None = None) -> IEGraph:
    """Build the information graph for one sentence.

    One entity node per entity mention (anchored to its effective span), one
    trigger node per event mention (so a shared trigger span yields several
    co-anchored nodes), a root edge labeled with the event type, a role edge
    per event argument and a relation edge per relation, arg1 -> arg2.
    """
    # spec key: (anchor min, anchor max, kind, label); aux breaks ties among
    # co-anchored triggers (event type) and identically typed entities (id).
    specs: list[tuple[tuple, NodeKind, str, frozenset[int], str, object]] = []
    for entity in sentence.entities:
        anchor = frozenset(entity.span.tokens())
        specs.append((_node_sort_key(NodeKind.ENTITY, anchor, entity.entity_type, entity.id),
                      NodeKind.ENTITY, entity.entity_type, anchor, entity.id, entity))
    for event in sentence.events:
        anchor = frozenset(event.trigger_span.tokens())
        specs.append((_node_sort_key(NodeKind.TRIGGER, anchor, TRIGGER_LABEL, f"{event.event_type}\0{event.id}"),
                      NodeKind.TRIGGER, TRIGGER_LABEL, anchor, event.id, event))
    specs.sort(key=lambda item: item[0])

    nodes = [GraphNode(0, NodeKind.ROOT, None, frozenset())]
    position: dict[str, int] = {}
    mention_of: dict[int, object] = {}
    for key, kind, label, anchor, source_id, mention in specs:
        node_id = len(nodes)
        nodes.append(GraphNode(node_id, kind, label, anchor, source_id))
        mention_of[node_id] = mention
        if kind == NodeKind.ENTITY:
            position[source_id] = node_id

    edges: list[GraphEdge] = []
    pairs: set[tuple[int, int]] = set()

    def add_edge(src: int, dst: int, label: str, source_id: str | None, what: str) -> None:
        if (src, dst) in pairs:
            raise GraphError(
                f"cannot encode {what}: a second edge on node pair ({src}, {dst}) "
                "is not representable in the graph",
                sentence_id=sentence.id,
            )
        pairs.add((src, dst))
        edges.append(GraphEdge(src, dst, label, source_id))

    for node in nodes[1:]:
        if node.kind != NodeKind.TRIGGER:
            continue
        event: EventMention = mention_of[node.node_id]  # type: ignore[assignment]
        add_edge(0, node.node_id, event.event_type, event.id, f"event {event.id!r}")
    for node in nodes[1:]:
        if node.kind != NodeKind.TRIGGER:
            continue
        event = mention_of[node.node_id]  # type: ignore[assignment]
        for entity_id, role in event.arguments:
            add_edge(node.node_id, position[entity_id], role, None,
                     f"argument ({event.id!r}, {entity_id!r})")
    for relation in sentence.relations:
        add_edge(position[relation.arg1], position[relation.arg2],
                 relation.relation_type, relation.id, f"relation {relation.id!r}")

    edges.sort(key=lambda e: (e.src, e.dst, e.label))
    return IEGraph(sentence.id, len(sentence.tokens), tuple(nodes), tuple(edges), ontology)


# ---------------------------------------------------------------------------
# Validation


def validate(graph: IEGraph) -> list[str]:
    """Return all structural violations; an empty list means valid."""
    out: list[str] = []
    nodes = graph.nodes
    if not nodes:
        return ["graph has no nodes"]
    for i, node in enumerate(nodes):
        if node.node_id != i:
            out.append(f"node {node.node_id} is not densely numbered at position {i}")
    roots = [n for n in nodes if n.kind == NodeKind.ROOT]
    if len(roots) != 1:
        out.append(f"expected exactly one root node, found {len(roots)}")
    elif nodes[0].kind != NodeKind.ROOT:
        out.append("root node does not hold the first position")

    ontology = graph.ontology
    for node in nodes:
        if node.kind == NodeKind.ROOT:
            if node.anchor:
                out.append(f"root node {node.node_id} has a non-empty anchor")
            if node.label is not None:
                out.append(f"root node {node.node_id} carries label {node.label!r}")
            continue
        if not node.anchor:
            out.append(f"{node.kind.value} node {node.node_id} has an empty anchor")
        elif not all(0 <= t < graph.n_tokens for t in node.anchor):
            out.append(f"node {node.node_id} anchor exceeds {graph.n_tokens} tokens")
        if node.kind == NodeKind.TRIGGER and node.label != TRIGGER_LABEL:
            out.append(f"trigger node {node.node_id} has label {node.label!r}")
        if node.kind == NodeKind.ENTITY:
            if node.label is None:
                out.append(f"entity node {node.node_id} has no label")
            elif ontology is not None and node.label != GENERIC_ENTITY_TYPE \
                    and node.label not in ontology.entity_types:
                out.append(f"entity node {node.node_id} has unknown entity type {node.label!r}")

    pairs: set[tuple[int, int]] = set()
    root_edges_into: dict[int, int] = {}
    for edge in graph.edges:
        if not (0 <= edge.src < len(nodes) and 0 <= edge.dst < len(nodes)):
            out.append(f"edge ({edge.src}, {edge.dst}) endpoint out of range")
            continue
        if edge.src == edge.dst:
            out.append(f"edge ({edge.src}, {edge.dst}) is a self-loop")
            continue
        if (edge.src, edge.dst) in pairs:
            out.append(f"duplicate edge on node pair ({edge.src}, {edge.dst})")
        pairs.add((edge.src, edge.dst))
        src, dst = nodes[edge.src], nodes[edge.dst]
        shape = (src.kind, dst.kind)
        if shape == (NodeKind.ROOT, NodeKind.TRIGGER):
            root_edges_into[edge.dst] = root_edges_into.get(edge.dst, 0) + 1
            if ontology is not None and edge.label not in ontology.event_types:
                out.append(f"root edge to node {edge.dst} has non-event label {edge.label!r}")
        elif shape == (NodeKind.TRIGGER, NodeKind.ENTITY):
            if ontology is not None and edge.label not in ontology.argument_roles:
                out.append(f"argument edge ({edge.src}, {edge.dst}) has non-role label {edge.label!r}")
        elif shape == (NodeKind.ENTITY, NodeKind.ENTITY):
            if ontology is not None and edge.label not in ontology.relation_types:
                out.append(f"relation edge ({edge.src}, {edge.dst}) has non-relation label {edge.label!r}")
        else:
            out.append(f"edge ({edge.src}, {edge.dst}) connects {src.kind.value} to {dst.kind.value}")

    for node in nodes:
        if node.kind != NodeKind.TRIGGER:
            continue
        count = root_edges_into.get(node.node_id, 0)
        if count != 1:
            out.append(f"trigger node {node.node_id} has {count} incoming root edges, expected 1")
    return out


# ---------------------------------------------------------------------------
# Decoding


def decode(graph: IEGraph, tokens=None) -> tuple[
        tuple[EntityMention, ...], tuple[RelationMention, ...], tuple[EventMention, ...]]:
    """Invert :func:`encode`. Refuses (raises) on any structural violation.

    Anchors convert to spans via the min/max rule, so a discontiguous anchor
    decodes to its covering span. Generated ids are used for nodes/edges
    without a source id.
    """
    violations = validate(graph)
    if violations:
        raise GraphError("graph fails validation", violations, sentence_id=graph.sentence_id)
    if tokens is not None and len(tokens) != graph.n_tokens:
        raise GraphError(f"graph expects {graph.n_tokens} tokens, got {len(tokens)}",
                         sentence_id=graph.sentence_id)

    entity_ids: dict[int, str] = {}
    entities: list[EntityMention] = []
    counter = 0
    for node in graph.nodes:
        if node.kind != NodeKind.ENTITY:
            continue
        entity_id = node.source_id if node.source_id is not None else f"e{counter}"
        counter += 1
        entity_ids[node.node_id] = entity_id
        span = node.span()
        entities.append(EntityMention(entity_id, node.label, span, full_span=span))

    root_label: dict[int, tuple[str, str | None]] = {}
    arguments: dict[int, list[tuple[str, str]]] = {}
    relations: list[RelationMention] = []
    rel_counter = 0
    for edge in graph.edges:
        src, dst = graph.nodes[edge.src], graph.nodes[edge.dst]
        if src.kind == NodeKind.ROOT:
            root_label[edge.dst] = (edge.label, edge.source_id)
        elif src.kind == NodeKind.TRIGGER:
            arguments.setdefault(edge.src, []).append((entity_ids[edge.dst], edge.label))
        else:
            rel_id = edge.source_id if edge.source_id is not None else f"r{rel_counter}"
            rel_counter += 1
            relations.append(RelationMention(rel_id, edge.label, entity_ids[edge.src], entity_ids[edge.dst]))

    events: list[EventMention] = []
    counter = 0
    for node in graph.nodes:
        if node.kind != NodeKind.TRIGGER:
            continue
        event_type, source_id = root_label[node.node_id]
        event_id = source_id if source_id is not None else f"ev{counter}"
        counter += 1
        events.append(EventMention(event_id, event_type, node.span(),
                                   tuple(sorted(arguments.get(node.node_id, [])))))

    entities.sort(key=lambda e: (e.span.start, e.span.end, e.entity_type, e.id))
    relations.sort(key=lambda r: (r.relation_type, r.arg1, r.arg2, r.id))
    events.sort(key=lambda ev: (ev.trigger_span.start, ev.trigger_span.end, ev.event_type, ev.id))
    return tuple(entities), tuple(relations), tuple(events)


def decode_sentence(graph: IEGraph, sentence: Sentence) -> Sentence:
    """Rebuild `sentence` with annotations decoded from `graph`."""
    entities, relations, events = decode(graph, sentence.tokens)
    return replace(sentence, entities=entities, relations=relations, events=events)


# ---------------------------------------------------------------------------
# Ablation reduction


def reduce_graph(graph: IEGraph) -> IEGraph:
    """Event-extraction-only projection: drop relation edges, relabel entity
    nodes with the generic entity label and drop entities that fill no
    argument slot. Triggers, root edges and argument edges are untouched."""
    argument_targets = {
        e.dst for e in graph.edges
        if graph.nodes[e.src].kind == NodeKind.TRIGGER and graph.nodes[e.dst].kind == NodeKind.ENTITY
    }
    keep: list[GraphNode] = []
    remap: dict[int, int] = {}
    for node in graph.nodes:
        if node.kind == NodeKind.ENTITY and node.node_id not in argument_targets:
            continue
        remap[node.node_id] = len(keep)
        if node.kind == NodeKind.ENTITY:
            node = replace(node, label=GENERIC_ENTITY_TYPE)
        keep.append(replace(node, node_id=len(keep)))
    edges = tuple(
        replace(e, src=remap[e.src], dst=remap[e.dst])
        for e in graph.edges
        if not (graph.nodes[e.src].kind == NodeKind.ENTITY and graph.nodes[e.dst].kind == NodeKind.ENTITY)
        and e.src in remap and e.dst in remap
    )
    ontology = graph.ontology.reduced() if graph.ontology is not None \
        and graph.ontology.relation_types else graph.ontology
    return IEGraph(graph.sentence_id, graph.n_tokens, tuple(keep), edges, ontology)


# ---------------------------------------------------------------------------
# JSON serialization


def graph_to_dict(graph: IEGraph) -> dict:
    nodes = []
    for node in graph.nodes:
        item: dict = {"id": node.node_id, "kind": node.kind.value,
                      "label": node.label, "anchor": sorted(node.anchor)}
        if node.source_id is not None:
            item["ref"] = node.source_id
        nodes.append(item)
    edges = []
    for edge in graph.edges:
        item = {"src": edge.src, "dst": edge.dst, "label": edge.label}
        if edge.source_id is not None:
            item["ref"] = edge.source_id
        edges.append(item)
    return {"nodes": nodes, "edges": edges}


def graph_from_dict(data: Mapping, sentence_id: str, n_tokens: int,
                    ontology: Ontology | None = None) -> IEGraph:
    nodes = tuple(
        GraphNode(node_id=int(n["id"]), kind=NodeKind(n["kind"]), label=n.get("label"),
                  anchor=frozenset(int(t) for t in n.get("anchor", [])),
                  source_id=n.get("ref"))
        for n in data["nodes"]
    )
    edges = tuple(
        GraphEdge(src=int(e["src"]), dst=int(e["dst"]), label=e["label"], source_id=e.get("ref"))
        for e in data["edges"]
    )
    return IEGraph(sentence_id, n_tokens, nodes, edges, ontology)


def corpus_to_graphs_dict(corpus: Corpus) -> dict:
    """Corpus-level graph container; carries tokens/text (and entity
    head/full spans, which anchors alone cannot express) so the conversion
    back to annotations is lossless."""
    corpus_data = corpus_to_dict(corpus)
    out_sentences = []
    for sentence, sentence_data in zip(corpus.sentences, corpus_data["sentences"]):
        graph = encode(sentence, corpus.ontology)
        item = {k: sentence_data[k] for k in ("id", "doc_id", "lang", "text", "tokens")}
        item.update(graph_to_dict(graph))
        entity_by_id = {e.id: e for e in sentence.entities}
        for node_data in item["nodes"]:
            entity = entity_by_id.get(node_data.get("ref"))
            if entity is None or node_data["kind"] != NodeKind.ENTITY.value:
                continue
            if entity.full_span != entity.span:
                node_data["full_start"] = entity.full_span.start
                node_data["full_end"] = entity.full_span.end
            if entity.head_span is not None:
                node_data["head_start"] = entity.head_span.start
                node_data["head_end"] = entity.head_span.end
        out_sentences.append(item)
    data = {"schema_version": corpus_data["schema_version"],
            "ontology": corpus_data["ontology"],
            "sentences": out_sentences}
    for key in ("split", "span_variant"):
        if key in corpus_data:
            data[key] = corpus_data[key]
    return data


def graphs_dict_to_corpus(data: Mapping) -> Corpus:
    ontology = ontology_from_dict(data["ontology"])
    sentences = []
    for item in data["sentences"]:
        bare = {k: item[k] for k in ("id", "doc_id", "lang", "text", "tokens")}
        bare.update({"entities": [], "relations": [], "events": []})
        sentence = sentence_from_dict(bare)
        graph = graph_from_dict(item, sentence.id, len(sentence.tokens), ontology)
        decoded = decode_sentence(graph, sentence)

        span_meta: dict[str, tuple[Span | None, Span | None]] = {}
        for node_data in item["nodes"]:
            if "ref" not in node_data:
                continue
            full = head = None
            if "full_start" in node_data:
                full = Span(node_data["full_start"], node_data["full_end"])
            if "head_start" in node_data:
                head = Span(node_data["head_start"], node_data["head_end"])
            if full is not None or head is not None:
                span_meta[node_data["ref"]] = (full, head)
        if span_meta:
            entities = tuple(
                replace(e, full_span=span_meta[e.id][0] or e.full_span,
                        head_span=span_meta[e.id][1]) if e.id in span_meta else e
                for e in decoded.entities
            )
            decoded = replace(decoded, entities=entities)
        sentences.append(decoded)
    corpus = Corpus(ontology=ontology, sentences=tuple(sentences),
                    split_tag=data.get("split"), span_variant=data.get("span_variant"))
    validate_corpus(corpus)
    return corpus


# ---------------------------------------------------------------------------
# Canonical annotation view (round-trip comparisons)


def canonical_annotations(sentence: Sentence) -> tuple:
    """Id-free normal form of a sentence's annotations: multisets of typed
    spans, relation span triples, and event structures."""
    span_of = {e.id: (e.span.start, e.span.end) for e in sentence.entities}
    entities = sorted((e.span.start, e.span.end, e.entity_type) for e in sentence.entities)
    relations = sorted((r.relation_type, span_of[r.arg1], span_of[r.arg2]) for r in sentence.relations)
    events = sorted(
        (ev.trigger_span.start, ev.trigger_span.end, ev.event_type,
         tuple(sorted((span_of[ent], role) for ent, role in ev.arguments)))
        for ev in sentence.events
    )
    return tuple(entities), tuple(relations), tuple(events)
