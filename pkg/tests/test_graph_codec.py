import dataclasses
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iegraph.corpus import (
    Corpus,
    EntityMention,
    EventMention,
    RelationMention,
    Span,
    load_corpus,
    save_corpus,
)
from iegraph.graph import (
    GraphEdge,
    GraphError,
    GraphNode,
    IEGraph,
    NodeKind,
    canonical_annotations,
    corpus_to_graphs_dict,
    decode,
    decode_sentence,
    encode,
    graph_from_dict,
    graph_to_dict,
    graphs_dict_to_corpus,
    reduce_graph,
    validate,
)
from iegraph.synthetic import make_sentence, random_corpus, synthetic_ontology


class TestEncode:
    def test_bare_sentence_is_root_only(self, fig_ontology):
        sentence = make_sentence("bare", "d", "en", ["hello", "world"])
        graph = encode(sentence, fig_ontology)
        assert len(graph.nodes) == 1 and graph.nodes[0].kind == NodeKind.ROOT
        assert graph.edges == ()

    def test_double_trigger_nodes_and_relation(self, double_trigger_sentence, fig_ontology):
        graph = encode(double_trigger_sentence, fig_ontology)
        cost_triggers = [n for n in graph.nodes
                         if n.kind == NodeKind.TRIGGER and n.anchor == frozenset({6})]
        assert len(cost_triggers) == 2

        by_label = {(n.label, min(n.anchor)): n for n in graph.nodes if n.kind == NodeKind.ENTITY}
        officials = by_label[("PER", 2)]
        district = by_label[("ORG", 1)]
        rel_edges = [e for e in graph.edges
                     if e.src == officials.node_id and e.dst == district.node_id]
        assert len(rel_edges) == 1 and rel_edges[0].label == "orgaffiliation"

    def test_overlap_sentence_structure(self, overlap_sentence, fig_ontology):
        graph = encode(overlap_sentence, fig_ontology)
        buy_triggers = [n for n in graph.nodes
                        if n.kind == NodeKind.TRIGGER and n.anchor == frozenset({3})]
        buy_types = {e.label for e in graph.edges if e.src == 0 and e.dst in
                     {n.node_id for n in buy_triggers}}
        assert buy_types == {"transfermoney", "transferownership"}

        made = [n for n in graph.nodes if n.kind == NodeKind.TRIGGER and n.anchor == frozenset({5})]
        big_entity = next(n for n in graph.nodes
                          if n.kind == NodeKind.ENTITY and n.label == "COMMODITY")
        assert len(made) == 2
        assert made[0].anchor < big_entity.anchor  # nested trigger inside entity anchor

    def test_node_count_preserves_all_annotations(self, fig_corpus):
        for sentence in fig_corpus.sentences:
            graph = encode(sentence, fig_corpus.ontology)
            assert len(graph.nodes) == 1 + len(sentence.entities) + len(sentence.events)

    def test_root_first_and_canonical_order(self, overlap_sentence, fig_ontology):
        graph = encode(overlap_sentence, fig_ontology)
        assert graph.nodes[0].kind == NodeKind.ROOT
        keys = [(min(n.anchor), max(n.anchor)) for n in graph.nodes[1:]]
        assert keys == sorted(keys)

    def test_unrepresentable_duplicate_argument(self, fig_ontology):
        sentence = make_sentence(
            "dup", "d", "en", ["a", "b"],
            entities=[EntityMention("e0", "PER", Span(0, 1), Span(0, 1))],
            events=[EventMention("ev0", "artifact", Span(1, 2),
                                 (("e0", "thing"), ("e0", "place")))],
        )
        with pytest.raises(GraphError, match="second edge"):
            encode(sentence, fig_ontology)


class TestRoundTrip:
    def test_fixture_sentences(self, fig_corpus):
        for sentence in fig_corpus.sentences:
            decoded = decode_sentence(encode(sentence, fig_corpus.ontology), sentence)
            assert canonical_annotations(decoded) == canonical_annotations(sentence)

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_random_sentences(self, seed):
        corpus = random_corpus(seed=seed, n_sentences=4)
        for sentence in corpus.sentences:
            decoded = decode_sentence(encode(sentence, corpus.ontology), sentence)
            assert canonical_annotations(decoded) == canonical_annotations(sentence)

    def test_gap_anchor_decodes_to_covering_span(self, fig_ontology):
        graph = IEGraph("gap", 8, (
            GraphNode(0, NodeKind.ROOT, None, frozenset()),
            GraphNode(1, NodeKind.TRIGGER, "trigger", frozenset({3, 5})),
        ), (GraphEdge(0, 1, "artifact"),), fig_ontology)
        _, _, events = decode(graph)
        assert events[0].trigger_span == Span(3, 6)


class TestValidate:
    def test_encode_output_always_valid(self):
        corpus = random_corpus(seed=99, n_sentences=25)
        for sentence in corpus.sentences:
            assert validate(encode(sentence, corpus.ontology)) == []

    def test_root_edge_to_entity(self, fig_ontology):
        graph = IEGraph("bad", 3, (
            GraphNode(0, NodeKind.ROOT, None, frozenset()),
            GraphNode(1, NodeKind.ENTITY, "PER", frozenset({0})),
        ), (GraphEdge(0, 1, "transfermoney"),), fig_ontology)
        violations = validate(graph)
        assert any("root to entity" in v for v in violations)

    def test_trigger_to_trigger_edge(self, fig_ontology):
        graph = IEGraph("bad", 3, (
            GraphNode(0, NodeKind.ROOT, None, frozenset()),
            GraphNode(1, NodeKind.TRIGGER, "trigger", frozenset({0})),
            GraphNode(2, NodeKind.TRIGGER, "trigger", frozenset({1})),
        ), (GraphEdge(0, 1, "artifact"), GraphEdge(0, 2, "artifact"),
            GraphEdge(1, 2, "thing")), fig_ontology)
        violations = validate(graph)
        assert len(violations) == 1 and "trigger to trigger" in violations[0]

    def test_trigger_without_root_edge(self, fig_ontology):
        graph = IEGraph("bad", 3, (
            GraphNode(0, NodeKind.ROOT, None, frozenset()),
            GraphNode(1, NodeKind.TRIGGER, "trigger", frozenset({0})),
        ), (), fig_ontology)
        assert any("0 incoming root edges" in v for v in validate(graph))

    def test_duplicate_root_edges_rejected(self, fig_ontology):
        graph = IEGraph("bad", 3, (
            GraphNode(0, NodeKind.ROOT, None, frozenset()),
            GraphNode(1, NodeKind.TRIGGER, "trigger", frozenset({0})),
        ), (GraphEdge(0, 1, "artifact"), GraphEdge(0, 1, "transport")), fig_ontology)
        violations = validate(graph)
        assert any("duplicate edge" in v for v in violations)
        assert any("2 incoming root edges" in v for v in violations)

    def test_decode_refuses_invalid(self, fig_ontology):
        graph = IEGraph("bad", 3, (
            GraphNode(0, NodeKind.ROOT, None, frozenset()),
            GraphNode(1, NodeKind.ENTITY, "PER", frozenset({0})),
        ), (GraphEdge(0, 1, "transfermoney"),), fig_ontology)
        with pytest.raises(GraphError, match="fails validation"):
            decode(graph)

    def test_violations_are_data_not_exceptions(self, fig_ontology):
        graph = IEGraph("bad", 1, (GraphNode(0, NodeKind.ENTITY, "PER", frozenset({0})),), ())
        assert isinstance(validate(graph), list)


class TestReduce:
    def test_relation_edges_dropped_arguments_kept(self, double_trigger_sentence, fig_ontology):
        graph = encode(double_trigger_sentence, fig_ontology)
        reduced = reduce_graph(graph)
        assert all(not (reduced.nodes[e.src].kind == NodeKind.ENTITY
                        and reduced.nodes[e.dst].kind == NodeKind.ENTITY)
                   for e in reduced.edges)
        arg_edges = [e for e in reduced.edges if reduced.nodes[e.src].kind == NodeKind.TRIGGER]
        assert {e.label for e in arg_edges} == {"money", "thing"}
        assert all(n.label == "entity" for n in reduced.nodes if n.kind == NodeKind.ENTITY)
        assert validate(reduced) == []

    def test_unconnected_entities_dropped(self, double_trigger_sentence, fig_ontology):
        reduced = reduce_graph(encode(double_trigger_sentence, fig_ontology))
        # officials/district fill no argument slot; money and facility do
        assert len([n for n in reduced.nodes if n.kind == NodeKind.ENTITY]) == 2

    def test_root_and_trigger_only_graph_unchanged(self, fig_ontology):
        sentence = make_sentence(
            "t", "d", "en", ["boom"],
            events=[EventMention("ev0", "artifact", Span(0, 1))])
        graph = encode(sentence, fig_ontology)
        reduced = reduce_graph(graph)
        assert [(n.kind, n.anchor) for n in reduced.nodes] == [(n.kind, n.anchor) for n in graph.nodes]
        assert [(e.src, e.dst, e.label) for e in reduced.edges] == \
            [(e.src, e.dst, e.label) for e in graph.edges]

    def test_idempotent_and_event_preserving(self):
        corpus = random_corpus(seed=123, n_sentences=30)
        for sentence in corpus.sentences:
            graph = encode(sentence, corpus.ontology)
            reduced = reduce_graph(graph)
            assert validate(reduced) == []
            again = reduce_graph(reduced)
            assert graph_to_dict(again) == graph_to_dict(reduced)
            _, _, original_events = decode(graph)
            _, _, reduced_events = decode(reduced)
            key = lambda evs: sorted((ev.trigger_span, ev.event_type,
                                      tuple(sorted(role for _, role in ev.arguments)))
                                     for ev in evs)
            assert key(reduced_events) == key(original_events)


class TestSerialization:
    def test_graph_dict_round_trip(self, overlap_sentence, fig_ontology):
        graph = encode(overlap_sentence, fig_ontology)
        data = json.loads(json.dumps(graph_to_dict(graph)))
        rebuilt = graph_from_dict(data, graph.sentence_id, graph.n_tokens, fig_ontology)
        assert graph_to_dict(rebuilt) == graph_to_dict(graph)

    def test_corpus_graphs_round_trip_byte_identical(self, fig_corpus, tmp_path):
        original = tmp_path / "orig.json"
        save_corpus(fig_corpus, original)
        graphs = corpus_to_graphs_dict(load_corpus(original))
        back = graphs_dict_to_corpus(json.loads(json.dumps(graphs)))
        round_tripped = tmp_path / "back.json"
        save_corpus(back, round_tripped)
        assert round_tripped.read_bytes() == original.read_bytes()
