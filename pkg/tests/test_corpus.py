import dataclasses
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iegraph.corpus import (
    Corpus,
    CorpusError,
    Ontology,
    Span,
    builtin_ontology,
    canonical_json_bytes,
    corpus_from_dict,
    corpus_stats,
    corpus_to_dict,
    load_corpus,
    save_corpus,
    select_span_variant,
    split_corpus,
)
from iegraph.nesting import count_nesting
from iegraph.synthetic import random_corpus, synthetic_ontology

from conftest import write_json


def minimal_corpus_dict(**overrides):
    data = {
        "schema_version": "1.0",
        "ontology": {
            "name": "tiny",
            "event_types": ["evtA"],
            "argument_roles": ["roleX"],
            "entity_types": ["T1"],
            "relation_types": ["relP"],
        },
        "sentences": [
            {
                "id": "s0",
                "doc_id": "d0",
                "lang": "en",
                "text": "a b",
                "tokens": [
                    {"text": "a", "start_char": 0, "end_char": 1},
                    {"text": "b", "start_char": 2, "end_char": 3},
                ],
                "entities": [],
                "relations": [],
                "events": [],
            }
        ],
    }
    data.update(overrides)
    return data


class TestLoad:
    def test_single_sentence_no_annotations(self, tmp_path):
        path = write_json(tmp_path / "c.json", minimal_corpus_dict())
        corpus = load_corpus(path)
        assert len(corpus.sentences) == 1
        sentence = corpus.sentences[0]
        assert sentence.entities == () and sentence.relations == () and sentence.events == ()

    def test_overlapping_events_fixture(self, fig_corpus_file):
        corpus = load_corpus(fig_corpus_file)
        sentence = corpus.sentences[0]
        assert len(sentence.events) == 4
        buy_events = [ev for ev in sentence.events if ev.trigger_span == Span(3, 4)]
        assert {ev.event_type for ev in buy_events} == {"transfermoney", "transferownership"}
        assert buy_events[0].trigger_span == buy_events[1].trigger_span

    def test_dangling_entity_reference(self, tmp_path):
        data = minimal_corpus_dict()
        data["sentences"][0]["events"] = [
            {"id": "ev0", "type": "evtA", "trigger_start": 0, "trigger_end": 1,
             "args": [{"entity": "ghost", "role": "roleX"}]}
        ]
        path = write_json(tmp_path / "c.json", data)
        with pytest.raises(CorpusError, match="ghost"):
            load_corpus(path)

    def test_schema_version_mismatch(self, tmp_path):
        path = write_json(tmp_path / "c.json", minimal_corpus_dict(schema_version="9.9"))
        with pytest.raises(CorpusError, match="schema version"):
            load_corpus(path)

    def test_error_names_sentence_and_field(self, tmp_path):
        data = minimal_corpus_dict()
        data["sentences"][0]["entities"] = [{"id": "e0", "type": "NOPE", "start": 0, "end": 1}]
        path = write_json(tmp_path / "c.json", data)
        with pytest.raises(CorpusError) as err:
            load_corpus(path)
        assert err.value.sentence_id == "s0"
        assert err.value.field == "entities"

    def test_token_text_must_match_offsets(self, tmp_path):
        data = minimal_corpus_dict()
        data["sentences"][0]["tokens"][0]["text"] = "z"
        path = write_json(tmp_path / "c.json", data)
        with pytest.raises(CorpusError, match="token 0"):
            load_corpus(path)

    def test_unknown_key_rejected(self, tmp_path):
        path = write_json(tmp_path / "c.json", minimal_corpus_dict(bogus=1))
        with pytest.raises(CorpusError, match="bogus"):
            load_corpus(path)


class TestRoundTrip:
    def test_save_load_identity(self, tmp_path):
        corpus = random_corpus(seed=3, n_sentences=15)
        first = tmp_path / "a.json"
        save_corpus(corpus, first)
        reloaded = load_corpus(first)
        second = tmp_path / "b.json"
        save_corpus(reloaded, second)
        assert first.read_bytes() == second.read_bytes()

    def test_unicode_preserved(self, tmp_path):
        corpus = random_corpus(seed=5, n_sentences=9, langs=("zh",))
        path = tmp_path / "zh.json"
        save_corpus(corpus, path)
        assert load_corpus(path).sentences[0].text == corpus.sentences[0].text

    def test_variant_tag_round_trips(self, tmp_path):
        corpus = select_span_variant(random_corpus(seed=11, n_sentences=6), "head")
        path = tmp_path / "head.json"
        save_corpus(corpus, path)
        reloaded = load_corpus(path)
        assert reloaded.span_variant == "head"
        for s_out, s_in in zip(corpus.sentences, reloaded.sentences):
            spans_out = {e.id: e.span for e in s_out.entities}
            spans_in = {e.id: e.span for e in s_in.entities}
            assert spans_out == spans_in


class TestSpanVariant:
    def test_head_uses_head_span(self, fig_corpus):
        head = select_span_variant(fig_corpus, "head")
        entity = head.sentences[0].entity_by_id("e2")
        assert entity.span == Span(4, 5)
        assert entity.full_span == Span(4, 10)

    def test_head_falls_back_to_full_span(self, fig_corpus):
        head = select_span_variant(fig_corpus, "head")
        entity = head.sentences[0].entity_by_id("e1")  # no annotated head
        assert entity.span == Span(0, 1)

    def test_full_restores_full_spans(self, fig_corpus):
        restored = select_span_variant(select_span_variant(fig_corpus, "head"), "full")
        entity = restored.sentences[0].entity_by_id("e2")
        assert entity.span == Span(4, 10)

    def test_idempotent(self, fig_corpus):
        once = select_span_variant(fig_corpus, "head")
        twice = select_span_variant(once, "head")
        assert once == twice

    def test_nesting_grows_from_head_to_full(self):
        corpus = random_corpus(seed=17, n_sentences=40)
        head = count_nesting(select_span_variant(corpus, "head"))
        full = count_nesting(select_span_variant(corpus, "full"))
        assert full.ent_ent >= head.ent_ent
        assert full.trg_ent >= head.trg_ent

    def test_unknown_variant(self, fig_corpus):
        with pytest.raises(CorpusError):
            select_span_variant(fig_corpus, "middle")


class TestSplit:
    def test_sizes_and_determinism(self):
        corpus = random_corpus(seed=23, n_sentences=30, n_docs=10)
        first = split_corpus(corpus, (0.8, 0.1, 0.1), seed=7)
        second = split_corpus(corpus, (0.8, 0.1, 0.1), seed=7)
        sizes = tuple(len(set(s.doc_id for s in part.sentences)) for part in first)
        assert sizes == (8, 1, 1)
        for a, b in zip(first, second):
            assert [s.id for s in a.sentences] == [s.id for s in b.sentences]

    def test_all_train(self):
        corpus = random_corpus(seed=23, n_sentences=30, n_docs=10)
        train, dev, test = split_corpus(corpus, (1.0, 0.0, 0.0), seed=1)
        assert len(train.sentences) == 30 and not dev.sentences and not test.sentences

    def test_partition_property(self):
        corpus = random_corpus(seed=29, n_sentences=40, n_docs=9)
        parts = split_corpus(corpus, (0.5, 0.25, 0.25), seed=3)
        ids = [s.id for part in parts for s in part.sentences]
        assert sorted(ids) == sorted(s.id for s in corpus.sentences)
        assert len(set(ids)) == len(ids)
        doc_sets = [set(s.doc_id for s in part.sentences) for part in parts]
        assert not (doc_sets[0] & doc_sets[1]) and not (doc_sets[0] & doc_sets[2]) \
            and not (doc_sets[1] & doc_sets[2])

    def test_ratio_validation(self):
        corpus = random_corpus(seed=1, n_sentences=9)
        with pytest.raises(CorpusError):
            split_corpus(corpus, (0.5, 0.5, 0.5), seed=0)

    def test_too_few_documents(self):
        corpus = random_corpus(seed=1, n_sentences=4, n_docs=2)
        with pytest.raises(CorpusError, match="documents"):
            split_corpus(corpus, (0.4, 0.3, 0.3), seed=0)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_split_deterministic_any_seed(self, seed):
        corpus = random_corpus(seed=31, n_sentences=24, n_docs=8)
        a = split_corpus(corpus, seed=seed)
        b = split_corpus(corpus, seed=seed)
        assert [s.id for p in a for s in p.sentences] == [s.id for p in b for s in p.sentences]


class TestStats:
    def test_empty(self, tiny_ontology):
        assert corpus_stats(Corpus(tiny_ontology, ())) == {
            "sents": 0, "events": 0, "roles": 0, "entities": 0, "relations": 0}

    def test_hand_count(self, fig_corpus):
        stats = corpus_stats(fig_corpus)
        assert stats == {"sents": 2, "events": 6, "roles": 10, "entities": 8, "relations": 1}

    def test_additive_over_split(self):
        corpus = random_corpus(seed=37, n_sentences=36, n_docs=9)
        parts = split_corpus(corpus, (0.5, 0.25, 0.25), seed=5)
        total = corpus_stats(corpus)
        summed = {key: sum(corpus_stats(p)[key] for p in parts) for key in total}
        assert summed == total


class TestOntology:
    def test_builtin_sizes(self):
        ace = builtin_ontology("ace05")
        assert (len(ace.event_types), len(ace.argument_roles),
                len(ace.entity_types), len(ace.relation_types)) == (33, 22, 7, 6)
        ere = builtin_ontology("ere")
        assert (len(ere.event_types), len(ere.argument_roles),
                len(ere.entity_types), len(ere.relation_types)) == (18, 18, 15, 6)

    def test_disjointness_enforced(self):
        with pytest.raises(CorpusError, match="both"):
            Ontology("bad", ("x",), ("x",), ("t",), ("r",)).validate()

    def test_unknown_builtin(self):
        with pytest.raises(CorpusError):
            builtin_ontology("nope")

    def test_synthetic_valid(self):
        synthetic_ontology().validate()
