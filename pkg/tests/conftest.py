import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from iegraph.corpus import (
    Corpus,
    EntityMention,
    EventMention,
    Ontology,
    RelationMention,
    Span,
    save_corpus,
    validate_corpus,
)
from iegraph.synthetic import make_sentence


@pytest.fixture(scope="session")
def fig_ontology():
    return Ontology(
        name="figtest",
        event_types=("transfermoney", "transferownership", "artifact", "transport"),
        argument_roles=("agent", "giver", "recipient", "thing", "place", "money"),
        entity_types=("PER", "ORG", "GPE", "FAC", "MONEY", "COMMODITY"),
        relation_types=("orgaffiliation", "physical"),
    )


@pytest.fixture(scope="session")
def overlap_sentence():
    """One trigger word evoking two events twice over, and a trigger nested
    inside an entity span."""
    texts = ["I", ",", "purposely", "buy", "things", "made", "in", "Canada", "or", "USA", "."]
    entities = [
        EntityMention("e1", "PER", Span(0, 1), Span(0, 1)),
        EntityMention("e2", "COMMODITY", Span(4, 10), Span(4, 10), head_span=Span(4, 5)),
        EntityMention("e3", "GPE", Span(7, 8), Span(7, 8)),
        EntityMention("e4", "GPE", Span(9, 10), Span(9, 10)),
    ]
    events = [
        EventMention("ev1", "transfermoney", Span(3, 4), (("e1", "giver"), ("e2", "thing"))),
        EventMention("ev2", "transferownership", Span(3, 4), (("e1", "recipient"), ("e2", "thing"))),
        EventMention("ev3", "artifact", Span(5, 6), (("e2", "thing"), ("e3", "place"))),
        EventMention("ev4", "artifact", Span(5, 6), (("e2", "thing"), ("e4", "place"))),
    ]
    return make_sentence("overlap-0", "overlap-doc", "en", texts, entities, (), events)


@pytest.fixture(scope="session")
def double_trigger_sentence():
    """Two co-anchored triggers on "cost" plus a PER->ORG relation."""
    texts = ["School", "district", "officials", "have", "estimated", "the", "cost", "of",
             "rebuilding", "an", "intermediate", "school", "at", "$", "40", "million", "."]
    entities = [
        EntityMention("o1", "ORG", Span(1, 2), Span(1, 2)),
        EntityMention("p1", "PER", Span(2, 3), Span(2, 3)),
        EntityMention("f1", "FAC", Span(9, 12), Span(9, 12), head_span=Span(11, 12)),
        EntityMention("m1", "MONEY", Span(13, 16), Span(13, 16)),
    ]
    relations = [RelationMention("r1", "orgaffiliation", "p1", "o1")]
    events = [
        EventMention("ev1", "transfermoney", Span(6, 7), (("m1", "money"),)),
        EventMention("ev2", "transferownership", Span(6, 7), (("f1", "thing"),)),
    ]
    return make_sentence("cost-0", "cost-doc", "en", texts, entities, relations, events)


@pytest.fixture(scope="session")
def fig_corpus(fig_ontology, overlap_sentence, double_trigger_sentence):
    corpus = Corpus(ontology=fig_ontology, sentences=(overlap_sentence, double_trigger_sentence))
    validate_corpus(corpus)
    return corpus


@pytest.fixture()
def fig_corpus_file(fig_corpus, tmp_path):
    path = tmp_path / "fig_corpus.json"
    save_corpus(fig_corpus, path)
    return path


@pytest.fixture(scope="session")
def tiny_ontology():
    return Ontology(
        name="tiny",
        event_types=("evtA", "evtB"),
        argument_roles=("roleX", "roleY"),
        entity_types=("T1", "T2"),
        relation_types=("relP",),
    )


def write_json(path, data):
    path.write_text(json.dumps(data, ensure_ascii=False), encoding="utf-8")
    return path
