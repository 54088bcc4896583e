"""Annotated corpus model: sentences with entity, relation and event
annotations, ontology definitions, JSON (de)serialization, span-variant
selection, document-level splitting and count statistics."""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

SCHEMA_VERSION = "1.0"
LANGUAGES = ("en", "zh", "es")
SPLIT_TAGS = ("train", "dev", "test")
SPAN_VARIANTS = ("head", "full")

# Entity label used in ablation-reduced graphs/ontologies.
GENERIC_ENTITY_TYPE = "entity"

DEFAULT_SPLIT_RATIOS = (0.9, 0.045, 0.055)


class CorpusError(ValueError):
    """Validation failure, carrying the offending sentence id and field."""

    def __init__(self, message: str, *, sentence_id: str | None = None, field: str | None = None):
        self.sentence_id = sentence_id
        self.field = field
        prefix = ""
        if sentence_id is not None:
            prefix += f"sentence {sentence_id!r}: "
        if field is not None:
            prefix += f"field {field!r}: "
        super().__init__(prefix + message)


@dataclass(frozen=True, order=True)
class Span:
    """Half-open token interval [start, end)."""

    start: int
    end: int

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise CorpusError(f"invalid span [{self.start}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.start

    def overlaps(self, other: "Span") -> bool:
        return self.start < other.end and other.start < self.end

    def contains(self, other: "Span") -> bool:
        return self.start <= other.start and other.end <= self.end

    def tokens(self) -> range:
        return range(self.start, self.end)


@dataclass(frozen=True)
class Token:
    index: int
    text: str
    char_start: int
    char_end: int


@dataclass(frozen=True)
class EntityMention:
    """`span` is the effective span used everywhere downstream; it equals
    `full_span` until a head variant is selected."""

    id: str
    entity_type: str
    span: Span
    full_span: Span
    head_span: Span | None = None


@dataclass(frozen=True)
class RelationMention:
    id: str
    relation_type: str
    arg1: str
    arg2: str


@dataclass(frozen=True)
class EventMention:
    id: str
    event_type: str
    trigger_span: Span
    arguments: tuple[tuple[str, str], ...] = ()  # (entity_id, role)


@dataclass(frozen=True)
class Sentence:
    id: str
    doc_id: str
    lang: str
    text: str
    tokens: tuple[Token, ...]
    entities: tuple[EntityMention, ...] = ()
    relations: tuple[RelationMention, ...] = ()
    events: tuple[EventMention, ...] = ()

    def entity_by_id(self, entity_id: str) -> EntityMention:
        for entity in self.entities:
            if entity.id == entity_id:
                return entity
        raise CorpusError(f"unknown entity id {entity_id!r}", sentence_id=self.id)


@dataclass(frozen=True)
class Ontology:
    """Ordered symbol inventories for one dataset."""

    name: str
    event_types: tuple[str, ...]
    argument_roles: tuple[str, ...]
    entity_types: tuple[str, ...]
    relation_types: tuple[str, ...]

    def validate(self) -> None:
        groups = {
            "event_types": self.event_types,
            "argument_roles": self.argument_roles,
            "entity_types": self.entity_types,
            "relation_types": self.relation_types,
        }
        seen: dict[str, str] = {}
        for group, symbols in groups.items():
            if len(set(symbols)) != len(symbols):
                raise CorpusError(f"duplicate symbol in {group}", field=group)
            for symbol in symbols:
                if symbol in seen:
                    raise CorpusError(
                        f"symbol {symbol!r} appears in both {seen[symbol]} and {group}",
                        field=group,
                    )
                seen[symbol] = group

    def reduced(self) -> "Ontology":
        """Label inventory for event-extraction-only (no ent&rel) mode.

        The generic entity label may collide with an argument role of the
        source ontology (e.g. the role "entity"), so no disjointness check
        applies here; graph validation special-cases the generic label.
        """
        return Ontology(
            name=f"{self.name}-reduced",
            event_types=self.event_types,
            argument_roles=self.argument_roles,
            entity_types=(GENERIC_ENTITY_TYPE,),
            relation_types=(),
        )


@dataclass(frozen=True)
class Corpus:
    ontology: Ontology
    sentences: tuple[Sentence, ...]
    split_tag: str | None = None
    span_variant: str | None = None

    def doc_ids(self) -> list[str]:
        seen: dict[str, None] = {}
        for sentence in self.sentences:
            seen.setdefault(sentence.doc_id, None)
        return list(seen)


# ---------------------------------------------------------------------------
# Validation


def validate_sentence(sentence: Sentence, ontology: Ontology) -> None:
    sid = sentence.id
    if sentence.lang not in LANGUAGES:
        raise CorpusError(f"unknown language {sentence.lang!r}", sentence_id=sid, field="lang")
    n = len(sentence.tokens)

    prev_end = 0
    for i, token in enumerate(sentence.tokens):
        if token.index != i:
            raise CorpusError(f"token index {token.index} != position {i}", sentence_id=sid, field="tokens")
        if not (0 <= token.char_start < token.char_end <= len(sentence.text)):
            raise CorpusError(
                f"token {i} char span [{token.char_start}, {token.char_end}) outside text",
                sentence_id=sid, field="tokens",
            )
        if token.char_start < prev_end:
            raise CorpusError(f"token {i} overlaps previous token", sentence_id=sid, field="tokens")
        if sentence.text[token.char_start:token.char_end] != token.text:
            raise CorpusError(f"token {i} text does not match its character span", sentence_id=sid, field="tokens")
        prev_end = token.char_end

    def check_span(span: Span, field_name: str) -> None:
        if span.end > n:
            raise CorpusError(f"span [{span.start}, {span.end}) exceeds {n} tokens", sentence_id=sid, field=field_name)

    entity_ids: set[str] = set()
    for entity in sentence.entities:
        if entity.id in entity_ids:
            raise CorpusError(f"duplicate entity id {entity.id!r}", sentence_id=sid, field="entities")
        entity_ids.add(entity.id)
        if entity.entity_type not in ontology.entity_types:
            raise CorpusError(f"unknown entity type {entity.entity_type!r}", sentence_id=sid, field="entities")
        check_span(entity.full_span, "entities")
        check_span(entity.span, "entities")
        if entity.head_span is not None:
            check_span(entity.head_span, "entities")
            if not entity.full_span.contains(entity.head_span):
                raise CorpusError(
                    f"entity {entity.id!r} head span not contained in full span",
                    sentence_id=sid, field="entities",
                )

    rel_ids: set[str] = set()
    for rel in sentence.relations:
        if rel.id in rel_ids:
            raise CorpusError(f"duplicate relation id {rel.id!r}", sentence_id=sid, field="relations")
        rel_ids.add(rel.id)
        if rel.relation_type not in ontology.relation_types:
            raise CorpusError(f"unknown relation type {rel.relation_type!r}", sentence_id=sid, field="relations")
        if rel.arg1 == rel.arg2:
            raise CorpusError(f"relation {rel.id!r} has identical arguments", sentence_id=sid, field="relations")
        for arg in (rel.arg1, rel.arg2):
            if arg not in entity_ids:
                raise CorpusError(f"relation {rel.id!r} references unknown entity id {arg!r}",
                                  sentence_id=sid, field="relations")

    event_ids: set[str] = set()
    for event in sentence.events:
        if event.id in event_ids:
            raise CorpusError(f"duplicate event id {event.id!r}", sentence_id=sid, field="events")
        event_ids.add(event.id)
        if event.event_type not in ontology.event_types:
            raise CorpusError(f"unknown event type {event.event_type!r}", sentence_id=sid, field="events")
        check_span(event.trigger_span, "events")
        for entity_id, role in event.arguments:
            if role not in ontology.argument_roles:
                raise CorpusError(f"unknown argument role {role!r}", sentence_id=sid, field="events")
            if entity_id not in entity_ids:
                raise CorpusError(f"event {event.id!r} references unknown entity id {entity_id!r}",
                                  sentence_id=sid, field="events")


def validate_corpus(corpus: Corpus) -> None:
    corpus.ontology.validate()
    seen: set[str] = set()
    for sentence in corpus.sentences:
        if sentence.id in seen:
            raise CorpusError(f"duplicate sentence id {sentence.id!r}", sentence_id=sentence.id)
        seen.add(sentence.id)
        validate_sentence(sentence, corpus.ontology)


# ---------------------------------------------------------------------------
# JSON interchange

_SENTENCE_KEYS = {"id", "doc_id", "lang", "text", "tokens", "entities", "relations", "events"}
_TOP_KEYS = {"schema_version", "ontology", "sentences", "split", "span_variant"}


def _require(mapping: Mapping, key: str, where: str, sentence_id: str | None = None):
    if key not in mapping:
        raise CorpusError(f"missing key {key!r} in {where}", sentence_id=sentence_id, field=key)
    return mapping[key]


def ontology_from_dict(data: Mapping) -> Ontology:
    ontology = Ontology(
        name=_require(data, "name", "ontology"),
        event_types=tuple(_require(data, "event_types", "ontology")),
        argument_roles=tuple(_require(data, "argument_roles", "ontology")),
        entity_types=tuple(_require(data, "entity_types", "ontology")),
        relation_types=tuple(_require(data, "relation_types", "ontology")),
    )
    ontology.validate()
    return ontology


def ontology_to_dict(ontology: Ontology) -> dict:
    return {
        "name": ontology.name,
        "event_types": list(ontology.event_types),
        "argument_roles": list(ontology.argument_roles),
        "entity_types": list(ontology.entity_types),
        "relation_types": list(ontology.relation_types),
    }


def builtin_ontology(name: str) -> Ontology:
    """Load one of the shipped ontology files ("ace05" or "ere")."""
    path = resources.files("iegraph.ontologies").joinpath(f"{name}.json")
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise CorpusError(f"no builtin ontology named {name!r}") from None
    return ontology_from_dict(json.loads(text))


def _span_from(data: Mapping, start_key: str, end_key: str, sid: str, field_name: str) -> Span:
    try:
        return Span(int(_require(data, start_key, field_name, sid)),
                    int(_require(data, end_key, field_name, sid)))
    except CorpusError as err:
        raise CorpusError(str(err), sentence_id=sid, field=field_name) from None


def sentence_from_dict(data: Mapping, span_variant: str | None = None) -> Sentence:
    sid = str(_require(data, "id", "sentence"))
    unknown = set(data) - _SENTENCE_KEYS
    if unknown:
        raise CorpusError(f"unknown keys {sorted(unknown)}", sentence_id=sid)
    tokens = tuple(
        Token(index=i, text=_require(t, "text", "token", sid),
              char_start=int(_require(t, "start_char", "token", sid)),
              char_end=int(_require(t, "end_char", "token", sid)))
        for i, t in enumerate(_require(data, "tokens", "sentence", sid))
    )
    entities = []
    for e in data.get("entities", []):
        full = _span_from(e, "start", "end", sid, "entities")
        head = None
        if ("head_start" in e) != ("head_end" in e):
            raise CorpusError("head_start/head_end must appear together", sentence_id=sid, field="entities")
        if "head_start" in e:
            head = _span_from(e, "head_start", "head_end", sid, "entities")
        effective = full
        if span_variant == "head" and head is not None:
            effective = head
        entities.append(EntityMention(
            id=str(_require(e, "id", "entity", sid)),
            entity_type=_require(e, "type", "entity", sid),
            span=effective, full_span=full, head_span=head,
        ))
    relations = tuple(
        RelationMention(id=str(_require(r, "id", "relation", sid)),
                        relation_type=_require(r, "type", "relation", sid),
                        arg1=str(_require(r, "arg1", "relation", sid)),
                        arg2=str(_require(r, "arg2", "relation", sid)))
        for r in data.get("relations", [])
    )
    events = tuple(
        EventMention(id=str(_require(ev, "id", "event", sid)),
                     event_type=_require(ev, "type", "event", sid),
                     trigger_span=_span_from(ev, "trigger_start", "trigger_end", sid, "events"),
                     arguments=tuple((str(_require(a, "entity", "event argument", sid)),
                                      _require(a, "role", "event argument", sid))
                                     for a in ev.get("args", [])))
        for ev in data.get("events", [])
    )
    return Sentence(
        id=sid,
        doc_id=str(_require(data, "doc_id", "sentence", sid)),
        lang=_require(data, "lang", "sentence", sid),
        text=_require(data, "text", "sentence", sid),
        tokens=tokens,
        entities=tuple(entities),
        relations=relations,
        events=events,
    )


def corpus_from_dict(data: Mapping, schema_version: str = SCHEMA_VERSION) -> Corpus:
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise CorpusError(f"unknown top-level keys {sorted(unknown)}")
    version = _require(data, "schema_version", "corpus")
    if version != schema_version:
        raise CorpusError(f"schema version {version!r} does not match expected {schema_version!r}",
                          field="schema_version")
    variant = data.get("span_variant")
    if variant is not None and variant not in SPAN_VARIANTS:
        raise CorpusError(f"unknown span variant {variant!r}", field="span_variant")
    split = data.get("split")
    if split is not None and split not in SPLIT_TAGS:
        raise CorpusError(f"unknown split tag {split!r}", field="split")
    corpus = Corpus(
        ontology=ontology_from_dict(_require(data, "ontology", "corpus")),
        sentences=tuple(sentence_from_dict(s, variant) for s in _require(data, "sentences", "corpus")),
        split_tag=split,
        span_variant=variant,
    )
    validate_corpus(corpus)
    return corpus


def load_corpus(path: str | Path, schema_version: str = SCHEMA_VERSION) -> Corpus:
    with open(path, encoding="utf-8") as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as err:
            raise CorpusError(f"invalid JSON in {path}: {err}") from None
    return corpus_from_dict(data, schema_version)


def _entity_sort_key(entity: EntityMention):
    return (entity.span.start, entity.span.end, entity.entity_type, entity.id)


def _relation_sort_key(relation: RelationMention):
    return (relation.relation_type, relation.arg1, relation.arg2, relation.id)


def _event_sort_key(event: EventMention):
    return (event.trigger_span.start, event.trigger_span.end, event.event_type, event.id)


def sentence_to_dict(sentence: Sentence) -> dict:
    entities = []
    for entity in sorted(sentence.entities, key=_entity_sort_key):
        item = {
            "id": entity.id,
            "type": entity.entity_type,
            "start": entity.full_span.start,
            "end": entity.full_span.end,
        }
        if entity.head_span is not None:
            item["head_start"] = entity.head_span.start
            item["head_end"] = entity.head_span.end
        entities.append(item)
    return {
        "id": sentence.id,
        "doc_id": sentence.doc_id,
        "lang": sentence.lang,
        "text": sentence.text,
        "tokens": [{"text": t.text, "start_char": t.char_start, "end_char": t.char_end}
                   for t in sentence.tokens],
        "entities": entities,
        "relations": [
            {"id": r.id, "type": r.relation_type, "arg1": r.arg1, "arg2": r.arg2}
            for r in sorted(sentence.relations, key=_relation_sort_key)
        ],
        "events": [
            {"id": ev.id, "type": ev.event_type,
             "trigger_start": ev.trigger_span.start, "trigger_end": ev.trigger_span.end,
             "args": [{"entity": ent, "role": role} for ent, role in sorted(ev.arguments)]}
            for ev in sorted(sentence.events, key=_event_sort_key)
        ],
    }


def corpus_to_dict(corpus: Corpus) -> dict:
    data: dict = {
        "schema_version": SCHEMA_VERSION,
        "ontology": ontology_to_dict(corpus.ontology),
        "sentences": [sentence_to_dict(s) for s in corpus.sentences],
    }
    if corpus.split_tag is not None:
        data["split"] = corpus.split_tag
    if corpus.span_variant is not None:
        data["span_variant"] = corpus.span_variant
    return data


def canonical_json_bytes(data) -> bytes:
    """Canonical corpus/graph JSON: sorted keys, compact separators, UTF-8."""
    return (json.dumps(data, sort_keys=True, ensure_ascii=False, separators=(",", ":")) + "\n").encode("utf-8")


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    Path(path).write_bytes(canonical_json_bytes(corpus_to_dict(corpus)))


# ---------------------------------------------------------------------------
# Span variants


def select_span_variant(corpus: Corpus, variant: str) -> Corpus:
    """Materialize entity effective spans under the given variant.

    "head" uses the head span where annotated, falling back to the full
    mention span; "full" uses the full span everywhere. Idempotent, and
    reversible because full/head source spans are preserved.
    """
    if variant not in SPAN_VARIANTS:
        raise CorpusError(f"unknown span variant {variant!r}", field="span_variant")

    def effective(entity: EntityMention) -> Span:
        if variant == "head" and entity.head_span is not None:
            return entity.head_span
        return entity.full_span

    sentences = tuple(
        replace(sentence, entities=tuple(replace(e, span=effective(e)) for e in sentence.entities))
        for sentence in corpus.sentences
    )
    return replace(corpus, sentences=sentences, span_variant=variant)


# ---------------------------------------------------------------------------
# Document-level splitting


def _largest_remainder(total: int, ratios: Sequence[float]) -> list[int]:
    raw = [total * r for r in ratios]
    counts = [math.floor(x) for x in raw]
    leftovers = sorted(range(len(ratios)), key=lambda i: (counts[i] - raw[i], i))
    for i in range(total - sum(counts)):
        counts[leftovers[i % len(ratios)]] += 1
    return counts


def split_corpus(corpus: Corpus, ratios: Sequence[float] = DEFAULT_SPLIT_RATIOS,
                 seed: int = 0) -> tuple[Corpus, Corpus, Corpus]:
    """Randomly partition documents (not sentences) into train/dev/test."""
    if len(ratios) != 3:
        raise CorpusError("expected exactly three split ratios")
    if any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise CorpusError(f"ratios {tuple(ratios)} must be non-negative and sum to 1")
    docs = sorted({s.doc_id for s in corpus.sentences})
    n_positive = sum(1 for r in ratios if r > 0)
    if len(docs) < n_positive:
        raise CorpusError(f"{len(docs)} documents cannot fill {n_positive} splits")

    rng = random.Random(seed)
    rng.shuffle(docs)
    counts = _largest_remainder(len(docs), ratios)
    assignment: dict[str, str] = {}
    cursor = 0
    for tag, count in zip(SPLIT_TAGS, counts):
        for doc in docs[cursor:cursor + count]:
            assignment[doc] = tag
        cursor += count

    def subset(tag: str) -> Corpus:
        return Corpus(
            ontology=corpus.ontology,
            sentences=tuple(s for s in corpus.sentences if assignment[s.doc_id] == tag),
            split_tag=tag,
            span_variant=corpus.span_variant,
        )

    return subset("train"), subset("dev"), subset("test")


# ---------------------------------------------------------------------------
# Statistics


def corpus_stats(corpus: Corpus) -> dict[str, int]:
    stats = {"sents": 0, "events": 0, "roles": 0, "entities": 0, "relations": 0}
    for sentence in corpus.sentences:
        stats["sents"] += 1
        stats["events"] += len(sentence.events)
        stats["roles"] += sum(len(ev.arguments) for ev in sentence.events)
        stats["entities"] += len(sentence.entities)
        stats["relations"] += len(sentence.relations)
    return stats
