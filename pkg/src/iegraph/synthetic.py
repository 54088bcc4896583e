"""Synthetic corpora: random annotated sentences for property testing and a
deterministic trilingual template corpus whose label structure is systematic
enough to learn from hash embeddings (trigger words map 1:1 to event types,
entity words to entity types, roles follow from event type and slot)."""

from __future__ import annotations

import random

from .corpus import (
    Corpus,
    EntityMention,
    EventMention,
    Ontology,
    RelationMention,
    Sentence,
    Span,
    Token,
    validate_corpus,
)


def synthetic_ontology() -> Ontology:
    return Ontology(
        name="synthetic",
        event_types=("attack", "transport", "transfermoney", "transferownership", "artifact"),
        argument_roles=("agent", "patient", "origin", "destination"),
        entity_types=("PER", "ORG", "GPE", "FAC", "COM"),
        relation_types=("orgaffiliation", "located"),
    )


def _tokens_for(texts: list[str], lang: str) -> tuple[str, tuple[Token, ...]]:
    sep = "" if lang == "zh" else " "
    tokens = []
    cursor = 0
    pieces = []
    for i, text in enumerate(texts):
        if i > 0:
            cursor += len(sep)
        tokens.append(Token(index=i, text=text, char_start=cursor, char_end=cursor + len(text)))
        pieces.append(text)
        cursor += len(text)
    return sep.join(pieces), tuple(tokens)


def make_sentence(sentence_id: str, doc_id: str, lang: str, texts: list[str],
                  entities=(), relations=(), events=()) -> Sentence:
    text, tokens = _tokens_for(texts, lang)
    return Sentence(id=sentence_id, doc_id=doc_id, lang=lang, text=text, tokens=tokens,
                    entities=tuple(entities), relations=tuple(relations), events=tuple(events))


# ---------------------------------------------------------------------------
# Random corpora (property tests)

_WORD_POOLS = {
    "en": ["alpha", "bravo", "echo", "delta", "lima", "nova", "oscar", "tango", "umber", "zeta"],
    "zh": ["山", "水", "风", "光", "城", "路", "桥", "海", "林", "石"],
    "es": ["cielo", "mar", "luz", "rio", "sol", "piedra", "valle", "nube", "campo", "isla"],
}


def random_sentence(rng: random.Random, sentence_id: str, doc_id: str, lang: str,
                    ontology: Ontology, max_tokens: int = 12,
                    allow_annotations: bool = True) -> Sentence:
    """Random valid sentence; overlapping/nested spans, double-tagged
    triggers and head sub-spans all occur with useful frequency."""
    pool = _WORD_POOLS[lang]
    n = rng.randint(1, max_tokens)
    texts = [rng.choice(pool) for _ in range(n)]

    entities: list[EntityMention] = []
    relations: list[RelationMention] = []
    events: list[EventMention] = []
    if allow_annotations:
        for k in range(rng.randint(0, 3)):
            start = rng.randrange(n)
            end = min(n, start + rng.randint(1, 4))
            full = Span(start, end)
            head = None
            if len(full) > 1 and rng.random() < 0.5:
                hs = rng.randrange(full.start, full.end)
                head = Span(hs, hs + 1)
            entities.append(EntityMention(
                id=f"e{k}", entity_type=rng.choice(ontology.entity_types),
                span=full, full_span=full, head_span=head))

        pairs = set()
        for k in range(rng.randint(0, 2)):
            if len(entities) < 2:
                break
            a, b = rng.sample(range(len(entities)), 2)
            if (a, b) in pairs:
                continue
            pairs.add((a, b))
            relations.append(RelationMention(
                id=f"r{k}", relation_type=rng.choice(ontology.relation_types),
                arg1=entities[a].id, arg2=entities[b].id))

        previous_trigger: Span | None = None
        for k in range(rng.randint(0, 3)):
            if previous_trigger is not None and rng.random() < 0.35:
                trigger = previous_trigger  # double-tagging
            else:
                start = rng.randrange(n)
                trigger = Span(start, min(n, start + rng.randint(1, 2)))
            previous_trigger = trigger
            args = []
            seen = set()
            for entity in rng.sample(entities, k=min(len(entities), rng.randint(0, 2))):
                if entity.id in seen:
                    continue
                seen.add(entity.id)
                args.append((entity.id, rng.choice(ontology.argument_roles)))
            events.append(EventMention(
                id=f"ev{k}", event_type=rng.choice(ontology.event_types),
                trigger_span=trigger, arguments=tuple(args)))

    return make_sentence(sentence_id, doc_id, lang, texts, entities, relations, events)


def random_corpus(seed: int, n_sentences: int = 20, langs=("en", "zh", "es"),
                  n_docs: int = 6, ontology: Ontology | None = None,
                  max_tokens: int = 12, allow_annotations: bool = True) -> Corpus:
    rng = random.Random(seed)
    ontology = ontology or synthetic_ontology()
    sentences = []
    for i in range(n_sentences):
        lang = langs[i % len(langs)]
        sentences.append(random_sentence(
            rng, sentence_id=f"s{i}", doc_id=f"d{i % n_docs}", lang=lang,
            ontology=ontology, max_tokens=max_tokens, allow_annotations=allow_annotations))
    corpus = Corpus(ontology=ontology, sentences=tuple(sentences))
    validate_corpus(corpus)
    return corpus


# ---------------------------------------------------------------------------
# Deterministic template corpus (overfit harness)

_VOCAB = {
    "en": {
        "per": ["Anna", "Boris", "Clara", "Derek", "Elena"],
        "org": ["Nexcorp", "Uniart", "Kotomill"],
        "gpe": ["Norway", "Chile", "Kenya"],
        "com": ["engine", "statue", "vault"],
        "attack": "attacked", "transport": "moved", "pay": "paid",
        "sell": "sold", "build": "built",
        "in": "in", "from": "from", "the": "the", "boss": "boss",
        "keeps": "keeps", "things": "things", "comma": ",", "dot": ".",
    },
    "zh": {
        "per": ["安娜", "李明", "王芳", "张伟", "陈晨"],
        "org": ["新公司", "联合社", "科途厂"],
        "gpe": ["挪威", "智利", "肯尼亚"],
        "com": ["引擎", "雕像", "金库"],
        "attack": "袭击", "transport": "运送", "pay": "支付",
        "sell": "出售", "build": "制造",
        "in": "在", "from": "从", "the": "那位", "boss": "老板",
        "keeps": "保留", "things": "物品", "comma": "，", "dot": "。",
    },
    "es": {
        "per": ["Ana", "Luis", "Marta", "Pedro", "Sofia"],
        "org": ["Nexcorp", "Uniarte", "Kotomil"],
        "gpe": ["Noruega", "Chile", "Kenia"],
        "com": ["motor", "estatua", "caja"],
        "attack": "ataco", "transport": "traslado", "pay": "pago",
        "sell": "vendio", "build": "fabrico",
        "in": "en", "from": "desde", "the": "el", "boss": "jefe",
        "keeps": "guarda", "things": "cosas", "comma": ",", "dot": ".",
    },
}


def _template_sentence(index: int, rng: random.Random, sentence_id: str, doc_id: str,
                       lang: str) -> Sentence:
    # Queries carry no positional signal (the encoder is permutation
    # equivariant), so every argument slot must be decidable from entity type
    # and anchor words alone: no template hangs a role on word order between
    # two same-type name entities.
    v = _VOCAB[lang]
    per = rng.choice(v["per"])
    gpe = rng.choice(v["gpe"])
    com = rng.choice(v["com"])
    org = rng.choice(v["org"])
    template = index % 6

    if template == 0:  # attack
        texts = [per, v["attack"], org, v["in"], gpe, v["dot"]]
        entities = [EntityMention("e0", "PER", Span(0, 1), Span(0, 1)),
                    EntityMention("e1", "ORG", Span(2, 3), Span(2, 3)),
                    EntityMention("e2", "GPE", Span(4, 5), Span(4, 5))]
        events = [EventMention("ev0", "attack", Span(1, 2),
                               (("e0", "agent"), ("e1", "patient"), ("e2", "destination")))]
        relations = [RelationMention("r0", "located", "e1", "e2")]
    elif template == 1:  # transport
        texts = [per, v["transport"], com, v["from"], gpe, v["dot"]]
        entities = [EntityMention("e0", "PER", Span(0, 1), Span(0, 1)),
                    EntityMention("e1", "COM", Span(2, 3), Span(2, 3)),
                    EntityMention("e2", "GPE", Span(4, 5), Span(4, 5))]
        events = [EventMention("ev0", "transport", Span(1, 2),
                               (("e0", "agent"), ("e1", "patient"), ("e2", "origin")))]
        relations = []
    elif template == 2:  # transfermoney
        texts = [per, v["pay"], org, v["in"], gpe, v["dot"]]
        entities = [EntityMention("e0", "PER", Span(0, 1), Span(0, 1)),
                    EntityMention("e1", "ORG", Span(2, 3), Span(2, 3)),
                    EntityMention("e2", "GPE", Span(4, 5), Span(4, 5))]
        events = [EventMention("ev0", "transfermoney", Span(1, 2),
                               (("e0", "agent"), ("e1", "patient"), ("e2", "destination")))]
        relations = [RelationMention("r0", "located", "e0", "e2")]
    elif template == 3:  # double-tagged trigger: one word, two events
        texts = [per, v["sell"], com, v["in"], gpe, v["dot"]]
        entities = [EntityMention("e0", "PER", Span(0, 1), Span(0, 1)),
                    EntityMention("e1", "COM", Span(2, 3), Span(2, 3)),
                    EntityMention("e2", "GPE", Span(4, 5), Span(4, 5))]
        events = [EventMention("ev0", "transferownership", Span(1, 2),
                               (("e0", "agent"), ("e1", "patient"))),
                  EventMention("ev1", "transfermoney", Span(1, 2),
                               (("e0", "agent"), ("e2", "destination")))]
        relations = []
    elif template == 4:  # trigger nested inside an entity span
        texts = [per, v["keeps"], v["things"], v["build"], v["in"], gpe, v["dot"]]
        entities = [EntityMention("e0", "PER", Span(0, 1), Span(0, 1)),
                    EntityMention("e1", "COM", Span(2, 6), Span(2, 6), head_span=Span(2, 3)),
                    EntityMention("e2", "GPE", Span(5, 6), Span(5, 6))]
        events = [EventMention("ev0", "artifact", Span(3, 4),
                               (("e1", "patient"), ("e2", "origin")))]
        relations = [RelationMention("r0", "located", "e1", "e2")]
    else:  # nested entities + org affiliation
        texts = [per, v["comma"], v["the"], org, v["boss"], v["comma"], v["transport"], com, v["dot"]]
        entities = [EntityMention("e0", "PER", Span(0, 1), Span(0, 1)),
                    EntityMention("e1", "PER", Span(2, 5), Span(2, 5), head_span=Span(4, 5)),
                    EntityMention("e2", "ORG", Span(3, 4), Span(3, 4)),
                    EntityMention("e3", "COM", Span(7, 8), Span(7, 8))]
        events = [EventMention("ev0", "transport", Span(6, 7),
                               (("e1", "agent"), ("e3", "patient")))]
        relations = [RelationMention("r0", "orgaffiliation", "e1", "e2")]
    return make_sentence(sentence_id, doc_id, lang, texts, entities, relations, events)


def template_corpus(seed: int = 2024, n_sentences: int = 50,
                    langs=("en", "zh", "es"), sentences_per_doc: int = 5) -> Corpus:
    """Deterministic trilingual corpus built from six templates per language;
    includes double-tagged triggers, nested entities and a trigger nested
    inside an entity span."""
    rng = random.Random(seed)
    sentences = []
    for i in range(n_sentences):
        lang = langs[i % len(langs)]
        sentences.append(_template_sentence(
            i // len(langs), rng, sentence_id=f"{lang}-s{i}",
            doc_id=f"doc{i // sentences_per_doc}", lang=lang))
    corpus = Corpus(ontology=synthetic_ontology(), sentences=tuple(sentences))
    validate_corpus(corpus)
    return corpus
