"""Quantify span nesting (full or partial overlap) between triggers and
entities, and partition corpora into nested / non-nested sentence subsets."""

from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import combinations

from .corpus import Corpus, Sentence, Span


def spans_nested(a: Span, b: Span) -> bool:
    """True iff the two spans share at least one token.

    Containment and identical spans count; adjacency does not. Two distinct
    annotations with identical spans (double-tagging) therefore count as
    nested at the pair level.
    """
    return a.start < b.end and b.start < a.end


@dataclass(frozen=True)
class NestingReport:
    """Pair counts per category, plus the alternate "mentions involved"
    counters (distinct annotations participating in at least one nested
    pair of that category)."""

    trg_trg: int
    ent_ent: int
    trg_ent: int
    nested_sents: int
    all_sents: int
    trg_trg_mentions: int = 0
    ent_ent_mentions: int = 0
    trg_ent_mentions: int = 0

    def to_dict(self) -> dict:
        return {
            "pairs": {"trg_trg": self.trg_trg, "ent_ent": self.ent_ent, "trg_ent": self.trg_ent},
            "mentions_involved": {
                "trg_trg": self.trg_trg_mentions,
                "ent_ent": self.ent_ent_mentions,
                "trg_ent": self.trg_ent_mentions,
            },
            "nested_sents": self.nested_sents,
            "all_sents": self.all_sents,
        }

    def table(self) -> str:
        header = f"{'Trg-Trg':>8} {'Ent-Ent':>8} {'Trg-Ent':>8} {'Nested':>8} {'All':>8}"
        pairs = f"{self.trg_trg:>8} {self.ent_ent:>8} {self.trg_ent:>8} {self.nested_sents:>8} {self.all_sents:>8}"
        mentions = (f"{self.trg_trg_mentions:>8} {self.ent_ent_mentions:>8} "
                    f"{self.trg_ent_mentions:>8} {'':>8} {'':>8}  (mentions involved)")
        return "\n".join([header, pairs, mentions])


def sentence_nesting(sentence: Sentence) -> tuple[int, int, int, set[str], set[str], set[str]]:
    """Per-sentence pair counts and the ids of the mentions involved."""
    triggers = [(ev.id, ev.trigger_span) for ev in sentence.events]
    entities = [(e.id, e.span) for e in sentence.entities]

    trg_trg = ent_ent = trg_ent = 0
    trg_ids: set[str] = set()
    ent_ids: set[str] = set()
    cross_ids: set[str] = set()
    for (id_a, a), (id_b, b) in combinations(triggers, 2):
        if spans_nested(a, b):
            trg_trg += 1
            trg_ids.update((id_a, id_b))
    for (id_a, a), (id_b, b) in combinations(entities, 2):
        if spans_nested(a, b):
            ent_ent += 1
            ent_ids.update((id_a, id_b))
    for id_t, t in triggers:
        for id_e, e in entities:
            if spans_nested(t, e):
                trg_ent += 1
                cross_ids.update((f"t:{id_t}", f"e:{id_e}"))
    return trg_trg, ent_ent, trg_ent, trg_ids, ent_ids, cross_ids


def sentence_is_nested(sentence: Sentence) -> bool:
    trg_trg, ent_ent, trg_ent, *_ = sentence_nesting(sentence)
    return (trg_trg + ent_ent + trg_ent) > 0


def count_nesting(corpus: Corpus) -> NestingReport:
    trg_trg = ent_ent = trg_ent = nested = 0
    trg_m = ent_m = cross_m = 0
    for sentence in corpus.sentences:
        t, e, c, trg_ids, ent_ids, cross_ids = sentence_nesting(sentence)
        trg_trg += t
        ent_ent += e
        trg_ent += c
        trg_m += len(trg_ids)
        ent_m += len(ent_ids)
        cross_m += len(cross_ids)
        if t + e + c > 0:
            nested += 1
    return NestingReport(
        trg_trg=trg_trg, ent_ent=ent_ent, trg_ent=trg_ent,
        nested_sents=nested, all_sents=len(corpus.sentences),
        trg_trg_mentions=trg_m, ent_ent_mentions=ent_m, trg_ent_mentions=cross_m,
    )


def partition_nested(corpus: Corpus) -> tuple[Corpus, Corpus]:
    """Split sentences into (nested, non-nested) sub-corpora."""
    nested = tuple(s for s in corpus.sentences if sentence_is_nested(s))
    plain = tuple(s for s in corpus.sentences if not sentence_is_nested(s))
    return replace(corpus, sentences=nested), replace(corpus, sentences=plain)
