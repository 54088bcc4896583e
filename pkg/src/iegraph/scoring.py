"""Micro-averaged precision/recall/F1 over six categories: Entity, Relation,
trigger identification/classification and argument identification/
classification.

Matching is exact-key and one-to-one within a sentence, so the counts equal
the size of a maximum bipartite matching (greedy order cannot matter):

- Entity: token offsets and entity type.
- Relation: relation type plus the offsets of both (ordered) arguments.
- Trg-I: trigger offsets; Trg-C: offsets and event type.
- Arg-I: argument offsets, and the predicted host event's type must match
  some reference event type of the sentence (otherwise the prediction is
  automatically wrong); Arg-C additionally requires the role to match.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .corpus import Corpus, CorpusError, Sentence

CATEGORIES = ("entity", "relation", "trigger_id", "trigger_cls", "argument_id", "argument_cls")

_TABLE_HEADERS = {
    "trigger_id": "Trg-I",
    "trigger_cls": "Trg-C",
    "argument_id": "Arg-I",
    "argument_cls": "Arg-C",
    "entity": "Entity",
    "relation": "Relation",
}
_TABLE_ORDER = ("trigger_id", "trigger_cls", "argument_id", "argument_cls", "entity", "relation")


@dataclass
class CategoryScore:
    gold: int = 0
    predicted: int = 0
    matched: int = 0
    applicable: bool = True

    @property
    def precision(self) -> float:
        return self.matched / self.predicted if self.predicted else 0.0

    @property
    def recall(self) -> float:
        return self.matched / self.gold if self.gold else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0

    def to_dict(self) -> dict:
        if not self.applicable:
            return {"applicable": False}
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "gold": self.gold,
            "predicted": self.predicted,
            "matched": self.matched,
        }


@dataclass
class ScoreReport:
    entity: CategoryScore = field(default_factory=CategoryScore)
    relation: CategoryScore = field(default_factory=CategoryScore)
    trigger_id: CategoryScore = field(default_factory=CategoryScore)
    trigger_cls: CategoryScore = field(default_factory=CategoryScore)
    argument_id: CategoryScore = field(default_factory=CategoryScore)
    argument_cls: CategoryScore = field(default_factory=CategoryScore)

    def category(self, name: str) -> CategoryScore:
        return getattr(self, name)

    def to_dict(self) -> dict:
        return {name: self.category(name).to_dict() for name in CATEGORIES}

    def table(self) -> str:
        """Plain-text table, one column per category like the standard
        results layout."""
        header = f"{'':8}" + "".join(f"{_TABLE_HEADERS[name]:>10}" for name in _TABLE_ORDER)
        rows = []
        for metric in ("P", "R", "F1"):
            cells = []
            for name in _TABLE_ORDER:
                cat = self.category(name)
                if not cat.applicable:
                    cells.append(f"{'-':>10}")
                    continue
                value = {"P": cat.precision, "R": cat.recall, "F1": cat.f1}[metric]
                cells.append(f"{100 * value:>10.1f}")
            rows.append(f"{metric:<8}" + "".join(cells))
        return "\n".join([header, *rows])


# ---------------------------------------------------------------------------
# Per-sentence item extraction


def _entity_items(sentence: Sentence) -> list[tuple]:
    return [(e.span.start, e.span.end, e.entity_type) for e in sentence.entities]


def _relation_items(sentence: Sentence) -> list[tuple]:
    span = {e.id: (e.span.start, e.span.end) for e in sentence.entities}
    return [(r.relation_type, span[r.arg1], span[r.arg2]) for r in sentence.relations]


def _trigger_items(sentence: Sentence) -> list[tuple]:
    return [(ev.trigger_span.start, ev.trigger_span.end, ev.event_type) for ev in sentence.events]


def _argument_items(sentence: Sentence) -> list[tuple]:
    """(event type, argument offsets, role) per filled argument slot."""
    span = {e.id: (e.span.start, e.span.end) for e in sentence.entities}
    items = []
    for ev in sentence.events:
        for entity_id, role in ev.arguments:
            items.append((ev.event_type, span[entity_id], role))
    return items


def sentence_counts(pred: Sentence, gold: Sentence) -> dict[str, tuple[int, int, int]]:
    """(gold, predicted, matched) per category for one sentence pair."""
    out: dict[str, tuple[int, int, int]] = {}

    def exact(name: str, pred_keys: list, gold_keys: list) -> None:
        matched = sum((Counter(pred_keys) & Counter(gold_keys)).values())
        out[name] = (len(gold_keys), len(pred_keys), matched)

    exact("entity", _entity_items(pred), _entity_items(gold))
    exact("relation", _relation_items(pred), _relation_items(gold))

    pred_triggers = _trigger_items(pred)
    gold_triggers = _trigger_items(gold)
    exact("trigger_id", [t[:2] for t in pred_triggers], [t[:2] for t in gold_triggers])
    exact("trigger_cls", pred_triggers, gold_triggers)

    gold_event_types = {t[2] for t in gold_triggers}
    pred_args = _argument_items(pred)
    gold_args = _argument_items(gold)
    valid_pred = [a for a in pred_args if a[0] in gold_event_types]
    matched_id = sum((Counter(a[1] for a in valid_pred) & Counter(a[1] for a in gold_args)).values())
    out["argument_id"] = (len(gold_args), len(pred_args), matched_id)
    matched_cls = sum((Counter((a[1], a[2]) for a in valid_pred)
                       & Counter((a[1], a[2]) for a in gold_args)).values())
    out["argument_cls"] = (len(gold_args), len(pred_args), matched_cls)
    return out


# ---------------------------------------------------------------------------
# Corpus-level scoring


def score(pred: Corpus, gold: Corpus, include_ent_rel: bool = True) -> ScoreReport:
    """Micro-average over sentence pairs aligned by sentence id."""
    pred_by_id = {s.id: s for s in pred.sentences}
    gold_by_id = {s.id: s for s in gold.sentences}
    if set(pred_by_id) != set(gold_by_id):
        missing = sorted(set(gold_by_id) ^ set(pred_by_id))
        raise CorpusError(f"prediction/gold sentence ids differ (first mismatches: {missing[:5]})")

    report = ScoreReport()
    for sid, gold_sentence in gold_by_id.items():
        counts = sentence_counts(pred_by_id[sid], gold_sentence)
        for name, (n_gold, n_pred, n_match) in counts.items():
            cat = report.category(name)
            cat.gold += n_gold
            cat.predicted += n_pred
            cat.matched += n_match
    if not include_ent_rel:
        report.entity = CategoryScore(applicable=False)
        report.relation = CategoryScore(applicable=False)
    return report


def score_partitioned(pred: Corpus, gold: Corpus, partition: tuple[Corpus, Corpus],
                      include_ent_rel: bool = True) -> tuple[ScoreReport, ScoreReport]:
    """Score restricted to each side of a (nested, non-nested) gold
    partition."""
    reports = []
    pred_by_id = {s.id: s for s in pred.sentences}
    for subset in partition:
        ids = {s.id for s in subset.sentences}
        sub_pred = Corpus(ontology=pred.ontology,
                          sentences=tuple(pred_by_id[s.id] for s in subset.sentences))
        reports.append(score(sub_pred, subset, include_ent_rel=include_ent_rel))
    return reports[0], reports[1]
