"""Training: deterministic query-slot target assignment, the four-part loss
(node labels, anchors, edge presence, edge labels), AdamW with a warmed-up
cosine schedule over two parameter groups, per-epoch checkpointing and dev
scoring, with multilingual corpora concatenation and the event-only
(no ent&rel) ablation."""

from __future__ import annotations

import dataclasses
import json
import math
import random
import shutil
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
import torch.nn.functional as F

from .corpus import Corpus, Ontology, Sentence
from .embeddings import EmbeddingBundle, EmbeddingProvider
from .graph import IEGraph, NodeKind, decode_sentence, encode, reduce_graph
from .parser import (
    GraphParser,
    LabelSpace,
    ParserConfig,
    ParserOutput,
    parse,
    save_checkpoint,
)
from .scoring import ScoreReport, score


class TrainingError(ValueError):
    pass


@dataclass
class TrainConfig:
    """Optimization settings; field names mirror the shared hyperparameter
    table so a JSON config doubles as its documentation."""

    batch_size: int = 16
    beta_1: float = 0.9
    beta_2: float = 0.98
    decoder_learning_rate: float = 1.0e-4
    decoder_weight_decay: float = 1.2e-6
    encoder_learning_rate: float = 4.0e-6
    encoder_weight_decay: float = 0.1
    epochs: int = 110
    warmup_steps: int = 1000
    seed: int = 1
    ablation_no_ent_rel: bool = False
    eval_every: int = 1
    checkpoint_every: int = 1  # 0 keeps only best + last
    parser: ParserConfig = field(default_factory=ParserConfig)

    def __post_init__(self):
        if isinstance(self.parser, dict):
            self.parser = ParserConfig.from_dict(self.parser)
        if self.epochs < 1:
            raise TrainingError("epochs must be >= 1")
        if self.batch_size < 1:
            raise TrainingError("batch_size must be >= 1")
        for name in ("beta_1", "beta_2", "decoder_learning_rate", "decoder_weight_decay",
                     "encoder_learning_rate", "encoder_weight_decay"):
            if getattr(self, name) < 0:
                raise TrainingError(f"{name} must be non-negative")
        if self.warmup_steps < 0:
            raise TrainingError("warmup_steps must be >= 0")

    def to_dict(self) -> dict:
        data = dataclasses.asdict(self)
        data["parser"] = self.parser.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        return cls(**data)


# ---------------------------------------------------------------------------
# Target assignment


@dataclass
class TargetAssignment:
    """Gold targets for one sentence. Edge matrices are ordered root-first,
    then assigned query slots ascending (matching the teacher-forced
    forward)."""

    sentence_id: str
    n_tokens: int
    query_length: int
    slots: tuple[int, ...]
    node_ids: tuple[int, ...]
    query_labels: np.ndarray   # (Q,) int64, 0 = null
    anchors: np.ndarray        # (len(slots), T) float32
    presence: np.ndarray       # (N, N) float32
    edge_labels: np.ndarray    # (N, N) int64, -1 = no edge

    @property
    def n_nodes(self) -> int:
        return len(self.slots) + 1


def assign_targets(gold: IEGraph, n_tokens: int, query_length: int,
                   label_space: LabelSpace) -> TargetAssignment:
    """Deterministic rule: walk gold nodes in canonical order; each takes the
    lowest free slot of its leftmost anchored token, spilling rightwards
    through its anchor; no free slot anywhere in the anchor is an error
    (query_length too small for the corpus)."""
    n_queries = n_tokens * query_length
    used = [0] * n_tokens
    slot_of: dict[int, int] = {}
    for node in gold.nodes[1:]:
        for token in sorted(node.anchor):
            if used[token] < query_length:
                slot_of[node.node_id] = token * query_length + used[token]
                used[token] += 1
                break
        else:
            raise TrainingError(
                f"sentence {gold.sentence_id!r}: no free query slot for node {node.node_id} "
                f"(anchor {sorted(node.anchor)}, query_length={query_length})")

    ordered = sorted(slot_of.items(), key=lambda item: item[1])
    slots = tuple(slot for _, slot in ordered)
    node_ids = tuple(node_id for node_id, _ in ordered)
    position = {node_id: i + 1 for i, (node_id, _) in enumerate(ordered)}
    position[0] = 0

    query_labels = np.zeros(n_queries, dtype=np.int64)
    anchors = np.zeros((len(slots), n_tokens), dtype=np.float32)
    for row, (node_id, slot) in enumerate(ordered):
        node = gold.nodes[node_id]
        query_labels[slot] = label_space.node_label_index(node.label)
        anchors[row, sorted(node.anchor)] = 1.0

    n_nodes = len(slots) + 1
    presence = np.zeros((n_nodes, n_nodes), dtype=np.float32)
    edge_labels = np.full((n_nodes, n_nodes), -1, dtype=np.int64)
    for edge in gold.edges:
        src, dst = position[edge.src], position[edge.dst]
        presence[src, dst] = 1.0
        edge_labels[src, dst] = label_space.edge_label_index(edge.label)

    return TargetAssignment(gold.sentence_id, n_tokens, query_length, slots, node_ids,
                            query_labels, anchors, presence, edge_labels)


# ---------------------------------------------------------------------------
# Loss


def compute_loss(output: ParserOutput, targets: TargetAssignment) -> tuple[torch.Tensor, dict[str, float]]:
    """Sum of four mean-reduced parts: cross-entropy over query node labels
    (null for unassigned slots), binary cross-entropy over anchor bitmaps of
    assigned slots, binary cross-entropy over edge presence for all ordered
    node pairs, and cross-entropy over edge labels of gold-present edges."""
    if output.selected_queries != targets.slots:
        raise TrainingError("parser output slots do not match the target assignment")
    ref = output.edge_presence_logits
    zero = ref.new_zeros(())

    if output.n_queries:
        labels = torch.as_tensor(targets.query_labels, device=ref.device)
        node_loss = F.cross_entropy(output.node_label_logits, labels)
    else:
        node_loss = zero

    if targets.slots:
        rows = output.anchor_logits[list(targets.slots)]
        gold = torch.as_tensor(targets.anchors, dtype=ref.dtype, device=ref.device)
        anchor_loss = F.binary_cross_entropy_with_logits(rows, gold)
    else:
        anchor_loss = zero

    n = targets.n_nodes
    pair_mask = ~torch.eye(n, dtype=torch.bool, device=ref.device)
    if pair_mask.any():
        gold_presence = torch.as_tensor(targets.presence, dtype=ref.dtype, device=ref.device)
        presence_loss = F.binary_cross_entropy_with_logits(
            output.edge_presence_logits[pair_mask], gold_presence[pair_mask])
    else:
        presence_loss = zero

    gold_edges = torch.as_tensor(targets.edge_labels, device=ref.device)
    edge_positions = gold_edges >= 0
    if edge_positions.any():
        label_loss = F.cross_entropy(output.edge_label_logits[edge_positions],
                                     gold_edges[edge_positions])
    else:
        label_loss = zero

    total = node_loss + anchor_loss + presence_loss + label_loss
    parts = {
        "node_label": float(node_loss.detach()),
        "anchor": float(anchor_loss.detach()),
        "edge_presence": float(presence_loss.detach()),
        "edge_label": float(label_loss.detach()),
    }
    return total, parts


# ---------------------------------------------------------------------------
# Learning-rate schedule


def lr_factor(step: int, warmup_steps: int, total_steps: int) -> float:
    """Linear ramp 0 -> 1 over `warmup_steps`, then cosine decay to 0 at
    `total_steps`."""
    if step < warmup_steps:
        return step / warmup_steps
    remaining = max(total_steps - warmup_steps, 1)
    progress = min((step - warmup_steps) / remaining, 1.0)
    return 0.5 * (1.0 + math.cos(math.pi * progress))


# ---------------------------------------------------------------------------
# Training loop


@dataclass
class TrainResult:
    model: GraphParser
    history: list[dict]
    best_epoch: int | None
    best_dev_f1: float | None
    first_step_loss: float
    run_dir: Path | None


def _merge_corpora(corpora: Sequence[Corpus]) -> tuple[Ontology, list[Sentence]]:
    ontology = corpora[0].ontology
    for corpus in corpora[1:]:
        if corpus.ontology != ontology:
            raise TrainingError(
                f"corpora use different ontologies ({corpus.ontology.name!r} vs {ontology.name!r})")
    sentences: list[Sentence] = []
    for corpus in corpora:
        sentences.extend(corpus.sentences)
    return ontology, sentences


def prepare_example(sentence: Sentence, ontology: Ontology, provider: EmbeddingProvider,
                    label_space: LabelSpace, query_length: int,
                    ablation: bool) -> tuple[EmbeddingBundle, TargetAssignment]:
    bundle = provider.bundle(sentence)
    gold = encode(sentence, ontology)
    if ablation:
        gold = reduce_graph(gold)
    targets = assign_targets(gold, len(sentence.tokens), query_length, label_space)
    return bundle, targets


def predict_corpus(model: GraphParser, corpus: Corpus, provider: EmbeddingProvider) -> Corpus:
    """Parse every sentence and return a corpus holding the predictions."""
    sentences = []
    for sentence in corpus.sentences:
        graph = parse(model, sentence, provider.bundle(sentence))
        sentences.append(decode_sentence(graph, sentence))
    return Corpus(ontology=model.label_space.ontology, sentences=tuple(sentences),
                  split_tag=corpus.split_tag, span_variant=corpus.span_variant)


def evaluate(model: GraphParser, corpus: Corpus, provider: EmbeddingProvider) -> tuple[Corpus, ScoreReport]:
    predicted = predict_corpus(model, corpus, provider)
    report = score(predicted, corpus, include_ent_rel=model.label_space.include_ent_rel)
    return predicted, report


def train(config: TrainConfig, corpora: Corpus | Sequence[Corpus], provider: EmbeddingProvider,
          dev: Corpus | None = None, run_dir: str | Path | None = None) -> TrainResult:
    """Optimize a fresh parser on the given corpora (multilingual mode simply
    concatenates and shuffles them). Deterministic for a fixed config and
    provider."""
    if isinstance(corpora, Corpus):
        corpora = [corpora]
    if not corpora:
        raise TrainingError("no training corpora")
    ontology, sentences = _merge_corpora(corpora)
    if not sentences:
        raise TrainingError("training corpora contain no sentences")

    torch.manual_seed(config.seed)
    rng = random.Random(config.seed)

    parser_config = replace(config.parser, include_ent_rel=not config.ablation_no_ent_rel)
    model = GraphParser(parser_config, ontology)
    label_space = model.label_space

    examples = [
        prepare_example(s, ontology, provider, label_space, parser_config.query_length,
                        config.ablation_no_ent_rel)
        for s in sentences
    ]
    dev_bundles = [provider.bundle(s) for s in dev.sentences] if dev is not None else None

    steps_per_epoch = math.ceil(len(examples) / config.batch_size)
    total_steps = config.epochs * steps_per_epoch
    optimizer = torch.optim.AdamW(
        [
            {"params": model.encoder_parameters(), "lr": config.encoder_learning_rate,
             "weight_decay": config.encoder_weight_decay, "base_lr": config.encoder_learning_rate},
            {"params": model.decoder_parameters(), "lr": config.decoder_learning_rate,
             "weight_decay": config.decoder_weight_decay, "base_lr": config.decoder_learning_rate},
        ],
        betas=(config.beta_1, config.beta_2),
    )

    run_dir = Path(run_dir) if run_dir is not None else None
    log_handle = None
    if run_dir is not None:
        run_dir.mkdir(parents=True, exist_ok=True)
        log_handle = open(run_dir / "train_log.jsonl", "w", encoding="utf-8")

    history: list[dict] = []
    best_epoch: int | None = None
    best_dev_f1: float | None = None
    first_step_loss = float("nan")
    global_step = 0
    provenance = provider.provenance()

    try:
        for epoch in range(config.epochs):
            model.train()
            order = rng.sample(range(len(examples)), len(examples))
            epoch_parts = {"node_label": 0.0, "anchor": 0.0, "edge_presence": 0.0, "edge_label": 0.0}
            epoch_loss = 0.0
            last_factor = 0.0
            for start in range(0, len(order), config.batch_size):
                batch = order[start:start + config.batch_size]
                optimizer.zero_grad()
                batch_losses = []
                for index in batch:
                    bundle, targets = examples[index]
                    output = model.forward_teacher(bundle, targets.slots)
                    loss, parts = compute_loss(output, targets)
                    batch_losses.append(loss)
                    for key, value in parts.items():
                        epoch_parts[key] += value / len(batch)
                total = torch.stack(batch_losses).mean()
                total.backward()
                last_factor = lr_factor(global_step, config.warmup_steps, total_steps)
                for group in optimizer.param_groups:
                    group["lr"] = group["base_lr"] * last_factor
                optimizer.step()
                if global_step == 0:
                    first_step_loss = float(total.detach())
                epoch_loss += float(total.detach())
                global_step += 1

            epoch_loss /= steps_per_epoch
            for key in epoch_parts:
                epoch_parts[key] /= steps_per_epoch

            entry: dict = {
                "epoch": epoch,
                "loss": epoch_loss,
                "loss_parts": epoch_parts,
                "lr_factor": last_factor,
                "lr": {"encoder": config.encoder_learning_rate * last_factor,
                       "decoder": config.decoder_learning_rate * last_factor},
                "dev": None,
            }

            is_last = epoch == config.epochs - 1
            if dev is not None and (is_last or (config.eval_every > 0 and (epoch + 1) % config.eval_every == 0)):
                predicted = []
                for sentence, bundle in zip(dev.sentences, dev_bundles):
                    graph = parse(model, sentence, bundle)
                    predicted.append(decode_sentence(graph, sentence))
                pred_corpus = Corpus(ontology=label_space.ontology, sentences=tuple(predicted),
                                     split_tag=dev.split_tag, span_variant=dev.span_variant)
                report = score(pred_corpus, dev, include_ent_rel=label_space.include_ent_rel)
                entry["dev"] = report.to_dict()
                dev_f1 = report.argument_cls.f1
                if best_dev_f1 is None or dev_f1 > best_dev_f1:
                    best_dev_f1 = dev_f1
                    best_epoch = epoch
                    if run_dir is not None:
                        save_checkpoint(run_dir / "checkpoints" / "best", model, provenance,
                                        train_config=config.to_dict(),
                                        extra={"epoch": epoch, "dev_arg_cls_f1": dev_f1})

            if run_dir is not None:
                if config.checkpoint_every > 0 and ((epoch + 1) % config.checkpoint_every == 0 or is_last):
                    save_checkpoint(run_dir / "checkpoints" / f"epoch_{epoch:04d}", model, provenance,
                                    train_config=config.to_dict(),
                                    extra={"epoch": epoch, "dev": entry["dev"]})
                if log_handle is not None:
                    log_handle.write(json.dumps(entry, ensure_ascii=False) + "\n")
                    log_handle.flush()
            history.append(entry)

        if run_dir is not None:
            save_checkpoint(run_dir / "checkpoints" / "last", model, provenance,
                            train_config=config.to_dict(),
                            extra={"epoch": config.epochs - 1, "best_epoch": best_epoch})
    finally:
        if log_handle is not None:
            log_handle.close()

    model.eval()
    return TrainResult(model=model, history=history, best_epoch=best_epoch,
                       best_dev_f1=best_dev_f1, first_step_loss=first_step_loss, run_dir=run_dir)
