"""iegraph: joint entity, relation and event extraction as anchored
semantic graph parsing."""

__version__ = "0.1.0"

from .corpus import (
    Corpus,
    CorpusError,
    EntityMention,
    EventMention,
    Ontology,
    RelationMention,
    Sentence,
    Span,
    Token,
    builtin_ontology,
    corpus_stats,
    load_corpus,
    save_corpus,
    select_span_variant,
    split_corpus,
)
from .embeddings import (
    EmbeddingBundle,
    FileEmbeddingProvider,
    HashEmbeddingProvider,
    write_embeddings,
)
from .graph import GraphError, IEGraph, NodeKind, decode, encode, reduce_graph, validate
from .nesting import NestingReport, count_nesting, partition_nested, spans_nested
from .parser import GraphParser, ParserConfig, decode_predictions, load_checkpoint, parse, save_checkpoint
from .scoring import ScoreReport, score, score_partitioned
from .training import TrainConfig, assign_targets, compute_loss, predict_corpus, train

__all__ = [name for name in dir() if not name.startswith("_")]
