"""Command-line operator surface: convert, stats, nesting, train, predict,
score. Every run writes a manifest (inputs/outputs with content hashes,
seed, timestamps) and file outputs are written atomically."""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import os
import sys
import tempfile
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .corpus import (
    Corpus,
    CorpusError,
    canonical_json_bytes,
    corpus_stats,
    corpus_to_dict,
    load_corpus,
    select_span_variant,
)
from .embeddings import EmbeddingError, provider_from_spec
from .graph import GraphError, corpus_to_graphs_dict, graphs_dict_to_corpus
from .nesting import count_nesting, partition_nested
from .parser import ParserConfig, ParserError, load_checkpoint
from .scoring import score, score_partitioned
from .training import TrainConfig, TrainingError, predict_corpus, train

log = logging.getLogger("iegraph")

_USER_ERRORS = (CorpusError, GraphError, EmbeddingError, ParserError, TrainingError,
                FileNotFoundError, json.JSONDecodeError)


def _setup_logging(level: str | None) -> None:
    level = level or os.environ.get("JSEE_LOG_LEVEL", "WARNING")
    logging.basicConfig(level=getattr(logging, level.upper(), logging.WARNING),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")


def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _hash_tree(path: Path) -> str:
    """Content hash of a file, or of a directory's files (for checkpoints)."""
    if path.is_dir():
        digest = hashlib.sha256()
        for child in sorted(p for p in path.rglob("*") if p.is_file()):
            digest.update(str(child.relative_to(path)).encode())
            digest.update(bytes.fromhex(file_sha256(child)))
        return digest.hexdigest()
    return file_sha256(path)


def write_manifest(command: str, args: argparse.Namespace, inputs: list[str | Path],
                   outputs: list[str | Path], started: float, seed: int | None = None,
                   config_path: str | None = None, manifest_path: str | Path | None = None) -> Path:
    def stamp(t: float) -> str:
        return datetime.fromtimestamp(t, tz=timezone.utc).isoformat()

    manifest = {
        "command": command,
        "argv": sys.argv[1:],
        "version": __version__,
        "config": config_path,
        "seed": seed,
        "inputs": {str(p): _hash_tree(Path(p)) for p in inputs},
        "outputs": {str(p): _hash_tree(Path(p)) for p in outputs if Path(p).exists()},
        "started_at": stamp(started),
        "finished_at": stamp(time.time()),
    }
    if manifest_path is None:
        base = Path(outputs[0]) if outputs else Path(f"iegraph-{command}")
        manifest_path = base.with_name(base.name + ".manifest.json") if not base.is_dir() \
            else base / "manifest.json"
    atomic_write_bytes(manifest_path, canonical_json_bytes(manifest))
    return Path(manifest_path)


def _load_variant_corpus(path: str, variant: str | None) -> Corpus:
    corpus = load_corpus(path)
    if variant is not None:
        corpus = select_span_variant(corpus, variant)
    return corpus


def _filter_langs(corpus: Corpus, langs: str | None) -> Corpus:
    if not langs:
        return corpus
    wanted = {item.strip() for item in langs.split(",") if item.strip()}
    return dataclasses.replace(
        corpus, sentences=tuple(s for s in corpus.sentences if s.lang in wanted))


# ---------------------------------------------------------------------------
# Subcommands


def cmd_convert(args: argparse.Namespace) -> int:
    started = time.time()
    if args.direction == "to-graphs":
        corpus = _load_variant_corpus(args.input, args.span_variant)
        data = corpus_to_graphs_dict(corpus)
    else:
        with open(args.input, encoding="utf-8") as handle:
            corpus = graphs_dict_to_corpus(json.load(handle))
        data = corpus_to_dict(corpus)
    atomic_write_bytes(args.output, canonical_json_bytes(data))
    write_manifest("convert", args, [args.input], [args.output], started)
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    started = time.time()
    corpus = _load_variant_corpus(args.input, args.span_variant)
    stats = corpus_stats(corpus)
    header = f"{'#Sents':>10} {'#Events':>10} {'#Roles':>10} {'#Entities':>10} {'#Relations':>12}"
    row = (f"{stats['sents']:>10} {stats['events']:>10} {stats['roles']:>10} "
           f"{stats['entities']:>10} {stats['relations']:>12}")
    print(header)
    print(row)
    if args.output:
        atomic_write_bytes(args.output, canonical_json_bytes(stats))
        write_manifest("stats", args, [args.input], [args.output], started)
    return 0


def cmd_nesting(args: argparse.Namespace) -> int:
    started = time.time()
    corpus = _load_variant_corpus(args.input, args.span_variant)
    report = count_nesting(corpus)
    print(report.table())
    if args.output:
        atomic_write_bytes(args.output, canonical_json_bytes(report.to_dict()))
        write_manifest("nesting", args, [args.input], [args.output], started)
    return 0


def _split_config(data: dict) -> tuple[TrainConfig, dict]:
    """Partition a flat config file into TrainConfig/ParserConfig fields and
    run-level settings (corpus paths, provider, variant)."""
    run_keys = {"train_corpora", "train_corpus", "dev_corpus", "span_variant",
                "embedding_provider", "langs"}
    parser_fields = {f.name for f in dataclasses.fields(ParserConfig)}
    train_fields = {f.name for f in dataclasses.fields(TrainConfig)} - {"parser"}
    parser_kwargs, train_kwargs, run = {}, {}, {}
    for key, value in data.items():
        if key in run_keys:
            run[key] = value
        elif key in parser_fields:
            parser_kwargs[key] = value
        elif key in train_fields:
            train_kwargs[key] = value
        else:
            raise CorpusError(f"unknown config key {key!r}", field=key)
    config = TrainConfig(parser=ParserConfig(**parser_kwargs), **train_kwargs)
    return config, run


def cmd_train(args: argparse.Namespace) -> int:
    started = time.time()
    with open(args.config, encoding="utf-8") as handle:
        config_data = json.load(handle)
    config, run = _split_config(config_data)

    if args.seed is not None:
        config.seed = args.seed
    if args.ablation == "no-ent-rel":
        config.ablation_no_ent_rel = True
    variant = args.span_variant or run.get("span_variant")
    langs = args.langs or run.get("langs")

    paths = run.get("train_corpora") or [run["train_corpus"]]
    corpora = [_filter_langs(_load_variant_corpus(p, variant), langs) for p in paths]
    dev = None
    if run.get("dev_corpus"):
        dev = _filter_langs(_load_variant_corpus(run["dev_corpus"], variant), langs)

    provider_spec = args.embedding_provider or run.get("embedding_provider", "hash")
    provider = provider_from_spec(provider_spec, default_seed=config.seed)
    if hasattr(provider, "layers"):
        config.parser.embedding_layers = provider.layers
        config.parser.embedding_dim = provider.dim

    run_dir = Path(args.run_dir)
    result = train(config, corpora, provider, dev=dev, run_dir=run_dir)
    log.info("training finished; best epoch %s", result.best_epoch)
    inputs = [args.config, *paths] + ([run["dev_corpus"]] if run.get("dev_corpus") else [])
    write_manifest("train", args, inputs, [run_dir / "checkpoints" / "last"], started,
                   seed=config.seed, config_path=args.config,
                   manifest_path=run_dir / "manifest.json")
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    started = time.time()
    checkpoint = load_checkpoint(args.checkpoint)
    corpus = _load_variant_corpus(args.input, args.span_variant)
    spec = args.embedding_provider or checkpoint.provenance
    provider = provider_from_spec(spec)
    predicted = predict_corpus(checkpoint.model, corpus, provider)
    atomic_write_bytes(args.output, canonical_json_bytes(corpus_to_dict(predicted)))
    write_manifest("predict", args, [args.checkpoint, args.input], [args.output], started)
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    started = time.time()
    pred = load_corpus(args.pred)
    gold = _load_variant_corpus(args.gold, args.span_variant)
    include_ent_rel = args.ablation != "no-ent-rel"
    report = score(pred, gold, include_ent_rel=include_ent_rel)
    print(report.table())
    output_data: dict = {"overall": report.to_dict()}
    if args.nested_split:
        partition = partition_nested(gold)
        nested, plain = score_partitioned(pred, gold, partition, include_ent_rel=include_ent_rel)
        output_data["nested"] = nested.to_dict()
        output_data["non_nested"] = plain.to_dict()
        print(f"\nnested ({len(partition[0].sentences)} sentences)")
        print(nested.table())
        print(f"\nnon-nested ({len(partition[1].sentences)} sentences)")
        print(plain.table())
    if args.output:
        atomic_write_bytes(args.output, canonical_json_bytes(output_data))
        write_manifest("score", args, [args.pred, args.gold], [args.output], started)
    return 0


# ---------------------------------------------------------------------------
# Argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iegraph",
                                     description="Joint entity/relation/event extraction "
                                                 "via anchored graph parsing")
    parser.add_argument("--log-level", default=None,
                        help="override JSEE_LOG_LEVEL (DEBUG/INFO/WARNING/ERROR)")
    sub = parser.add_subparsers(dest="command", required=True)

    convert = sub.add_parser("convert", help="convert between annotations and graphs")
    convert.add_argument("--input", required=True)
    convert.add_argument("--output", required=True)
    convert.add_argument("--direction", choices=("to-graphs", "to-annotations"), required=True)
    convert.add_argument("--span-variant", choices=("head", "full"), default=None)
    convert.set_defaults(func=cmd_convert)

    stats = sub.add_parser("stats", help="corpus count statistics")
    stats.add_argument("--input", required=True)
    stats.add_argument("--output", default=None)
    stats.add_argument("--span-variant", choices=("head", "full"), default=None)
    stats.set_defaults(func=cmd_stats)

    nesting = sub.add_parser("nesting", help="count nested annotation pairs")
    nesting.add_argument("--input", required=True)
    nesting.add_argument("--output", default=None)
    nesting.add_argument("--span-variant", choices=("head", "full"), default=None)
    nesting.set_defaults(func=cmd_nesting)

    train_cmd = sub.add_parser("train", help="train a parser")
    train_cmd.add_argument("--config", required=True)
    train_cmd.add_argument("--run-dir", required=True)
    train_cmd.add_argument("--seed", type=int, default=None)
    train_cmd.add_argument("--span-variant", choices=("head", "full"), default=None)
    train_cmd.add_argument("--ablation", choices=("no-ent-rel",), default=None)
    train_cmd.add_argument("--langs", default=None, help="comma-separated language filter")
    train_cmd.add_argument("--embedding-provider", default=None,
                           help='"hash" or "file:<path>"')
    train_cmd.set_defaults(func=cmd_train)

    predict = sub.add_parser("predict", help="parse a corpus with a checkpoint")
    predict.add_argument("--checkpoint", required=True)
    predict.add_argument("--input", required=True)
    predict.add_argument("--output", required=True)
    predict.add_argument("--span-variant", choices=("head", "full"), default=None)
    predict.add_argument("--embedding-provider", default=None)
    predict.set_defaults(func=cmd_predict)

    score_cmd = sub.add_parser("score", help="score predictions against gold")
    score_cmd.add_argument("--pred", required=True)
    score_cmd.add_argument("--gold", required=True)
    score_cmd.add_argument("--output", default=None)
    score_cmd.add_argument("--span-variant", choices=("head", "full"), default=None)
    score_cmd.add_argument("--nested-split", action="store_true")
    score_cmd.add_argument("--ablation", choices=("no-ent-rel",), default=None)
    score_cmd.set_defaults(func=cmd_score)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging(args.log_level)
    try:
        return args.func(args)
    except _USER_ERRORS as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
