"""Batch command-line interface.

Commands compose one module pipeline each; runs are fire-and-observe. Data
goes to stdout or files, logs go to stderr. Configuration is resolved before
any work starts, with precedence flags > environment (``K2T_``) > config
file > built-in defaults; defaults equal the evaluated settings (beam size
2, k=50, p=0.95, repetition penalty 2.5, length penalty 1.0, 64-token cap,
60/70/80 selection tiers, 20:5:1 split ratio).

Exit codes: 0 success, 1 usage/config/I-O error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Sequence

from . import corpus as corpus_mod
from . import nlg_eval
from .corpus import CleaningConfig, Document, KeywordSet, clean_text
from .decoding import (
    DecoderConfig,
    GenerationResult,
    Strategy,
    decode,
    decode_constrained,
    toy_bigram_model,
)
from .embedding import HashEmbeddingProvider, embed_words
from .errors import (
    ConfigError,
    ConstraintUnsatisfiable,
    EvaluationError,
    ExtractionError,
    Key2TextError,
    ParseError,
)
from .extraction import (
    ExtractorKind,
    SelectionPolicy,
    SelectionTier,
    extract,
    tokenize_words,
)
from .gateway import (
    GatewayClient,
    GatewayConfig,
    RemoteEmbeddingProvider,
    RemoteLanguageModel,
    remote_generate,
)
from .pipeline import (
    DEFAULT_SPLIT_RATIO,
    ExtractorSetup,
    SplitSpec,
    build_pairs,
    compute_stats,
    split_corpus,
)
from .ranking_eval import GoldKeywords, RankedPrediction, ranking_report

logger = logging.getLogger("key2text.cli")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

DEFAULT_CONFIG: dict = {
    "cleaning": {"remove_pattern": corpus_mod.DEFAULT_REMOVE_PATTERN},
    "selection": {
        "tiers": [[10, None, 0.60], [5, 9, 0.70], [1, 4, 0.80]],
        "min_keywords": 1,
    },
    "extraction": {
        "method": "mean-cosine",
        "provider": "test",
        "seed": 13,
        "dimension": 64,
        "max_tokens": 512,
        "piece_len": 4,
        "textrank_damping": 0.85,
        "textrank_tol": 1e-6,
        "textrank_max_iter": 100,
        "yake_window": 3,
    },
    "split": {"fractions": list(DEFAULT_SPLIT_RATIO), "seed": 0},
    "decoder": {
        "strategy": "greedy",
        "beam_width": 2,
        "top_k": 50,
        "top_p": 0.95,
        "temperature": 1.0,
        "repetition_penalty": 2.5,
        "length_penalty": 1.0,
        "max_length": 64,
        "seed": 0,
    },
    "generation": {
        "provider": "test",
        "smoothing": 1.0,
        "keyword_bonus": 5.0,
        "constrained": False,
        "match_mode": "text",
    },
    "gateway": {
        "base_url": None,
        "timeout_ms": 30_000,
        "max_retries": 3,
        "max_in_flight": 4,
        "auth_token": None,
        "backoff_base_ms": 50,
    },
    "jobs": 1,
}


class _Parser(argparse.ArgumentParser):
    # Usage errors follow the uniform exit-code policy (1, not argparse's 2).
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _merge_section(base: dict, override: dict, path: str) -> dict:
    merged = dict(base)
    for key, value in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key {path}.{key}" if path else f"unknown config key {key}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            merged[key] = _merge_section(base[key], value, f"{path}.{key}" if path else key)
        else:
            merged[key] = value
    return merged


def load_config(config_path: str | None) -> dict:
    """Defaults, overlaid with the config file, overlaid with K2T_* variables."""
    config = copy.deepcopy(DEFAULT_CONFIG)
    if config_path:
        path = Path(config_path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            file_config = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc.msg}") from exc
        if not isinstance(file_config, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        config = _merge_section(config, file_config, "")
    if os.environ.get("K2T_GATEWAY_URL"):
        config["gateway"]["base_url"] = os.environ["K2T_GATEWAY_URL"]
    if os.environ.get("K2T_GATEWAY_TOKEN"):
        config["gateway"]["auth_token"] = os.environ["K2T_GATEWAY_TOKEN"]
    if os.environ.get("K2T_JOBS"):
        try:
            config["jobs"] = int(os.environ["K2T_JOBS"])
        except ValueError as exc:
            raise ConfigError("K2T_JOBS must be an integer") from exc
    return config


def _apply_flag(config: dict, section: str, key: str, value) -> None:
    if value is not None:
        config[section][key] = value


def _policy(config: dict, policy_path: str | None) -> SelectionPolicy:
    section = config["selection"]
    if policy_path:
        path = Path(policy_path)
        if not path.exists():
            raise ConfigError(f"policy file not found: {path}")
        try:
            section = _merge_section(
                DEFAULT_CONFIG["selection"], json.loads(path.read_text(encoding="utf-8")), "selection"
            )
        except json.JSONDecodeError as exc:
            raise ConfigError(f"policy file {path} is not valid JSON: {exc.msg}") from exc
    try:
        tiers = tuple(
            SelectionTier(int(lo), None if hi is None else int(hi), float(fr))
            for lo, hi, fr in section["tiers"]
        )
        return SelectionPolicy(tiers=tiers, min_keywords=int(section["min_keywords"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid selection policy: {exc}") from exc


def _gateway_config(config: dict) -> GatewayConfig:
    section = config["gateway"]
    if not section["base_url"]:
        raise ConfigError(
            "gateway provider requires a base URL (flag --gateway-url, "
            "K2T_GATEWAY_URL, or config gateway.base_url)"
        )
    return GatewayConfig(
        base_url=section["base_url"],
        timeout_ms=int(section["timeout_ms"]),
        max_retries=int(section["max_retries"]),
        max_in_flight=int(section["max_in_flight"]),
        auth_token=section["auth_token"],
        backoff_base_ms=int(section["backoff_base_ms"]),
    )


def _embedding_provider(config: dict):
    section = config["extraction"]
    if section["provider"] == "test":
        return HashEmbeddingProvider(
            seed=int(section["seed"]),
            dimension=int(section["dimension"]),
            max_tokens=int(section["max_tokens"]),
            piece_len=int(section["piece_len"]),
        )
    if section["provider"] == "gateway":
        return RemoteEmbeddingProvider(
            _gateway_config(config), max_tokens=int(section["max_tokens"])
        )
    raise ConfigError(f"unknown embedding provider {section['provider']!r}")


def _decoder_config(config: dict) -> DecoderConfig:
    section = config["decoder"]
    try:
        return DecoderConfig(
            strategy=Strategy(section["strategy"]),
            beam_width=int(section["beam_width"]),
            top_k=int(section["top_k"]),
            top_p=float(section["top_p"]),
            temperature=float(section["temperature"]),
            repetition_penalty=float(section["repetition_penalty"]),
            length_penalty=float(section["length_penalty"]),
            max_length=int(section["max_length"]),
            seed=int(section["seed"]),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid decoder config: {exc}") from exc


def _read_path(path_str: str) -> Path:
    path = Path(path_str)
    if not path.exists():
        raise ConfigError(f"input file not found: {path}")
    return path


def _write_lines(output: str, lines: Sequence[str]) -> None:
    # Write-then-rename: an error anywhere in the run leaves no partial
    # output behind.
    path = Path(output)
    path.parent.mkdir(parents=True, exist_ok=True)
    staging = path.with_name(path.name + ".tmp")
    try:
        staging.write_text(
            "".join(f"{line}\n" for line in lines), encoding="utf-8", newline="\n"
        )
        os.replace(staging, path)
    finally:
        staging.unlink(missing_ok=True)


def _emit_json(report: dict, output: str | None) -> None:
    text = json.dumps(report, ensure_ascii=False, separators=(",", ":"))
    if output:
        _write_lines(output, [text])
    else:
        print(text)


def _map_jobs(fn: Callable, items: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def cmd_extract(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    _apply_flag(config, "extraction", "method", args.method)
    _apply_flag(config, "extraction", "provider", args.provider)
    _apply_flag(config, "extraction", "seed", args.seed)
    _apply_flag(config, "gateway", "base_url", args.gateway_url)
    if args.jobs is not None:
        config["jobs"] = args.jobs
    kind = ExtractorKind(config["extraction"]["method"])
    policy = _policy(config, args.policy)
    cleaning = CleaningConfig(config["cleaning"]["remove_pattern"])
    provider = None if kind is ExtractorKind.YAKE else _embedding_provider(config)
    if args.dry_run:
        logger.info("dry run: configuration valid")
        return EXIT_OK

    with _read_path(args.input).open("rb") as stream:
        docs = corpus_mod.parse_documents(stream)
    started = time.monotonic()
    rejects = 0
    lines: list[str] = []

    def _one(doc: Document) -> tuple[str, KeywordSet] | None:
        cleaned = clean_text(doc.text, cleaning)
        if not cleaned:
            return None
        try:
            return doc.id, extract(
                Document(doc.id, cleaned),
                kind,
                provider,
                policy,
                textrank_damping=float(config["extraction"]["textrank_damping"]),
                textrank_tol=float(config["extraction"]["textrank_tol"]),
                textrank_max_iter=int(config["extraction"]["textrank_max_iter"]),
                yake_window=int(config["extraction"]["yake_window"]),
            )
        except ExtractionError as exc:
            logger.warning("rejected %s: %s", doc.id, exc)
            return None

    for doc, outcome in zip(docs, _map_jobs(_one, docs, int(config["jobs"]))):
        if outcome is None:
            rejects += 1
            continue
        doc_id, keywords = outcome
        lines.append(
            json.dumps(
                {"id": doc_id, "keywords": list(keywords)},
                ensure_ascii=False,
                separators=(",", ":"),
            )
        )
    _write_lines(args.output, lines)
    logger.info(
        "extract: docs=%d written=%d rejects=%d elapsed=%.2fs",
        len(docs), len(lines), rejects, time.monotonic() - started,
    )
    return EXIT_OK


def cmd_eval_extraction(args: argparse.Namespace) -> int:
    load_config(args.config)  # validates file/env even though no knobs apply
    if args.dry_run:
        logger.info("dry run: configuration valid")
        return EXIT_OK
    with _read_path(args.gold).open("rb") as stream:
        gold_rows = corpus_mod.parse_keyword_file(stream)
    with _read_path(args.pred).open("rb") as stream:
        pred_rows = corpus_mod.parse_keyword_file(stream)
    try:
        preds = [RankedPrediction(i, kws) for i, kws in pred_rows]
        gold = [GoldKeywords(i, frozenset(kws)) for i, kws in gold_rows]
    except ValueError as exc:
        raise EvaluationError(str(exc)) from exc
    _emit_json(ranking_report(preds, gold), args.output)
    return EXIT_OK


def cmd_build_dataset(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    _apply_flag(config, "extraction", "method", args.method)
    _apply_flag(config, "extraction", "provider", args.provider)
    _apply_flag(config, "extraction", "seed", args.seed)
    _apply_flag(config, "gateway", "base_url", args.gateway_url)
    if args.split:
        try:
            fractions = tuple(float(v) for v in args.split.split(","))
        except ValueError as exc:
            raise ConfigError(f"--split must be three comma-separated reals: {exc}") from exc
        config["split"]["fractions"] = list(fractions)
    if args.split_seed is not None:
        config["split"]["seed"] = args.split_seed
    kind = ExtractorKind(config["extraction"]["method"])
    try:
        spec = SplitSpec(tuple(config["split"]["fractions"]), int(config["split"]["seed"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    setup = ExtractorSetup(
        kind=kind,
        provider=None if kind is ExtractorKind.YAKE else _embedding_provider(config),
        policy=_policy(config, args.policy),
        cleaning=CleaningConfig(config["cleaning"]["remove_pattern"]),
    )
    if args.dry_run:
        logger.info("dry run: configuration valid")
        return EXIT_OK
    if args.jobs is not None:
        config["jobs"] = args.jobs
    with _read_path(args.input).open("rb") as stream:
        docs = corpus_mod.parse_documents(stream)
    started = time.monotonic()
    split = split_corpus(docs, spec)
    report = build_pairs(
        split, setup, Path(args.output_dir), resume=args.resume,
        jobs=int(config["jobs"]),
    )
    for name, part in report.splits.items():
        logger.info(
            "build-dataset %s: docs=%d pairs=%d rejects=%d skipped=%d",
            name, part.documents, part.pairs, part.rejects, part.skipped,
        )
    logger.info("build-dataset: elapsed=%.2fs", time.monotonic() - started)
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    load_config(args.config)
    if args.dry_run:
        logger.info("dry run: configuration valid")
        return EXIT_OK
    with _read_path(args.input).open("rb") as stream:
        pairs = corpus_mod.parse_pairs(stream)
    stats = compute_stats(pairs, top_n=args.top_n)
    _emit_json(stats.to_dict(), args.output)
    return EXIT_OK


def _generation_model(config: dict, rows, corpus_path: str | None):
    section = config["generation"]
    if section["provider"] == "gateway":
        return RemoteLanguageModel(_gateway_config(config))
    if section["provider"] != "test":
        raise ConfigError(f"unknown generation provider {section['provider']!r}")
    if corpus_path:
        with _read_path(corpus_path).open("rb") as stream:
            docs = corpus_mod.parse_documents(stream)
    else:
        texts = [r.get("text") for r in rows]
        if not all(isinstance(t, str) and t for t in texts):
            raise ConfigError(
                "test generation provider needs --model-corpus or input records with text fields"
            )
        docs = [Document(r["id"], r["text"]) for r in rows]
    # Normalize corpus texts the same way extraction tokenizes them, so the
    # model vocabulary matches extracted keywords (danda and boundary
    # punctuation stripped).
    cleaning = CleaningConfig(config["cleaning"]["remove_pattern"])
    normalized = []
    for doc in docs:
        words = tokenize_words(clean_text(doc.text, cleaning))
        if words:
            normalized.append(Document(doc.id, " ".join(words)))
    if not normalized:
        raise ConfigError("model corpus is empty after cleaning")
    return toy_bigram_model(
        normalized,
        smoothing=float(section["smoothing"]),
        keyword_bonus=float(section["keyword_bonus"]),
    )


def _read_generation_rows(path: Path) -> list[dict]:
    rows: list[dict] = []
    with path.open("r", encoding="utf-8") as stream:
        for lineno, line in enumerate(stream, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", lineno) from exc
            if not isinstance(obj.get("id"), str) or not isinstance(obj.get("keywords"), list):
                raise ParseError("expected fields 'id' and 'keywords'", lineno)
            rows.append(obj)
    return rows


def cmd_generate(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    _apply_flag(config, "decoder", "strategy", args.decoder)
    _apply_flag(config, "decoder", "beam_width", args.beam_width)
    _apply_flag(config, "decoder", "top_k", args.top_k)
    _apply_flag(config, "decoder", "top_p", args.top_p)
    _apply_flag(config, "decoder", "temperature", args.temperature)
    _apply_flag(config, "decoder", "repetition_penalty", args.repetition_penalty)
    _apply_flag(config, "decoder", "length_penalty", args.length_penalty)
    _apply_flag(config, "decoder", "max_length", args.max_length)
    _apply_flag(config, "decoder", "seed", args.seed)
    _apply_flag(config, "generation", "provider", args.provider)
    _apply_flag(config, "gateway", "base_url", args.gateway_url)
    if args.constrained:
        config["generation"]["constrained"] = True
    decoder_config = _decoder_config(config)
    if args.dry_run:
        logger.info("dry run: configuration valid")
        return EXIT_OK

    rows = _read_generation_rows(_read_path(args.input))
    constrained = bool(config["generation"]["constrained"])
    match_mode = config["generation"]["match_mode"]
    use_remote = (
        config["generation"]["provider"] == "gateway" and not constrained
    )
    client = GatewayClient(_gateway_config(config)) if use_remote else None
    model = None if use_remote else _generation_model(config, rows, args.model_corpus)

    started = time.monotonic()
    lines: list[str] = []
    failures = 0
    for row in rows:
        try:
            keywords = KeywordSet(dict.fromkeys(row["keywords"]))
        except ValueError as exc:
            raise ParseError(f"record {row['id']!r}: {exc}") from exc
        try:
            if use_remote:
                result: GenerationResult = remote_generate(client, keywords, decoder_config)
            elif constrained:
                result = decode_constrained(
                    model, keywords, keywords, decoder_config, match_mode=match_mode
                )
            else:
                result = decode(model, keywords, decoder_config)
        except ConstraintUnsatisfiable as exc:
            logger.warning("generation failed for %s: %s", row["id"], exc)
            failures += 1
            continue
        lines.append(
            json.dumps(
                {
                    "id": row["id"],
                    "keywords": list(keywords),
                    "text": result.text,
                    "score": result.score,
                    "missing_keywords": list(result.missing_keywords),
                },
                ensure_ascii=False,
                separators=(",", ":"),
            )
        )
    _write_lines(args.output, lines)
    logger.info(
        "generate: records=%d written=%d failures=%d elapsed=%.2fs",
        len(rows), len(lines), failures, time.monotonic() - started,
    )
    return EXIT_OK


def cmd_eval_generation(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    _apply_flag(config, "extraction", "provider", args.provider)
    _apply_flag(config, "gateway", "base_url", args.gateway_url)
    if args.dry_run:
        logger.info("dry run: configuration valid")
        return EXIT_OK
    rows: list[dict] = []
    with _read_path(args.input).open("r", encoding="utf-8") as stream:
        for lineno, line in enumerate(stream, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", lineno) from exc
            if not all(isinstance(obj.get(k), str) for k in ("id", "reference", "candidate")):
                raise ParseError(
                    "expected fields 'id', 'reference', 'candidate'", lineno
                )
            rows.append(obj)
    batch = nlg_eval.TextPairBatch([(r["reference"], r["candidate"]) for r in rows])

    bertscore_f1 = None
    if not args.no_bertscore:
        provider = _embedding_provider(config)
        f1_values = []
        for pair in batch:
            ref_words, _ = embed_words(provider, tokenize_words(pair.reference))
            cand_words, _ = embed_words(provider, tokenize_words(pair.candidate))
            if not ref_words or not cand_words:
                f1_values.append(0.0)
                continue
            _, _, f1 = nlg_eval.bertscore(ref_words, cand_words)
            f1_values.append(f1)
        bertscore_f1 = sum(f1_values) / len(f1_values)
    _emit_json(nlg_eval.metric_report(batch, bertscore_f1), args.output)
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file (sections mirror module configs)")
    parser.add_argument("--dry-run", action="store_true", help="validate configuration and exit")
    parser.add_argument("--gateway-url", help="model server base URL (default: K2T_GATEWAY_URL)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="key2text", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract keywords from a corpus file")
    p.add_argument("--input", required=True, help="corpus JSONL {id, text}")
    p.add_argument("--output", required=True, help="keyword JSONL {id, keywords}")
    p.add_argument("--method", choices=[k.value for k in ExtractorKind],
                   help="scoring method (default mean-cosine)")
    p.add_argument("--provider", choices=["test", "gateway"],
                   help="embedding provider; yake needs none (default test)")
    p.add_argument("--policy", help="JSON selection policy file (default 60/70/80 tiers)")
    p.add_argument("--seed", type=int, help="test provider seed (default 13)")
    p.add_argument("--jobs", type=int, help="parallel extraction fan-out (default 1, K2T_JOBS)")
    _add_common(p)
    p.set_defaults(handler=cmd_extract)

    p = sub.add_parser("eval-extraction", help="score ranked keyword predictions against gold")
    p.add_argument("--gold", required=True, help="gold keyword JSONL {id, keywords}")
    p.add_argument("--pred", required=True, help="predicted keyword JSONL, ranked best-first")
    p.add_argument("--output", help="write the report here instead of stdout")
    _add_common(p)
    p.set_defaults(handler=cmd_eval_extraction)

    p = sub.add_parser("build-dataset", help="split a corpus and build keyword-text pair files")
    p.add_argument("--input", required=True, help="corpus JSONL {id, text}")
    p.add_argument("--output-dir", required=True, help="directory for per-split outputs")
    p.add_argument("--method", choices=[k.value for k in ExtractorKind],
                   help="scoring method (default mean-cosine)")
    p.add_argument("--provider", choices=["test", "gateway"],
                   help="embedding provider (default test)")
    p.add_argument("--policy", help="JSON selection policy file")
    p.add_argument("--seed", type=int, help="test provider seed (default 13)")
    p.add_argument("--split", help="train,validation,test fractions (default 20:5:1 ratio)")
    p.add_argument("--split-seed", type=int, help="shuffle seed (default 0)")
    p.add_argument("--resume", action="store_true",
                   help="continue an interrupted build from the progress files")
    p.add_argument("--jobs", type=int,
                   help="bounded extraction fan-out (default 1, K2T_JOBS)")
    _add_common(p)
    p.set_defaults(handler=cmd_build_dataset)

    p = sub.add_parser("stats", help="counting statistics over a pair file")
    p.add_argument("--input", required=True, help="pair JSONL {id, keywords, text}")
    p.add_argument("--output", help="write the report here instead of stdout")
    p.add_argument("--top-n", type=int, default=5, help="top keywords to report (default 5)")
    _add_common(p)
    p.set_defaults(handler=cmd_stats)

    p = sub.add_parser("generate", help="generate text from keyword records")
    p.add_argument("--input", required=True, help="keyword JSONL {id, keywords[, text]}")
    p.add_argument("--output", required=True, help="generation JSONL output")
    p.add_argument("--provider", choices=["test", "gateway"],
                   help="test = in-process bigram model, gateway = remote server")
    p.add_argument("--model-corpus", help="corpus JSONL for the test model "
                   "(default: text fields of --input)")
    p.add_argument("--decoder", choices=[s.value for s in Strategy],
                   help="decoding strategy (default greedy)")
    p.add_argument("--beam-width", type=int, help="beam width (default 2)")
    p.add_argument("--top-k", type=int, help="top-k cutoff (default 50)")
    p.add_argument("--top-p", type=float, help="nucleus mass (default 0.95)")
    p.add_argument("--temperature", type=float, help="softmax temperature (default 1.0)")
    p.add_argument("--repetition-penalty", type=float, help="repeat penalty (default 2.5)")
    p.add_argument("--length-penalty", type=float, help="length exponent (default 1.0)")
    p.add_argument("--max-length", type=int, help="generation cap in tokens (default 64)")
    p.add_argument("--seed", type=int, help="sampling seed (default 0)")
    p.add_argument("--constrained", action="store_true",
                   help="force every input keyword into the output (two-stage beam)")
    _add_common(p)
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("eval-generation", help="NLG metrics over reference/candidate pairs")
    p.add_argument("--input", required=True, help="JSONL {id, reference, candidate}")
    p.add_argument("--output", help="write the report here instead of stdout")
    p.add_argument("--provider", choices=["test", "gateway"],
                   help="embedding provider for the similarity score (default test)")
    p.add_argument("--no-bertscore", action="store_true",
                   help="skip the embedding-based similarity score")
    _add_common(p)
    p.set_defaults(handler=cmd_eval_generation)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(name)s %(message)s"
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ConfigError, ParseError, EvaluationError) as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
    except OSError as exc:
        logger.error("I/O error: %s", exc)
        return EXIT_USAGE
    except Key2TextError as exc:
        logger.error("runtime error: %s", exc)
        return EXIT_RUNTIME
    except Exception:  # pragma: no cover - safety net
        logger.exception("unexpected error")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
