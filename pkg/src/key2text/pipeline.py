"""End-to-end dataset construction: split, extract, pair, and count.

Builds are resumable: every split keeps a sidecar progress file listing the
ids already processed (paired or rejected), updated only after the
corresponding output line is durably written. Rejected documents are never
silently dropped; they land in a per-split reject file with a reason.
"""

from __future__ import annotations

import json
import logging
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import (
    CleaningConfig,
    CorpusSplit,
    Document,
    KeywordTextPair,
    clean_text,
    pair_to_line,
)
from .embedding import EmbeddingProvider
from .errors import EmbeddingError, ExtractionError, GatewayError, Key2TextError
from .extraction import ExtractorKind, SelectionPolicy, extract, tokenize_words

logger = logging.getLogger(__name__)

# 20:5:1 train/validation/test, stored exactly so small corpora slice evenly.
DEFAULT_SPLIT_RATIO = (20 / 26, 5 / 26, 1 / 26)


@dataclass(frozen=True)
class SplitSpec:
    """Train/validation/test fractions (sum 1) and the shuffle seed."""

    fractions: tuple[float, float, float] = DEFAULT_SPLIT_RATIO
    seed: int = 0

    def __post_init__(self) -> None:
        if len(self.fractions) != 3 or any(f < 0 for f in self.fractions):
            raise ValueError("fractions must be three non-negative reals")
        if abs(sum(self.fractions) - 1.0) > 1e-12:
            raise ValueError("fractions must sum to 1")


def split_corpus(docs: Sequence[Document], spec: SplitSpec) -> CorpusSplit:
    """Seeded shuffle followed by contiguous slicing.

    Validation and test sizes are floors of their fractions; remainder
    documents go to train. Reproducible given the seed.
    """
    ids = [d.id for d in docs]
    if len(set(ids)) != len(ids):
        raise ValueError("documents must have unique ids")
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    shuffled = [docs[i] for i in rng.permutation(len(docs))]
    n = len(docs)
    n_validation = math.floor(n * spec.fractions[1])
    n_test = math.floor(n * spec.fractions[2])
    n_train = n - n_validation - n_test
    return CorpusSplit(
        train=tuple(shuffled[:n_train]),
        validation=tuple(shuffled[n_train:n_train + n_validation]),
        test=tuple(shuffled[n_train + n_validation:]),
    )


@dataclass(frozen=True)
class ExtractorSetup:
    """Everything needed to turn a raw document into a keyword-text pair."""

    kind: ExtractorKind
    provider: EmbeddingProvider | None = None
    policy: SelectionPolicy = field(default_factory=SelectionPolicy)
    cleaning: CleaningConfig = field(default_factory=CleaningConfig)


@dataclass
class SplitBuildReport:
    documents: int = 0
    pairs: int = 0
    rejects: int = 0
    skipped: int = 0  # already completed in a previous (interrupted) run


@dataclass
class BuildReport:
    splits: dict[str, SplitBuildReport]

    @property
    def pairs(self) -> int:
        return sum(r.pairs for r in self.splits.values())

    @property
    def rejects(self) -> int:
        return sum(r.rejects for r in self.splits.values())

    @property
    def documents(self) -> int:
        return sum(r.documents for r in self.splits.values())


def split_paths(out_dir: Path, name: str) -> tuple[Path, Path, Path]:
    return (
        out_dir / f"{name}.jsonl",
        out_dir / f"{name}.rejects.jsonl",
        out_dir / f"{name}.progress",
    )


def _pair_document(doc: Document, setup: ExtractorSetup) -> KeywordTextPair:
    cleaned = clean_text(doc.text, setup.cleaning)
    if not cleaned:
        raise ExtractionError("text is empty after cleaning", doc.id)
    keywords = extract(
        Document(doc.id, cleaned), setup.kind, setup.provider, setup.policy
    )
    return KeywordTextPair(id=doc.id, keywords=keywords, text=cleaned)


def _document_outcome(
    doc: Document, setup: ExtractorSetup
) -> tuple[str, str]:
    """("pair"|"reject", output line) for one document; outages propagate."""
    try:
        pair = _pair_document(doc, setup)
    except (ExtractionError, EmbeddingError) as exc:
        line = json.dumps(
            {"id": doc.id, "reason": str(exc)},
            ensure_ascii=False,
            separators=(",", ":"),
        )
        return "reject", line
    return "pair", pair_to_line(pair)


def build_pairs(
    split: CorpusSplit,
    setup: ExtractorSetup,
    out_dir: Path,
    resume: bool = False,
    jobs: int = 1,
) -> BuildReport:
    """Extract keywords for every document of every split and write pair files.

    Document-level failures (empty after cleaning, embedding errors) are
    appended to the split's reject file. Infrastructure failures
    (:class:`GatewayError`) abort the build; the progress files make the rerun
    pick up where the last durable write ended. ``jobs`` bounds the in-flight
    extractions; writes stay ordered and single-threaded, so output bytes do
    not depend on the fan-out.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = BuildReport(splits={})
    for name, docs in split.parts().items():
        pairs_path, rejects_path, progress_path = split_paths(out_dir, name)
        completed: set[str] = set()
        if resume and progress_path.exists():
            completed = {
                line for line in progress_path.read_text(encoding="utf-8").splitlines() if line
            }
        elif not resume:
            for path in (pairs_path, rejects_path, progress_path):
                path.unlink(missing_ok=True)

        split_report = SplitBuildReport(documents=len(docs))
        report.splits[name] = split_report
        pending = []
        for doc in docs:
            if doc.id in completed:
                split_report.skipped += 1
            else:
                pending.append(doc)

        with (
            pairs_path.open("a", encoding="utf-8", newline="\n") as pairs_sink,
            rejects_path.open("a", encoding="utf-8", newline="\n") as rejects_sink,
            progress_path.open("a", encoding="utf-8", newline="\n") as progress_sink,
        ):
            if jobs > 1 and len(pending) > 1:
                pool = ThreadPoolExecutor(max_workers=jobs)
                outcomes = pool.map(lambda d: _document_outcome(d, setup), pending)
            else:
                pool = None
                outcomes = (_document_outcome(doc, setup) for doc in pending)
            try:
                for doc, outcome in zip(pending, outcomes):
                    kind, line = outcome
                    if kind == "pair":
                        pairs_sink.write(line + "\n")
                        pairs_sink.flush()
                        split_report.pairs += 1
                    else:
                        rejects_sink.write(line + "\n")
                        rejects_sink.flush()
                        split_report.rejects += 1
                    progress_sink.write(doc.id + "\n")
                    progress_sink.flush()
            except GatewayError as exc:
                logger.error(
                    "provider outage in %s (%s); aborting with checkpoint intact",
                    name, exc,
                )
                raise
            finally:
                if pool is not None:
                    pool.shutdown(wait=False, cancel_futures=True)
    return report


@dataclass(frozen=True)
class CorpusStats:
    """Counting statistics over a set of keyword-text pairs."""

    n_texts: int
    max_keywords_per_text: int
    mean_keywords_per_text: float
    max_words_per_text: int
    mean_words_per_text: float
    total_words: int
    total_keywords: int
    keyword_to_text_length_ratio: float
    top_keywords: tuple[tuple[str, int], ...]

    def to_dict(self) -> dict:
        return {
            "n_texts": self.n_texts,
            "max_keywords_per_text": self.max_keywords_per_text,
            "mean_keywords_per_text": self.mean_keywords_per_text,
            "max_words_per_text": self.max_words_per_text,
            "mean_words_per_text": self.mean_words_per_text,
            "total_words": self.total_words,
            "total_keywords": self.total_keywords,
            "keyword_to_text_length_ratio": self.keyword_to_text_length_ratio,
            "top_keywords": [list(item) for item in self.top_keywords],
        }


def compute_stats(pairs: Sequence[KeywordTextPair], top_n: int = 5) -> CorpusStats:
    """Direct single-pass counting; top keywords sorted by count then lexically."""
    if not pairs:
        raise Key2TextError("cannot compute statistics of an empty pair list")
    keyword_counts: Counter[str] = Counter()
    kw_per_text: list[int] = []
    words_per_text: list[int] = []
    for pair in pairs:
        kw_per_text.append(len(pair.keywords))
        words_per_text.append(len(tokenize_words(pair.text)))
        keyword_counts.update(pair.keywords)
    total_words = int(sum(words_per_text))
    total_keywords = int(sum(kw_per_text))
    top = sorted(keyword_counts.items(), key=lambda item: (-item[1], item[0]))[:top_n]
    return CorpusStats(
        n_texts=len(pairs),
        max_keywords_per_text=max(kw_per_text),
        mean_keywords_per_text=total_keywords / len(pairs),
        max_words_per_text=max(words_per_text),
        mean_words_per_text=total_words / len(pairs),
        total_words=total_words,
        total_keywords=total_keywords,
        keyword_to_text_length_ratio=total_keywords / total_words,
        top_keywords=tuple(top),
    )
