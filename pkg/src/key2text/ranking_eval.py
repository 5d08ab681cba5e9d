"""Keyword-extraction evaluation: MRR, mAP, nDCG, exact-match, Fleiss' kappa.

Keyword matching everywhere is exact string equality after Unicode NFC
normalization and trimming; no stemming. Queries whose prediction list
contains no relevant keyword score 0 rather than being skipped.
"""

from __future__ import annotations

import math
import unicodedata
from dataclasses import dataclass
from typing import Sequence

from .corpus import KeywordSet
from .errors import EvaluationError


def normalize_keyword(word: str) -> str:
    return unicodedata.normalize("NFC", word).strip()


@dataclass(frozen=True)
class RankedPrediction:
    """Predicted keywords for one query, best first."""

    id: str
    ranked_keywords: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(set(self.ranked_keywords)) != len(self.ranked_keywords):
            raise ValueError(f"prediction {self.id!r} contains duplicate keywords")


@dataclass(frozen=True)
class GoldKeywords:
    """Reference keyword set for one query."""

    id: str
    keywords: frozenset[str]

    def __post_init__(self) -> None:
        if not self.keywords:
            raise ValueError(f"gold entry {self.id!r} has no keywords")


def _aligned(
    preds: Sequence[RankedPrediction], gold: Sequence[GoldKeywords]
) -> list[tuple[tuple[str, ...], frozenset[str]]]:
    if len(preds) != len(gold):
        raise EvaluationError(
            f"prediction/gold length mismatch: {len(preds)} vs {len(gold)}"
        )
    if not preds:
        raise EvaluationError("no queries to evaluate")
    pairs = []
    for p, g in zip(preds, gold):
        if p.id != g.id:
            raise EvaluationError(f"id mismatch: prediction {p.id!r} vs gold {g.id!r}")
        ranked = tuple(normalize_keyword(k) for k in p.ranked_keywords)
        relevant = frozenset(normalize_keyword(k) for k in g.keywords)
        pairs.append((ranked, relevant))
    return pairs


def mrr(preds: Sequence[RankedPrediction], gold: Sequence[GoldKeywords]) -> float:
    """Mean over queries of 1/rank of the first relevant prediction (0 if none)."""
    total = 0.0
    pairs = _aligned(preds, gold)
    for ranked, relevant in pairs:
        for rank, word in enumerate(ranked, start=1):
            if word in relevant:
                total += 1.0 / rank
                break
    return total / len(pairs)


def mean_average_precision(
    preds: Sequence[RankedPrediction], gold: Sequence[GoldKeywords]
) -> float:
    """Mean over queries of sum(precision@k at relevant ranks) / min(|gold|, |ranked|)."""
    total = 0.0
    pairs = _aligned(preds, gold)
    for ranked, relevant in pairs:
        if not ranked:
            continue
        hits = 0
        precision_sum = 0.0
        for rank, word in enumerate(ranked, start=1):
            if word in relevant:
                hits += 1
                precision_sum += hits / rank
        total += precision_sum / min(len(relevant), len(ranked))
    return total / len(pairs)


def ndcg(preds: Sequence[RankedPrediction], gold: Sequence[GoldKeywords]) -> float:
    """Mean over queries of binary-gain DCG normalized by the ideal ordering."""
    total = 0.0
    pairs = _aligned(preds, gold)
    for ranked, relevant in pairs:
        dcg = sum(
            1.0 / math.log2(rank + 1)
            for rank, word in enumerate(ranked, start=1)
            if word in relevant
        )
        ideal_hits = min(len(relevant), len(ranked))
        idcg = sum(1.0 / math.log2(rank + 1) for rank in range(1, ideal_hits + 1))
        total += dcg / idcg if idcg > 0 else 0.0
    return total / len(pairs)


def exact_match_rate(
    preds: Sequence[KeywordSet], gold: Sequence[KeywordSet]
) -> float:
    """Fraction of aligned pairs whose keyword sets are set-equal after
    normalization."""
    if len(preds) != len(gold):
        raise EvaluationError(
            f"prediction/gold length mismatch: {len(preds)} vs {len(gold)}"
        )
    if not preds:
        raise EvaluationError("no pairs to evaluate")
    matches = sum(
        1
        for p, g in zip(preds, gold)
        if {normalize_keyword(k) for k in p} == {normalize_keyword(k) for k in g}
    )
    return matches / len(preds)


@dataclass(frozen=True)
class AgreementTable:
    """Votes per item and category; each row sums to the annotator count."""

    counts: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "counts", tuple(tuple(row) for row in self.counts))
        if len(self.counts) < 2:
            raise EvaluationError("agreement requires at least 2 items")
        widths = {len(row) for row in self.counts}
        if len(widths) != 1 or widths.pop() < 2:
            raise EvaluationError("agreement requires a rectangular table with >= 2 categories")
        sums = {sum(row) for row in self.counts}
        if len(sums) != 1:
            raise EvaluationError("all items must receive the same number of votes")
        if sums.pop() < 2:
            raise EvaluationError("agreement requires at least 2 annotators")
        if any(v < 0 for row in self.counts for v in row):
            raise EvaluationError("vote counts must be non-negative")

    @property
    def n_items(self) -> int:
        return len(self.counts)

    @property
    def n_categories(self) -> int:
        return len(self.counts[0])

    @property
    def n_annotators(self) -> int:
        return sum(self.counts[0])


def fleiss_kappa(table: AgreementTable) -> float:
    """Chance-corrected multi-annotator agreement in [-1, 1]."""
    n = table.n_annotators
    rows = table.counts
    per_item = [
        (sum(v * v for v in row) - n) / (n * (n - 1)) for row in rows
    ]
    observed = sum(per_item) / len(rows)
    total_votes = len(rows) * n
    category_shares = [
        sum(row[j] for row in rows) / total_votes for j in range(table.n_categories)
    ]
    expected = sum(p * p for p in category_shares)
    if expected == 1.0:
        # All votes in a single category implies perfect observed agreement.
        return 1.0
    return (observed - expected) / (1.0 - expected)


def ranking_report(
    preds: Sequence[RankedPrediction],
    gold: Sequence[GoldKeywords],
) -> dict:
    """All four ranking metrics as one fixed-key-order report."""
    pred_sets = [KeywordSet(p.ranked_keywords) for p in preds]
    gold_sets = [KeywordSet(sorted(g.keywords)) for g in gold]
    return {
        "mrr": mrr(preds, gold),
        "map": mean_average_precision(preds, gold),
        "ndcg": ndcg(preds, gold),
        "exact_match": exact_match_rate(pred_sets, gold_sets),
        "n_queries": len(preds),
    }
