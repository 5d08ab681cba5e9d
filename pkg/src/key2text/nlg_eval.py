"""Generation-quality metrics: BLEU, ROUGE-1/L, WER, WIL, BERTScore.

All text metrics tokenize by whitespace after NFC normalization. BLEU is the
corpus-level pooled-count variant without smoothing; a smoothed per-sentence
variant is provided for debugging. WER may exceed 1 on long insertions; all
other metrics lie in [0, 1].
"""

from __future__ import annotations

import math
import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .embedding import WordEmbedding
from .errors import DimensionMismatchError, EvaluationError


def tokenize(text: str) -> list[str]:
    return unicodedata.normalize("NFC", text).split()


@dataclass(frozen=True)
class TextPair:
    reference: str
    candidate: str


class TextPairBatch:
    """A non-empty batch of (reference, candidate) texts."""

    def __init__(self, pairs: Sequence[tuple[str, str] | TextPair]):
        items = [p if isinstance(p, TextPair) else TextPair(*p) for p in pairs]
        if not items:
            raise EvaluationError("metric batch must be non-empty")
        if any(not p.reference.strip() for p in items):
            raise EvaluationError("references must be non-empty")
        self.pairs = tuple(items)

    def __iter__(self):
        return iter(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(batch: TextPairBatch, max_n: int = 4) -> float:
    """Corpus-level BLEU with clipped counts pooled over the batch."""
    if not 1 <= max_n <= 4:
        raise EvaluationError("max_n must lie in 1..4")
    matches = [0] * max_n
    totals = [0] * max_n
    ref_len = 0
    cand_len = 0
    for pair in batch:
        ref = tokenize(pair.reference)
        cand = tokenize(pair.candidate)
        ref_len += len(ref)
        cand_len += len(cand)
        for n in range(1, max_n + 1):
            cand_ngrams = _ngrams(cand, n)
            ref_ngrams = _ngrams(ref, n)
            matches[n - 1] += sum(
                min(count, ref_ngrams[gram]) for gram, count in cand_ngrams.items()
            )
            totals[n - 1] += max(len(cand) - n + 1, 0)
    if cand_len == 0 or any(t == 0 for t in totals) or any(m == 0 for m in matches):
        return 0.0
    log_precision = sum(math.log(m / t) for m, t in zip(matches, totals)) / max_n
    brevity = math.exp(1.0 - ref_len / cand_len) if cand_len < ref_len else 1.0
    return brevity * math.exp(log_precision)


def bleu_sentence(reference: str, candidate: str, max_n: int = 4) -> float:
    """Per-sentence BLEU with add-one smoothing on n >= 2 precisions (debugging aid)."""
    ref = tokenize(reference)
    cand = tokenize(candidate)
    if not cand:
        return 0.0
    log_precision = 0.0
    for n in range(1, max_n + 1):
        total = max(len(cand) - n + 1, 0)
        match = sum(
            min(count, _ngrams(ref, n)[gram])
            for gram, count in _ngrams(cand, n).items()
        )
        if n >= 2:
            match, total = match + 1, total + 1
        if match == 0 or total == 0:
            return 0.0
        log_precision += math.log(match / total)
    brevity = math.exp(1.0 - len(ref) / len(cand)) if len(cand) < len(ref) else 1.0
    return brevity * math.exp(log_precision / max_n)


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def rouge1(batch: TextPairBatch) -> float:
    """Mean unigram-overlap F1."""
    scores = []
    for pair in batch:
        ref = tokenize(pair.reference)
        cand = tokenize(pair.candidate)
        if not cand or not ref:
            scores.append(0.0)
            continue
        overlap = sum((Counter(cand) & Counter(ref)).values())
        scores.append(_f1(overlap / len(cand), overlap / len(ref)))
    return float(np.mean(scores))


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    prev = [0] * (len(b) + 1)
    for token in a:
        current = [0]
        for j, other in enumerate(b, start=1):
            if token == other:
                current.append(prev[j - 1] + 1)
            else:
                current.append(max(prev[j], current[j - 1]))
        prev = current
    return prev[-1]


def rougeL(batch: TextPairBatch) -> float:
    """Mean longest-common-subsequence F1."""
    scores = []
    for pair in batch:
        ref = tokenize(pair.reference)
        cand = tokenize(pair.candidate)
        if not cand or not ref:
            scores.append(0.0)
            continue
        lcs = _lcs_length(ref, cand)
        scores.append(_f1(lcs / len(cand), lcs / len(ref)))
    return float(np.mean(scores))


def _levenshtein_alignment(ref: Sequence[str], cand: Sequence[str]) -> tuple[int, int]:
    """(edit distance, matched-word count) under one canonical alignment.

    The backtrace prefers match over substitution over deletion over
    insertion on cost ties, making the hit count deterministic.
    """
    rows, cols = len(ref) + 1, len(cand) + 1
    dist = np.zeros((rows, cols), dtype=np.int64)
    dist[:, 0] = np.arange(rows)
    dist[0, :] = np.arange(cols)
    for i in range(1, rows):
        for j in range(1, cols):
            same = ref[i - 1] == cand[j - 1]
            dist[i, j] = min(
                dist[i - 1, j - 1] + (0 if same else 1),
                dist[i - 1, j] + 1,
                dist[i, j - 1] + 1,
            )
    hits = 0
    i, j = len(ref), len(cand)
    while i > 0 and j > 0:
        if ref[i - 1] == cand[j - 1] and dist[i, j] == dist[i - 1, j - 1]:
            hits += 1
            i, j = i - 1, j - 1
        elif dist[i, j] == dist[i - 1, j - 1] + 1:
            i, j = i - 1, j - 1
        elif dist[i, j] == dist[i - 1, j] + 1:
            i -= 1
        else:
            j -= 1
    return int(dist[len(ref), len(cand)]), hits


def wer(batch: TextPairBatch) -> float:
    """Pooled word-level edit distance over pooled reference length; may exceed 1."""
    edits = 0
    ref_total = 0
    for pair in batch:
        ref = tokenize(pair.reference)
        cand = tokenize(pair.candidate)
        if not ref:
            raise EvaluationError("WER reference must contain at least one word")
        distance, _ = _levenshtein_alignment(ref, cand)
        edits += distance
        ref_total += len(ref)
    return edits / ref_total


def wil(batch: TextPairBatch) -> float:
    """Word information lost: 1 - (C/N_ref)(C/N_cand) with pooled counts."""
    hits = 0
    ref_total = 0
    cand_total = 0
    for pair in batch:
        ref = tokenize(pair.reference)
        cand = tokenize(pair.candidate)
        if not ref:
            raise EvaluationError("WIL reference must contain at least one word")
        _, matched = _levenshtein_alignment(ref, cand)
        hits += matched
        ref_total += len(ref)
        cand_total += len(cand)
    if hits == 0 or cand_total == 0:
        return 1.0
    return 1.0 - (hits / ref_total) * (hits / cand_total)


def bertscore(
    ref_words: Sequence[WordEmbedding], cand_words: Sequence[WordEmbedding]
) -> tuple[float, float, float]:
    """Greedy-matching embedding similarity: (precision, recall, F1).

    Recall is the mean over reference words of the best cosine against any
    candidate word; precision is symmetric. No idf weighting or baseline
    rescaling; negative means are clamped at 0 so scores stay in [0, 1].
    """
    if not ref_words or not cand_words:
        raise EvaluationError("bertscore requires non-empty word lists")
    ref = np.array([w.vector for w in ref_words], dtype=np.float64)
    cand = np.array([w.vector for w in cand_words], dtype=np.float64)
    if ref.shape[1] != cand.shape[1]:
        raise DimensionMismatchError(
            f"reference dimension {ref.shape[1]} != candidate dimension {cand.shape[1]}"
        )
    ref_norm = np.linalg.norm(ref, axis=1, keepdims=True)
    cand_norm = np.linalg.norm(cand, axis=1, keepdims=True)
    if np.any(ref_norm == 0.0) or np.any(cand_norm == 0.0):
        raise EvaluationError("bertscore embeddings must have non-zero norm")
    similarity = (ref / ref_norm) @ (cand / cand_norm).T
    recall = max(float(similarity.max(axis=1).mean()), 0.0)
    precision = max(float(similarity.max(axis=0).mean()), 0.0)
    return precision, recall, _f1(precision, recall)


METRIC_REPORT_KEYS = ("bertscore", "rouge1", "rougeL", "bleu3", "bleu4", "wer", "wil")


def metric_report(batch: TextPairBatch, bertscore_f1: float | None = None) -> dict:
    """All text metrics as one report with fixed key order."""
    report: dict[str, float | int] = {}
    if bertscore_f1 is not None:
        report["bertscore"] = bertscore_f1
    report.update(
        {
            "rouge1": rouge1(batch),
            "rougeL": rougeL(batch),
            "bleu3": bleu(batch, max_n=3),
            "bleu4": bleu(batch, max_n=4),
            "wer": wer(batch),
            "wil": wil(batch),
            "n_pairs": len(batch),
        }
    )
    return report
