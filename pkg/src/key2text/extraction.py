"""Keyword extractors and the length-adaptive selection rule.

Three scorers share one interface (higher score = more important, one
:class:`ScoredWord` per word occurrence):

- mean-cosine: cosine similarity between each word embedding and the text's
  mean embedding;
- textrank: stationary distribution of a random walk over a similarity-
  weighted complete word graph;
- yake: statistical single-term scoring from term position, frequency,
  context relatedness, and sentence dispersion (casing is constant for
  unicameral scripts).

Selection keeps the top fraction of words by score, with the fraction chosen
by text length: 60% at 10+ words, 70% at 5-9, 80% at 1-4.
"""

from __future__ import annotations

import enum
import logging
import re
import statistics
from collections import Counter, defaultdict
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence

import numpy as np

from .corpus import Document, KeywordSet
from .embedding import EmbeddingProvider, WordEmbedding, embed_words, mean_embedding
from .errors import ExtractionError, GatewayError, Key2TextError, ZeroVectorError

logger = logging.getLogger(__name__)

_SENTENCE_DELIMS = re.compile(r"[।?!]")


@dataclass(frozen=True)
class ScoredWord:
    """One word occurrence with its importance score."""

    word: str
    score: float
    position: int


@dataclass(frozen=True)
class SelectionTier:
    """Applies ``fraction`` to texts of ``min_words``..``max_words`` words."""

    min_words: int
    max_words: int | None  # None = unbounded
    fraction: float


DEFAULT_TIERS = (
    SelectionTier(10, None, 0.60),
    SelectionTier(5, 9, 0.70),
    SelectionTier(1, 4, 0.80),
)


@dataclass(frozen=True)
class SelectionPolicy:
    """Length-adaptive selection thresholds; defaults to the 60/70/80 tiers."""

    tiers: tuple[SelectionTier, ...] = DEFAULT_TIERS
    min_keywords: int = 1

    def __post_init__(self) -> None:
        if self.min_keywords < 1:
            raise ValueError("min_keywords must be at least 1")
        ordered = sorted(self.tiers, key=lambda t: t.min_words)
        if not ordered or ordered[0].min_words != 1:
            raise ValueError("tiers must start at 1 word")
        for tier, nxt in zip(ordered, ordered[1:]):
            if tier.max_words is None or tier.max_words + 1 != nxt.min_words:
                raise ValueError("tiers must cover all positive word counts without overlap")
        if ordered[-1].max_words is not None:
            raise ValueError("the last tier must be unbounded")
        for tier in ordered:
            if not 0.0 < tier.fraction <= 1.0:
                raise ValueError("tier fractions must lie in (0, 1]")

    def fraction_for(self, n_words: int) -> float:
        for tier in self.tiers:
            upper = tier.max_words if tier.max_words is not None else n_words
            if tier.min_words <= n_words <= upper:
                return tier.fraction
        raise ValueError(f"no tier covers a text of {n_words} words")


class ExtractorKind(enum.Enum):
    MEAN_COSINE = "mean-cosine"
    TEXTRANK = "textrank"
    YAKE = "yake"


def split_sentences(text: str) -> list[str]:
    """Split on danda, question mark, and exclamation mark."""
    return [s for s in (part.strip() for part in _SENTENCE_DELIMS.split(text)) if s]


def _sentence_words(sentence: str) -> list[str]:
    tokens = (t.strip(".-") for t in sentence.replace(",", " ").split())
    return [t for t in tokens if t]


def tokenize_words(text: str) -> list[str]:
    """Surface words of a cleaned text: whitespace split within sentences,
    boundary punctuation stripped."""
    return [w for s in split_sentences(text) for w in _sentence_words(s)]


def tag_words(text: str) -> list[tuple[str, int, int]]:
    """(word, position, sentence_index) triples for sentence-aware scorers."""
    tagged: list[tuple[str, int, int]] = []
    for s_idx, sentence in enumerate(split_sentences(text)):
        for word in _sentence_words(sentence):
            tagged.append((word, len(tagged), s_idx))
    return tagged


def _round_half_up(n_words: int, fraction: float) -> int:
    value = Decimal(n_words) * Decimal(str(fraction))
    return int(value.to_integral_value(rounding=ROUND_HALF_UP))


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))


def score_mean_cosine(words: Sequence[WordEmbedding]) -> list[ScoredWord]:
    """Score each word by cosine similarity to the text's mean embedding."""
    if not words:
        raise ExtractionError("cannot score an empty word list")
    for w in words:
        if float(np.linalg.norm(w.vector)) == 0.0:
            raise ZeroVectorError(f"word {w.word!r} has a zero-norm embedding")
    mean = mean_embedding(words).vector
    if float(np.linalg.norm(mean)) == 0.0:
        raise ZeroVectorError("mean embedding has zero norm")
    return [ScoredWord(w.word, _cosine(w.vector, mean), w.position) for w in words]


def score_textrank(
    words: Sequence[WordEmbedding],
    damping: float = 0.85,
    tol: float = 1e-6,
    max_iter: int = 100,
) -> list[ScoredWord]:
    """Rank words by weighted power iteration over a complete similarity graph.

    Nodes are unique surface words (vector taken from the first occurrence);
    edge weights are cosine similarities clamped at zero. Scores are the
    stationary rank values mapped back to every occurrence.
    """
    if not words:
        raise ExtractionError("cannot score an empty word list")
    if not 0.0 < damping < 1.0:
        raise ValueError("damping must lie in (0, 1)")
    node_of: dict[str, int] = {}
    vectors: list[np.ndarray] = []
    for w in words:
        if float(np.linalg.norm(w.vector)) == 0.0:
            raise ZeroVectorError(f"word {w.word!r} has a zero-norm embedding")
        if w.word not in node_of:
            node_of[w.word] = len(vectors)
            vectors.append(w.vector)

    n = len(vectors)
    if n == 1:
        return [ScoredWord(w.word, 1.0, w.position) for w in words]

    unit = np.array(vectors) / np.linalg.norm(vectors, axis=1, keepdims=True)
    weights = np.clip(unit @ unit.T, 0.0, None)
    np.fill_diagonal(weights, 0.0)

    out_weight = weights.sum(axis=0)
    if not np.any(out_weight > 0.0):
        logger.warning("textrank graph has no positive edge weights; scores uniform")
        return [ScoredWord(w.word, 1.0 / n, w.position) for w in words]

    # Column-normalized transition matrix; zero-out-weight columns stay zero.
    norm = np.where(out_weight > 0.0, out_weight, 1.0)
    transition = weights / norm[np.newaxis, :]

    rank = np.full(n, 1.0 / n)
    base = (1.0 - damping) / n
    for _ in range(max_iter):
        updated = base + damping * (transition @ rank)
        if float(np.abs(updated - rank).sum()) < tol:
            rank = updated
            break
        rank = updated

    return [ScoredWord(w.word, float(rank[node_of[w.word]]), w.position) for w in words]


@dataclass(frozen=True)
class YakeTermFeatures:
    """Per-term statistical features and the combined raw score (lower = better)."""

    term: str
    tf: int
    casing: float
    position: float
    frequency_norm: float
    relatedness: float
    sentence_dispersion: float
    raw_score: float


def yake_features(
    tagged_words: Sequence[tuple[str, int, int]], window: int = 3
) -> dict[str, YakeTermFeatures]:
    """Compute the single-term feature set for every unique word.

    Co-occurrence windows do not cross sentence boundaries. The casing
    feature is held at zero: the target script has no letter case.
    """
    if not tagged_words:
        raise ExtractionError("cannot score an empty word list")
    if window < 1:
        raise ValueError("window must be at least 1")

    tf = Counter(word for word, _, _ in tagged_words)
    max_tf = max(tf.values())
    mean_tf = statistics.fmean(tf.values())
    std_tf = statistics.pstdev(tf.values())

    sentences: dict[int, list[str]] = defaultdict(list)
    term_sentences: dict[str, set[int]] = defaultdict(set)
    for word, _, s_idx in tagged_words:
        sentences[s_idx].append(word)
        term_sentences[word].add(s_idx)
    n_sentences = len(sentences)

    left: dict[str, Counter] = defaultdict(Counter)
    right: dict[str, Counter] = defaultdict(Counter)
    for sent_words in sentences.values():
        for i, word in enumerate(sent_words):
            for neighbor in sent_words[max(0, i - window):i]:
                left[word][neighbor] += 1
            for neighbor in sent_words[i + 1:i + 1 + window]:
                right[word][neighbor] += 1

    features: dict[str, YakeTermFeatures] = {}
    for term, freq in tf.items():
        median_sentence = statistics.median(sorted(term_sentences[term]))
        position = float(np.log(np.log(3.0 + median_sentence)))
        frequency_norm = freq / (mean_tf + std_tf)
        dl = len(left[term]) / sum(left[term].values()) if left[term] else 0.0
        dr = len(right[term]) / sum(right[term].values()) if right[term] else 0.0
        relatedness = 1.0 + (dl + dr) * (freq / max_tf)
        dispersion = len(term_sentences[term]) / n_sentences
        casing = 0.0
        raw = (relatedness * position) / (
            casing + frequency_norm / relatedness + dispersion / relatedness
        )
        features[term] = YakeTermFeatures(
            term=term,
            tf=freq,
            casing=casing,
            position=position,
            frequency_norm=frequency_norm,
            relatedness=relatedness,
            sentence_dispersion=dispersion,
            raw_score=raw,
        )
    return features


def score_yake(
    tagged_words: Sequence[tuple[str, int, int]], window: int = 3
) -> list[ScoredWord]:
    """Statistical scoring; emits 1/(1+S) so higher-is-better matches the
    common interface."""
    features = yake_features(tagged_words, window)
    return [
        ScoredWord(word, 1.0 / (1.0 + features[word].raw_score), position)
        for word, position, _ in tagged_words
    ]


def select_keywords(
    scored: Sequence[ScoredWord], policy: SelectionPolicy | None = None
) -> KeywordSet:
    """Keep the top-scored words for the text's length tier.

    ``k = max(min_keywords, round_half_up(n_words * fraction))`` distinct
    words, drawn in score order with ties broken by earlier position;
    duplicate surfaces keep their best-scored occurrence. The returned order
    is score-descending then position-ascending.
    """
    if not scored:
        raise ExtractionError("cannot select keywords from an empty scoring")
    policy = policy or SelectionPolicy()
    n = len(scored)
    k = max(policy.min_keywords, _round_half_up(n, policy.fraction_for(n)))
    chosen: list[ScoredWord] = []
    seen: set[str] = set()
    for sw in sorted(scored, key=lambda s: (-s.score, s.position)):
        if sw.word in seen:
            continue
        seen.add(sw.word)
        chosen.append(sw)
        if len(chosen) == k:
            break
    return KeywordSet(sw.word for sw in chosen)


def extract(
    doc: Document,
    kind: ExtractorKind,
    provider: EmbeddingProvider | None = None,
    policy: SelectionPolicy | None = None,
    *,
    textrank_damping: float = 0.85,
    textrank_tol: float = 1e-6,
    textrank_max_iter: int = 100,
    yake_window: int = 3,
) -> KeywordSet:
    """Tokenize, score with the chosen extractor, and select keywords.

    The document text is expected to be cleaned already. Embedding-backed
    extractors require a provider; YAKE does not. Provider failures are
    re-raised with the document id attached.
    """
    tagged = tag_words(doc.text)
    if not tagged:
        raise ExtractionError("no words after tokenization", doc.id)

    if kind is ExtractorKind.YAKE:
        scored = score_yake(tagged, window=yake_window)
    else:
        if provider is None:
            raise ExtractionError(
                f"extractor {kind.value} requires an embedding provider", doc.id
            )
        words = [word for word, _, _ in tagged]
        try:
            embedded, _ = embed_words(provider, words)
            if kind is ExtractorKind.MEAN_COSINE:
                scored = score_mean_cosine(embedded)
            else:
                scored = score_textrank(
                    embedded,
                    damping=textrank_damping,
                    tol=textrank_tol,
                    max_iter=textrank_max_iter,
                )
        except ExtractionError:
            raise
        except GatewayError as exc:
            # Outages keep their type so batch callers can abort and resume
            # instead of rejecting the document; the id rides along.
            exc.document_id = doc.id
            exc.args = (f"document {doc.id!r}: {exc.args[0]}",)
            raise
        except Key2TextError as exc:
            raise ExtractionError(str(exc), doc.id) from exc
    return select_keywords(scored, policy)
