"""Model-agnostic text generation.

Decoders consume any :class:`LanguageModel` and share one transform chain,
applied in a fixed order at every step: temperature, then repetition
penalty, then softmax, then (sampling only) top-k/top-p filtering.

Scores attached to results are cumulative log-probabilities under the
transformed (pre-filter) distribution. Beam search ranks finished hypotheses
by ``logprob / len**length_penalty`` internally but reports the winner's raw
cumulative log-probability, so a width-1 beam reproduces greedy output
exactly.

Sampling uses a fresh PCG64 generator seeded from the config for every
decode call and draws one uniform variate per generated token, inverted
through the filtered distribution's CDF in token-id order.
"""

from __future__ import annotations

import enum
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .corpus import Document, KeywordSet
from .errors import ConstraintUnsatisfiable, DecodingError

PAD_TOKEN = "[PAD]"
BOS_TOKEN = "[BOS]"
EOS_TOKEN = "[EOS]"


class LanguageModel(ABC):
    """Next-token scoring contract plus shared token bookkeeping.

    ``vocabulary`` must be stable for a model instance and include the
    ``[PAD]``/``[BOS]``/``[EOS]`` markers; ``next_logits`` must return one
    finite logit per vocabulary entry. Implementations must tolerate
    concurrent calls.
    """

    @property
    @abstractmethod
    def vocabulary(self) -> tuple[str, ...]: ...

    @abstractmethod
    def next_logits(
        self, prefix_ids: Sequence[int], keywords: KeywordSet | None = None
    ) -> np.ndarray: ...

    @cached_property
    def _token_ids(self) -> dict[str, int]:
        return {token: i for i, token in enumerate(self.vocabulary)}

    @property
    def bos_id(self) -> int:
        return self._token_ids[BOS_TOKEN]

    @property
    def eos_id(self) -> int:
        return self._token_ids[EOS_TOKEN]

    @property
    def pad_id(self) -> int:
        return self._token_ids[PAD_TOKEN]

    @cached_property
    def special_ids(self) -> frozenset[int]:
        return frozenset({self.bos_id, self.eos_id, self.pad_id})

    def token_id(self, token: str) -> int:
        try:
            return self._token_ids[token]
        except KeyError:
            raise DecodingError(f"token {token!r} is not in the vocabulary") from None

    def encode_keyword(self, keyword: str) -> tuple[int, ...]:
        """Whitespace-split a keyword into vocabulary ids; never empty."""
        ids = tuple(self.token_id(t) for t in keyword.split())
        if not ids:
            raise DecodingError(f"keyword {keyword!r} tokenizes to nothing")
        return ids

    def detokenize(self, ids: Sequence[int]) -> str:
        vocab = self.vocabulary
        return " ".join(vocab[i] for i in ids if i not in self.special_ids)


class Strategy(enum.Enum):
    GREEDY = "greedy"
    BEAM = "beam"
    TOP_K = "top_k"
    TOP_P = "top_p"
    TOP_P_TOP_K = "top_p_top_k"


SAMPLING_STRATEGIES = frozenset({Strategy.TOP_K, Strategy.TOP_P, Strategy.TOP_P_TOP_K})


@dataclass(frozen=True)
class DecoderConfig:
    """Decoding strategy parameters; defaults follow the evaluated settings
    (beam size 2, k=50, p=0.95, repetition penalty 2.5, length penalty 1.0,
    64-token cap)."""

    strategy: Strategy = Strategy.GREEDY
    beam_width: int = 2
    top_k: int = 50
    top_p: float = 0.95
    temperature: float = 1.0
    repetition_penalty: float = 2.5
    length_penalty: float = 1.0
    max_length: int = 64
    seed: int = 0

    def __post_init__(self) -> None:
        if isinstance(self.strategy, str):
            object.__setattr__(self, "strategy", Strategy(self.strategy))
        if self.beam_width < 1:
            raise ValueError("beam_width must be at least 1")
        if self.top_k < 1:
            raise ValueError("top_k must be at least 1")
        if not 0.0 < self.top_p <= 1.0:
            raise ValueError("top_p must lie in (0, 1]")
        if self.temperature <= 0.0:
            raise ValueError("temperature must be positive")
        if self.repetition_penalty < 1.0:
            raise ValueError("repetition_penalty must be at least 1")
        if self.max_length < 1:
            raise ValueError("max_length must be at least 1")

    def to_wire(self) -> dict:
        """Field-name-exact mapping used by the HTTP generate endpoint."""
        return {
            "strategy": self.strategy.value,
            "beam_width": self.beam_width,
            "top_k": self.top_k,
            "top_p": self.top_p,
            "temperature": self.temperature,
            "repetition_penalty": self.repetition_penalty,
            "length_penalty": self.length_penalty,
            "max_length": self.max_length,
            "seed": self.seed,
        }

    @classmethod
    def from_wire(cls, payload: dict) -> "DecoderConfig":
        return cls(**payload)


@dataclass(frozen=True)
class Hypothesis:
    """An in-flight generation candidate."""

    token_ids: tuple[int, ...]
    logprob: float
    finished: bool = False
    satisfied_constraints: frozenset[int] = field(default_factory=frozenset)

    @property
    def generated_length(self) -> int:
        return len(self.token_ids) - 1  # excludes the BOS marker


@dataclass(frozen=True)
class GenerationResult:
    """Finished generation: text, ids, cumulative log-probability, and the
    conditioning keywords that did not appear in the text."""

    text: str
    token_ids: tuple[int, ...]
    score: float
    missing_keywords: KeywordSet


def apply_temperature(logits: np.ndarray, temperature: float) -> np.ndarray:
    if temperature <= 0.0:
        raise DecodingError("temperature must be positive")
    return np.asarray(logits, dtype=np.float64) / temperature


def apply_repetition_penalty(
    logits: np.ndarray, generated_ids: Iterable[int], penalty: float
) -> np.ndarray:
    """Divide positive logits of already-generated tokens by ``penalty``,
    multiply non-positive ones."""
    out = np.asarray(logits, dtype=np.float64).copy()
    for tid in set(generated_ids):
        out[tid] = out[tid] / penalty if out[tid] > 0 else out[tid] * penalty
    return out


def transform_logits(
    logits: np.ndarray, generated_ids: Sequence[int], config: DecoderConfig
) -> np.ndarray:
    transformed = apply_temperature(logits, config.temperature)
    if config.repetition_penalty != 1.0:
        transformed = apply_repetition_penalty(
            transformed, generated_ids, config.repetition_penalty
        )
    return transformed


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = np.asarray(logits, dtype=np.float64)
    shifted = shifted - shifted.max()
    exp = np.exp(shifted)
    return exp / exp.sum()


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = np.asarray(logits, dtype=np.float64)
    shifted = shifted - shifted.max()
    return shifted - math.log(float(np.exp(shifted).sum()))


def _sorted_by_mass(probs: np.ndarray) -> np.ndarray:
    # Stable sort on descending probability; ties resolve to lower token id.
    return np.argsort(-probs, kind="stable")


def filter_top_k(probs: np.ndarray, k: int) -> np.ndarray:
    """Keep the k most probable tokens (ties to lower id) and renormalize."""
    probs = np.asarray(probs, dtype=np.float64)
    if k < 1:
        raise DecodingError("top_k must be at least 1")
    k = min(k, probs.size)
    if k == probs.size:
        return probs
    keep = _sorted_by_mass(probs)[:k]
    out = np.zeros_like(probs)
    out[keep] = probs[keep]
    return out / out.sum()


def filter_top_p(probs: np.ndarray, p: float) -> np.ndarray:
    """Keep the smallest probability-sorted prefix with cumulative mass >= p."""
    probs = np.asarray(probs, dtype=np.float64)
    if not 0.0 < p <= 1.0:
        raise DecodingError("top_p must lie in (0, 1]")
    order = _sorted_by_mass(probs)
    cumulative = np.cumsum(probs[order])
    cut = int(np.searchsorted(cumulative, p - 1e-12, side="left")) + 1
    if cut >= probs.size:
        return probs
    keep = order[:cut]
    out = np.zeros_like(probs)
    out[keep] = probs[keep]
    return out / out.sum()


def sampling_probs(probs: np.ndarray, config: DecoderConfig) -> np.ndarray:
    """Apply the strategy's filters; the combined strategy intersects the
    survivor sets of both filters before renormalizing."""
    if config.strategy is Strategy.TOP_K:
        return filter_top_k(probs, config.top_k)
    if config.strategy is Strategy.TOP_P:
        return filter_top_p(probs, config.top_p)
    if config.strategy is Strategy.TOP_P_TOP_K:
        survivors = (filter_top_k(probs, config.top_k) > 0) & (
            filter_top_p(probs, config.top_p) > 0
        )
        out = np.where(survivors, probs, 0.0)
        return out / out.sum()
    raise DecodingError(f"{config.strategy.value} is not a sampling strategy")


def _step_logprobs(
    model: LanguageModel,
    prefix: Sequence[int],
    keywords: KeywordSet | None,
    config: DecoderConfig,
) -> np.ndarray:
    logits = model.next_logits(prefix, keywords)
    return log_softmax(transform_logits(logits, prefix, config))


def _contains(text: str, keyword: str) -> bool:
    return keyword in text


def _result(
    model: LanguageModel,
    ids: Sequence[int],
    score: float,
    keywords: KeywordSet | None,
) -> GenerationResult:
    text = model.detokenize(ids)
    missing = KeywordSet(k for k in (keywords or ()) if not _contains(text, k))
    return GenerationResult(
        text=text, token_ids=tuple(ids), score=score, missing_keywords=missing
    )


def decode_greedy(
    model: LanguageModel,
    keywords: KeywordSet | None = None,
    config: DecoderConfig | None = None,
) -> GenerationResult:
    """Pick the argmax of the transformed distribution at every step."""
    config = config or DecoderConfig()
    ids: list[int] = [model.bos_id]
    score = 0.0
    for _ in range(config.max_length):
        logprobs = _step_logprobs(model, ids, keywords, config)
        token = int(np.argmax(logprobs))
        score += float(logprobs[token])
        ids.append(token)
        if token == model.eos_id:
            break
    return _result(model, ids, score, keywords)


def _rank_key(hyp: Hypothesis, alpha: float) -> tuple[float, tuple[int, ...]]:
    normalized = hyp.logprob / (hyp.generated_length ** alpha)
    return (-normalized, hyp.token_ids)


def decode_beam(
    model: LanguageModel,
    keywords: KeywordSet | None = None,
    config: DecoderConfig | None = None,
) -> GenerationResult:
    """Standard beam search over transformed log-probabilities.

    Hypotheses reaching EOS are banked; at the length cap live hypotheses
    join the candidate pool. The best hypothesis under
    ``logprob / len**length_penalty`` wins.
    """
    config = config or DecoderConfig()
    live = [Hypothesis((model.bos_id,), 0.0)]
    banked: list[Hypothesis] = []
    for _ in range(config.max_length):
        if not live:
            break
        candidates: list[tuple[float, int, int]] = []
        for h_idx, hyp in enumerate(live):
            logprobs = _step_logprobs(model, hyp.token_ids, keywords, config)
            candidates.extend(
                (hyp.logprob + float(logprobs[tok]), h_idx, tok)
                for tok in range(logprobs.size)
            )
        candidates.sort(key=lambda c: (-c[0], c[1], c[2]))
        next_live: list[Hypothesis] = []
        for logprob, h_idx, tok in candidates[: config.beam_width]:
            extended = Hypothesis(
                live[h_idx].token_ids + (tok,), logprob, finished=tok == model.eos_id
            )
            (banked if extended.finished else next_live).append(extended)
        live = next_live
    pool = banked + live
    best = min(pool, key=lambda h: _rank_key(h, config.length_penalty))
    return _result(model, best.token_ids, best.logprob, keywords)


def decode_sample(
    model: LanguageModel,
    keywords: KeywordSet | None = None,
    config: DecoderConfig | None = None,
) -> GenerationResult:
    """Sample each token from the filtered, renormalized distribution."""
    config = config or DecoderConfig(strategy=Strategy.TOP_K)
    if config.strategy not in SAMPLING_STRATEGIES:
        raise DecodingError(
            f"decode_sample requires a sampling strategy, got {config.strategy.value}"
        )
    rng = np.random.Generator(np.random.PCG64(config.seed))
    ids: list[int] = [model.bos_id]
    score = 0.0
    for _ in range(config.max_length):
        logits = model.next_logits(ids, keywords)
        logprobs = log_softmax(transform_logits(logits, ids, config))
        filtered = sampling_probs(np.exp(logprobs), config)
        cdf = np.cumsum(filtered)
        token = int(np.searchsorted(cdf, rng.random(), side="right"))
        token = min(token, filtered.size - 1)
        while filtered[token] == 0.0 and token > 0:  # guards CDF rounding at 1.0
            token -= 1
        score += float(logprobs[token])
        ids.append(token)
        if token == model.eos_id:
            break
    return _result(model, ids, score, keywords)


def decode(
    model: LanguageModel,
    keywords: KeywordSet | None = None,
    config: DecoderConfig | None = None,
) -> GenerationResult:
    """Dispatch on the configured strategy."""
    config = config or DecoderConfig()
    if config.strategy is Strategy.GREEDY:
        return decode_greedy(model, keywords, config)
    if config.strategy is Strategy.BEAM:
        return decode_beam(model, keywords, config)
    return decode_sample(model, keywords, config)


def _satisfied(
    model: LanguageModel,
    ids: tuple[int, ...],
    constraints: Sequence[str],
    constraint_ids: Sequence[tuple[int, ...]],
    already: frozenset[int],
    match_mode: str,
) -> frozenset[int]:
    pending = [i for i in range(len(constraints)) if i not in already]
    if not pending:
        return already
    newly: set[int] = set()
    if match_mode == "text":
        text = model.detokenize(ids)
        newly = {i for i in pending if _contains(text, constraints[i])}
    else:
        for i in pending:
            needle = constraint_ids[i]
            span = len(needle)
            if any(
                ids[j:j + span] == needle for j in range(len(ids) - span + 1)
            ):
                newly.add(i)
    return already | newly


def _stratified_select(
    candidates: list[tuple[float, int, int, frozenset[int]]], width: int
) -> list[tuple[float, int, int, frozenset[int]]]:
    """Split beam slots as evenly as possible across satisfied-count buckets,
    remainder (and any unused quota) going to higher counts first."""
    buckets: dict[int, list[tuple[float, int, int, frozenset[int]]]] = {}
    for cand in candidates:
        buckets.setdefault(len(cand[3]), []).append(cand)
    counts = sorted(buckets, reverse=True)
    base, rem = divmod(width, len(counts))
    chosen: list[tuple[float, int, int, frozenset[int]]] = []
    leftovers: list[tuple[int, tuple[float, int, int, frozenset[int]]]] = []
    for i, count in enumerate(counts):
        quota = base + (1 if i < rem else 0)
        ranked = sorted(buckets[count], key=lambda c: (-c[0], c[1], c[2]))
        chosen.extend(ranked[:quota])
        leftovers.extend((count, c) for c in ranked[quota:])
    if len(chosen) < width:
        leftovers.sort(key=lambda item: (-item[0], -item[1][0], item[1][1], item[1][2]))
        chosen.extend(c for _, c in leftovers[: width - len(chosen)])
    return chosen


def decode_constrained(
    model: LanguageModel,
    keywords: KeywordSet | None,
    forced: KeywordSet,
    config: DecoderConfig | None = None,
    match_mode: str = "text",
) -> GenerationResult:
    """Two-stage generation that guarantees forced keywords appear.

    Stage 1 runs plain beam search; if its output already contains every
    forced keyword it is returned unchanged. Otherwise stage 2 reruns beam
    search with hypotheses bucketed by how many constraints they satisfy, so
    constraint progress always keeps beam slots. Raises
    :class:`ConstraintUnsatisfiable` when no complete hypothesis exists
    within the length budget.
    """
    config = config or DecoderConfig(strategy=Strategy.BEAM)
    if match_mode not in ("text", "tokens"):
        raise DecodingError(f"unknown match mode {match_mode!r}")
    constraints = list(forced)
    constraint_ids = [model.encode_keyword(k) for k in constraints]
    infeasible = [
        k for k, ids in zip(constraints, constraint_ids) if len(ids) > config.max_length
    ]
    if infeasible:
        raise ConstraintUnsatisfiable(tuple(infeasible))

    all_indices = frozenset(range(len(constraints)))
    stage1 = decode_beam(model, keywords, config)
    stage1_satisfied = _satisfied(
        model, stage1.token_ids, constraints, constraint_ids, frozenset(), match_mode
    )
    if stage1_satisfied == all_indices:
        return stage1

    live = [Hypothesis((model.bos_id,), 0.0)]
    banked: list[Hypothesis] = []
    best_progress: frozenset[int] = frozenset()
    for _ in range(config.max_length):
        if not live:
            break
        candidates: list[tuple[float, int, int, frozenset[int]]] = []
        for h_idx, hyp in enumerate(live):
            logprobs = _step_logprobs(model, hyp.token_ids, keywords, config)
            for tok in range(logprobs.size):
                logprob = hyp.logprob + float(logprobs[tok])
                if tok == model.eos_id:
                    # A closed hypothesis can no longer gain keywords: bank it
                    # if complete, drop it otherwise.
                    if hyp.satisfied_constraints == all_indices:
                        banked.append(
                            Hypothesis(
                                hyp.token_ids + (tok,),
                                logprob,
                                finished=True,
                                satisfied_constraints=hyp.satisfied_constraints,
                            )
                        )
                    continue
                satisfied = _satisfied(
                    model,
                    hyp.token_ids + (tok,),
                    constraints,
                    constraint_ids,
                    hyp.satisfied_constraints,
                    match_mode,
                )
                candidates.append((logprob, h_idx, tok, satisfied))
        if not candidates:
            break
        live = [
            Hypothesis(
                live[h_idx].token_ids + (tok,),
                logprob,
                satisfied_constraints=satisfied,
            )
            for logprob, h_idx, tok, satisfied in _stratified_select(
                candidates, config.beam_width
            )
        ]
        for hyp in live:
            if len(hyp.satisfied_constraints) > len(best_progress):
                best_progress = hyp.satisfied_constraints

    pool = banked + [h for h in live if h.satisfied_constraints == all_indices]
    if not pool:
        missing = tuple(
            constraints[i] for i in sorted(all_indices - best_progress)
        )
        raise ConstraintUnsatisfiable(missing)
    best = min(pool, key=lambda h: _rank_key(h, config.length_penalty))
    return _result(model, best.token_ids, best.logprob, keywords)


class ToyBigramModel(LanguageModel):
    """Additive-smoothed bigram model over a small corpus; the verification
    substrate for all decoders.

    Conditioning keywords add ``keyword_bonus`` to the logits of keyword
    tokens not yet present in the prefix. ``[PAD]``/``[BOS]`` can never be
    emitted: they carry a large negative (but finite) floor logit.
    """

    _FLOOR = -50.0

    def __init__(
        self,
        corpus: Sequence[Document],
        smoothing: float = 1.0,
        keyword_bonus: float = 0.0,
    ):
        if not corpus:
            raise DecodingError("toy model corpus must be non-empty")
        if smoothing <= 0.0:
            raise DecodingError("smoothing must be positive")
        words = sorted({w for doc in corpus for w in doc.text.split()})
        if not words:
            raise DecodingError("toy model corpus contains no words")
        self._vocab = (PAD_TOKEN, BOS_TOKEN, EOS_TOKEN, *words)
        self._smoothing = smoothing
        self._keyword_bonus = keyword_bonus
        index = {tok: i for i, tok in enumerate(self._vocab)}
        counts = np.zeros((len(self._vocab), len(self._vocab)), dtype=np.float64)
        for doc in corpus:
            ids = [index[BOS_TOKEN]] + [index[w] for w in doc.text.split()]
            ids.append(index[EOS_TOKEN])
            for prev, nxt in zip(ids, ids[1:]):
                counts[prev, nxt] += 1
        self._counts = counts
        # Emittable tokens: every word plus EOS.
        self._valid = np.ones(len(self._vocab), dtype=bool)
        self._valid[[index[PAD_TOKEN], index[BOS_TOKEN]]] = False

    @property
    def vocabulary(self) -> tuple[str, ...]:
        return self._vocab

    def next_logits(
        self, prefix_ids: Sequence[int], keywords: KeywordSet | None = None
    ) -> np.ndarray:
        prev = prefix_ids[-1] if len(prefix_ids) else self.bos_id
        row = self._counts[prev]
        n_valid = int(self._valid.sum())
        total = float(row[self._valid].sum()) + self._smoothing * n_valid
        logits = np.full(len(self._vocab), self._FLOOR, dtype=np.float64)
        logits[self._valid] = np.log(
            (row[self._valid] + self._smoothing) / total
        )
        if keywords is not None and self._keyword_bonus != 0.0:
            emitted = set(prefix_ids)
            for keyword in keywords:
                for token in keyword.split():
                    tid = self._token_ids.get(token)
                    if tid is not None and tid not in emitted:
                        logits[tid] += self._keyword_bonus
        return logits


def toy_bigram_model(
    corpus: Sequence[Document], smoothing: float = 1.0, keyword_bonus: float = 0.0
) -> ToyBigramModel:
    return ToyBigramModel(corpus, smoothing=smoothing, keyword_bonus=keyword_bonus)


__all__ = [
    "LanguageModel",
    "Strategy",
    "DecoderConfig",
    "Hypothesis",
    "GenerationResult",
    "apply_temperature",
    "apply_repetition_penalty",
    "transform_logits",
    "softmax",
    "log_softmax",
    "filter_top_k",
    "filter_top_p",
    "sampling_probs",
    "decode",
    "decode_greedy",
    "decode_beam",
    "decode_sample",
    "decode_constrained",
    "ToyBigramModel",
    "toy_bigram_model",
]
