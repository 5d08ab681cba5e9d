"""Embedding provider contract, sub-word accumulation, and mean embeddings.

Providers tokenize text and return one vector per token. Tokenizers that
split words into pieces mark continuations with a prefix (``##`` by
convention); :func:`accumulate_subwords` merges those pieces back into whole
words by averaging their vectors.
"""

from __future__ import annotations

import hashlib
import struct
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatchError, EmbeddingError, SubwordStructureError

DEFAULT_MAX_TOKENS = 512
DEFAULT_CONTINUATION_PREFIX = "##"
DEFAULT_SPECIAL_TOKENS = frozenset({"[CLS]", "[SEP]", "[PAD]", "[UNK]", "[MASK]"})


@dataclass(frozen=True)
class TokenEmbedding:
    """One tokenizer piece and its vector; token may carry the ``##`` prefix."""

    token: str
    vector: np.ndarray

    def __post_init__(self) -> None:
        vec = np.asarray(self.vector, dtype=np.float64)
        if vec.ndim != 1 or vec.size == 0:
            raise EmbeddingError(f"token {self.token!r} has an invalid vector shape")
        if not np.all(np.isfinite(vec)):
            raise EmbeddingError(f"token {self.token!r} has non-finite vector entries")
        object.__setattr__(self, "vector", vec)


@dataclass(frozen=True)
class WordEmbedding:
    """A whole surface word, its vector, and its zero-based position."""

    word: str
    vector: np.ndarray
    position: int


@dataclass(frozen=True)
class MeanEmbedding:
    vector: np.ndarray


@dataclass(frozen=True)
class EmbeddingResult:
    """Provider output: per-token embeddings plus a truncation flag."""

    tokens: tuple[TokenEmbedding, ...]
    truncated: bool = False


class EmbeddingProvider(ABC):
    """Contract every embedding backend satisfies.

    ``embed`` must return one vector per reported token, each of length
    ``dimension``, truncating input at ``max_tokens`` tokens. Implementations
    must be safe for concurrent ``embed`` calls.
    """

    @property
    @abstractmethod
    def dimension(self) -> int: ...

    @property
    @abstractmethod
    def max_tokens(self) -> int: ...

    @property
    def continuation_prefix(self) -> str:
        return DEFAULT_CONTINUATION_PREFIX

    @property
    def special_tokens(self) -> frozenset[str]:
        return DEFAULT_SPECIAL_TOKENS

    @abstractmethod
    def embed(self, text: str) -> EmbeddingResult: ...


def accumulate_subwords(
    tokens: Sequence[TokenEmbedding],
    continuation_prefix: str = DEFAULT_CONTINUATION_PREFIX,
    special_tokens: frozenset[str] = DEFAULT_SPECIAL_TOKENS,
) -> list[WordEmbedding]:
    """Merge continuation runs into word embeddings.

    Special tokens are dropped first. Each run ``[t, ##a, ##b]`` becomes one
    word ``t + a + b`` whose vector is the arithmetic mean of the run's
    vectors. Word positions are consecutive from 0.
    """
    kept = [t for t in tokens if t.token not in special_tokens]
    if not kept:
        return []
    dim = kept[0].vector.shape[0]
    words: list[WordEmbedding] = []
    surface: list[str] = []
    run: list[np.ndarray] = []

    def flush() -> None:
        if run:
            vector = np.mean(run, axis=0)
            words.append(WordEmbedding("".join(surface), vector, len(words)))
            surface.clear()
            run.clear()

    for tok in kept:
        if tok.vector.shape[0] != dim:
            raise DimensionMismatchError(
                f"token {tok.token!r} has dimension {tok.vector.shape[0]}, expected {dim}"
            )
        if tok.token.startswith(continuation_prefix):
            if not run:
                raise SubwordStructureError(
                    f"continuation token {tok.token!r} has no preceding word start"
                )
            surface.append(tok.token[len(continuation_prefix):])
        else:
            flush()
            surface.append(tok.token)
        run.append(tok.vector)
    flush()
    return words


def mean_embedding(words: Sequence[WordEmbedding]) -> MeanEmbedding:
    """Entrywise arithmetic mean of the word vectors."""
    if not words:
        raise EmbeddingError("cannot compute a mean embedding of zero words")
    dim = words[0].vector.shape[0]
    for w in words:
        if w.vector.shape[0] != dim:
            raise DimensionMismatchError(
                f"word {w.word!r} has dimension {w.vector.shape[0]}, expected {dim}"
            )
    return MeanEmbedding(np.mean([w.vector for w in words], axis=0))


@lru_cache(maxsize=65536)
def _hashed_unit_vector(seed: int, dimension: int, token: str) -> np.ndarray:
    """Deterministic pseudo-random unit vector for a token, portable across platforms."""
    key = f"{seed}\x1f{token}".encode("utf-8")
    out = np.empty(dimension, dtype=np.float64)
    block = 0
    filled = 0
    while filled < dimension:
        digest = hashlib.sha256(key + b"\x1f" + str(block).encode()).digest()
        ints = struct.unpack(">8I", digest)
        take = min(8, dimension - filled)
        # map uint32 -> [-1, 1)
        out[filled:filled + take] = [v / 2147483648.0 - 1.0 for v in ints[:take]]
        filled += take
        block += 1
    norm = float(np.linalg.norm(out))
    if norm == 0.0:  # unreachable in practice; guards the unit-norm contract
        out[0] = 1.0
        norm = 1.0
    out /= norm
    out.flags.writeable = False
    return out


class HashEmbeddingProvider(EmbeddingProvider):
    """Deterministic in-process provider for tests and desk-scale runs.

    Tokenizes on whitespace, splitting words longer than ``piece_len`` into
    fixed-size pieces with ``##`` continuations, and wraps the stream in
    ``[CLS]``/``[SEP]``. Each token maps to a keyed-hash unit vector, so the
    same token yields the same vector on every run and platform.
    """

    def __init__(
        self,
        seed: int,
        dimension: int,
        max_tokens: int = DEFAULT_MAX_TOKENS,
        piece_len: int = 4,
    ):
        if dimension < 2:
            raise ValueError("dimension must be at least 2")
        if piece_len < 1:
            raise ValueError("piece_len must be at least 1")
        self._seed = seed
        self._dimension = dimension
        self._max_tokens = max_tokens
        self._piece_len = piece_len

    @property
    def dimension(self) -> int:
        return self._dimension

    @property
    def max_tokens(self) -> int:
        return self._max_tokens

    def _word_pieces(self, word: str) -> list[str]:
        n = self._piece_len
        if len(word) <= n:
            return [word]
        return [word[:n]] + [
            DEFAULT_CONTINUATION_PREFIX + word[i:i + n] for i in range(n, len(word), n)
        ]

    def embed(self, text: str) -> EmbeddingResult:
        pieces: list[str] = []
        for word in text.split():
            pieces.extend(self._word_pieces(word))
        budget = self.max_tokens - 2  # room for [CLS] and [SEP]
        truncated = len(pieces) > budget
        stream = ["[CLS]", *pieces[:budget], "[SEP]"]
        tokens = tuple(
            TokenEmbedding(tok, _hashed_unit_vector(self._seed, self._dimension, tok))
            for tok in stream
        )
        return EmbeddingResult(tokens=tokens, truncated=truncated)


def hash_provider(seed: int, dimension: int, **kwargs) -> HashEmbeddingProvider:
    """Deterministic provider factory used throughout the test and CLI paths."""
    return HashEmbeddingProvider(seed=seed, dimension=dimension, **kwargs)


def embed_words(provider: EmbeddingProvider, words: Iterable[str]) -> tuple[list[WordEmbedding], bool]:
    """Embed pre-tokenized words and merge sub-word pieces back to words.

    The words are joined with single spaces before embedding so the provider's
    word boundaries coincide with the caller's tokenization. If truncation
    cut the final word mid-piece, the partial word is dropped so every
    returned word matches its surface form.
    """
    word_list = list(words)
    result = provider.embed(" ".join(word_list))
    merged = accumulate_subwords(
        result.tokens, provider.continuation_prefix, provider.special_tokens
    )
    if result.truncated and merged and merged[-1].word != word_list[len(merged) - 1]:
        merged.pop()
    return merged, result.truncated
