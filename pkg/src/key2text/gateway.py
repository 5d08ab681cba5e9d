"""Remote embedding providers and language models over HTTP.

Wire contract (JSON over HTTP/1.1, versioned paths, all POSTs side-effect
free and safe to retry):

- ``GET  /v1/info``        -> ``{"dimension": int, "vocab": [str], "model_id": str}``
- ``POST /v1/embed``       -> ``{"text": str}`` -> ``{"tokens": [str], "embeddings": [[float]]}``
- ``POST /v1/next_logits`` -> ``{"prefix_ids": [int], "keywords": [str]}`` -> ``{"logits": [float]}``
- ``POST /v1/generate``    -> ``{"keywords": [str], "config": {...}}`` -> ``{"text": str, "score": float, "applied_config": {...}}``

Retries use exponential backoff with jitter, capped at the configured
timeout. 4xx responses map to :class:`GatewayClientError` without retry.
"""

from __future__ import annotations

import logging
import random
import threading
import time
from dataclasses import dataclass, field

import numpy as np
import requests

from .corpus import KeywordSet
from .decoding import DecoderConfig, GenerationResult, LanguageModel
from .embedding import (
    DEFAULT_CONTINUATION_PREFIX,
    DEFAULT_MAX_TOKENS,
    DEFAULT_SPECIAL_TOKENS,
    EmbeddingProvider,
    EmbeddingResult,
    TokenEmbedding,
)
from .errors import GatewayClientError, GatewayError, ProtocolError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GatewayConfig:
    base_url: str
    timeout_ms: int = 30_000
    max_retries: int = 3
    max_in_flight: int = 4
    auth_token: str | None = None
    backoff_base_ms: int = 50

    def __post_init__(self) -> None:
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be at least 1")


@dataclass
class GatewayStats:
    """Requests issued and retries spent; useful for long pipeline runs."""

    requests: int = 0
    retries: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def record(self, attempts: int) -> None:
        with self._lock:
            self.requests += 1
            self.retries += attempts - 1


class GatewayClient:
    """Shared HTTP plumbing: connection pool, bounded in-flight calls, retries."""

    def __init__(self, config: GatewayConfig):
        self.config = config
        self.stats = GatewayStats()
        self._gate = threading.BoundedSemaphore(config.max_in_flight)
        self._session = requests.Session()
        adapter = requests.adapters.HTTPAdapter(
            pool_connections=config.max_in_flight, pool_maxsize=config.max_in_flight
        )
        self._session.mount("http://", adapter)
        self._session.mount("https://", adapter)
        if config.auth_token:
            self._session.headers["Authorization"] = f"Bearer {config.auth_token}"

    def _url(self, path: str) -> str:
        return self.config.base_url.rstrip("/") + path

    def request_json(self, method: str, path: str, payload: dict | None = None) -> dict:
        timeout_s = self.config.timeout_ms / 1000.0
        attempts = 0
        last_error = "unknown error"
        while attempts <= self.config.max_retries:
            attempts += 1
            try:
                with self._gate:
                    response = self._session.request(
                        method, self._url(path), json=payload, timeout=timeout_s
                    )
            except requests.RequestException as exc:
                last_error = f"{path}: {exc.__class__.__name__}: {exc}"
            else:
                if response.status_code < 400:
                    self.stats.record(attempts)
                    try:
                        body = response.json()
                    except ValueError as exc:
                        raise ProtocolError(
                            f"{path}: response is not JSON", attempts
                        ) from exc
                    if not isinstance(body, dict):
                        raise ProtocolError(f"{path}: expected a JSON object", attempts)
                    return body
                if response.status_code < 500:
                    self.stats.record(attempts)
                    raise GatewayClientError(
                        _error_message(response), response.status_code
                    )
                last_error = f"{path}: HTTP {response.status_code}"
            if attempts <= self.config.max_retries:
                delay = min(
                    (self.config.backoff_base_ms / 1000.0) * (2 ** (attempts - 1)),
                    timeout_s,
                )
                logger.debug("retrying %s after failure (%s)", path, last_error)
                time.sleep(delay * (0.5 + random.random() / 2))
        self.stats.record(attempts)
        raise GatewayError(last_error, attempts)

    def info(self) -> dict:
        body = self.request_json("GET", "/v1/info")
        if (
            not isinstance(body.get("dimension"), int)
            or body["dimension"] < 1
            or not isinstance(body.get("vocab"), list)
            or not isinstance(body.get("model_id"), str)
        ):
            raise ProtocolError("/v1/info: malformed response")
        return body


def _error_message(response: requests.Response) -> str:
    try:
        return str(response.json().get("error", response.reason))
    except ValueError:
        return response.reason or "request rejected"


class RemoteEmbeddingProvider(EmbeddingProvider):
    """EmbeddingProvider backed by the /v1/embed endpoint.

    The wire format carries no truncation flag; a response using the full
    token budget is reported as truncated.
    """

    def __init__(
        self,
        config: GatewayConfig,
        max_tokens: int = DEFAULT_MAX_TOKENS,
        continuation_prefix: str = DEFAULT_CONTINUATION_PREFIX,
        special_tokens: frozenset[str] = DEFAULT_SPECIAL_TOKENS,
    ):
        self._client = GatewayClient(config)
        info = self._client.info()
        self._dimension = info["dimension"]
        self.model_id = info["model_id"]
        self._max_tokens = max_tokens
        self._continuation_prefix = continuation_prefix
        self._special_tokens = special_tokens

    @property
    def dimension(self) -> int:
        return self._dimension

    @property
    def max_tokens(self) -> int:
        return self._max_tokens

    @property
    def continuation_prefix(self) -> str:
        return self._continuation_prefix

    @property
    def special_tokens(self) -> frozenset[str]:
        return self._special_tokens

    @property
    def stats(self) -> GatewayStats:
        return self._client.stats

    def embed(self, text: str) -> EmbeddingResult:
        body = self._client.request_json("POST", "/v1/embed", {"text": text})
        tokens = body.get("tokens")
        embeddings = body.get("embeddings")
        if not isinstance(tokens, list) or not isinstance(embeddings, list):
            raise ProtocolError("/v1/embed: missing tokens or embeddings")
        if len(tokens) != len(embeddings):
            raise ProtocolError(
                f"/v1/embed: {len(tokens)} tokens but {len(embeddings)} embeddings"
            )
        for vector in embeddings:
            if len(vector) != self._dimension:
                raise ProtocolError(
                    f"/v1/embed: vector of length {len(vector)}, expected {self._dimension}"
                )
        return EmbeddingResult(
            tokens=tuple(
                TokenEmbedding(tok, np.asarray(vec, dtype=np.float64))
                for tok, vec in zip(tokens, embeddings)
            ),
            truncated=len(tokens) >= self._max_tokens,
        )


class RemoteLanguageModel(LanguageModel):
    """LanguageModel backed by the /v1/next_logits endpoint."""

    def __init__(self, config: GatewayConfig):
        self._client = GatewayClient(config)
        info = self._client.info()
        self._vocab = tuple(info["vocab"])
        self.model_id = info["model_id"]

    @property
    def vocabulary(self) -> tuple[str, ...]:
        return self._vocab

    @property
    def stats(self) -> GatewayStats:
        return self._client.stats

    def next_logits(
        self, prefix_ids, keywords: KeywordSet | None = None
    ) -> np.ndarray:
        payload = {
            "prefix_ids": [int(i) for i in prefix_ids],
            "keywords": list(keywords) if keywords is not None else [],
        }
        body = self._client.request_json("POST", "/v1/next_logits", payload)
        logits = body.get("logits")
        if not isinstance(logits, list):
            raise ProtocolError("/v1/next_logits: missing logits")
        if len(logits) != len(self._vocab):
            raise ProtocolError(
                f"/v1/next_logits: {len(logits)} logits for a vocabulary of {len(self._vocab)}"
            )
        return np.asarray(logits, dtype=np.float64)


def remote_generate(
    client: GatewayClient, keywords: KeywordSet, config: DecoderConfig
) -> GenerationResult:
    """Server-side decoding through /v1/generate; config keys mirror
    :class:`DecoderConfig` field names exactly."""
    payload = {"keywords": list(keywords), "config": config.to_wire()}
    body = client.request_json("POST", "/v1/generate", payload)
    if not isinstance(body.get("text"), str) or not isinstance(
        body.get("score"), (int, float)
    ):
        raise ProtocolError("/v1/generate: missing text or score")
    text = body["text"]
    missing = KeywordSet(k for k in keywords if k not in text)
    return GenerationResult(
        text=text,
        token_ids=tuple(body.get("token_ids", ())),
        score=float(body["score"]),
        missing_keywords=missing,
    )
