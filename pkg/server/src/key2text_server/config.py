"""Server configuration.

Model ids select a backend: ``reference`` is the deterministic in-process
backend (hash embeddings plus a bigram generator, no weights needed);
``hf:<model-id-or-path>`` loads a checkpoint through transformers. The
defaults name the published Bangla checkpoints, but they are configuration,
not code.
"""

from __future__ import annotations

from dataclasses import dataclass

DEFAULT_ENCODER = "hf:csebuetnlp/banglabert"
DEFAULT_GENERATOR = "hf:csebuetnlp/banglat5"


@dataclass(frozen=True)
class ServerConfig:
    encoder: str = DEFAULT_ENCODER
    generator: str = DEFAULT_GENERATOR
    device: str = "cpu"
    max_tokens: int = 512
    port: int = 8000
    host: str = "127.0.0.1"
    # reference-backend knobs
    dimension: int = 768
    seed: int = 13
    corpus_path: str | None = None
    smoothing: float = 0.5
    keyword_bonus: float = 4.0

    def __post_init__(self) -> None:
        if self.max_tokens < 3:
            raise ValueError("max_tokens must leave room for the delimiter tokens")
        if self.dimension < 2:
            raise ValueError("dimension must be at least 2")
