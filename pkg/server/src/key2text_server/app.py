"""FastAPI application implementing the gateway wire contract.

Endpoints (bit-exact field names):

- ``GET  /v1/info``        -> ``{"dimension", "vocab", "model_id"}``
- ``POST /v1/embed``       -> ``{"tokens", "embeddings"}``
- ``POST /v1/next_logits`` -> ``{"logits"}``
- ``POST /v1/generate``    -> ``{"text", "score", "token_ids", "applied_config"}``
- ``GET  /healthz``        -> 200

Per-request failures return ``{"error": str}`` with an appropriate status.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .backends import build_encoder, build_generator
from .config import ServerConfig

WIRE_DEFAULTS = {
    "strategy": "greedy",
    "beam_width": 2,
    "top_k": 50,
    "top_p": 0.95,
    "temperature": 1.0,
    "repetition_penalty": 2.5,
    "length_penalty": 1.0,
    "max_length": 64,
    "seed": 0,
}
STRATEGIES = ("greedy", "beam", "top_k", "top_p", "top_p_top_k")


class BadConfig(ValueError):
    pass


_INT_FIELDS = ("beam_width", "top_k", "max_length", "seed")
_REAL_FIELDS = ("top_p", "temperature", "repetition_penalty", "length_penalty")


def resolve_decoder_config(wire: dict) -> dict:
    """Merge a request config over the defaults, rejecting anything unknown."""
    if not isinstance(wire, dict):
        raise BadConfig("config must be an object")
    unknown = set(wire) - set(WIRE_DEFAULTS)
    if unknown:
        raise BadConfig(f"unknown config keys: {sorted(unknown)}")
    merged = {**WIRE_DEFAULTS, **wire}
    for key in _INT_FIELDS:
        if not isinstance(merged[key], int) or isinstance(merged[key], bool):
            raise BadConfig(f"{key} must be an integer")
    for key in _REAL_FIELDS:
        if not isinstance(merged[key], (int, float)) or isinstance(merged[key], bool):
            raise BadConfig(f"{key} must be a number")
        merged[key] = float(merged[key])
    if merged["strategy"] not in STRATEGIES:
        raise BadConfig(f"unknown strategy {merged['strategy']!r}")
    if merged["beam_width"] < 1 or merged["top_k"] < 1 or merged["max_length"] < 1:
        raise BadConfig("beam_width, top_k and max_length must be at least 1")
    if not 0.0 < merged["top_p"] <= 1.0:
        raise BadConfig("top_p must lie in (0, 1]")
    if merged["temperature"] <= 0.0:
        raise BadConfig("temperature must be positive")
    if merged["repetition_penalty"] < 1.0:
        raise BadConfig("repetition_penalty must be at least 1")
    return merged


class EmbedRequest(BaseModel):
    text: str


class NextLogitsRequest(BaseModel):
    prefix_ids: list[int]
    keywords: list[str] = []


class GenerateRequest(BaseModel):
    keywords: list[str]
    config: dict = {}


def create_app(config: ServerConfig) -> FastAPI:
    encoder = build_encoder(config)
    generator = build_generator(config)
    app = FastAPI(title="key2text model server")

    @app.exception_handler(RequestValidationError)
    async def _invalid_request(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc.errors()[:1])})

    @app.exception_handler(BadConfig)
    async def _bad_config(request: Request, exc: BadConfig):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(Exception)
    async def _internal(request: Request, exc: Exception):
        return JSONResponse(status_code=500, content={"error": str(exc)})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/v1/info")
    def info():
        return {
            "dimension": encoder.dimension,
            "vocab": list(generator.vocabulary),
            "model_id": f"{encoder.model_id}+{generator.model_id}",
        }

    @app.post("/v1/embed")
    def embed(request: EmbedRequest):
        tokens, vectors = encoder.encode(request.text)
        return {
            "tokens": tokens,
            "embeddings": [[float(v) for v in row] for row in vectors],
        }

    @app.post("/v1/next_logits")
    def next_logits(request: NextLogitsRequest):
        logits = generator.next_logits(request.prefix_ids, request.keywords)
        return {"logits": [float(v) for v in logits]}

    @app.post("/v1/generate")
    def generate(request: GenerateRequest):
        resolved = resolve_decoder_config(request.config)
        result = generator.generate(request.keywords, resolved)
        # Echo the caller's config verbatim so clients can verify application.
        result["applied_config"] = request.config
        return result

    return app
