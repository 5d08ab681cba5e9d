"""Shared fixtures: deterministic providers, toy corpora, and a scripted
in-process model server implementing the gateway wire contract."""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from key2text.corpus import Document
from key2text.decoding import DecoderConfig, decode, toy_bigram_model
from key2text.embedding import HashEmbeddingProvider


def pytest_configure(config):
    config._suite_started = time.monotonic()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    elapsed = time.monotonic() - config._suite_started
    verdict = "PASS" if elapsed < 120.0 else "FAIL"
    terminalreporter.write_line(
        f"ACCEPTANCE suite_runtime_under_120s: {verdict} ({elapsed:.1f}s)"
    )


@pytest.fixture
def provider() -> HashEmbeddingProvider:
    return HashEmbeddingProvider(seed=13, dimension=16)


@pytest.fixture
def toy_corpus() -> list[Document]:
    texts = [
        "the cat sat on the mat",
        "the dog sat on the rug",
        "a cat and a dog met",
        "the mat was warm",
    ]
    return [Document(f"d{i}", t) for i, t in enumerate(texts)]


@pytest.fixture
def toy_model(toy_corpus):
    return toy_bigram_model(toy_corpus, smoothing=0.1, keyword_bonus=4.0)


class _FakeState:
    """Mutable knobs for the scripted server."""

    def __init__(self, provider, model):
        self.provider = provider
        self.model = model
        self.fail_statuses: list[int] = []  # consumed one per request
        self.requests_seen = 0


class _FakeHandler(BaseHTTPRequestHandler):
    state: _FakeState
    protocol_version = "HTTP/1.1"  # keep-alive makes the suite much faster

    def log_message(self, *args):  # keep test output quiet
        pass

    def _send(self, status: int, body: dict) -> None:
        payload = json.dumps(body).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def _consume_failure(self) -> bool:
        self.state.requests_seen += 1
        if self.state.fail_statuses:
            status = self.state.fail_statuses.pop(0)
            self._send(status, {"error": f"scripted failure {status}"})
            return True
        return False

    def do_GET(self):
        if self._consume_failure():
            return
        if self.path == "/v1/info":
            self._send(
                200,
                {
                    "dimension": self.state.provider.dimension,
                    "vocab": list(self.state.model.vocabulary),
                    "model_id": "scripted-fake",
                },
            )
        else:
            self._send(404, {"error": "not found"})

    def do_POST(self):
        # Drain the body before any scripted failure, or keep-alive breaks.
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length)
        if self._consume_failure():
            return
        try:
            payload = json.loads(raw)
        except json.JSONDecodeError:
            self._send(400, {"error": "invalid JSON"})
            return
        if self.path == "/v1/embed":
            result = self.state.provider.embed(payload.get("text", ""))
            self._send(
                200,
                {
                    "tokens": [t.token for t in result.tokens],
                    "embeddings": [list(map(float, t.vector)) for t in result.tokens],
                },
            )
        elif self.path == "/v1/next_logits":
            from key2text.corpus import KeywordSet

            keywords = KeywordSet(dict.fromkeys(payload.get("keywords", [])))
            logits = self.state.model.next_logits(payload.get("prefix_ids", []), keywords)
            self._send(200, {"logits": [float(v) for v in logits]})
        elif self.path == "/v1/generate":
            from key2text.corpus import KeywordSet

            try:
                config = DecoderConfig.from_wire(payload["config"])
            except (KeyError, TypeError, ValueError) as exc:
                self._send(400, {"error": str(exc)})
                return
            keywords = KeywordSet(dict.fromkeys(payload.get("keywords", [])))
            result = decode(self.state.model, keywords, config)
            self._send(
                200,
                {
                    "text": result.text,
                    "score": result.score,
                    "token_ids": list(result.token_ids),
                    "missing_keywords": list(result.missing_keywords),
                    "applied_config": payload["config"],
                },
            )
        else:
            self._send(404, {"error": "not found"})


class FakeServer:
    def __init__(self, provider, model):
        self.state = _FakeState(provider, model)
        handler = type("Handler", (_FakeHandler,), {"state": self.state})
        self._httpd = ThreadingHTTPServer(("127.0.0.1", 0), handler)
        self._thread = threading.Thread(
            target=lambda: self._httpd.serve_forever(poll_interval=0.02), daemon=True
        )
        self._thread.start()
        self.base_url = f"http://127.0.0.1:{self._httpd.server_address[1]}"

    def fail_next(self, *statuses: int) -> None:
        self.state.fail_statuses.extend(statuses)

    def close(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()


@pytest.fixture
def fake_server(provider, toy_model):
    server = FakeServer(provider, toy_model)
    yield server
    server.close()
