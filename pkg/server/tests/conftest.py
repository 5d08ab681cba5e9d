"""Spin the reference server on an ephemeral port for the whole test session."""

from __future__ import annotations

import threading
import time

import pytest
import uvicorn

from key2text_server.app import create_app
from key2text_server.config import ServerConfig


@pytest.fixture(scope="session")
def server_config() -> ServerConfig:
    return ServerConfig(
        encoder="reference", generator="reference", dimension=32, seed=13
    )


@pytest.fixture(scope="session")
def server_url(server_config):
    app = create_app(server_config)
    uv_config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning")
    server = uvicorn.Server(uv_config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 10
    while not server.started:
        if time.monotonic() > deadline:
            raise RuntimeError("server failed to start")
        time.sleep(0.01)
    port = server.servers[0].sockets[0].getsockname()[1]
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5)
