"""Command-line launcher: parse flags, load models, serve until stopped."""

from __future__ import annotations

import argparse
import sys

import uvicorn

from .app import create_app
from .config import DEFAULT_ENCODER, DEFAULT_GENERATOR, ServerConfig


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="key2text-server", description=__doc__)
    parser.add_argument("--encoder", default=DEFAULT_ENCODER,
                        help="'reference' or 'hf:<model-id-or-path>'")
    parser.add_argument("--generator", default=DEFAULT_GENERATOR,
                        help="'reference' or 'hf:<model-id-or-path>'")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--max-tokens", type=int, default=512,
                        help="token truncation limit (default 512)")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--dimension", type=int, default=768,
                        help="reference encoder dimension")
    parser.add_argument("--seed", type=int, default=13,
                        help="reference encoder hash seed")
    parser.add_argument("--corpus", default=None,
                        help="corpus JSONL for the reference generator")
    parser.add_argument("--smoothing", type=float, default=0.5)
    parser.add_argument("--keyword-bonus", type=float, default=4.0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = ServerConfig(
        encoder=args.encoder,
        generator=args.generator,
        device=args.device,
        max_tokens=args.max_tokens,
        port=args.port,
        host=args.host,
        dimension=args.dimension,
        seed=args.seed,
        corpus_path=args.corpus,
        smoothing=args.smoothing,
        keyword_bonus=args.keyword_bonus,
    )
    try:
        app = create_app(config)
    except Exception as exc:  # model load failure: exit non-zero with reason
        print(f"key2text-server: failed to load models: {exc}", file=sys.stderr)
        return 1
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


if __name__ == "__main__":
    sys.exit(main())
