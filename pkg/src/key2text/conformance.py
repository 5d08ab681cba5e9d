"""Protocol conformance suite for model servers.

Exercises a server strictly over HTTP against the gateway wire contract, so
any conforming implementation (the in-repo scripted fake, the reference
server, or a production deployment) can be validated with the same fixtures.
"""

from __future__ import annotations

from dataclasses import dataclass

from .decoding import DecoderConfig, Strategy
from .errors import GatewayClientError
from .gateway import GatewayClient, GatewayConfig

# Short Bangla sentences used as embed fixtures.
SAMPLE_TEXTS = (
    "গতকাল শুক্রবার মেলা জমজমাট হয়েছে।",
    "খুবই ধর্মপ্রাণ যশোদাবেন একেবারে সাধারণ জীবন যাপনে অভ্যস্ত।",
    "শীতের আগে সেই সম্ভাবনা কম।",
    "তারা কোত্থেকে পেল এসব বানোয়াট খবর?",
    "হাওরের শান্ত জলে আপন মনে সাঁতার কাটে পানকৌড়ি।",
    "এমনকি নির্যাতিত ছাত্রীও কোনো বক্তব্য দেয়নি।",
    "গ্রামের সহজ-সরল ছেলেটা ঢাকায় আসে।",
    "গত সপ্তাহ থেকে হাসপাতালে রোগীর সংখ্যা বাড়ছে।",
    "গ্রামের একমাত্র শিক্ষক তিনি।",
    "আজ আপনার প্রশ্নগুলোর উত্তর পাবেন।",
    "আজ সন্ধ্যার মধ্যে হয়তো স্বাভাবিকভাবে জবাব পাওয়া যাবে।",
    "তাই সে কাজটি করেনি।",
    "নববর্ষ শুরু।",
    "শুভ নববর্ষ।",
    "পুলিশ আসবে।",
    "এবার ব্যতিক্রম।",
    "গতকাল শনিবার।",
    "আজকে প্রশ্নের উত্তর দাও।",
    "মোর কড়ির ভাগ দেও।",
    "শীতের আগে এ সম্ভাবনা কম।",
)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


def _check(name: str, condition: bool, detail: str = "") -> Check:
    return Check(name, bool(condition), "" if condition else detail)


def _conditioning_keywords(vocab: list[str]) -> list[str]:
    words = [t for t in vocab if not (t.startswith("[") and t.endswith("]"))]
    return words[:2] if words else []


def run_conformance(
    base_url: str,
    sample_texts: tuple[str, ...] = SAMPLE_TEXTS,
    timeout_ms: int = 30_000,
) -> list[Check]:
    """Run every protocol check against a live server; never raises on a
    failing check, only on transport-level errors."""
    client = GatewayClient(GatewayConfig(base_url=base_url, timeout_ms=timeout_ms))
    checks: list[Check] = []

    info = client.info()
    dimension = info["dimension"]
    vocab = info["vocab"]
    checks.append(
        _check(
            "info_shape",
            isinstance(dimension, int)
            and dimension > 0
            and isinstance(vocab, list)
            and all(isinstance(t, str) for t in vocab)
            and isinstance(info["model_id"], str),
            f"malformed /v1/info: {info!r}",
        )
    )

    count_failures = []
    dim_failures = []
    for text in sample_texts:
        body = client.request_json("POST", "/v1/embed", {"text": text})
        tokens, embeddings = body.get("tokens"), body.get("embeddings")
        if not isinstance(tokens, list) or not isinstance(embeddings, list) or len(
            tokens
        ) != len(embeddings):
            count_failures.append(text)
            continue
        if any(len(vec) != dimension for vec in embeddings):
            dim_failures.append(text)
    checks.append(
        _check(
            "embed_token_embedding_counts_agree",
            not count_failures,
            f"{len(count_failures)} sample text(s) with mismatched counts",
        )
    )
    checks.append(
        _check(
            "embed_dimension_matches_info",
            not dim_failures,
            f"{len(dim_failures)} sample text(s) with wrong vector length",
        )
    )

    first = client.request_json("POST", "/v1/embed", {"text": sample_texts[0]})
    second = client.request_json("POST", "/v1/embed", {"text": sample_texts[0]})
    checks.append(
        _check("embed_deterministic", first == second, "same text embedded differently")
    )

    body = client.request_json(
        "POST", "/v1/next_logits", {"prefix_ids": [], "keywords": []}
    )
    logits = body.get("logits")
    checks.append(
        _check(
            "next_logits_vocabulary_length",
            isinstance(logits, list)
            and len(logits) == len(vocab)
            and all(isinstance(v, (int, float)) for v in logits),
            f"expected {len(vocab)} finite logits",
        )
    )

    config = DecoderConfig(strategy=Strategy.GREEDY, seed=7).to_wire()
    keywords = _conditioning_keywords(vocab)
    payload = {"keywords": keywords, "config": config}
    gen_first = client.request_json("POST", "/v1/generate", payload)
    gen_second = client.request_json("POST", "/v1/generate", payload)
    checks.append(
        _check(
            "generate_shape",
            isinstance(gen_first.get("text"), str)
            and isinstance(gen_first.get("score"), (int, float)),
            f"malformed /v1/generate response: {gen_first!r}",
        )
    )
    checks.append(
        _check(
            "generate_echoes_applied_config",
            gen_first.get("applied_config") == config,
            f"applied_config {gen_first.get('applied_config')!r} != sent {config!r}",
        )
    )
    checks.append(
        _check(
            "generate_deterministic_greedy",
            gen_first.get("text") == gen_second.get("text")
            and gen_first.get("score") == gen_second.get("score"),
            "fixed-seed greedy generation differed across calls",
        )
    )

    bad_config = dict(config, strategy="bogus")
    try:
        client.request_json(
            "POST", "/v1/generate", {"keywords": keywords, "config": bad_config}
        )
        checks.append(Check("generate_rejects_unknown_strategy", False, "no 400 returned"))
    except GatewayClientError as exc:
        checks.append(
            _check(
                "generate_rejects_unknown_strategy",
                exc.status == 400,
                f"expected HTTP 400, got {exc.status}",
            )
        )
    return checks


def assert_conformance(base_url: str, **kwargs) -> list[Check]:
    """Run the suite and raise with a readable summary if anything failed."""
    checks = run_conformance(base_url, **kwargs)
    failed = [c for c in checks if not c.passed]
    if failed:
        summary = "; ".join(f"{c.name}: {c.detail}" for c in failed)
        raise AssertionError(f"conformance failures: {summary}")
    return checks
