import numpy as np
import pytest
import requests

from key2text_server.backends import ReferenceEncoder, ReferenceGenerator
from key2text_server.app import BadConfig, resolve_decoder_config


class TestReferenceEncoder:
    def test_tokens_reconstruct_words(self):
        encoder = ReferenceEncoder(dimension=16, seed=1, max_tokens=64)
        tokens, vectors = encoder.encode("অভ্যস্ত কম")
        assert tokens[0] == "[CLS]" and tokens[-1] == "[SEP]"
        body = [t[2:] if t.startswith("##") else t for t in tokens[1:-1]]
        assert "".join(body) == "অভ্যস্তকম"
        assert vectors.shape == (len(tokens), 16)

    def test_truncates_at_max_tokens(self):
        encoder = ReferenceEncoder(dimension=8, seed=1, max_tokens=6)
        tokens, _ = encoder.encode("aaaa bbbb cccc dddd eeee ffff")
        assert len(tokens) == 6

    def test_deterministic(self):
        a = ReferenceEncoder(16, 9, 64).encode("এক দুই")
        b = ReferenceEncoder(16, 9, 64).encode("এক দুই")
        assert a[0] == b[0]
        np.testing.assert_array_equal(a[1], b[1])

    def test_unit_norm(self):
        _, vectors = ReferenceEncoder(24, 3, 64).encode("কিছু শব্দ")
        np.testing.assert_allclose(np.linalg.norm(vectors, axis=1), 1.0, atol=1e-9)


def _generator():
    return ReferenceGenerator(
        ["a b c", "a b d", "c d"], smoothing=0.3, keyword_bonus=3.0
    )


class TestReferenceGenerator:
    def test_vocab_carries_markers(self):
        gen = _generator()
        assert gen.vocabulary[:3] == ("[PAD]", "[BOS]", "[EOS]")

    def test_logits_cover_vocab_and_are_finite(self):
        gen = _generator()
        logits = gen.next_logits([], [])
        assert logits.shape == (len(gen.vocabulary),)
        assert np.all(np.isfinite(logits))

    def test_greedy_deterministic(self):
        gen = _generator()
        config = dict(resolve_decoder_config({"strategy": "greedy", "seed": 4}))
        assert gen.generate(["a"], config) == gen.generate(["a"], config)

    def test_sampling_seed_reproducible(self):
        gen = _generator()
        config = resolve_decoder_config(
            {"strategy": "top_p", "top_p": 0.9, "seed": 11, "max_length": 8}
        )
        assert gen.generate(["a"], config) == gen.generate(["a"], config)

    def test_beam_respects_length_penalty_field(self):
        gen = _generator()
        short = resolve_decoder_config(
            {"strategy": "beam", "beam_width": 3, "length_penalty": 0.0}
        )
        long = resolve_decoder_config(
            {"strategy": "beam", "beam_width": 3, "length_penalty": 2.0}
        )
        assert len(gen.generate(["a"], long)["token_ids"]) >= len(
            gen.generate(["a"], short)["token_ids"]
        )

    def test_all_strategies_produce_text(self):
        gen = _generator()
        for strategy in ("greedy", "beam", "top_k", "top_p", "top_p_top_k"):
            config = resolve_decoder_config({"strategy": strategy, "max_length": 6})
            result = gen.generate(["a"], config)
            assert isinstance(result["text"], str)
            assert result["token_ids"][0] == gen.bos_id


class TestResolveDecoderConfig:
    def test_defaults_filled(self):
        resolved = resolve_decoder_config({})
        assert resolved["beam_width"] == 2
        assert resolved["top_k"] == 50
        assert resolved["top_p"] == 0.95
        assert resolved["max_length"] == 64

    def test_unknown_key_rejected(self):
        with pytest.raises(BadConfig):
            resolve_decoder_config({"beam_size": 2})

    def test_unknown_strategy_rejected(self):
        with pytest.raises(BadConfig):
            resolve_decoder_config({"strategy": "bogus"})

    def test_bounds_checked(self):
        with pytest.raises(BadConfig):
            resolve_decoder_config({"top_p": 0.0})
        with pytest.raises(BadConfig):
            resolve_decoder_config({"temperature": -1.0})

    def test_wrong_types_rejected(self):
        with pytest.raises(BadConfig):
            resolve_decoder_config({"beam_width": "2"})
        with pytest.raises(BadConfig):
            resolve_decoder_config({"top_p": "0.9"})
        with pytest.raises(BadConfig):
            resolve_decoder_config({"seed": True})


class TestLauncher:
    def test_unknown_backend_exits_nonzero(self, capsys):
        from key2text_server.__main__ import main

        assert main(["--encoder", "bogus", "--generator", "reference"]) == 1
        assert "failed to load models" in capsys.readouterr().err


class TestHttpSurface:
    def test_healthz(self, server_url):
        assert requests.get(f"{server_url}/healthz", timeout=5).status_code == 200

    def test_info_reports_true_dimension(self, server_url, server_config):
        info = requests.get(f"{server_url}/v1/info", timeout=5).json()
        assert info["dimension"] == server_config.dimension
        assert "[EOS]" in info["vocab"]

    def test_embed_counts_agree(self, server_url):
        body = requests.post(
            f"{server_url}/v1/embed", json={"text": "তিন শব্দ এখানে"}, timeout=5
        ).json()
        assert len(body["tokens"]) == len(body["embeddings"])

    def test_error_body_shape(self, server_url):
        response = requests.post(
            f"{server_url}/v1/generate",
            json={"keywords": [], "config": {"strategy": "bogus"}},
            timeout=5,
        )
        assert response.status_code == 400
        assert "error" in response.json()

    def test_malformed_request_is_400(self, server_url):
        response = requests.post(f"{server_url}/v1/embed", json={"txet": 1}, timeout=5)
        assert response.status_code == 400
        assert "error" in response.json()
