"""Model backends: a deterministic reference pair and transformers wrappers.

The reference backends are self-contained so the server can run (and be
conformance-tested) without downloading weights. The transformers backends
wrap real checkpoints: the encoder returns last-hidden-state rows per token,
the generator maps decoding parameters onto ``model.generate``.
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .config import ServerConfig

PAD, BOS, EOS = "[PAD]", "[BOS]", "[EOS]"
CLS, SEP = "[CLS]", "[SEP]"

# Fallback training sentences for the reference generator when no corpus
# file is configured.
BUILTIN_CORPUS = (
    "গতকাল শুক্রবার মেলা জমজমাট হয়েছে",
    "শীতের আগে সেই সম্ভাবনা কম",
    "গ্রামের ছেলেটা ঢাকায় আসে",
    "পুলিশ আসবে",
    "আজ প্রশ্নগুলোর উত্তর পাবেন",
    "নববর্ষ শুরু",
    "হাসপাতালে রোগীর সংখ্যা বাড়ছে",
    "গ্রামের একমাত্র শিক্ষক তিনি",
)


class Encoder(Protocol):
    dimension: int
    model_id: str

    def encode(self, text: str) -> tuple[list[str], np.ndarray]: ...


class Generator(Protocol):
    vocabulary: tuple[str, ...]
    model_id: str

    def next_logits(self, prefix_ids: Sequence[int], keywords: Sequence[str]) -> np.ndarray: ...

    def generate(self, keywords: Sequence[str], config: dict) -> dict: ...


def _hash_vector(seed: int, dimension: int, token: str) -> np.ndarray:
    key = f"{seed}\x1f{token}".encode("utf-8")
    out = np.empty(dimension, dtype=np.float64)
    filled = block = 0
    while filled < dimension:
        digest = hashlib.sha256(key + b"\x1f" + str(block).encode()).digest()
        ints = struct.unpack(">8I", digest)
        take = min(8, dimension - filled)
        out[filled:filled + take] = [v / 2147483648.0 - 1.0 for v in ints[:take]]
        filled += take
        block += 1
    norm = float(np.linalg.norm(out))
    return out / (norm if norm else 1.0)


class ReferenceEncoder:
    """Deterministic tokenizer + keyed-hash embeddings.

    Words longer than ``piece_len`` characters split into ``##`` continuation
    pieces, the stream is wrapped in [CLS]/[SEP], and input is truncated at
    ``max_tokens`` tokens.
    """

    def __init__(self, dimension: int, seed: int, max_tokens: int, piece_len: int = 4):
        self.dimension = dimension
        self.model_id = "reference-encoder"
        self._seed = seed
        self._max_tokens = max_tokens
        self._piece_len = piece_len
        self._cache: dict[str, np.ndarray] = {}

    def _pieces(self, word: str) -> list[str]:
        n = self._piece_len
        if len(word) <= n:
            return [word]
        return [word[:n]] + ["##" + word[i:i + n] for i in range(n, len(word), n)]

    def _vector(self, token: str) -> np.ndarray:
        if token not in self._cache:
            self._cache[token] = _hash_vector(self._seed, self.dimension, token)
        return self._cache[token]

    def encode(self, text: str) -> tuple[list[str], np.ndarray]:
        pieces: list[str] = []
        for word in text.split():
            pieces.extend(self._pieces(word))
        tokens = [CLS, *pieces[: self._max_tokens - 2], SEP]
        vectors = np.stack([self._vector(t) for t in tokens])
        return tokens, vectors


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    exp = np.exp(shifted)
    return exp / exp.sum()


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    return shifted - np.log(np.exp(shifted).sum())


class ReferenceGenerator:
    """Additive-smoothed bigram generator with a complete decoding loop.

    Honors every decoding parameter on the wire: strategy, beam width, top-k,
    top-p, temperature, repetition penalty, length penalty, max length, and
    seed. Deterministic for a given request.
    """

    _FLOOR = -50.0

    def __init__(
        self,
        corpus: Sequence[str],
        smoothing: float,
        keyword_bonus: float,
    ):
        words = sorted({w for text in corpus for w in text.split()})
        if not words:
            raise ValueError("generator corpus contains no words")
        self.vocabulary = (PAD, BOS, EOS, *words)
        self.model_id = "reference-generator"
        self._smoothing = smoothing
        self._keyword_bonus = keyword_bonus
        self._index = {t: i for i, t in enumerate(self.vocabulary)}
        size = len(self.vocabulary)
        self._counts = np.zeros((size, size), dtype=np.float64)
        for text in corpus:
            ids = [self._index[BOS], *(self._index[w] for w in text.split()), self._index[EOS]]
            for prev, nxt in zip(ids, ids[1:]):
                self._counts[prev, nxt] += 1
        self._emittable = np.ones(size, dtype=bool)
        self._emittable[[self._index[PAD], self._index[BOS]]] = False

    @property
    def bos_id(self) -> int:
        return self._index[BOS]

    @property
    def eos_id(self) -> int:
        return self._index[EOS]

    def next_logits(self, prefix_ids: Sequence[int], keywords: Sequence[str]) -> np.ndarray:
        prev = prefix_ids[-1] if len(prefix_ids) else self.bos_id
        row = self._counts[prev]
        total = row[self._emittable].sum() + self._smoothing * self._emittable.sum()
        logits = np.full(len(self.vocabulary), self._FLOOR)
        logits[self._emittable] = np.log((row[self._emittable] + self._smoothing) / total)
        if self._keyword_bonus:
            emitted = set(prefix_ids)
            for keyword in keywords:
                for token in keyword.split():
                    tid = self._index.get(token)
                    if tid is not None and tid not in emitted:
                        logits[tid] += self._keyword_bonus
        return logits

    def _step_logprobs(self, prefix: list[int], keywords, config: dict) -> np.ndarray:
        logits = self.next_logits(prefix, keywords) / config["temperature"]
        penalty = config["repetition_penalty"]
        if penalty != 1.0:
            for tid in set(prefix):
                logits[tid] = logits[tid] / penalty if logits[tid] > 0 else logits[tid] * penalty
        return _log_softmax(logits)

    def _filter(self, probs: np.ndarray, config: dict) -> np.ndarray:
        strategy = config["strategy"]
        order = np.argsort(-probs, kind="stable")
        keep = np.zeros(probs.size, dtype=bool)
        if strategy in ("top_k", "top_p_top_k"):
            keep_k = np.zeros(probs.size, dtype=bool)
            keep_k[order[: min(config["top_k"], probs.size)]] = True
        else:
            keep_k = np.ones(probs.size, dtype=bool)
        if strategy in ("top_p", "top_p_top_k"):
            cumulative = np.cumsum(probs[order])
            cut = int(np.searchsorted(cumulative, config["top_p"] - 1e-12, "left")) + 1
            keep_p = np.zeros(probs.size, dtype=bool)
            keep_p[order[:cut]] = True
        else:
            keep_p = np.ones(probs.size, dtype=bool)
        keep = keep_k & keep_p
        out = np.where(keep, probs, 0.0)
        return out / out.sum()

    def _detokenize(self, ids: Sequence[int]) -> str:
        specials = {self._index[PAD], self._index[BOS], self._index[EOS]}
        return " ".join(self.vocabulary[i] for i in ids if i not in specials)

    def generate(self, keywords: Sequence[str], config: dict) -> dict:
        if config["strategy"] == "beam":
            ids, score = self._beam(keywords, config)
        else:
            ids, score = self._iterative(keywords, config)
        return {
            "text": self._detokenize(ids),
            "score": float(score),
            "token_ids": [int(i) for i in ids],
        }

    def _iterative(self, keywords, config) -> tuple[list[int], float]:
        rng = np.random.Generator(np.random.PCG64(config["seed"]))
        ids = [self.bos_id]
        score = 0.0
        for _ in range(config["max_length"]):
            logprobs = self._step_logprobs(ids, keywords, config)
            if config["strategy"] == "greedy":
                token = int(np.argmax(logprobs))
            else:
                filtered = self._filter(np.exp(logprobs), config)
                cdf = np.cumsum(filtered)
                token = min(int(np.searchsorted(cdf, rng.random(), "right")), filtered.size - 1)
                while filtered[token] == 0.0 and token > 0:
                    token -= 1
            score += float(logprobs[token])
            ids.append(token)
            if token == self.eos_id:
                break
        return ids, score

    def _beam(self, keywords, config) -> tuple[list[int], float]:
        width = config["beam_width"]
        live = [((self.bos_id,), 0.0)]
        done: list[tuple[tuple[int, ...], float]] = []
        for _ in range(config["max_length"]):
            if not live:
                break
            candidates = []
            for h_idx, (ids, score) in enumerate(live):
                logprobs = self._step_logprobs(list(ids), keywords, config)
                candidates.extend(
                    (score + float(logprobs[tok]), h_idx, tok)
                    for tok in range(logprobs.size)
                )
            candidates.sort(key=lambda c: (-c[0], c[1], c[2]))
            next_live = []
            for score, h_idx, tok in candidates[:width]:
                ids = live[h_idx][0] + (tok,)
                (done if tok == self.eos_id else next_live).append((ids, score))
            live = next_live
        pool = done + live
        alpha = config["length_penalty"]
        best = min(pool, key=lambda h: (-(h[1] / (len(h[0]) - 1) ** alpha), h[0]))
        return list(best[0]), best[1]


def _load_corpus(config: ServerConfig) -> Sequence[str]:
    if config.corpus_path is None:
        return BUILTIN_CORPUS
    import json

    texts = []
    for line in Path(config.corpus_path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            texts.append(json.loads(line)["text"])
    if not texts:
        raise ValueError(f"corpus file {config.corpus_path} holds no texts")
    return texts


class TransformersEncoder:
    """Pretrained encoder: per-token last-hidden-state rows."""

    def __init__(self, model_id: str, device: str, max_tokens: int):
        import torch
        from transformers import AutoModel, AutoTokenizer

        self._torch = torch
        self._tokenizer = AutoTokenizer.from_pretrained(model_id)
        self._model = AutoModel.from_pretrained(model_id).to(device).eval()
        self._device = device
        self._max_tokens = max_tokens
        self.dimension = int(self._model.config.hidden_size)
        self.model_id = model_id

    def encode(self, text: str) -> tuple[list[str], np.ndarray]:
        encoded = self._tokenizer(
            text, truncation=True, max_length=self._max_tokens, return_tensors="pt"
        ).to(self._device)
        with self._torch.no_grad():
            hidden = self._model(**encoded).last_hidden_state[0]
        tokens = self._tokenizer.convert_ids_to_tokens(encoded["input_ids"][0])
        return list(tokens), hidden.cpu().numpy().astype(np.float64)


class TransformersGenerator:
    """Pretrained seq2seq generator; decoding parameters map onto generate()."""

    def __init__(self, model_id: str, device: str, max_tokens: int):
        import torch
        from transformers import AutoModelForSeq2SeqLM, AutoTokenizer

        self._torch = torch
        self._tokenizer = AutoTokenizer.from_pretrained(model_id)
        self._model = AutoModelForSeq2SeqLM.from_pretrained(model_id).to(device).eval()
        self._device = device
        self._max_tokens = max_tokens
        self.vocabulary = tuple(
            self._tokenizer.convert_ids_to_tokens(i)
            for i in range(self._model.config.vocab_size)
        )
        self.model_id = model_id

    def _encoder_inputs(self, keywords: Sequence[str]):
        return self._tokenizer(
            ", ".join(keywords),
            truncation=True,
            max_length=self._max_tokens,
            return_tensors="pt",
        ).to(self._device)

    def next_logits(self, prefix_ids: Sequence[int], keywords: Sequence[str]) -> np.ndarray:
        import torch

        inputs = self._encoder_inputs(keywords)
        start = self._model.config.decoder_start_token_id
        decoder_ids = torch.tensor([[start, *prefix_ids]], device=self._device)
        with torch.no_grad():
            logits = self._model(**inputs, decoder_input_ids=decoder_ids).logits[0, -1]
        return logits.cpu().numpy().astype(np.float64)

    def generate(self, keywords: Sequence[str], config: dict) -> dict:
        self._torch.manual_seed(config["seed"])
        sampling = config["strategy"] in ("top_k", "top_p", "top_p_top_k")
        beam = config["strategy"] == "beam"
        kwargs = {
            "max_new_tokens": config["max_length"],
            "temperature": config["temperature"],
            "repetition_penalty": config["repetition_penalty"],
            "length_penalty": config["length_penalty"],
            "do_sample": sampling,
            "num_beams": config["beam_width"] if beam else 1,
            "output_scores": True,
            "return_dict_in_generate": True,
        }
        if config["strategy"] in ("top_k", "top_p_top_k"):
            kwargs["top_k"] = config["top_k"]
        if config["strategy"] in ("top_p", "top_p_top_k"):
            kwargs["top_p"] = config["top_p"]
        with self._torch.no_grad():
            output = self._model.generate(**self._encoder_inputs(keywords), **kwargs)
        ids = output.sequences[0]
        text = self._tokenizer.decode(ids, skip_special_tokens=True)
        if beam:
            scores = self._model.compute_transition_scores(
                output.sequences, output.scores, output.beam_indices,
                normalize_logits=True,
            )
        else:
            scores = self._model.compute_transition_scores(
                output.sequences, output.scores, normalize_logits=True
            )
        return {
            "text": text,
            "score": float(scores[0].sum().item()),
            "token_ids": [int(i) for i in ids],
        }


def build_encoder(config: ServerConfig) -> Encoder:
    if config.encoder == "reference":
        return ReferenceEncoder(config.dimension, config.seed, config.max_tokens)
    if config.encoder.startswith("hf:"):
        return TransformersEncoder(config.encoder[3:], config.device, config.max_tokens)
    raise ValueError(f"unknown encoder spec {config.encoder!r}")


def build_generator(config: ServerConfig) -> Generator:
    if config.generator == "reference":
        return ReferenceGenerator(
            _load_corpus(config), config.smoothing, config.keyword_bonus
        )
    if config.generator.startswith("hf:"):
        return TransformersGenerator(config.generator[3:], config.device, config.max_tokens)
    raise ValueError(f"unknown generator spec {config.generator!r}")
