import json

import pytest

from key2text.corpus import Document, KeywordSet, KeywordTextPair, parse_pairs
from key2text.embedding import HashEmbeddingProvider
from key2text.errors import GatewayError, Key2TextError
from key2text.extraction import ExtractorKind
from key2text.pipeline import (
    DEFAULT_SPLIT_RATIO,
    ExtractorSetup,
    SplitSpec,
    build_pairs,
    compute_stats,
    split_corpus,
    split_paths,
)


def _docs(n, prefix="d", words=3):
    return [
        Document(f"{prefix}{i}", " ".join(f"tok{i}x{j}" for j in range(words)))
        for i in range(n)
    ]


class TestSplitCorpus:
    def test_default_ratio_26_docs(self):
        split = split_corpus(_docs(26), SplitSpec(DEFAULT_SPLIT_RATIO, seed=4))
        assert (len(split.train), len(split.validation), len(split.test)) == (20, 5, 1)

    def test_all_train(self):
        split = split_corpus(_docs(9), SplitSpec((1.0, 0.0, 0.0), seed=1))
        assert len(split.train) == 9
        assert split.validation == () and split.test == ()

    def test_same_seed_reproducible(self):
        docs = _docs(40)
        a = split_corpus(docs, SplitSpec(seed=11))
        b = split_corpus(docs, SplitSpec(seed=11))
        assert a == b

    def test_different_seed_differs(self):
        docs = _docs(40)
        a = split_corpus(docs, SplitSpec(seed=11))
        b = split_corpus(docs, SplitSpec(seed=12))
        assert a != b

    def test_disjoint_and_exhaustive(self):
        docs = _docs(31)
        split = split_corpus(docs, SplitSpec(seed=2))
        ids = [d.id for part in (split.train, split.validation, split.test) for d in part]
        assert sorted(ids) == sorted(d.id for d in docs)

    def test_duplicate_ids_rejected(self):
        docs = [Document("same", "a"), Document("same", "b")]
        with pytest.raises(ValueError):
            split_corpus(docs, SplitSpec())

    def test_fractions_validated(self):
        with pytest.raises(ValueError):
            SplitSpec((0.5, 0.4, 0.2))

    def test_remainder_goes_to_train(self):
        split = split_corpus(_docs(7), SplitSpec((0.5, 0.25, 0.25), seed=0))
        # floors: validation 1, test 1, remainder -> train = 5
        assert (len(split.train), len(split.validation), len(split.test)) == (5, 1, 1)


def _setup(provider=None):
    return ExtractorSetup(
        kind=ExtractorKind.MEAN_COSINE,
        provider=provider or HashEmbeddingProvider(seed=13, dimension=8),
    )


class TestBuildPairs:
    def test_pairs_contain_document_words(self, tmp_path):
        split = split_corpus(_docs(3, words=6), SplitSpec((1.0, 0.0, 0.0), seed=0))
        report = build_pairs(split, _setup(), tmp_path)
        assert report.pairs == 3 and report.rejects == 0
        pairs = parse_pairs((tmp_path / "train.jsonl").open("rb"))
        assert len(pairs) == 3
        for pair in pairs:
            assert set(pair.keywords) <= set(pair.text.split())

    def test_rejected_document_logged_not_dropped(self, tmp_path):
        docs = [Document("good", "one two three"), Document("bad", "@#$%")]
        split = split_corpus(docs, SplitSpec((1.0, 0.0, 0.0), seed=0))
        report = build_pairs(split, _setup(), tmp_path)
        assert report.pairs == 1 and report.rejects == 1
        rejects = [
            json.loads(line)
            for line in (tmp_path / "train.rejects.jsonl").read_text().splitlines()
        ]
        assert rejects[0]["id"] == "bad"
        assert "empty" in rejects[0]["reason"]
        pair_ids = {p.id for p in parse_pairs((tmp_path / "train.jsonl").open("rb"))}
        assert "bad" not in pair_ids

    def test_pair_plus_reject_counts_match_documents(self, tmp_path):
        docs = _docs(5) + [Document("empty1", "!!"), Document("empty2", "@@")]
        split = split_corpus(docs, SplitSpec(seed=3))
        report = build_pairs(split, _setup(), tmp_path)
        for name, part in report.splits.items():
            assert part.pairs + part.rejects == part.documents

    def test_interrupted_resume_byte_identical(self, tmp_path):
        docs = _docs(6, words=5)
        split = split_corpus(docs, SplitSpec((1.0, 0.0, 0.0), seed=9))

        class OutageProvider(HashEmbeddingProvider):
            def __init__(self, fail_at_call):
                super().__init__(seed=13, dimension=8)
                self.calls = 0
                self.fail_at_call = fail_at_call

            def embed(self, text):
                self.calls += 1
                if self.fail_at_call is not None and self.calls == self.fail_at_call:
                    raise GatewayError("simulated outage", attempts=3)
                return super().embed(text)

        uninterrupted = tmp_path / "full"
        build_pairs(split, _setup(), uninterrupted)

        resumed = tmp_path / "resumed"
        with pytest.raises(GatewayError):
            build_pairs(split, _setup(OutageProvider(fail_at_call=3)), resumed)
        progress = (resumed / "train.progress").read_text()
        assert len(progress.splitlines()) == 2  # two documents durably done
        build_pairs(split, _setup(OutageProvider(fail_at_call=None)), resumed, resume=True)

        for name in ("train", "validation", "test"):
            assert (resumed / f"{name}.jsonl").read_bytes() == (
                uninterrupted / f"{name}.jsonl"
            ).read_bytes()

    def test_parallel_jobs_byte_identical(self, tmp_path):
        docs = _docs(12, words=7)
        split = split_corpus(docs, SplitSpec(seed=6))
        serial_dir, parallel_dir = tmp_path / "serial", tmp_path / "parallel"
        build_pairs(split, _setup(), serial_dir, jobs=1)
        build_pairs(split, _setup(), parallel_dir, jobs=4)
        for name in ("train", "validation", "test"):
            assert (serial_dir / f"{name}.jsonl").read_bytes() == (
                parallel_dir / f"{name}.jsonl"
            ).read_bytes()
            assert (serial_dir / f"{name}.progress").read_bytes() == (
                parallel_dir / f"{name}.progress"
            ).read_bytes()

    def test_parallel_outage_still_aborts_resumably(self, tmp_path):
        docs = _docs(8, words=5)
        split = split_corpus(docs, SplitSpec((1.0, 0.0, 0.0), seed=1))

        class FlakyProvider(HashEmbeddingProvider):
            def __init__(self):
                super().__init__(seed=13, dimension=8)
                self.calls = 0

            def embed(self, text):
                self.calls += 1
                if self.calls == 4:
                    raise GatewayError("burst outage", attempts=1)
                return super().embed(text)

        out = tmp_path / "out"
        with pytest.raises(GatewayError):
            build_pairs(split, _setup(FlakyProvider()), out, jobs=3)
        # Whatever was durably written must be a prefix of the full build.
        build_pairs(split, _setup(), out, resume=True, jobs=3)
        full = tmp_path / "full"
        build_pairs(split, _setup(), full)
        assert (out / "train.jsonl").read_bytes() == (full / "train.jsonl").read_bytes()

    def test_fresh_run_clears_stale_outputs(self, tmp_path):
        split = split_corpus(_docs(2), SplitSpec((1.0, 0.0, 0.0), seed=0))
        build_pairs(split, _setup(), tmp_path)
        first = (tmp_path / "train.jsonl").read_bytes()
        build_pairs(split, _setup(), tmp_path)  # no resume: same bytes, not doubled
        assert (tmp_path / "train.jsonl").read_bytes() == first

    def test_split_paths_naming(self, tmp_path):
        pairs, rejects, progress = split_paths(tmp_path, "validation")
        assert pairs.name == "validation.jsonl"
        assert rejects.name == "validation.rejects.jsonl"
        assert progress.name == "validation.progress"


def _pair(id_, keywords, text):
    return KeywordTextPair(id=id_, keywords=KeywordSet(keywords), text=text)


class TestComputeStats:
    def test_hand_counted_fixture(self):
        pairs = [
            _pair("a", ["k1", "k2"], "w1 w2 w3 w4 w5"),
            _pair("b", ["k1", "k3", "k4", "k5"], "v1 v2 v3 v4 v5"),
        ]
        stats = compute_stats(pairs)
        assert stats.n_texts == 2
        assert stats.mean_keywords_per_text == pytest.approx(3.0)
        assert stats.total_words == 10
        assert stats.total_keywords == 6
        assert stats.keyword_to_text_length_ratio == pytest.approx(0.6)
        assert stats.max_keywords_per_text == 4
        assert stats.max_words_per_text == 5

    def test_single_pair_max_equals_mean(self):
        stats = compute_stats([_pair("a", ["x", "y"], "p q r")])
        assert stats.max_keywords_per_text == stats.mean_keywords_per_text == 2
        assert stats.max_words_per_text == stats.mean_words_per_text == 3

    def test_schema_fields(self):
        stats = compute_stats([_pair("a", ["x"], "p q")]).to_dict()
        assert list(stats.keys()) == [
            "n_texts",
            "max_keywords_per_text",
            "mean_keywords_per_text",
            "max_words_per_text",
            "mean_words_per_text",
            "total_words",
            "total_keywords",
            "keyword_to_text_length_ratio",
            "top_keywords",
        ]

    def test_top_keywords_count_then_lexicographic(self):
        pairs = [
            _pair("a", ["beta", "alpha"], "t1 t2"),
            _pair("b", ["beta", "gamma"], "t3 t4"),
            _pair("c", ["alpha"], "t5 t6"),
        ]
        stats = compute_stats(pairs, top_n=3)
        assert stats.top_keywords == (("alpha", 2), ("beta", 2), ("gamma", 1))

    def test_empty_rejected(self):
        with pytest.raises(Key2TextError):
            compute_stats([])

    def test_matches_independent_recount(self):
        import numpy as np

        rng = np.random.default_rng(77)
        pairs = []
        for i in range(30):
            n_words = int(rng.integers(1, 15))
            words = [f"t{int(rng.integers(0, 40))}" for _ in range(n_words)]
            n_kw = int(rng.integers(1, n_words + 1))
            kws = list(dict.fromkeys(words))[:n_kw]
            pairs.append(_pair(f"p{i}", kws, " ".join(words)))
        stats = compute_stats(pairs)
        # straight recount
        words_total = sum(len(p.text.split()) for p in pairs)
        kw_total = sum(len(p.keywords) for p in pairs)
        assert stats.total_words == words_total
        assert stats.total_keywords == kw_total
        assert stats.mean_words_per_text == pytest.approx(words_total / 30)
        assert stats.keyword_to_text_length_ratio == pytest.approx(kw_total / words_total)
