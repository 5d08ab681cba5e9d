from functools import lru_cache

import numpy as np
import pytest

from key2text.embedding import WordEmbedding
from key2text.errors import DimensionMismatchError, EvaluationError
from key2text.nlg_eval import (
    TextPairBatch,
    bertscore,
    bleu,
    bleu_sentence,
    metric_report,
    rouge1,
    rougeL,
    wer,
    wil,
)


def _batch(*pairs):
    return TextPairBatch(list(pairs))


class TestBleu:
    def test_identity(self):
        assert bleu(_batch(("a b c d", "a b c d"))) == pytest.approx(1.0)

    def test_unigram_hand_value(self):
        assert bleu(_batch(("a b d", "a b c")), max_n=1) == pytest.approx(2 / 3)

    def test_disjoint_vocab(self):
        assert bleu(_batch(("a b", "x y"))) == 0.0

    def test_short_candidates_zero_not_error(self):
        assert bleu(_batch(("a b c d e", "a")), max_n=4) == 0.0

    def test_brevity_penalty(self):
        # Candidate is a 2-word prefix of a 4-word reference: p1 = 1, BP = e^-1.
        value = bleu(_batch(("a b c d", "a b")), max_n=1)
        assert value == pytest.approx(np.exp(1 - 4 / 2), abs=1e-12)

    def test_pooled_not_averaged(self):
        # Pooling counts across the batch differs from averaging per-pair scores.
        batch = _batch(("a a a", "a a a"), ("b", "c"))
        assert bleu(batch, max_n=1) == pytest.approx(3 / 4)

    def test_sentence_variant_smoothing(self):
        # No bigram match: unsmoothed corpus BLEU is 0, smoothed sentence BLEU is not.
        assert bleu(_batch(("a b", "a c")), max_n=2) == 0.0
        assert bleu_sentence("a b", "a c", max_n=2) > 0.0


class TestRouge:
    def test_identity_both(self):
        batch = _batch(("x y z", "x y z"))
        assert rouge1(batch) == pytest.approx(1.0)
        assert rougeL(batch) == pytest.approx(1.0)

    def test_rouge_l_hand_value(self):
        assert rougeL(_batch(("a c d", "a b c d"))) == pytest.approx(0.857142857, abs=1e-6)

    def test_rouge_1_hand_value(self):
        assert rouge1(_batch(("a c d", "a b c d"))) == pytest.approx(0.857142857, abs=1e-6)

    def test_empty_candidate_scores_zero(self):
        assert rouge1(_batch(("a b", ""))) == 0.0
        assert rougeL(_batch(("a b", ""))) == 0.0

    def test_rouge_l_respects_order(self):
        # Same unigrams, reversed order: ROUGE-1 stays 1, ROUGE-L drops.
        batch = _batch(("a b c", "c b a"))
        assert rouge1(batch) == pytest.approx(1.0)
        assert rougeL(batch) < 1.0


@lru_cache(maxsize=None)
def _lev_oracle(ref: tuple, cand: tuple) -> int:
    """Independent recursive Levenshtein used to cross-check the DP."""
    if not ref:
        return len(cand)
    if not cand:
        return len(ref)
    return min(
        _lev_oracle(ref[1:], cand[1:]) + (ref[0] != cand[0]),
        _lev_oracle(ref[1:], cand) + 1,
        _lev_oracle(ref, cand[1:]) + 1,
    )


class TestWer:
    def test_identity(self):
        assert wer(_batch(("a b c", "a b c"))) == 0.0

    def test_substitution_plus_insertion(self):
        # 5-word reference, one substitution and one insertion -> 2/5.
        assert wer(_batch(("a b c d e", "a X c d e f"))) == pytest.approx(0.4)

    def test_empty_candidate_all_deletions(self):
        assert wer(_batch(("a b c d", ""))) == 1.0

    def test_can_exceed_one(self):
        assert wer(_batch(("a", "x y z"))) == pytest.approx(3.0)

    def test_empty_reference_rejected(self):
        with pytest.raises(EvaluationError):
            TextPairBatch([("", "a")])

    def test_matches_recursive_oracle_on_random_pairs(self):
        rng = np.random.default_rng(23)
        vocab = list("abcde")
        for _ in range(60):
            ref = tuple(rng.choice(vocab, size=rng.integers(1, 8)))
            cand = tuple(rng.choice(vocab, size=rng.integers(0, 8)))
            batch = _batch((" ".join(ref), " ".join(cand)))
            assert wer(batch) == pytest.approx(_lev_oracle(ref, cand) / len(ref))


class TestWil:
    def test_identity(self):
        assert wil(_batch(("a b", "a b"))) == 0.0

    def test_hand_value(self):
        # 4 reference words, 4 candidate words, 2 hits -> 1 - (2/4)(2/4).
        assert wil(_batch(("a b c d", "a b x y"))) == pytest.approx(0.75)

    def test_zero_matches(self):
        assert wil(_batch(("a b", "x y"))) == 1.0

    def test_empty_candidate(self):
        assert wil(_batch(("a b", ""))) == 1.0

    def test_in_unit_interval(self):
        rng = np.random.default_rng(31)
        vocab = list("abc")
        for _ in range(40):
            ref = " ".join(rng.choice(vocab, size=rng.integers(1, 6)))
            cand = " ".join(rng.choice(vocab, size=rng.integers(0, 9)))
            assert 0.0 <= wil(_batch((ref, cand))) <= 1.0


def _words(*vectors):
    return [WordEmbedding(f"w{i}", np.array(v, float), i) for i, v in enumerate(vectors)]


class TestBertscore:
    def test_identical_sequences(self):
        words = _words([1.0, 0.0], [0.0, 1.0])
        assert bertscore(words, words) == pytest.approx((1.0, 1.0, 1.0))

    def test_orthogonal_everywhere(self):
        p, r, f1 = bertscore(_words([1.0, 0.0]), _words([0.0, 1.0]))
        assert (p, r, f1) == (0.0, 0.0, 0.0)

    def test_half_recall_hand_value(self):
        p, r, f1 = bertscore(_words([1.0, 0.0], [0.0, 1.0]), _words([1.0, 0.0]))
        assert p == pytest.approx(1.0)
        assert r == pytest.approx(0.5)
        assert f1 == pytest.approx(2 / 3)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            bertscore(_words([1.0, 0.0]), _words([1.0, 0.0, 0.0]))

    def test_scores_clamped_non_negative(self):
        p, r, f1 = bertscore(_words([1.0, 0.0]), _words([-1.0, 0.0]))
        assert (p, r, f1) == (0.0, 0.0, 0.0)


class TestBatchProperties:
    def test_batch_reorder_invariance(self):
        a = _batch(("a b c", "a x c"), ("d e", "d e f"))
        b = _batch(("d e", "d e f"), ("a b c", "a x c"))
        for metric in (bleu, rouge1, rougeL, wer, wil):
            assert metric(a) == pytest.approx(metric(b))

    def test_report_key_order(self):
        report = metric_report(_batch(("a b", "a b")), bertscore_f1=1.0)
        assert list(report.keys()) == [
            "bertscore", "rouge1", "rougeL", "bleu3", "bleu4", "wer", "wil", "n_pairs",
        ]

    def test_report_without_bertscore(self):
        report = metric_report(_batch(("a b", "a b")))
        assert "bertscore" not in report
        assert report["n_pairs"] == 1
