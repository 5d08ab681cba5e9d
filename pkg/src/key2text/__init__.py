"""Keyword-to-text pipeline toolkit.

Keyword extraction (mean-embedding cosine scoring with sub-word
accumulation and length-adaptive selection, plus TextRank and YAKE
baselines), ranking and NLG evaluation metrics, a decoding suite including
two-stage constrained beam search, dataset construction, and HTTP-backed
model providers.
"""

from .corpus import (
    CleaningConfig,
    CorpusSplit,
    Document,
    KeywordSet,
    KeywordTextPair,
    clean_text,
    parse_documents,
    parse_pairs,
    write_pairs,
)
from .decoding import (
    DecoderConfig,
    GenerationResult,
    Hypothesis,
    LanguageModel,
    Strategy,
    ToyBigramModel,
    decode,
    decode_beam,
    decode_constrained,
    decode_greedy,
    decode_sample,
    toy_bigram_model,
)
from .embedding import (
    EmbeddingProvider,
    EmbeddingResult,
    HashEmbeddingProvider,
    MeanEmbedding,
    TokenEmbedding,
    WordEmbedding,
    accumulate_subwords,
    embed_words,
    hash_provider,
    mean_embedding,
)
from .errors import (
    ConfigError,
    ConstraintUnsatisfiable,
    DecodingError,
    EmbeddingError,
    EvaluationError,
    ExtractionError,
    GatewayClientError,
    GatewayError,
    Key2TextError,
    ParseError,
    ProtocolError,
)
from .extraction import (
    ExtractorKind,
    ScoredWord,
    SelectionPolicy,
    SelectionTier,
    extract,
    score_mean_cosine,
    score_textrank,
    score_yake,
    select_keywords,
    tokenize_words,
)
from .gateway import (
    GatewayClient,
    GatewayConfig,
    RemoteEmbeddingProvider,
    RemoteLanguageModel,
    remote_generate,
)
from .nlg_eval import TextPairBatch, bertscore, bleu, rouge1, rougeL, wer, wil
from .pipeline import (
    BuildReport,
    CorpusStats,
    ExtractorSetup,
    SplitSpec,
    build_pairs,
    compute_stats,
    split_corpus,
)
from .ranking_eval import (
    AgreementTable,
    GoldKeywords,
    RankedPrediction,
    exact_match_rate,
    fleiss_kappa,
    mean_average_precision,
    mrr,
    ndcg,
)

__version__ = "0.1.0"
