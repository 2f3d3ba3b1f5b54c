"""Evaluation metrics: caption-level success rates and image quality."""

from .embeddings import (
    WordEmbeddingTable,
    bundled_table,
    load_table,
    phrase_embedding,
)
from .image import (
    image_quality_report,
    mae,
    mse,
    psnr,
    psnr_from_mse,
    ssim,
)
from .lexicon import (
    DETERMINERS,
    NUMBER_WORDS,
    PRONOUNS,
    STOPWORDS,
    NormalizedCaption,
    RuleBasedLexicon,
    default_lexicon,
    normalize_caption,
)
from .text import (
    DEFAULT_THRESHOLD,
    DIRECT_MATCH,
    EMBEDDING_SIMILARITY,
    NOT_FOUND,
    PresenceVerdict,
    SampleEvaluation,
    asr,
    corpus_rates,
    css,
    evaluate_corpus,
    evaluate_sample,
    object_present,
    rorr,
    torr,
)

__all__ = [
    "WordEmbeddingTable",
    "bundled_table",
    "load_table",
    "phrase_embedding",
    "image_quality_report",
    "mae",
    "mse",
    "psnr",
    "psnr_from_mse",
    "ssim",
    "DETERMINERS",
    "NUMBER_WORDS",
    "PRONOUNS",
    "STOPWORDS",
    "NormalizedCaption",
    "RuleBasedLexicon",
    "default_lexicon",
    "normalize_caption",
    "DEFAULT_THRESHOLD",
    "DIRECT_MATCH",
    "EMBEDDING_SIMILARITY",
    "NOT_FOUND",
    "PresenceVerdict",
    "SampleEvaluation",
    "asr",
    "corpus_rates",
    "css",
    "evaluate_corpus",
    "evaluate_sample",
    "object_present",
    "rorr",
    "torr",
]
