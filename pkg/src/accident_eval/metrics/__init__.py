from .classification import (
    ClassificationReport,
    ConfusionCounts,
    accuracy,
    classification_report,
    confusion,
    f1_score,
    precision,
    recall,
)
from .embedding import (
    FixtureEmbeddingProvider,
    HashedEmbeddingProvider,
    HttpEmbeddingProvider,
    cosine,
    embed_average,
    load_lexicon,
)
from .similarity import SimilarityReport, similarity_report
from .text import bleu, lcs_length, rouge_1, rouge_l, tokenize

__all__ = [
    "ClassificationReport",
    "ConfusionCounts",
    "FixtureEmbeddingProvider",
    "HashedEmbeddingProvider",
    "HttpEmbeddingProvider",
    "SimilarityReport",
    "accuracy",
    "bleu",
    "classification_report",
    "confusion",
    "cosine",
    "embed_average",
    "f1_score",
    "lcs_length",
    "load_lexicon",
    "precision",
    "recall",
    "rouge_1",
    "rouge_l",
    "similarity_report",
    "tokenize",
]
