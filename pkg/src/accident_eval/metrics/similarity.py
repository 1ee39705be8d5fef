"""One-call similarity bundle comparing a model description to its reference."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import MetricError
from .embedding import EmbeddingProvider, cosine, embed_average
from .text import bleu, rouge_1, rouge_l, tokenize

ROUGE_VARIANTS = ("rouge1", "rougeL")


@dataclass(frozen=True)
class SimilarityReport:
    bleu: float
    rouge_1: float
    rouge_l: float
    rouge_variant: str
    w2v_cosine: float | None
    st_cosine: float | None
    flags: tuple[str, ...] = ()

    @property
    def rouge(self) -> float:
        return self.rouge_1 if self.rouge_variant == "rouge1" else self.rouge_l

    def as_dict(self) -> dict:
        return {
            "bleu": self.bleu,
            "rouge": self.rouge,
            "rouge_1": self.rouge_1,
            "rouge_l": self.rouge_l,
            "rouge_variant": self.rouge_variant,
            "w2v_cosine": self.w2v_cosine,
            "st_cosine": self.st_cosine,
            "flags": list(self.flags),
        }


def similarity_report(
    reference: str,
    hypothesis: str,
    lexicon: dict[str, np.ndarray] | None = None,
    provider: EmbeddingProvider | None = None,
    rouge_variant: str = "rouge1",
) -> SimilarityReport:
    """Score hypothesis against a non-empty reference.

    Lexical metrics always run. Word-vector cosine runs when a lexicon is
    supplied, sentence cosine when a provider is; each is None otherwise.
    Degenerate inputs (all tokens out of vocabulary, zero-norm vectors) score
    0.0 and are named in flags.
    """
    if not reference or not reference.strip():
        raise MetricError("reference text must be non-empty")
    if rouge_variant not in ROUGE_VARIANTS:
        raise MetricError(f"rouge_variant must be one of {ROUGE_VARIANTS}")
    ref_tokens = tokenize(reference)
    hyp_tokens = tokenize(hypothesis)
    if not ref_tokens:
        raise MetricError("reference text has no tokens after normalization")

    flags: list[str] = []
    if not hyp_tokens:
        flags.append("empty_hypothesis")

    w2v = None
    if lexicon is not None:
        ref_vec, ref_oov = embed_average(ref_tokens, lexicon)
        hyp_vec, hyp_oov = embed_average(hyp_tokens, lexicon)
        if ref_oov:
            flags.append("reference_all_oov")
        if hyp_oov:
            flags.append("hypothesis_all_oov")
        w2v = cosine(ref_vec, hyp_vec)
        if (ref_oov or hyp_oov) and "w2v_zero_norm" not in flags:
            flags.append("w2v_zero_norm")

    st = None
    if provider is not None:
        ref_emb = provider.embed(reference)
        hyp_emb = provider.embed(hypothesis)
        st = cosine(ref_emb, hyp_emb)
        if np.linalg.norm(ref_emb) == 0.0 or np.linalg.norm(hyp_emb) == 0.0:
            flags.append("st_zero_norm")

    return SimilarityReport(
        bleu=bleu(ref_tokens, hyp_tokens),
        rouge_1=rouge_1(ref_tokens, hyp_tokens),
        rouge_l=rouge_l(ref_tokens, hyp_tokens),
        rouge_variant=rouge_variant,
        w2v_cosine=w2v,
        st_cosine=st,
        flags=tuple(flags),
    )
