"""Lexical overlap metrics: tokenizer, sentence BLEU, ROUGE-1 and ROUGE-L.

All metrics share one tokenizer so scores are comparable across tasks.
"""

from __future__ import annotations

import math
import unicodedata
from collections import Counter
from typing import Sequence

from ..exceptions import MetricError

MAX_ORDER = 4


def _is_punctuation(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, strip punctuation from token edges.

    Interior punctuation (hyphens, apostrophes) survives; tokens that were
    pure punctuation are dropped.
    """
    tokens = []
    for raw in text.lower().split():
        start = 0
        end = len(raw)
        while start < end and _is_punctuation(raw[start]):
            start += 1
        while end > start and _is_punctuation(raw[end - 1]):
            end -= 1
        if end > start:
            tokens.append(raw[start:end])
    return tokens


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _reject_raw_text(*args: Sequence[str]) -> None:
    # a str is a Sequence[str] of characters; scoring it would silently
    # compute character n-grams instead of word n-grams
    for arg in args:
        if isinstance(arg, str):
            raise MetricError("expected a token sequence, got a raw string; tokenize() first")


def bleu(reference: Sequence[str], hypothesis: Sequence[str], max_order: int = MAX_ORDER) -> float:
    """Sentence BLEU with uniform weights over orders 1..max_order.

    Clipped modified precisions; orders >= 2 with a zero match count fall back
    to add-one smoothing (1 / (count + 1)) so a single absent 4-gram does not
    zero the score. A zero unigram match still yields 0.0. Brevity penalty
    exp(1 - ref/hyp) applies when the hypothesis is shorter.
    """
    _reject_raw_text(reference, hypothesis)
    if not reference:
        raise MetricError("reference must be non-empty")
    if not hypothesis:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_order + 1):
        hyp_counts = _ngrams(hypothesis, n)
        total = sum(hyp_counts.values())
        if total == 0:
            # hypothesis shorter than n: no evidence either way
            continue
        ref_counts = _ngrams(reference, n)
        matched = sum(min(count, ref_counts[gram]) for gram, count in hyp_counts.items())
        if matched == 0:
            if n == 1:
                return 0.0
            p_n = 1.0 / (total + 1)
        else:
            p_n = matched / total
        log_sum += math.log(p_n) / max_order
    if len(hypothesis) >= len(reference):
        brevity = 1.0
    else:
        brevity = math.exp(1.0 - len(reference) / len(hypothesis))
    return brevity * math.exp(log_sum)


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for token in a:
        curr = [0]
        for j, other in enumerate(b, start=1):
            if token == other:
                curr.append(prev[j - 1] + 1)
            else:
                curr.append(max(prev[j], curr[j - 1]))
        prev = curr
    return prev[-1]


def _f1(matched: float, ref_total: int, hyp_total: int) -> float:
    if ref_total == 0:
        raise MetricError("reference must be non-empty")
    if hyp_total == 0:
        return 0.0
    p = matched / hyp_total
    r = matched / ref_total
    return 2 * p * r / (p + r) if (p + r) else 0.0


def rouge_l(reference: Sequence[str], hypothesis: Sequence[str]) -> float:
    """LCS-based F1 with equal precision/recall weighting."""
    _reject_raw_text(reference, hypothesis)
    return _f1(lcs_length(reference, hypothesis), len(reference), len(hypothesis))


def rouge_1(reference: Sequence[str], hypothesis: Sequence[str]) -> float:
    """Unigram-overlap F1 with clipped counts."""
    _reject_raw_text(reference, hypothesis)
    if not reference:
        raise MetricError("reference must be non-empty")
    ref_counts = Counter(reference)
    hyp_counts = Counter(hypothesis)
    matched = sum(min(count, ref_counts[token]) for token, count in hyp_counts.items())
    return _f1(matched, len(reference), len(hypothesis))
