"""Embedding-space similarity: word-vector averaging and sentence providers.

Word vectors come from a plain-text lexicon (token followed by floats, one
entry per line). Sentence embeddings come from a pluggable provider; the
fixture provider replays committed vectors so tests and offline runs never
touch the network.
"""

from __future__ import annotations

import hashlib
import json
import struct
import threading
from pathlib import Path
from typing import Protocol, Sequence

import httpx
import numpy as np

from ..exceptions import MetricError, ProviderError


def load_lexicon(path: Path) -> dict[str, np.ndarray]:
    """Parse `token v1 v2 ...` lines; blank lines and # comments are skipped."""
    lexicon: dict[str, np.ndarray] = {}
    dim = None
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise MetricError(f"cannot read lexicon {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        if len(parts) < 2:
            raise MetricError(f"{path}:{lineno}: token with no vector components")
        token = parts[0]
        try:
            vector = np.array([float(x) for x in parts[1:]], dtype=np.float64)
        except ValueError as exc:
            raise MetricError(f"{path}:{lineno}: non-numeric component: {exc}") from exc
        if dim is None:
            dim = vector.shape[0]
        elif vector.shape[0] != dim:
            raise MetricError(
                f"{path}:{lineno}: dimension {vector.shape[0]} != expected {dim}"
            )
        lexicon[token] = vector
    if not lexicon:
        raise MetricError(f"{path}: lexicon is empty")
    return lexicon


def embed_average(tokens: Sequence[str], lexicon: dict[str, np.ndarray]) -> tuple[np.ndarray, bool]:
    """Mean of in-vocabulary token vectors.

    Returns (vector, all_oov). When every token is out of vocabulary the
    vector is all zeros and the flag is set; callers decide how to report it.
    """
    if not lexicon:
        raise MetricError("lexicon is empty")
    dim = next(iter(lexicon.values())).shape[0]
    hits = [lexicon[t] for t in tokens if t in lexicon]
    if not hits:
        return np.zeros(dim, dtype=np.float64), True
    return np.mean(np.stack(hits), axis=0), False


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Standard cosine similarity; either vector having zero norm yields 0.0."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise MetricError(f"shape mismatch: {a.shape} vs {b.shape}")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise MetricError("vectors must be finite")
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return float(np.dot(a, b) / (norm_a * norm_b))


class EmbeddingProvider(Protocol):
    def embed(self, text: str) -> np.ndarray: ...


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class FixtureEmbeddingProvider:
    """Replays committed vectors keyed by sha256 of the exact input text."""

    def __init__(self, path: Path):
        try:
            self._table = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise MetricError(f"cannot read embedding fixture {path}: {exc}") from exc

    def embed(self, text: str) -> np.ndarray:
        key = _digest(text)
        if key not in self._table:
            raise MetricError(f"no fixture embedding for text (sha256 {key[:12]}...)")
        return np.array(self._table[key], dtype=np.float64)


class HttpEmbeddingProvider:
    """POSTs {"model", "text"} and expects {"embedding": [...]} back.

    Responses are cached in memory by text digest; reads are lock-free,
    writes are serialized.
    """

    def __init__(
        self,
        endpoint: str,
        model_id: str = "",
        timeout: float = 30.0,
        transport: httpx.BaseTransport | None = None,
    ):
        self.endpoint = endpoint
        self.model_id = model_id
        self.timeout = timeout
        self._client = httpx.Client(transport=transport)
        self._cache: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()
        self._dim: int | None = None

    def embed(self, text: str) -> np.ndarray:
        key = _digest(text)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        try:
            response = self._client.post(
                self.endpoint,
                json={"model": self.model_id, "text": text},
                timeout=self.timeout,
            )
        except httpx.HTTPError as exc:
            raise ProviderError(f"embedding request failed: {exc}", retryable=True) from exc
        if response.status_code != 200:
            raise ProviderError(f"embedding service HTTP {response.status_code}")
        try:
            vector = np.array(response.json()["embedding"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderError(f"malformed embedding response: {exc}") from exc
        if vector.ndim != 1 or vector.size == 0:
            raise ProviderError(f"embedding must be a non-empty vector, got shape {vector.shape}")
        with self._lock:
            if self._dim is None:
                self._dim = vector.size
            elif vector.size != self._dim:
                raise ProviderError(f"embedding dimension changed: {vector.size} != {self._dim}")
            self._cache[key] = vector
        return vector

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "HttpEmbeddingProvider":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


class HashedEmbeddingProvider:
    """Deterministic pseudo-embeddings for offline smoke runs.

    Unrelated texts land near orthogonal; identical texts are identical.
    Not a semantic model, so scores from it are plumbing checks only.
    """

    def __init__(self, dim: int = 64):
        if dim < 1:
            raise MetricError("dim must be >= 1")
        self.dim = dim

    def embed(self, text: str) -> np.ndarray:
        values = []
        counter = 0
        while len(values) < self.dim:
            block = hashlib.sha256(f"{counter}:{text}".encode("utf-8")).digest()
            for offset in range(0, len(block) - 7, 8):
                (raw,) = struct.unpack_from(">Q", block, offset)
                values.append(raw / 2**64 - 0.5)
            counter += 1
        return np.array(values[: self.dim], dtype=np.float64)
