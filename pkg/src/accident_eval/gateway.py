"""Multimodal provider gateway: adapters, retries, rate caps, disk cache, audit log.

Every provider is a config entry plus a small wire adapter; the rest of the
pipeline only ever sees `ModelVerdict`. Responses are cached on disk keyed by
a content digest of the request, so reruns are free and exactly reproducible,
and raw response text is persisted for offline re-scoring.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import threading
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Protocol

import httpx

from .exceptions import ConfigError, ProviderError, VerdictParseError
from .prompting import PromptRequest

RETRYABLE_STATUS = {429, 500, 502, 503, 504}
MAX_ATTEMPTS = 5
BACKOFF_BASE_S = 1.0
BACKOFF_FACTOR = 2.0


@dataclass(frozen=True)
class ProviderConfig:
    name: str
    endpoint: str
    model_id: str
    auth_env: str
    wire: str = "openai_chat"
    max_output_tokens: int = 1024
    temperature: float = 0.0
    request_timeout: float = 60.0
    max_parallel: int = 4

    def __post_init__(self):
        if self.temperature < 0:
            raise ConfigError(f"{self.name}: temperature must be >= 0")
        if self.max_parallel < 1:
            raise ConfigError(f"{self.name}: max_parallel must be >= 1")


@dataclass(frozen=True)
class ObjectDescription:
    label: str
    description: str


@dataclass(frozen=True)
class ModelVerdict:
    classification: int
    scene_context: str
    justification: str
    objects: tuple[ObjectDescription, ...]
    raw_text: str
    provider: str
    latency_ms: int
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        if self.classification not in (0, 1):
            raise VerdictParseError(
                f"classification {self.classification!r} outside {{0, 1}}", self.raw_text
            )
        if not self.raw_text:
            raise VerdictParseError("raw_text must be non-empty")

    def to_dict(self) -> dict:
        return {
            "classification": self.classification,
            "scene_context": self.scene_context,
            "justification": self.justification,
            "objects": [asdict(o) for o in self.objects],
            "raw_text": self.raw_text,
            "provider": self.provider,
            "latency_ms": self.latency_ms,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelVerdict":
        return cls(
            classification=data["classification"],
            scene_context=data["scene_context"],
            justification=data["justification"],
            objects=tuple(ObjectDescription(**o) for o in data["objects"]),
            raw_text=data["raw_text"],
            provider=data["provider"],
            latency_ms=data["latency_ms"],
            warnings=tuple(data.get("warnings", ())),
        )


def load_providers(path: Path) -> dict[str, ProviderConfig]:
    """providers.json: list of provider config objects, keyed here by name."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read providers file {path}: {exc}") from exc
    if not isinstance(doc, list):
        raise ConfigError(f"{path}: expected a list of provider entries")
    configs = {}
    for entry in doc:
        cfg = ProviderConfig(**entry)
        if cfg.name in configs:
            raise ConfigError(f"duplicate provider name {cfg.name!r}")
        configs[cfg.name] = cfg
    return configs


# ---------------------------------------------------------------------------
# wire adapters


class WireAdapter(Protocol):
    def build(self, cfg: ProviderConfig, req: PromptRequest, api_key: str) -> tuple[dict, dict]:
        """Return (headers, json payload)."""

    def extract_text(self, data: dict) -> str:
        """Pull the generated text out of the provider envelope."""


def _mime(image: bytes) -> str:
    return "image/jpeg" if image[:3] == b"\xff\xd8\xff" else "image/png"


class OpenAIChatAdapter:
    """Chat-completions style wire format (OpenAI, Mistral/Pixtral, many others)."""

    def build(self, cfg, req, api_key):
        content: list[dict] = [{"type": "text", "text": req.instruction}]
        for image in req.images:
            b64 = base64.b64encode(image).decode("ascii")
            content.append(
                {"type": "image_url", "image_url": {"url": f"data:{_mime(image)};base64,{b64}"}}
            )
        payload = {
            "model": cfg.model_id,
            "temperature": cfg.temperature,
            "max_tokens": cfg.max_output_tokens,
            "messages": [{"role": "user", "content": content}],
        }
        headers = {"Authorization": f"Bearer {api_key}"}
        return headers, payload

    def extract_text(self, data):
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise VerdictParseError(f"malformed chat-completions envelope: {exc}") from exc


class GeminiAdapter:
    """generateContent wire format of the Gemini API family."""

    def build(self, cfg, req, api_key):
        parts: list[dict] = [{"text": req.instruction}]
        for image in req.images:
            parts.append(
                {
                    "inline_data": {
                        "mime_type": _mime(image),
                        "data": base64.b64encode(image).decode("ascii"),
                    }
                }
            )
        payload = {
            "contents": [{"role": "user", "parts": parts}],
            "generationConfig": {
                "temperature": cfg.temperature,
                "maxOutputTokens": cfg.max_output_tokens,
            },
        }
        headers = {"x-goog-api-key": api_key}
        return headers, payload

    def extract_text(self, data):
        try:
            parts = data["candidates"][0]["content"]["parts"]
            return "".join(p["text"] for p in parts if "text" in p)
        except (KeyError, IndexError, TypeError) as exc:
            raise VerdictParseError(f"malformed generateContent envelope: {exc}") from exc


ADAPTERS: dict[str, WireAdapter] = {
    "openai_chat": OpenAIChatAdapter(),
    "gemini": GeminiAdapter(),
}


# ---------------------------------------------------------------------------
# verdict parsing


def _find_json_objects(text: str):
    """Yield every balanced top-level {...} candidate, left to right."""
    depth = 0
    start = None
    in_string = False
    escaped = False
    for i, ch in enumerate(text):
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            if depth == 0:
                start = i
            depth += 1
        elif ch == "}":
            if depth > 0:
                depth -= 1
                if depth == 0 and start is not None:
                    yield text[start : i + 1]
                    start = None


def _coerce_classification(value) -> int:
    if isinstance(value, bool):
        raise VerdictParseError(f"classification {value!r} outside {{0, 1}}")
    if isinstance(value, int):
        result = value
    elif isinstance(value, float) and value.is_integer():
        result = int(value)
    elif isinstance(value, str):
        try:
            result = int(value.strip())
        except ValueError:
            raise VerdictParseError(f"classification {value!r} is not numeric")
    else:
        raise VerdictParseError(f"classification {value!r} is not numeric")
    if result not in (0, 1):
        raise VerdictParseError(f"classification {result} outside {{0, 1}}")
    return result


def parse_verdict(raw: str) -> dict:
    """Extract the first balanced JSON object from model output and validate it.

    Markdown fences and leading prose are tolerated. Missing description
    fields default to empty strings with a warning; a missing or out-of-domain
    classification is fatal.
    """
    candidate = None
    for chunk in _find_json_objects(raw):
        try:
            doc = json.loads(chunk)
        except json.JSONDecodeError:
            continue
        if isinstance(doc, dict):
            candidate = doc
            break
    if candidate is None:
        raise VerdictParseError("no JSON object found in response", raw)
    if "classification" not in candidate:
        raise VerdictParseError("classification field absent", raw)
    classification = _coerce_classification(candidate["classification"])

    warnings: list[str] = []
    fields = {}
    for name in ("scene_context", "justification"):
        value = candidate.get(name)
        if not isinstance(value, str) or not value:
            warnings.append(f"{name} missing or empty; defaulted")
            value = value if isinstance(value, str) else ""
        fields[name] = value

    objects: list[ObjectDescription] = []
    raw_objects = candidate.get("objects")
    if isinstance(raw_objects, list):
        for entry in raw_objects:
            if not isinstance(entry, dict):
                warnings.append("non-object entry in objects list; skipped")
                continue
            objects.append(
                ObjectDescription(
                    label=str(entry.get("label", "")),
                    description=str(entry.get("description", "")),
                )
            )
    elif raw_objects is not None:
        warnings.append("objects field is not a list; defaulted to empty")
    else:
        warnings.append("objects missing; defaulted to empty")

    return {
        "classification": classification,
        "scene_context": fields["scene_context"],
        "justification": fields["justification"],
        "objects": tuple(objects),
        "warnings": tuple(warnings),
    }


def cache_key(cfg: ProviderConfig, req: PromptRequest) -> str:
    """Stable digest over provider identity, instruction, image content, temperature."""
    material = {
        "provider": cfg.name,
        "model": cfg.model_id,
        "instruction": req.instruction,
        "images": [hashlib.sha256(img).hexdigest() for img in req.images],
        "temperature": cfg.temperature,
    }
    blob = json.dumps(material, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# disk cache


class DiskCache:
    """cache/<provider>/<digest>.json; writes are atomic and serialized."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self._write_lock = threading.Lock()

    def _path(self, provider: str, key: str) -> Path:
        return self.root / provider / f"{key}.json"

    def get(self, provider: str, key: str) -> dict | None:
        path = self._path(provider, key)
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def put(self, provider: str, key: str, entry: dict) -> None:
        path = self._path(provider, key)
        with self._write_lock:
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps(entry, indent=2), encoding="utf-8")
            os.replace(tmp, path)


class Gateway:
    """Shared, thread-safe front door to all configured providers."""

    def __init__(
        self,
        providers: dict[str, ProviderConfig],
        cache_dir: Path | None = None,
        audit_dir: Path | None = None,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.providers = providers
        self.cache = DiskCache(cache_dir) if cache_dir else None
        self.audit_dir = Path(audit_dir) if audit_dir else None
        self._client = httpx.Client(transport=transport)
        self._sleep = sleep
        self._semaphores = {
            name: threading.BoundedSemaphore(cfg.max_parallel) for name, cfg in providers.items()
        }

    def close(self) -> None:
        self._client.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def send(self, cfg: ProviderConfig, req: PromptRequest) -> ModelVerdict:
        """Cached verdict if available, otherwise a live provider round trip."""
        key = cache_key(cfg, req)
        if self.cache is not None:
            entry = self.cache.get(cfg.name, key)
            if entry is not None:
                return ModelVerdict.from_dict(entry["verdict"])

        api_key = os.environ.get(cfg.auth_env)
        if not api_key:
            raise ProviderError(f"{cfg.name}: auth env var {cfg.auth_env} is not set")
        adapter = ADAPTERS.get(cfg.wire)
        if adapter is None:
            raise ConfigError(f"{cfg.name}: unknown wire format {cfg.wire!r}")
        headers, payload = adapter.build(cfg, req, api_key)

        raw_text, latency_ms = self._post_with_retries(cfg, headers, payload)
        if not raw_text:
            raise VerdictParseError(f"{cfg.name}: empty response text")
        parsed = parse_verdict(raw_text)
        verdict = ModelVerdict(
            classification=parsed["classification"],
            scene_context=parsed["scene_context"],
            justification=parsed["justification"],
            objects=parsed["objects"],
            raw_text=raw_text,
            provider=cfg.name,
            latency_ms=latency_ms,
            warnings=parsed["warnings"],
        )
        if self.cache is not None:
            self.cache.put(cfg.name, key, {"key": key, "verdict": verdict.to_dict()})
        self._audit(cfg, req, key, verdict)
        return verdict

    def _post_with_retries(self, cfg: ProviderConfig, headers: dict, payload: dict):
        semaphore = self._semaphores.get(cfg.name)
        if semaphore is None:
            semaphore = self._semaphores.setdefault(
                cfg.name, threading.BoundedSemaphore(cfg.max_parallel)
            )
        last_error = "no attempt made"
        for attempt in range(1, MAX_ATTEMPTS + 1):
            try:
                with semaphore:
                    started = time.monotonic()
                    response = self._client.post(
                        cfg.endpoint, headers=headers, json=payload, timeout=cfg.request_timeout
                    )
                    latency_ms = int((time.monotonic() - started) * 1000)
            except (httpx.TimeoutException, httpx.TransportError) as exc:
                last_error = f"transport failure: {exc}"
            else:
                if response.status_code == 200:
                    adapter = ADAPTERS[cfg.wire]
                    return adapter.extract_text(response.json()), latency_ms
                if response.status_code in (401, 403):
                    raise ProviderError(
                        f"{cfg.name}: authentication rejected (HTTP {response.status_code})"
                    )
                if response.status_code not in RETRYABLE_STATUS:
                    raise ProviderError(
                        f"{cfg.name}: HTTP {response.status_code}: {response.text[:200]}"
                    )
                last_error = f"HTTP {response.status_code}"
            if attempt < MAX_ATTEMPTS:
                self._sleep(BACKOFF_BASE_S * BACKOFF_FACTOR ** (attempt - 1))
        raise ProviderError(
            f"{cfg.name}: exhausted {MAX_ATTEMPTS} attempts ({last_error})", retryable=True
        )

    def _audit(self, cfg: ProviderConfig, req: PromptRequest, key: str, verdict: ModelVerdict):
        if self.audit_dir is None:
            return
        self.audit_dir.mkdir(parents=True, exist_ok=True)
        record = {
            "key": key,
            "provider": cfg.name,
            "model_id": cfg.model_id,
            "scenario_id": req.scenario_id,
            "mode": req.mode,
            "window": list(req.window.frame_indices),
            "raw_text": verdict.raw_text,
        }
        path = self.audit_dir / f"{cfg.name}__{key}.json"
        path.write_text(json.dumps(record, indent=2), encoding="utf-8")
