"""Two-pass evaluation orchestrator.

Pass one sends raw frame windows; pass two re-sends only the windows the
model already flagged, this time with rendered track overlays. Scenario
verdicts are the OR of window verdicts. Aggregation yields one row per
(provider, mode) with classification metrics plus per-task similarity means.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .exceptions import ConfigError, MetricError, ProviderError, ScenarioError, SidecarError, VerdictParseError
from .gateway import Gateway, ModelVerdict, ProviderConfig, load_providers
from .metrics.classification import ClassificationReport, classification_report, confusion
from .metrics.embedding import (
    EmbeddingProvider,
    FixtureEmbeddingProvider,
    HashedEmbeddingProvider,
    HttpEmbeddingProvider,
    load_lexicon,
)
from .metrics.similarity import ROUGE_VARIANTS, SimilarityReport, similarity_report
from .prompting import build_base_prompt, build_enhanced_prompt, instruction_hash
from .rendering import RenderStyle, load_image, png_bytes, render_enhanced
from .scenarios import (
    FrameWindow,
    Scenario,
    ScenarioIndex,
    load_manifest,
    load_scenario,
    select_balanced,
    windows,
)
from .sidecars import (
    DEFAULT_ALLOWED_CLASSES,
    ClassAllowlist,
    filter_classes,
    group_by_frame,
    read_sidecar,
    sidecar_path,
)
from .tracker import TrackerConfig, track_scenario

MODES = ("base", "enhanced")
TASKS = ("justification", "scene_context", "object_description")
SIMILARITY_METRICS = ("bleu", "rouge", "w2v_cosine", "st_cosine")


@dataclass(frozen=True)
class RunConfig:
    dataset_root: Path
    providers_file: Path
    providers: tuple[str, ...]
    modes: tuple[str, ...] = MODES
    detections_root: Path | None = None
    scenario_ids: tuple[str, ...] | None = None
    sample_size: int | None = None
    sample_seed: int = 0
    window_size: int = 3
    output_dir: Path = Path("runs")
    cache_dir: Path = Path("cache")
    max_workers: int = 4
    run_id: str = "run"
    confidence_threshold: float = 0.5
    per_window: bool = False
    rouge_variant: str = "rouge1"
    lexicon: Path | None = None
    embeddings: Mapping[str, object] | None = None

    def __post_init__(self):
        if not self.modes:
            raise ConfigError("modes must be non-empty")
        for mode in self.modes:
            if mode not in MODES:
                raise ConfigError(f"unknown mode {mode!r}")
        if self.window_size < 1:
            raise ConfigError("window_size must be >= 1")
        if not self.providers:
            raise ConfigError("providers must be non-empty")
        if self.rouge_variant not in ROUGE_VARIANTS:
            raise ConfigError(f"rouge_variant must be one of {ROUGE_VARIANTS}")
        if self.scenario_ids is None and self.sample_size is None:
            raise ConfigError("select scenarios via ids or a sample size")

    def digest(self) -> str:
        material = {
            "dataset_root": str(self.dataset_root),
            "detections_root": str(self.detections_root) if self.detections_root else None,
            "providers_file": str(self.providers_file),
            "providers": list(self.providers),
            "modes": list(self.modes),
            "scenario_ids": list(self.scenario_ids) if self.scenario_ids else None,
            "sample_size": self.sample_size,
            "sample_seed": self.sample_seed,
            "window_size": self.window_size,
            "confidence_threshold": self.confidence_threshold,
            "per_window": self.per_window,
            "rouge_variant": self.rouge_variant,
            "lexicon": str(self.lexicon) if self.lexicon else None,
            "embeddings": dict(self.embeddings) if self.embeddings else None,
        }
        blob = json.dumps(material, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


_RUN_KEYS = {
    "dataset_root",
    "detections_root",
    "scenarios",
    "providers_file",
    "providers",
    "modes",
    "window_size",
    "output_dir",
    "cache_dir",
    "max_workers",
    "run_id",
    "confidence_threshold",
    "per_window",
    "rouge_variant",
    "lexicon",
    "embeddings",
}


def load_run_config(path: Path) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read run config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: run config must be a JSON object")
    unknown = set(doc) - _RUN_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    for required in ("dataset_root", "providers_file", "providers"):
        if required not in doc:
            raise ConfigError(f"{path}: missing required key {required!r}")

    # "scenarios" is either an explicit id list (bare or under "ids") or a
    # balanced sample {"n": ..., "seed": ...}
    selection = doc.get("scenarios", {})
    if isinstance(selection, list):
        selection = {"ids": selection}
    if not isinstance(selection, dict):
        raise ConfigError(f"{path}: scenarios must be a list of ids or a sampling object")
    scenario_ids = tuple(selection["ids"]) if "ids" in selection else None
    sample_size = selection.get("n")
    modes = doc.get("modes", ["base", "enhanced"])
    if modes == "both":
        modes = ["base", "enhanced"]

    base = Path(path).parent

    def _resolve(value):
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else base / p

    embeddings = doc.get("embeddings")
    if embeddings is not None and "path" in embeddings:
        embeddings = dict(embeddings)
        embeddings["path"] = str(_resolve(embeddings["path"]))

    return RunConfig(
        dataset_root=_resolve(doc["dataset_root"]),
        providers_file=_resolve(doc["providers_file"]),
        providers=tuple(doc["providers"]),
        modes=tuple(modes),
        detections_root=_resolve(doc.get("detections_root")),
        scenario_ids=scenario_ids,
        sample_size=sample_size,
        sample_seed=selection.get("seed", 0),
        window_size=doc.get("window_size", 3),
        output_dir=_resolve(doc.get("output_dir", "runs")),
        cache_dir=_resolve(doc.get("cache_dir", "cache")),
        max_workers=doc.get("max_workers", 4),
        run_id=doc.get("run_id", "run"),
        confidence_threshold=doc.get("confidence_threshold", 0.5),
        per_window=doc.get("per_window", False),
        rouge_variant=doc.get("rouge_variant", "rouge1"),
        lexicon=_resolve(doc.get("lexicon")),
        embeddings=embeddings,
    )


def build_embedding_provider(spec: Mapping[str, object] | None) -> EmbeddingProvider | None:
    if spec is None:
        return None
    kind = spec.get("kind")
    if kind == "fixture":
        return FixtureEmbeddingProvider(Path(str(spec["path"])))
    if kind == "hashed":
        return HashedEmbeddingProvider(dim=int(spec.get("dim", 64)))
    if kind == "http":
        return HttpEmbeddingProvider(
            endpoint=str(spec["endpoint"]), model_id=str(spec.get("model_id", ""))
        )
    raise ConfigError(f"unknown embeddings kind {kind!r}")


# ---------------------------------------------------------------------------
# per-scenario evaluation


@dataclass(frozen=True)
class WindowResult:
    frame_indices: tuple[int, ...]
    truth: int
    classification: int
    scored: bool
    enhanced_sent: bool
    error: str | None = None
    verdict: ModelVerdict | None = None
    similarity: Mapping[str, SimilarityReport | None] = field(default_factory=dict)


@dataclass(frozen=True)
class ScenarioResult:
    scenario_id: str
    provider: str
    mode: str
    truth: int
    prediction: int
    windows: tuple[WindowResult, ...]
    timing_s: float
    error: str | None = None


def scenario_verdict(window_classifications: Sequence[int]) -> int:
    if len(window_classifications) == 0:
        raise ScenarioError("cannot reduce an empty window list")
    return 1 if any(c == 1 for c in window_classifications) else 0


def _join_objects(verdict: ModelVerdict) -> str:
    parts = []
    for obj in verdict.objects:
        text = f"{obj.label}: {obj.description}".strip(": ").strip()
        if text:
            parts.append(f"{obj.label}: {obj.description}".strip())
    return "; ".join(parts)


def _window_similarity(
    scenario: Scenario,
    window: FrameWindow,
    verdict: ModelVerdict,
    lexicon,
    embedder,
    rouge_variant: str,
) -> dict[str, SimilarityReport | None]:
    """Score verdict text against the annotation of the window's last frame.

    Tasks with an empty reference (typical for non-accident frames) are
    skipped and reported as None.
    """
    annotation = scenario.annotation_for(window.frame_indices[-1])
    references = {
        "justification": annotation.justification,
        "scene_context": annotation.scene_context,
        "object_description": annotation.object_info,
    }
    hypotheses = {
        "justification": verdict.justification,
        "scene_context": verdict.scene_context,
        "object_description": _join_objects(verdict),
    }
    reports: dict[str, SimilarityReport | None] = {}
    for task in TASKS:
        reference = references[task]
        if not reference or not reference.strip():
            reports[task] = None
            continue
        reports[task] = similarity_report(
            reference,
            hypotheses[task],
            lexicon=lexicon,
            provider=embedder,
            rouge_variant=rouge_variant,
        )
    return reports


class ScenarioEvaluator:
    """Bundles the per-run collaborators so run_scenario stays call-shaped."""

    def __init__(
        self,
        gateway: Gateway,
        config: RunConfig,
        lexicon=None,
        embedder: EmbeddingProvider | None = None,
        allowlist: ClassAllowlist | None = None,
        tracker_config: TrackerConfig | None = None,
        style: RenderStyle | None = None,
    ):
        self.gateway = gateway
        self.config = config
        self.lexicon = lexicon
        self.embedder = embedder
        self.allowlist = allowlist or ClassAllowlist(DEFAULT_ALLOWED_CLASSES)
        self.tracker_config = tracker_config or TrackerConfig()
        self.style = style or RenderStyle()

    # -- frame material ----------------------------------------------------

    def _raw_window_bytes(self, scenario: Scenario, window: FrameWindow) -> tuple[bytes, ...]:
        by_index = {f.index: f for f in scenario.frames}
        return tuple(by_index[i].image_path.read_bytes() for i in window.frame_indices)

    def _snapshots(self, scenario: Scenario):
        path = sidecar_path(self.config.dataset_root, scenario.id, self.config.detections_root)
        sidecar = read_sidecar(path)
        detections = filter_classes(sidecar.detections, self.allowlist)
        detections = [d for d in detections if d.confidence >= self.config.confidence_threshold]
        frame_indices = [f.index for f in scenario.frames]
        return track_scenario(group_by_frame(detections), frame_indices, self.tracker_config)

    def _rendered_window_bytes(
        self, scenario: Scenario, window: FrameWindow, snapshots
    ) -> tuple[bytes, ...]:
        by_index = {f.index: f for f in scenario.frames}
        rendered = []
        for i in window.frame_indices:
            image = load_image(by_index[i].image_path)
            overlaid = render_enhanced(image, snapshots.get(i, []), self.style)
            rendered.append(png_bytes(overlaid))
        return tuple(rendered)

    # -- evaluation --------------------------------------------------------

    def _send(self, provider: ProviderConfig, request) -> ModelVerdict:
        return self.gateway.send(provider, request)

    def run_scenario(
        self, scenario: Scenario, provider: ProviderConfig, mode: str
    ) -> ScenarioResult:
        started = time.monotonic()
        scenario_windows = windows(scenario, self.config.window_size)
        snapshots = None
        scenario_error = None
        if mode == "enhanced":
            try:
                snapshots = self._snapshots(scenario)
            except (SidecarError, ScenarioError, OSError) as exc:
                scenario_error = f"detections unavailable: {exc}"

        results: list[WindowResult] = []
        for window in scenario_windows:
            if scenario_error is not None:
                results.append(
                    WindowResult(
                        frame_indices=window.frame_indices,
                        truth=int(window.label),
                        classification=0,
                        scored=False,
                        enhanced_sent=False,
                        error=scenario_error,
                    )
                )
                continue
            results.append(self._run_window(scenario, window, provider, mode, snapshots))

        prediction = scenario_verdict([w.classification for w in results])
        return ScenarioResult(
            scenario_id=scenario.id,
            provider=provider.name,
            mode=mode,
            truth=1 if scenario.has_accident else 0,
            prediction=prediction,
            windows=tuple(results),
            timing_s=time.monotonic() - started,
            error=scenario_error,
        )

    def _run_window(
        self,
        scenario: Scenario,
        window: FrameWindow,
        provider: ProviderConfig,
        mode: str,
        snapshots,
    ) -> WindowResult:
        try:
            base_request = build_base_prompt(window, self._raw_window_bytes(scenario, window))
            verdict = self._send(provider, base_request)
            enhanced_sent = False
            if mode == "enhanced" and verdict.classification == 1:
                request = build_enhanced_prompt(
                    window, self._rendered_window_bytes(scenario, window, snapshots)
                )
                verdict = self._send(provider, request)
                enhanced_sent = True
        except (ProviderError, VerdictParseError) as exc:
            return WindowResult(
                frame_indices=window.frame_indices,
                truth=int(window.label),
                classification=0,
                scored=False,
                enhanced_sent=False,
                error=str(exc),
            )
        similarity = _window_similarity(
            scenario, window, verdict, self.lexicon, self.embedder, self.config.rouge_variant
        )
        return WindowResult(
            frame_indices=window.frame_indices,
            truth=int(window.label),
            classification=verdict.classification,
            scored=True,
            enhanced_sent=enhanced_sent,
            verdict=verdict,
            similarity=similarity,
        )


# ---------------------------------------------------------------------------
# aggregation


@dataclass(frozen=True)
class AggregateRow:
    provider: str
    mode: str
    unit: str
    report: ClassificationReport
    task_means: Mapping[str, Mapping[str, float | None]]
    pooled_means: Mapping[str, float | None]
    task_counts: Mapping[str, int]
    scored_windows: int
    unscored_windows: int


@dataclass(frozen=True)
class EvalSummary:
    run_id: str
    prompt_hash: str
    config_digest: str
    scenario_count: int
    rows: tuple[AggregateRow, ...]

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "prompt_hash": self.prompt_hash,
            "config_digest": self.config_digest,
            "scenario_count": self.scenario_count,
            "rows": [
                {
                    "provider": row.provider,
                    "mode": row.mode,
                    "unit": row.unit,
                    "tp": row.report.counts.tp,
                    "fp": row.report.counts.fp,
                    "fn": row.report.counts.fn,
                    "tn": row.report.counts.tn,
                    "precision": row.report.precision,
                    "recall": row.report.recall,
                    "f1": row.report.f1,
                    "accuracy": row.report.accuracy,
                    "degenerate": list(row.report.degenerate),
                    "task_means": {
                        task: dict(metrics) for task, metrics in row.task_means.items()
                    },
                    "pooled_means": dict(row.pooled_means),
                    "task_counts": dict(row.task_counts),
                    "scored_windows": row.scored_windows,
                    "unscored_windows": row.unscored_windows,
                }
                for row in self.rows
            ],
        }


def _metric_value(report: SimilarityReport, metric: str) -> float | None:
    if metric == "bleu":
        return report.bleu
    if metric == "rouge":
        return report.rouge
    if metric == "w2v_cosine":
        return report.w2v_cosine
    if metric == "st_cosine":
        return report.st_cosine
    raise MetricError(f"unknown similarity metric {metric!r}")


def _mean(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def _similarity_means(window_results: Iterable[WindowResult]):
    per_task: dict[str, dict[str, list[float]]] = {
        task: {m: [] for m in SIMILARITY_METRICS} for task in TASKS
    }
    pooled: dict[str, list[float]] = {m: [] for m in SIMILARITY_METRICS}
    counts = {task: 0 for task in TASKS}
    for result in window_results:
        if not result.scored:
            continue
        for task in TASKS:
            report = result.similarity.get(task)
            if report is None:
                continue
            counts[task] += 1
            for metric in SIMILARITY_METRICS:
                value = _metric_value(report, metric)
                if value is not None:
                    per_task[task][metric].append(value)
                    pooled[metric].append(value)
    task_means = {
        task: {metric: _mean(per_task[task][metric]) for metric in SIMILARITY_METRICS}
        for task in TASKS
    }
    pooled_means = {metric: _mean(pooled[metric]) for metric in SIMILARITY_METRICS}
    return task_means, pooled_means, counts


def aggregate(
    results: Sequence[ScenarioResult],
    run_id: str,
    prompt_hash: str,
    config_digest: str,
    per_window: bool = False,
) -> EvalSummary:
    if not results:
        raise MetricError("cannot aggregate zero results")
    groups: dict[tuple[str, str], list[ScenarioResult]] = {}
    for result in results:
        groups.setdefault((result.provider, result.mode), []).append(result)

    rows: list[AggregateRow] = []
    for (provider, mode), members in sorted(groups.items()):
        members = sorted(members, key=lambda r: r.scenario_id)
        window_results = [w for m in members for w in m.windows]
        scored = sum(1 for w in window_results if w.scored)
        unscored = len(window_results) - scored
        task_means, pooled_means, counts = _similarity_means(window_results)
        report = classification_report(
            confusion([m.truth for m in members], [m.prediction for m in members])
        )
        rows.append(
            AggregateRow(
                provider=provider,
                mode=mode,
                unit="scenario",
                report=report,
                task_means=task_means,
                pooled_means=pooled_means,
                task_counts=counts,
                scored_windows=scored,
                unscored_windows=unscored,
            )
        )
        if per_window:
            window_report = classification_report(
                confusion(
                    [w.truth for w in window_results],
                    [w.classification for w in window_results],
                )
            )
            rows.append(
                AggregateRow(
                    provider=provider,
                    mode=mode,
                    unit="window",
                    report=window_report,
                    task_means=task_means,
                    pooled_means=pooled_means,
                    task_counts=counts,
                    scored_windows=scored,
                    unscored_windows=unscored,
                )
            )

    scenario_ids = {r.scenario_id for r in results}
    return EvalSummary(
        run_id=run_id,
        prompt_hash=prompt_hash,
        config_digest=config_digest,
        scenario_count=len(scenario_ids),
        rows=tuple(rows),
    )


# ---------------------------------------------------------------------------
# full run


def _select_scenarios(config: RunConfig, index: ScenarioIndex) -> list[str]:
    if config.scenario_ids is not None:
        for scenario_id in config.scenario_ids:
            index.get(scenario_id)
        return list(config.scenario_ids)
    return select_balanced(index, config.sample_size, config.sample_seed)


def run_evaluation(
    config: RunConfig,
    transport=None,
    sleep=time.sleep,
) -> tuple[EvalSummary, list[ScenarioResult]]:
    """Evaluate every selected scenario under every (provider, mode) pair.

    Within one (scenario, provider) job the requested modes run base-first,
    so the enhanced pass hits the response cache for its gating verdicts
    instead of re-sending them.
    """
    index = load_manifest(config.dataset_root)
    scenario_ids = _select_scenarios(config, index)
    scenarios = {sid: load_scenario(index, sid) for sid in scenario_ids}

    all_providers = load_providers(config.providers_file)
    missing = [name for name in config.providers if name not in all_providers]
    if missing:
        raise ConfigError(f"providers not in {config.providers_file}: {missing}")
    providers = [all_providers[name] for name in config.providers]

    lexicon = load_lexicon(config.lexicon) if config.lexicon else None
    embedder = build_embedding_provider(config.embeddings)

    run_dir = config.output_dir / config.run_id
    audit_dir = run_dir / "responses"
    ordered_modes = [m for m in MODES if m in config.modes]

    results: list[ScenarioResult] = []
    with Gateway(
        {cfg.name: cfg for cfg in providers},
        cache_dir=config.cache_dir,
        audit_dir=audit_dir,
        transport=transport,
        sleep=sleep,
    ) as gateway:
        evaluator = ScenarioEvaluator(
            gateway, config, lexicon=lexicon, embedder=embedder
        )

        def job(scenario_id: str, provider: ProviderConfig) -> list[ScenarioResult]:
            scenario = scenarios[scenario_id]
            return [evaluator.run_scenario(scenario, provider, mode) for mode in ordered_modes]

        jobs = [(sid, provider) for provider in providers for sid in scenario_ids]
        if config.max_workers > 1:
            with ThreadPoolExecutor(max_workers=config.max_workers) as pool:
                for batch in pool.map(lambda args: job(*args), jobs):
                    results.extend(batch)
        else:
            for args in jobs:
                results.extend(job(*args))

    results.sort(key=lambda r: (r.provider, r.mode, r.scenario_id))
    summary = aggregate(
        results,
        run_id=config.run_id,
        prompt_hash=instruction_hash(),
        config_digest=config.digest(),
        per_window=config.per_window,
    )
    _write_run_artifacts(run_dir, summary, results)
    return summary, results


def _write_run_artifacts(run_dir: Path, summary: EvalSummary, results: list[ScenarioResult]):
    run_dir.mkdir(parents=True, exist_ok=True)
    summary_path = run_dir / "summary.json"
    summary_path.write_text(
        json.dumps(summary.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    meta_path = run_dir / "run_meta.json"
    meta_path.write_text(
        json.dumps(
            {
                "run_id": summary.run_id,
                "completed_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
                "total_scenario_seconds": round(sum(r.timing_s for r in results), 3),
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    lines = []
    for result in results:
        lines.append(
            json.dumps(
                {
                    "scenario_id": result.scenario_id,
                    "provider": result.provider,
                    "mode": result.mode,
                    "truth": result.truth,
                    "prediction": result.prediction,
                    "error": result.error,
                    "timing_ms": int(result.timing_s * 1000),
                    "windows": [
                        {
                            "frames": list(w.frame_indices),
                            "truth": w.truth,
                            "classification": w.classification,
                            "scored": w.scored,
                            "enhanced_sent": w.enhanced_sent,
                            "error": w.error,
                            "similarity": {
                                task: (report.as_dict() if report else None)
                                for task, report in w.similarity.items()
                            },
                        }
                        for w in result.windows
                    ],
                },
                sort_keys=True,
            )
        )
    (run_dir / "results.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")


def has_failures(results: Sequence[ScenarioResult]) -> bool:
    return any(
        result.error is not None or any(not w.scored for w in result.windows)
        for result in results
    )
