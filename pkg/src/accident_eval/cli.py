"""Command-line entry points.

Exit codes: 0 success, 1 fatal configuration or IO problem, 2 run completed
with partial failures (some scenarios or windows unscored, or validation
issues found).
"""

from __future__ import annotations

import dataclasses
import json
import sys
from pathlib import Path

import click

from .exceptions import AccidentEvalError, ConfigError
from .metrics.embedding import FixtureEmbeddingProvider, HashedEmbeddingProvider, load_lexicon
from .metrics.similarity import ROUGE_VARIANTS, similarity_report
from .reporting import emit_report
from .runner import has_failures, load_run_config, run_evaluation
from .rendering import RenderStyle, enhanced_frame_path, load_image, render_enhanced, save_png
from .scenarios import load_manifest, load_scenario, write_manifest_cache
from .sidecars import (
    DEFAULT_ALLOWED_CLASSES,
    ClassAllowlist,
    filter_classes,
    group_by_frame,
    read_sidecar,
    sidecar_path,
    validate_sidecar,
)
from .tracker import TrackerConfig, track_scenario

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2


@click.group()
def main():
    """Scenario evaluation pipeline for multimodal traffic-accident analysis."""


def _fatal(message: str) -> "SystemExit":
    click.echo(f"error: {message}", err=True)
    return SystemExit(EXIT_FATAL)


@main.command()
@click.option("--root", required=True, type=click.Path(path_type=Path))
def ingest(root: Path):
    """Index a dataset root and write its manifest cache."""
    try:
        index = load_manifest(root)
    except AccidentEvalError as exc:
        raise _fatal(str(exc))
    cache = write_manifest_cache(index)
    click.echo(f"indexed {len(index.entries)} scenarios -> {cache}")
    for issue in index.issues:
        click.echo(f"  [{issue.severity}] {issue.scenario_id}: {issue.message}")
    if any(issue.severity == "error" for issue in index.issues):
        sys.exit(EXIT_PARTIAL)


@main.command("validate-detections")
@click.option("--root", required=True, type=click.Path(path_type=Path))
@click.option("--detections", type=click.Path(path_type=Path), default=None)
def validate_detections(root: Path, detections: Path | None):
    """Validate every scenario's detection sidecar."""
    try:
        index = load_manifest(root)
    except AccidentEvalError as exc:
        raise _fatal(str(exc))
    bad = 0
    for scenario_id in index.ids():
        path = sidecar_path(root, scenario_id, detections)
        if not path.exists():
            click.echo(f"{scenario_id}: MISSING {path}")
            bad += 1
            continue
        report = validate_sidecar(path)
        if report.ok:
            click.echo(f"{scenario_id}: ok")
        else:
            bad += 1
            click.echo(f"{scenario_id}: {len(report.issues)} issue(s)")
            for issue in report.issues:
                click.echo(f"  frame {issue.frame_index} {issue.field}: {issue.message}")
    sys.exit(EXIT_PARTIAL if bad else EXIT_OK)


def _tracked_scenario(root: Path, scenario_id: str, detections: Path | None, confidence: float):
    index = load_manifest(root)
    scenario = load_scenario(index, scenario_id)
    sidecar = read_sidecar(sidecar_path(root, scenario_id, detections))
    kept = [
        d
        for d in filter_classes(sidecar.detections, ClassAllowlist(DEFAULT_ALLOWED_CLASSES))
        if d.confidence >= confidence
    ]
    frame_indices = [f.index for f in scenario.frames]
    snapshots = track_scenario(group_by_frame(kept), frame_indices, TrackerConfig())
    return scenario, snapshots


@main.command()
@click.option("--scenario", "scenario_id", required=True)
@click.option("--root", required=True, type=click.Path(path_type=Path))
@click.option("--detections", type=click.Path(path_type=Path), default=None)
@click.option("--conf", "confidence", type=float, default=0.5, show_default=True)
@click.option("--dump", type=click.Path(path_type=Path), default=None)
def track(scenario_id: str, root: Path, detections: Path | None, confidence: float, dump: Path | None):
    """Run the tracker over one scenario and summarize confirmed tracks."""
    try:
        scenario, snapshots = _tracked_scenario(root, scenario_id, detections, confidence)
    except AccidentEvalError as exc:
        raise _fatal(str(exc))
    track_ids = sorted({s.id for frame in snapshots.values() for s in frame})
    click.echo(f"{scenario_id}: {len(track_ids)} confirmed track(s) over {len(snapshots)} frames")
    for frame_index in sorted(snapshots):
        entries = snapshots[frame_index]
        if entries:
            ids = ", ".join(str(s.id) for s in entries)
            click.echo(f"  frame {frame_index}: {ids}")
    if dump is not None:
        payload = {
            str(frame_index): [
                {
                    "track_id": s.id,
                    "class": s.class_label,
                    "bbox": list(s.bbox.as_list()),
                    "contour": [list(p) for p in s.contour] if s.contour else None,
                }
                for s in entries
            ]
            for frame_index, entries in sorted(snapshots.items())
        }
        dump.parent.mkdir(parents=True, exist_ok=True)
        dump.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        click.echo(f"wrote {dump}")


@main.command()
@click.option("--scenario", "scenario_id", required=True)
@click.option("--root", required=True, type=click.Path(path_type=Path))
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.option("--detections", type=click.Path(path_type=Path), default=None)
@click.option("--conf", "confidence", type=float, default=0.5, show_default=True)
def render(scenario_id: str, root: Path, out: Path, detections: Path | None, confidence: float):
    """Render overlay frames for one scenario into an output directory."""
    try:
        scenario, snapshots = _tracked_scenario(root, scenario_id, detections, confidence)
        style = RenderStyle()
        count = 0
        for frame in scenario.frames:
            image = load_image(frame.image_path)
            overlaid = render_enhanced(image, snapshots.get(frame.index, []), style)
            save_png(overlaid, enhanced_frame_path(out, scenario_id, frame.index))
            count += 1
    except AccidentEvalError as exc:
        raise _fatal(str(exc))
    click.echo(f"rendered {count} frame(s) under {out / scenario_id}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(path_type=Path))
@click.option("--providers", default=None, help="Comma-separated provider names override.")
@click.option("--modes", default=None, help="Comma-separated mode override (base,enhanced).")
@click.option("--per-window", is_flag=True, default=False)
def evaluate(config_path: Path, providers: str | None, modes: str | None, per_window: bool):
    """Run the two-pass evaluation described by a run.json config."""
    try:
        config = load_run_config(config_path)
        overrides = {}
        if providers:
            overrides["providers"] = tuple(p.strip() for p in providers.split(",") if p.strip())
        if modes:
            overrides["modes"] = tuple(m.strip() for m in modes.split(",") if m.strip())
        if per_window:
            overrides["per_window"] = True
        if overrides:
            config = dataclasses.replace(config, **overrides)
        summary, results = run_evaluation(config)
    except AccidentEvalError as exc:
        raise _fatal(str(exc))
    run_dir = config.output_dir / config.run_id
    click.echo(f"evaluated {summary.scenario_count} scenario(s); summary at {run_dir / 'summary.json'}")
    for row in summary.rows:
        click.echo(
            f"  {row.provider}/{row.mode} [{row.unit}] "
            f"P={row.report.precision:.3f} R={row.report.recall:.3f} "
            f"F1={row.report.f1:.3f} acc={row.report.accuracy:.3f}"
        )
    if has_failures(results):
        click.echo("run completed with partial failures", err=True)
        sys.exit(EXIT_PARTIAL)


@main.command()
@click.option("--run", "run_id", required=True)
@click.option("--runs-dir", type=click.Path(path_type=Path), default=Path("runs"), show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("--no-figures", is_flag=True, default=False)
def report(run_id: str, runs_dir: Path, fmt: str, no_figures: bool):
    """Emit the report table (and figures) for a completed run."""
    summary_path = runs_dir / run_id / "summary.json"
    if not summary_path.exists():
        raise _fatal(f"no summary at {summary_path}")
    try:
        summary = json.loads(summary_path.read_text(encoding="utf-8"))
        written = emit_report(summary, runs_dir / run_id, fmt=fmt, figures=not no_figures)
    except (AccidentEvalError, json.JSONDecodeError) as exc:
        raise _fatal(str(exc))
    for path in written:
        click.echo(f"wrote {path}")


@main.command("metrics-text")
@click.option("--ref", "ref_path", required=True, type=click.Path(path_type=Path))
@click.option("--hyp", "hyp_path", required=True, type=click.Path(path_type=Path))
@click.option("--lexicon", "lexicon_path", type=click.Path(path_type=Path), default=None)
@click.option("--embeddings", default=None, help="Fixture JSON path, or 'hashed'.")
@click.option("--rouge-variant", type=click.Choice(list(ROUGE_VARIANTS)), default="rouge1", show_default=True)
def metrics_text(ref_path: Path, hyp_path: Path, lexicon_path: Path | None, embeddings: str | None, rouge_variant: str):
    """Score one hypothesis file against one reference file."""
    try:
        reference = ref_path.read_text(encoding="utf-8").strip()
        hypothesis = hyp_path.read_text(encoding="utf-8").strip()
    except OSError as exc:
        raise _fatal(str(exc))
    try:
        lexicon = load_lexicon(lexicon_path) if lexicon_path else None
        provider = None
        if embeddings == "hashed":
            provider = HashedEmbeddingProvider()
        elif embeddings:
            provider = FixtureEmbeddingProvider(Path(embeddings))
        result = similarity_report(
            reference, hypothesis, lexicon=lexicon, provider=provider, rouge_variant=rouge_variant
        )
    except AccidentEvalError as exc:
        raise _fatal(str(exc))
    click.echo(json.dumps(result.as_dict(), indent=2))


if __name__ == "__main__":
    main()
