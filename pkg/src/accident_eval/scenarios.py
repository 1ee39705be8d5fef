"""Scenario loading, validation, balanced selection, and frame windowing.

On-disk layout per scenario:

    <root>/<scenario_id>/frames/<index:06d>.png   (or .jpg)
    <root>/<scenario_id>/annotation.json

annotation.json:

    {"accident_type": str, "has_accident": bool,
     "frames": [{"index": int, "accident": bool,
                 "scene_context": str, "object_info": str, "justification": str}]}
"""

from __future__ import annotations

import json
import logging
import os
import random
from dataclasses import dataclass, field
from pathlib import Path

from .exceptions import ScenarioError

log = logging.getLogger(__name__)

FRAME_SUFFIXES = (".png", ".jpg", ".jpeg")

# Dataset recordings run 45-120 frames; shorter synthetic fixtures are legal
# but flagged so a misconfigured ingest is visible.
CONFORMANT_FRAME_RANGE = (45, 120)


@dataclass(frozen=True)
class FrameAnnotation:
    frame_index: int
    accident: bool
    scene_context: str = ""
    object_info: str = ""
    justification: str = ""


@dataclass(frozen=True)
class FrameRecord:
    index: int
    image_path: Path


@dataclass(frozen=True)
class ScenarioMeta:
    id: str
    accident_type: str
    has_accident: bool
    frame_count: int


@dataclass(frozen=True)
class ManifestIssue:
    scenario_id: str
    severity: str  # "error" | "warning"
    message: str


@dataclass(frozen=True)
class ScenarioIndex:
    root_path: Path
    entries: tuple[ScenarioMeta, ...]
    issues: tuple[ManifestIssue, ...] = ()

    def ids(self) -> list[str]:
        return [e.id for e in self.entries]

    def get(self, scenario_id: str) -> ScenarioMeta:
        for entry in self.entries:
            if entry.id == scenario_id:
                return entry
        raise ScenarioError(f"unknown scenario {scenario_id!r}")


@dataclass(frozen=True)
class Scenario:
    id: str
    accident_type: str
    frames: tuple[FrameRecord, ...]
    annotations: tuple[FrameAnnotation, ...]

    @property
    def frame_count(self) -> int:
        return len(self.frames)

    @property
    def has_accident(self) -> bool:
        return any(a.accident for a in self.annotations)

    def annotation_for(self, frame_index: int) -> FrameAnnotation:
        """Annotation of a frame; frames without an entry count as non-accident."""
        for ann in self.annotations:
            if ann.frame_index == frame_index:
                return ann
        return FrameAnnotation(frame_index=frame_index, accident=False)


@dataclass(frozen=True)
class FrameWindow:
    scenario_id: str
    frame_indices: tuple[int, ...]
    label: bool

    def __post_init__(self):
        if not 1 <= len(self.frame_indices) <= 3:
            raise ScenarioError(f"window must hold 1-3 frames, got {len(self.frame_indices)}")
        for a, b in zip(self.frame_indices, self.frame_indices[1:]):
            if b != a + 1:
                raise ScenarioError(f"window indices not consecutive: {self.frame_indices}")


def _read_annotation(path: Path) -> dict:
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ScenarioError("annotation.json missing")
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"annotation.json malformed at line {exc.lineno}: {exc.msg}")
    if not isinstance(doc, dict):
        raise ScenarioError("annotation.json must hold an object")
    return doc


def _parse_annotations(doc: dict, frame_indices: set[int]) -> list[FrameAnnotation]:
    accident_type = doc.get("accident_type")
    if not isinstance(accident_type, str) or not accident_type:
        raise ScenarioError("accident_type missing or empty")
    if not isinstance(doc.get("has_accident"), bool):
        raise ScenarioError("has_accident missing or not boolean")
    entries = doc.get("frames", [])
    if not isinstance(entries, list):
        raise ScenarioError("frames must be a list")
    annotations = []
    for entry in entries:
        idx = entry.get("index")
        accident = entry.get("accident")
        if not isinstance(idx, int) or not isinstance(accident, bool):
            raise ScenarioError(f"frame entry malformed: {entry!r}")
        if idx not in frame_indices:
            raise ScenarioError(f"annotation references missing frame {idx}")
        ann = FrameAnnotation(
            frame_index=idx,
            accident=accident,
            scene_context=entry.get("scene_context", "") or "",
            object_info=entry.get("object_info", "") or "",
            justification=entry.get("justification", "") or "",
        )
        if accident and not (ann.scene_context and ann.object_info and ann.justification):
            raise ScenarioError(f"frame {idx} marked accident but description fields are empty")
        annotations.append(ann)
    annotations.sort(key=lambda a: a.frame_index)
    declared = doc["has_accident"]
    derived = any(a.accident for a in annotations)
    if declared != derived:
        raise ScenarioError(
            f"has_accident={declared} inconsistent with frame flags (OR={derived})"
        )
    return annotations


def _frame_files(scenario_dir: Path) -> list[FrameRecord]:
    frames_dir = scenario_dir / "frames"
    if not frames_dir.is_dir():
        raise ScenarioError("frames/ directory missing")
    records = []
    for child in sorted(frames_dir.iterdir()):
        if child.suffix.lower() not in FRAME_SUFFIXES:
            continue
        try:
            index = int(child.stem)
        except ValueError:
            raise ScenarioError(f"frame file {child.name} has a non-numeric name")
        records.append(FrameRecord(index=index, image_path=child))
    if not records:
        raise ScenarioError("no frame images found")
    records.sort(key=lambda r: r.index)
    expected = list(range(len(records)))
    actual = [r.index for r in records]
    if actual != expected:
        raise ScenarioError(f"frame indices not contiguous from 0: {actual[:8]}...")
    return records


def load_manifest(root: Path) -> ScenarioIndex:
    """Index every parseable scenario directory under root.

    Malformed directories become issues, never silent drops. A missing root is
    the only fatal condition.
    """
    root = Path(root)
    if not root.is_dir():
        raise ScenarioError(f"dataset root {root} does not exist")
    entries: list[ScenarioMeta] = []
    issues: list[ManifestIssue] = []
    for child in sorted(root.iterdir()):
        if not child.is_dir():
            continue
        scenario_id = child.name
        try:
            frames = _frame_files(child)
            doc = _read_annotation(child / "annotation.json")
            _parse_annotations(doc, {f.index for f in frames})
        except ScenarioError as exc:
            issues.append(ManifestIssue(scenario_id, "error", str(exc)))
            continue
        count = len(frames)
        lo, hi = CONFORMANT_FRAME_RANGE
        if not lo <= count <= hi:
            issues.append(
                ManifestIssue(
                    scenario_id,
                    "warning",
                    f"frame count {count} outside conformant range [{lo}, {hi}]",
                )
            )
        entries.append(
            ScenarioMeta(
                id=scenario_id,
                accident_type=doc["accident_type"],
                has_accident=doc["has_accident"],
                frame_count=count,
            )
        )
    for issue in issues:
        log.log(
            logging.WARNING if issue.severity == "warning" else logging.ERROR,
            "%s: %s", issue.scenario_id, issue.message,
        )
    return ScenarioIndex(root_path=root, entries=tuple(entries), issues=tuple(issues))


def load_scenario(index: ScenarioIndex, scenario_id: str) -> Scenario:
    """Materialize one scenario: ordered frames plus attached annotations."""
    index.get(scenario_id)  # raises on unknown id
    scenario_dir = index.root_path / scenario_id
    frames = _frame_files(scenario_dir)
    for record in frames:
        if not os.access(record.image_path, os.R_OK):
            raise ScenarioError(f"{scenario_id}: unreadable image file {record.image_path.name}")
    doc = _read_annotation(scenario_dir / "annotation.json")
    annotations = _parse_annotations(doc, {f.index for f in frames})
    return Scenario(
        id=scenario_id,
        accident_type=doc["accident_type"],
        frames=tuple(frames),
        annotations=tuple(annotations),
    )


def select_balanced(index: ScenarioIndex, n: int, seed: int = 0) -> list[str]:
    """Pick n scenario ids, half accident and half not, deterministically.

    Within each class, accident types are drawn round-robin so the selection
    covers types as evenly as the pool allows.
    """
    if n < 0 or n % 2:
        raise ScenarioError(f"selection size must be even and non-negative, got {n}")
    if n == 0:
        return []
    half = n // 2
    pools = {True: [e for e in index.entries if e.has_accident],
             False: [e for e in index.entries if not e.has_accident]}
    for flag, name in ((True, "accident"), (False, "non-accident")):
        if len(pools[flag]) < half:
            raise ScenarioError(
                f"insufficient {name} scenarios: need {half}, have {len(pools[flag])}"
            )
    rng = random.Random(seed)
    selected: list[str] = []
    for flag in (True, False):
        by_type: dict[str, list[str]] = {}
        for entry in pools[flag]:
            by_type.setdefault(entry.accident_type, []).append(entry.id)
        queues = []
        for type_label in sorted(by_type):
            ids = sorted(by_type[type_label])
            rng.shuffle(ids)
            queues.append(ids)
        picked: list[str] = []
        while len(picked) < half:
            progressed = False
            for queue in queues:
                if queue and len(picked) < half:
                    picked.append(queue.pop(0))
                    progressed = True
            if not progressed:
                break
        selected.extend(picked)
    return selected


def windows(scenario: Scenario, size: int = 3) -> list[FrameWindow]:
    """Non-overlapping consecutive windows; the remainder becomes a shorter one.

    A window is labeled positive when any member frame is annotated accident.
    """
    if size < 1:
        raise ScenarioError(f"window size must be >= 1, got {size}")
    result = []
    indices = [f.index for f in scenario.frames]
    for start in range(0, len(indices), size):
        chunk = tuple(indices[start : start + size])
        label = any(scenario.annotation_for(i).accident for i in chunk)
        result.append(FrameWindow(scenario_id=scenario.id, frame_indices=chunk, label=label))
    return result


def write_manifest_cache(index: ScenarioIndex, path: Path | None = None) -> Path:
    """Advisory, regenerable manifest.json next to the scenario directories."""
    target = Path(path) if path else index.root_path / "manifest.json"
    doc = {
        "root": str(index.root_path),
        "entries": [
            {
                "id": e.id,
                "accident_type": e.accident_type,
                "has_accident": e.has_accident,
                "frame_count": e.frame_count,
            }
            for e in index.entries
        ],
    }
    target.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return target
