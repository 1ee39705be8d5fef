"""Detection sidecar interchange: one JSON file per scenario, detections grouped by frame.

The sidecar decouples the pipeline from any detector. Schema:

    {
      "scenario_id": str,
      "image_size": [w, h],
      "frames": [
        {"index": int,
         "detections": [
            {"class": str, "confidence": float, "bbox": [x1, y1, x2, y2],
             "contour": [[x, y], ...] | null,
             "embedding": [float, ...]   # optional appearance feature
            }]}]}
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .exceptions import SidecarError

DEFAULT_ALLOWED_CLASSES = frozenset(
    {"person", "bicycle", "car", "motorcycle", "bus", "train", "truck"}
)


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in image coordinates, origin top-left."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        for name in ("x1", "y1", "x2", "y2"):
            if not math.isfinite(getattr(self, name)):
                raise SidecarError(f"bbox.{name} is not finite")
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise SidecarError(
                f"degenerate bbox ({self.x1}, {self.y1}, {self.x2}, {self.y2})"
            )

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)

    @property
    def area(self) -> float:
        return self.width * self.height

    def as_list(self) -> list[float]:
        return [self.x1, self.y1, self.x2, self.y2]


@dataclass(frozen=True)
class Detection:
    """One detector output on one frame."""

    frame_index: int
    class_label: str
    confidence: float
    bbox: BoundingBox
    contour: tuple[tuple[float, float], ...] | None = None
    embedding: tuple[float, ...] | None = None

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise SidecarError(
                f"frame {self.frame_index}: confidence {self.confidence} outside [0, 1]"
            )
        if self.contour is not None and len(self.contour) < 3:
            raise SidecarError(f"frame {self.frame_index}: contour too short")


@dataclass(frozen=True)
class ClassAllowlist:
    labels: frozenset[str] = DEFAULT_ALLOWED_CLASSES

    def __post_init__(self):
        if not self.labels:
            raise SidecarError("class allowlist must be non-empty")

    def __contains__(self, label: str) -> bool:
        return label in self.labels


@dataclass(frozen=True)
class Sidecar:
    """Parsed sidecar file: identity, image size, flat detection list."""

    scenario_id: str
    image_size: tuple[int, int]
    detections: tuple[Detection, ...]

    def frame_detections(self, frame_index: int) -> list[Detection]:
        return [d for d in self.detections if d.frame_index == frame_index]


@dataclass(frozen=True)
class ValidationIssue:
    frame_index: int | None
    field: str
    message: str


@dataclass
class ValidationReport:
    issues: list[ValidationIssue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues


def _check_record(rec: dict, frame_index: int, image_size) -> list[ValidationIssue]:
    issues = []
    label = rec.get("class")
    if not isinstance(label, str) or not label:
        issues.append(ValidationIssue(frame_index, "class", "missing or empty class"))
    conf = rec.get("confidence")
    if not isinstance(conf, (int, float)) or not 0.0 <= conf <= 1.0:
        issues.append(
            ValidationIssue(frame_index, "confidence", f"confidence {conf!r} outside [0, 1]")
        )
    bbox = rec.get("bbox")
    if (
        not isinstance(bbox, list)
        or len(bbox) != 4
        or not all(isinstance(v, (int, float)) and math.isfinite(v) for v in bbox)
    ):
        issues.append(ValidationIssue(frame_index, "bbox", f"malformed bbox {bbox!r}"))
    elif not (bbox[0] < bbox[2] and bbox[1] < bbox[3]):
        issues.append(ValidationIssue(frame_index, "bbox", f"degenerate bbox {bbox!r}"))
    contour = rec.get("contour")
    if contour is not None:
        if not isinstance(contour, list) or any(
            not isinstance(p, list) or len(p) != 2 for p in contour
        ):
            issues.append(ValidationIssue(frame_index, "contour", "malformed contour"))
        elif len(contour) < 3:
            issues.append(ValidationIssue(frame_index, "contour", "contour too short"))
        elif image_size is not None:
            w, h = image_size
            for x, y in contour:
                if not (0 <= x <= w and 0 <= y <= h):
                    issues.append(
                        ValidationIssue(
                            frame_index, "contour", f"vertex ({x}, {y}) outside image bounds"
                        )
                    )
                    break
    return issues


def _load_document(file: Path) -> dict:
    text = Path(file).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SidecarError(
            f"{file}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(doc, dict):
        raise SidecarError(f"{file}: top-level value must be an object")
    return doc


def read_sidecar(file: Path) -> Sidecar:
    """Parse and strictly validate a sidecar file."""
    doc = _load_document(file)
    scenario_id = doc.get("scenario_id")
    if not isinstance(scenario_id, str) or not scenario_id:
        raise SidecarError(f"{file}: missing scenario_id")
    size = doc.get("image_size")
    if not (isinstance(size, list) and len(size) == 2 and all(isinstance(v, int) and v > 0 for v in size)):
        raise SidecarError(f"{file}: malformed image_size {size!r}")
    frames = doc.get("frames")
    if not isinstance(frames, list):
        raise SidecarError(f"{file}: frames must be a list")

    detections: list[Detection] = []
    for frame in sorted(frames, key=lambda f: f.get("index", 0)):
        idx = frame.get("index")
        if not isinstance(idx, int) or idx < 0:
            raise SidecarError(f"{file}: malformed frame index {idx!r}")
        for rec in frame.get("detections", []):
            issues = _check_record(rec, idx, size)
            if issues:
                first = issues[0]
                raise SidecarError(f"{file}: frame {idx}: invalid {first.field}: {first.message}")
            contour = rec.get("contour")
            embedding = rec.get("embedding")
            detections.append(
                Detection(
                    frame_index=idx,
                    class_label=rec["class"],
                    confidence=float(rec["confidence"]),
                    bbox=BoundingBox(*[float(v) for v in rec["bbox"]]),
                    contour=tuple((float(x), float(y)) for x, y in contour) if contour else None,
                    embedding=tuple(float(v) for v in embedding) if embedding else None,
                )
            )
    return Sidecar(scenario_id, (size[0], size[1]), tuple(detections))


def parse_sidecar(file: Path) -> list[Detection]:
    """All detections in the file, ordered by (frame_index, input order)."""
    return list(read_sidecar(file).detections)


def validate_sidecar(file: Path) -> ValidationReport:
    """Collect every structural issue instead of stopping at the first."""
    report = ValidationReport()
    try:
        doc = _load_document(file)
    except (SidecarError, OSError) as exc:
        report.issues.append(ValidationIssue(None, "file", str(exc)))
        return report

    if not isinstance(doc.get("scenario_id"), str) or not doc.get("scenario_id"):
        report.issues.append(ValidationIssue(None, "scenario_id", "missing scenario_id"))
    size = doc.get("image_size")
    if not (
        isinstance(size, list) and len(size) == 2 and all(isinstance(v, int) and v > 0 for v in size)
    ):
        report.issues.append(ValidationIssue(None, "image_size", f"malformed image_size {size!r}"))
        size = None
    frames = doc.get("frames")
    if not isinstance(frames, list):
        report.issues.append(ValidationIssue(None, "frames", "frames must be a list"))
        return report
    for frame in frames:
        idx = frame.get("index") if isinstance(frame, dict) else None
        if not isinstance(idx, int) or idx < 0:
            report.issues.append(ValidationIssue(None, "index", f"malformed frame index {idx!r}"))
            continue
        for rec in frame.get("detections", []):
            report.issues.extend(_check_record(rec, idx, size))
    return report


def filter_classes(
    detections: Iterable[Detection], allow: ClassAllowlist = ClassAllowlist()
) -> list[Detection]:
    """Keep only detections whose class is in the allowlist, order preserved."""
    return [d for d in detections if d.class_label in allow]


def serialize_sidecar(sidecar: Sidecar) -> str:
    """Canonical JSON text; serializing a parsed sidecar twice is byte-stable."""
    by_frame: dict[int, list[Detection]] = {}
    for det in sidecar.detections:
        by_frame.setdefault(det.frame_index, []).append(det)
    frames = []
    for idx in sorted(by_frame):
        records = []
        for det in by_frame[idx]:
            rec: dict = {
                "class": det.class_label,
                "confidence": det.confidence,
                "bbox": det.bbox.as_list(),
                "contour": [[x, y] for x, y in det.contour] if det.contour else None,
            }
            if det.embedding is not None:
                rec["embedding"] = list(det.embedding)
            records.append(rec)
        frames.append({"index": idx, "detections": records})
    doc = {
        "scenario_id": sidecar.scenario_id,
        "image_size": [sidecar.image_size[0], sidecar.image_size[1]],
        "frames": frames,
    }
    return json.dumps(doc, indent=2) + "\n"


def write_sidecar(sidecar: Sidecar, file: Path) -> None:
    Path(file).write_text(serialize_sidecar(sidecar), encoding="utf-8")


def sidecar_path(dataset_root: Path, scenario_id: str, detections_root: Path | None = None) -> Path:
    """Resolve the sidecar for a scenario.

    `<detections_root>/<scenario_id>.json` wins when a detections root is given;
    the fallback is `<dataset_root>/<scenario_id>/detections.json`.
    """
    if detections_root is not None:
        candidate = Path(detections_root) / f"{scenario_id}.json"
        if candidate.exists():
            return candidate
    return Path(dataset_root) / scenario_id / "detections.json"


def group_by_frame(detections: Sequence[Detection]) -> dict[int, list[Detection]]:
    grouped: dict[int, list[Detection]] = {}
    for det in detections:
        grouped.setdefault(det.frame_index, []).append(det)
    return grouped
