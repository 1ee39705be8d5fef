"""Tracking-by-detection: IoU cost, Hungarian assignment, 3-hit confirmation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .assignment import assign
from .kalman import DEFAULT_PARAMS, KalmanParams, KalmanState, kalman_init, kalman_predict, kalman_update
from .sidecars import BoundingBox, Detection

BIG_COST = 1e6  # sentinel for class-incompatible pairs; always gated away


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes, in [0, 1]."""
    ix1 = max(a.x1, b.x1)
    iy1 = max(a.y1, b.y1)
    ix2 = min(a.x2, b.x2)
    iy2 = min(a.y2, b.y2)
    inter = max(0.0, ix2 - ix1) * max(0.0, iy2 - iy1)
    union = a.area + b.area - inter
    return inter / union if union > 0 else 0.0


def _cosine_distance(a: tuple[float, ...], b: tuple[float, ...]) -> float:
    va, vb = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0 or nb == 0:
        return 1.0
    return 1.0 - float(va @ vb) / (na * nb)


@dataclass(frozen=True)
class TrackerConfig:
    min_iou: float = 0.3
    confirm_hits: int = 3
    max_misses: int = 2
    appearance_weight: float = 0.0  # lambda blending cosine distance into the cost
    kalman: KalmanParams = DEFAULT_PARAMS


@dataclass
class Track:
    id: int
    class_label: str
    state: KalmanState
    hits: int = 1
    misses: int = 0
    confirmed: bool = False
    history: list[tuple[int, BoundingBox]] = field(default_factory=list)
    contour: tuple[tuple[float, float], ...] | None = None
    embedding: tuple[float, ...] | None = None

    @property
    def bbox(self) -> BoundingBox:
        """Last associated box; falls back to the filtered state."""
        return self.history[-1][1] if self.history else self.state.bbox()


@dataclass(frozen=True)
class TrackSnapshot:
    """Immutable per-frame view of a track, enough to draw it."""

    id: int
    class_label: str
    bbox: BoundingBox
    contour: tuple[tuple[float, float], ...] | None
    confirmed: bool


class MultiObjectTracker:
    """Per-scenario mutable tracker; ids are never reused within an instance."""

    def __init__(self, config: TrackerConfig = TrackerConfig()):
        self.config = config
        self.tracks: list[Track] = []
        self._next_id = 1

    def step(self, frame_index: int, detections: list[Detection]) -> list[Track]:
        """Advance one frame: predict, associate, update, spawn, age out."""
        cfg = self.config
        for track in self.tracks:
            track.state = kalman_predict(track.state, cfg.kalman)

        n, m = len(self.tracks), len(detections)
        ious = np.zeros((n, m))
        cost = np.full((n, m), BIG_COST)
        for ti, track in enumerate(self.tracks):
            predicted = track.state.bbox()
            for di, det in enumerate(detections):
                if det.class_label != track.class_label:
                    continue
                ov = iou(predicted, det.bbox)
                ious[ti, di] = ov
                c = 1.0 - ov
                lam = cfg.appearance_weight
                if lam > 0 and track.embedding is not None and det.embedding is not None:
                    c = (1.0 - lam) * c + lam * _cosine_distance(track.embedding, det.embedding)
                cost[ti, di] = c

        result = assign(cost, gate=math.inf) if n and m else None
        matched_tracks: set[int] = set()
        matched_dets: set[int] = set()
        if result is not None:
            for ti, di in result.pairs:
                det = detections[di]
                if det.class_label != self.tracks[ti].class_label:
                    continue
                if ious[ti, di] < cfg.min_iou:
                    continue
                track = self.tracks[ti]
                track.state = kalman_update(track.state, det.bbox, cfg.kalman)
                track.hits += 1
                track.misses = 0
                track.history.append((frame_index, det.bbox))
                track.contour = det.contour
                if det.embedding is not None:
                    track.embedding = det.embedding
                if track.hits >= cfg.confirm_hits:
                    track.confirmed = True
                matched_tracks.add(ti)
                matched_dets.add(di)

        for ti, track in enumerate(self.tracks):
            if ti in matched_tracks:
                continue
            track.misses += 1
            if not track.confirmed:
                track.hits = 0

        for di, det in enumerate(detections):
            if di in matched_dets:
                continue
            track = Track(
                id=self._next_id,
                class_label=det.class_label,
                state=kalman_init(det.bbox, cfg.kalman),
                history=[(frame_index, det.bbox)],
                contour=det.contour,
                embedding=det.embedding,
            )
            self._next_id += 1
            self.tracks.append(track)

        self.tracks = [t for t in self.tracks if t.misses <= cfg.max_misses]
        return list(self.tracks)

    def confirmed_tracks(self) -> list[Track]:
        return [t for t in self.tracks if t.hits >= self.config.confirm_hits]

    def snapshot(self, confirmed_only: bool = True) -> list[TrackSnapshot]:
        source = self.confirmed_tracks() if confirmed_only else self.tracks
        return [
            TrackSnapshot(
                id=t.id,
                class_label=t.class_label,
                bbox=t.bbox,
                contour=t.contour,
                confirmed=t.confirmed,
            )
            for t in source
        ]


def track_scenario(
    detections_by_frame: dict[int, list[Detection]],
    frame_indices: list[int],
    config: TrackerConfig = TrackerConfig(),
) -> dict[int, list[TrackSnapshot]]:
    """Run a fresh tracker over a scenario; confirmed-track snapshots per frame."""
    tracker = MultiObjectTracker(config)
    snapshots: dict[int, list[TrackSnapshot]] = {}
    for frame_index in frame_indices:
        tracker.step(frame_index, detections_by_frame.get(frame_index, []))
        snapshots[frame_index] = tracker.snapshot(confirmed_only=True)
    return snapshots
