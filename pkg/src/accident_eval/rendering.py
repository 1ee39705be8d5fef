"""Draw tracked-object overlays onto frames: contours, fallback boxes, track ids.

Pedestrians render in pure green, every other participant in pure blue. All
drawing is plain numpy rasterization so output bytes are stable across
platforms and library versions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from PIL import Image

from .tracker import TrackSnapshot

log = logging.getLogger(__name__)

RGB = tuple[int, int, int]

# 3x5 bitmap digits, row-major; bundled so id labels never depend on system fonts
_DIGITS = {
    "0": ("111", "101", "101", "101", "111"),
    "1": ("010", "110", "010", "010", "111"),
    "2": ("111", "001", "111", "100", "111"),
    "3": ("111", "001", "111", "001", "111"),
    "4": ("101", "101", "111", "001", "001"),
    "5": ("111", "100", "111", "001", "111"),
    "6": ("111", "100", "111", "101", "111"),
    "7": ("111", "001", "001", "010", "010"),
    "8": ("111", "101", "111", "101", "111"),
    "9": ("111", "101", "111", "001", "111"),
}
_GLYPH_SCALE = 2
_GLYPH_W, _GLYPH_H = 3 * _GLYPH_SCALE, 5 * _GLYPH_SCALE


@dataclass(frozen=True)
class RenderStyle:
    person_color: RGB = (0, 255, 0)
    other_color: RGB = (0, 0, 255)
    outline_color: RGB = (0, 0, 0)
    line_thickness: int = 2
    id_label: bool = True

    def __post_init__(self):
        if self.line_thickness < 1:
            raise ValueError("line thickness must be >= 1")


DEFAULT_STYLE = RenderStyle()


def contour_color(class_label: str, style: RenderStyle = DEFAULT_STYLE) -> RGB:
    return style.person_color if class_label == "person" else style.other_color


def _stamp_segment(img: np.ndarray, p0, p1, color: RGB, radius: float) -> None:
    """Color every pixel whose center lies within `radius` of the segment."""
    h, w = img.shape[:2]
    x0, y0 = p0
    x1, y1 = p1
    pad = int(np.ceil(radius)) + 1
    xa = max(0, int(np.floor(min(x0, x1))) - pad)
    xb = min(w - 1, int(np.ceil(max(x0, x1))) + pad)
    ya = max(0, int(np.floor(min(y0, y1))) - pad)
    yb = min(h - 1, int(np.ceil(max(y0, y1))) + pad)
    if xa > xb or ya > yb:
        return
    ys, xs = np.mgrid[ya : yb + 1, xa : xb + 1]
    dx, dy = x1 - x0, y1 - y0
    seg_len2 = dx * dx + dy * dy
    if seg_len2 == 0:
        dist2 = (xs - x0) ** 2 + (ys - y0) ** 2
    else:
        t = ((xs - x0) * dx + (ys - y0) * dy) / seg_len2
        t = np.clip(t, 0.0, 1.0)
        dist2 = (xs - (x0 + t * dx)) ** 2 + (ys - (y0 + t * dy)) ** 2
    mask = dist2 <= radius * radius
    img[ya : yb + 1, xa : xb + 1][mask] = color


def _stamp_polyline(img, points: Sequence[tuple[float, float]], color, thickness, closed=True):
    radius = thickness / 2.0
    n = len(points)
    last = n if closed else n - 1
    for i in range(last):
        _stamp_segment(img, points[i], points[(i + 1) % n], color, radius)


def _clamp_points(points, width, height, track_id, sink: list[str] | None):
    clamped = []
    flagged = False
    for x, y in points:
        cx = min(max(x, 0.0), width - 1.0)
        cy = min(max(y, 0.0), height - 1.0)
        if (cx, cy) != (x, y):
            flagged = True
        clamped.append((cx, cy))
    if flagged:
        message = f"track {track_id}: contour vertex outside image, clamped to border"
        log.warning(message)
        if sink is not None:
            sink.append(message)
    return clamped


def _stamp_glyph(img, glyph_mask: np.ndarray, x: int, y: int, color: RGB) -> None:
    h, w = img.shape[:2]
    gh, gw = glyph_mask.shape
    if x >= w or y >= h or x + gw <= 0 or y + gh <= 0:
        return
    xa, ya = max(x, 0), max(y, 0)
    xb, yb = min(x + gw, w), min(y + gh, h)
    sub = glyph_mask[ya - y : yb - y, xa - x : xb - x]
    img[ya:yb, xa:xb][sub] = color


def _digit_mask(text: str) -> np.ndarray:
    cols = []
    for i, ch in enumerate(text):
        rows = _DIGITS[ch]
        small = np.array([[c == "1" for c in row] for row in rows])
        big = np.kron(small, np.ones((_GLYPH_SCALE, _GLYPH_SCALE), dtype=bool))
        cols.append(big)
        if i < len(text) - 1:
            cols.append(np.zeros((_GLYPH_H, _GLYPH_SCALE), dtype=bool))
    return np.hstack(cols)


def _draw_id(img, track_id: int, x: float, y: float, color: RGB, outline: RGB) -> None:
    mask = _digit_mask(str(track_id))
    px, py = int(round(x)) + 2, int(round(y)) + 2
    # 1-px contrasting outline: stamp the 8 neighbours first
    for ox in (-1, 0, 1):
        for oy in (-1, 0, 1):
            if ox or oy:
                _stamp_glyph(img, mask, px + ox, py + oy, outline)
    _stamp_glyph(img, mask, px, py, color)


def render_enhanced(
    image: np.ndarray,
    tracks: Iterable[TrackSnapshot],
    style: RenderStyle = DEFAULT_STYLE,
    log_sink: list[str] | None = None,
) -> np.ndarray:
    """New image with every confirmed track's contour (or box) and id drawn.

    The input array is never touched; unconfirmed tracks are skipped.
    """
    out = np.array(image, copy=True)
    h, w = out.shape[:2]
    for track in tracks:
        if not track.confirmed:
            continue
        color = contour_color(track.class_label, style)
        if track.contour:
            points = _clamp_points(track.contour, w, h, track.id, log_sink)
            _stamp_polyline(out, points, color, style.line_thickness, closed=True)
        else:
            b = track.bbox
            corners = [(b.x1, b.y1), (b.x2, b.y1), (b.x2, b.y2), (b.x1, b.y2)]
            corners = _clamp_points(corners, w, h, track.id, log_sink)
            _stamp_polyline(out, corners, color, style.line_thickness, closed=True)
        if style.id_label:
            _draw_id(out, track.id, track.bbox.x1, track.bbox.y1, color, style.outline_color)
    return out


def load_image(path: Path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))


def save_png(image: np.ndarray, path: Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.asarray(image, dtype=np.uint8), mode="RGB").save(path, format="PNG")


def enhanced_frame_path(out_dir: Path, scenario_id: str, frame_index: int) -> Path:
    return Path(out_dir) / scenario_id / f"{frame_index:06d}_enhanced.png"


def png_bytes(image: np.ndarray) -> bytes:
    import io

    buf = io.BytesIO()
    Image.fromarray(np.asarray(image, dtype=np.uint8), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()
