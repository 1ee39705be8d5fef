"""Shared builders: synthetic scenario trees, sidecars, and a pixel-oracle mock provider.

The mock provider decides its verdict from pixel (0, 0) of the first attached
image: a pure red marker means collision. Fixture trees place that marker on
chosen window-start frames, which makes every confusion cell constructible.
"""

from __future__ import annotations

import base64
import hashlib
import io
import json
import threading
from pathlib import Path

import httpx
import numpy as np
import pytest
from PIL import Image

FIXTURES = Path(__file__).parent / "fixtures"

MARKER = (255, 0, 0)
FRAME_SIZE = (64, 48)  # (w, h)

REF_JUSTIFICATION = "The vehicle lost control and collided with a roadside barrier."
REF_SCENE = "A roadside barrier stood beside the course of the vehicle."
REF_OBJECTS = "car: a vehicle close to the roadside barrier"

HYP_POSITIVE = {
    "classification": 1,
    "justification": "A vehicle lost control and struck a roadside barrier.",
    "scene_context": "A barrier beside the roadside on the course of the vehicle.",
    "objects": [{"label": "car", "description": "a vehicle near the roadside barrier"}],
}
HYP_NEGATIVE = {
    "classification": 0,
    "justification": "Vehicles proceed along the course with no contact.",
    "scene_context": "A roadside scene with a barrier in view.",
    "objects": [{"label": "car", "description": "a vehicle on the course"}],
}


# ---------------------------------------------------------------------------
# frames and scenario trees


def make_frame(size=FRAME_SIZE, shade=90, marker=False, stamp: bytes | None = None) -> np.ndarray:
    w, h = size
    arr = np.full((h, w, 3), shade, dtype=np.uint8)
    arr[:, :, 1] = (shade + np.arange(w)[None, :] % 7).astype(np.uint8)
    if stamp is not None:
        # bottom-row fingerprint keeps every frame globally unique so the
        # content-addressed response cache never conflates two windows
        arr[-1, : len(stamp), 2] = np.frombuffer(stamp, dtype=np.uint8)
    if marker:
        arr[0, 0] = MARKER
    return arr


def save_frame(path: Path, arr: np.ndarray) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr, mode="RGB").save(path, format="PNG")


def scenario_sidecar_doc(scenario_id: str, n_frames: int, size=FRAME_SIZE) -> dict:
    """One car sliding right 1 px/frame; always trackable and confirmable."""
    frames = []
    for i in range(n_frames):
        x1 = 10.0 + i
        bbox = [x1, 10.0, x1 + 16.0, 22.0]
        contour = [[x1, 10.0], [x1 + 16.0, 10.0], [x1 + 16.0, 22.0], [x1, 22.0]]
        frames.append(
            {
                "index": i,
                "detections": [
                    {"class": "car", "confidence": 0.9, "bbox": bbox, "contour": contour}
                ],
            }
        )
    return {"scenario_id": scenario_id, "image_size": list(size), "frames": frames}


def build_scenario(
    root: Path,
    scenario_id: str,
    *,
    n_frames: int = 7,
    accident_frames: tuple[int, ...] = (),
    marker_frames: tuple[int, ...] = (),
    accident_type: str = "barrier_collision",
    size=FRAME_SIZE,
    with_sidecar: bool = True,
) -> Path:
    scenario_dir = root / scenario_id
    for i in range(n_frames):
        stamp = hashlib.sha256(f"{scenario_id}:{i}".encode("utf-8")).digest()[:16]
        save_frame(
            scenario_dir / "frames" / f"{i:06d}.png",
            make_frame(size=size, marker=i in marker_frames, stamp=stamp),
        )
    entries = []
    for i in range(n_frames):
        accident = i in accident_frames
        entries.append(
            {
                "index": i,
                "accident": accident,
                "scene_context": REF_SCENE if accident else "",
                "object_info": REF_OBJECTS if accident else "",
                "justification": REF_JUSTIFICATION if accident else "",
            }
        )
    annotation = {
        "accident_type": accident_type if accident_frames else "none",
        "has_accident": bool(accident_frames),
        "frames": entries,
    }
    (scenario_dir / "annotation.json").write_text(
        json.dumps(annotation, indent=2), encoding="utf-8"
    )
    if with_sidecar:
        (scenario_dir / "detections.json").write_text(
            json.dumps(scenario_sidecar_doc(scenario_id, n_frames, size), indent=2),
            encoding="utf-8",
        )
    return scenario_dir


# scenario_id -> (accident frames, marker frames); markers sit on window starts
# for 7-frame scenarios windowed as [0-2], [3-5], [6]
E2E_PLAN = {
    "acc_01": ((3, 4, 5, 6), (0,)),
    "acc_02": ((3, 4, 5, 6), (3,)),
    "acc_03": ((3, 4, 5, 6), (0, 3)),
    "acc_04": ((3, 4, 5, 6), (6,)),
    "acc_05": ((3, 4, 5, 6), ()),        # missed by the oracle -> fn
    "norm_01": ((), (3,)),               # flagged by the oracle -> fp
    "norm_02": ((), ()),
    "norm_03": ((), ()),
    "norm_04": ((), ()),
    "norm_05": ((), ()),
}
E2E_POSITIVE_WINDOWS = sum(len(markers) for _, markers in E2E_PLAN.values())


def build_e2e_dataset(root: Path) -> Path:
    root.mkdir(parents=True, exist_ok=True)
    for scenario_id, (accident_frames, marker_frames) in E2E_PLAN.items():
        build_scenario(
            root,
            scenario_id,
            accident_frames=accident_frames,
            marker_frames=marker_frames,
        )
    return root


# ---------------------------------------------------------------------------
# mock provider


class PixelOracle:
    """Scripted chat-completions endpoint; thread-safe call counting."""

    def __init__(self):
        self.calls = 0
        self._lock = threading.Lock()

    def handler(self, request: httpx.Request) -> httpx.Response:
        with self._lock:
            self.calls += 1
        payload = json.loads(request.content.decode("utf-8"))
        content = payload["messages"][0]["content"]
        urls = [c["image_url"]["url"] for c in content if c.get("type") == "image_url"]
        b64 = urls[0].split(",", 1)[1]
        with Image.open(io.BytesIO(base64.b64decode(b64))) as img:
            pixel = img.convert("RGB").getpixel((0, 0))
        verdict = HYP_POSITIVE if pixel == MARKER else HYP_NEGATIVE
        body = {"choices": [{"message": {"content": json.dumps(verdict)}}]}
        return httpx.Response(200, json=body)

    def transport(self) -> httpx.MockTransport:
        return httpx.MockTransport(self.handler)


def refusing_transport() -> httpx.MockTransport:
    def handler(request: httpx.Request) -> httpx.Response:
        raise AssertionError(f"unexpected network call: {request.url}")

    return httpx.MockTransport(handler)


def write_providers_file(path: Path, max_parallel: int = 4) -> Path:
    path.write_text(
        json.dumps(
            [
                {
                    "name": "mock",
                    "endpoint": "https://mock.invalid/v1/chat/completions",
                    "model_id": "pixel-oracle",
                    "auth_env": "MOCK_API_KEY",
                    "wire": "openai_chat",
                    "max_parallel": max_parallel,
                }
            ],
            indent=2,
        ),
        encoding="utf-8",
    )
    return path


@pytest.fixture()
def mock_api_key(monkeypatch):
    monkeypatch.setenv("MOCK_API_KEY", "test-key")


@pytest.fixture()
def sentences() -> dict[str, str]:
    return json.loads((FIXTURES / "sentences.json").read_text(encoding="utf-8"))
