"""Build base and enhanced multimodal requests around one versioned instruction.

The instruction text lives in prompts/inspector_v1.txt and is the single
source of truth: base and enhanced requests carry byte-identical text, only
the attached frames differ. A hash pin in the test suite ties metric results
to a specific prompt revision.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

from .exceptions import ConfigError
from .scenarios import FrameWindow

PROMPT_ASSET = "inspector_v1.txt"

# structured response contract; parse_verdict validates against these names
RESPONSE_FIELDS = ("classification", "scene_context", "justification", "objects")
OBJECT_FIELDS = ("label", "description")


@dataclass(frozen=True)
class PromptRequest:
    mode: str  # "base" | "enhanced"
    instruction: str
    images: tuple[bytes, ...]
    scenario_id: str
    window: FrameWindow

    def __post_init__(self):
        if self.mode not in ("base", "enhanced"):
            raise ConfigError(f"unknown prompt mode {self.mode!r}")
        if not 1 <= len(self.images) <= 3:
            raise ConfigError(f"a request carries 1-3 images, got {len(self.images)}")


def load_instruction() -> str:
    return (
        resources.files("accident_eval.prompts").joinpath(PROMPT_ASSET).read_text(encoding="utf-8")
    )


def instruction_hash() -> str:
    return hashlib.sha256(load_instruction().encode("utf-8")).hexdigest()


def _build(mode: str, window: FrameWindow, frames: Sequence[bytes]) -> PromptRequest:
    if len(frames) != len(window.frame_indices):
        raise ConfigError(
            f"window has {len(window.frame_indices)} frames but {len(frames)} images supplied"
        )
    return PromptRequest(
        mode=mode,
        instruction=load_instruction(),
        images=tuple(frames),
        scenario_id=window.scenario_id,
        window=window,
    )


def build_base_prompt(window: FrameWindow, frames: Sequence[bytes]) -> PromptRequest:
    """Raw frames plus the inspector instruction."""
    return _build("base", window, frames)


def build_enhanced_prompt(window: FrameWindow, rendered_frames: Sequence[bytes]) -> PromptRequest:
    """Same instruction, overlay-rendered frames instead of raw ones."""
    return _build("enhanced", window, rendered_frames)
