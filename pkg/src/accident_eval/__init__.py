"""Two-pass multimodal evaluation pipeline for traffic-scenario analysis.

Scenario frames are sent to vision-language providers in three-frame windows;
windows flagged as collisions are re-sent with tracked-object overlays, and
model descriptions are scored against ground-truth annotations with lexical
and embedding-space similarity metrics.
"""

from __future__ import annotations

from .exceptions import (
    AccidentEvalError,
    ConfigError,
    MetricError,
    ProviderError,
    ScenarioError,
    SidecarError,
    VerdictParseError,
)
from .gateway import Gateway, ModelVerdict, ObjectDescription, ProviderConfig, load_providers, parse_verdict
from .prompting import PromptRequest, build_base_prompt, build_enhanced_prompt, instruction_hash, load_instruction
from .rendering import RenderStyle, render_enhanced
from .runner import (
    EvalSummary,
    RunConfig,
    ScenarioResult,
    WindowResult,
    aggregate,
    load_run_config,
    run_evaluation,
    scenario_verdict,
)
from .scenarios import FrameWindow, Scenario, ScenarioIndex, load_manifest, load_scenario, select_balanced, windows
from .sidecars import BoundingBox, ClassAllowlist, Detection, Sidecar, filter_classes, parse_sidecar, validate_sidecar
from .tracker import MultiObjectTracker, TrackerConfig, TrackSnapshot, iou, track_scenario

__version__ = "0.1.0"

__all__ = [
    "AccidentEvalError",
    "BoundingBox",
    "ClassAllowlist",
    "ConfigError",
    "Detection",
    "EvalSummary",
    "FrameWindow",
    "Gateway",
    "MetricError",
    "ModelVerdict",
    "MultiObjectTracker",
    "ObjectDescription",
    "PromptRequest",
    "ProviderConfig",
    "ProviderError",
    "RenderStyle",
    "RunConfig",
    "Scenario",
    "ScenarioError",
    "ScenarioIndex",
    "ScenarioResult",
    "Sidecar",
    "SidecarError",
    "TrackSnapshot",
    "TrackerConfig",
    "VerdictParseError",
    "WindowResult",
    "aggregate",
    "build_base_prompt",
    "build_enhanced_prompt",
    "filter_classes",
    "instruction_hash",
    "iou",
    "load_instruction",
    "load_manifest",
    "load_providers",
    "load_run_config",
    "load_scenario",
    "parse_sidecar",
    "parse_verdict",
    "render_enhanced",
    "run_evaluation",
    "scenario_verdict",
    "select_balanced",
    "track_scenario",
    "validate_sidecar",
    "windows",
]
