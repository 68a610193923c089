"""Seedable synthetic degradation of clean video clips.

Frames are float64 arrays of shape (H, W, 3) in [0, 1]; clips are
(T, H, W, 3). Configs, specs and plans are plain dicts mirroring the JSON
schemas used by the ``vdegrade`` command line tool.
"""

from __future__ import annotations

import json
import os
import subprocess
import sys
from typing import Any, Mapping, Sequence

import numpy as np

from . import _core
from ._core import (
    ArgumentError,
    ConfigError,
    EnvironmentError,
    Error,
    IntegrityError,
    IoError,
    ModelError,
    ShapeError,
    StageError,
    block_boundary_metric,
    degradation_types,
    downscale_noise_report,
    psnr,
    read_png,
    resize,
    residual_stats,
    shuffle_variance_report,
    verify_theorem,
    write_png,
)

__all__ = [
    "ArgumentError", "ConfigError", "Error", "IntegrityError", "IoError",
    "ModelError", "ShapeError", "StageError",
    "apply_degradation", "block_boundary_metric", "default_config", "degradation_types",
    "degrade_clips", "downscale_noise_report", "main", "psnr", "read_png", "replay", "resize",
    "residual_stats", "run_cli", "sample_plan", "shuffle_variance_report", "validate_config",
    "verify_theorem", "write_png",
]


def _config_text(config: Mapping[str, Any] | None) -> str:
    return "" if config is None else json.dumps(config)


def default_config() -> dict:
    """Full default config (every type enabled, default ranges)."""
    return json.loads(_core.default_config_json())


def validate_config(config: Mapping[str, Any]) -> dict:
    """Parses a config strictly and returns it with all defaults filled in."""
    return json.loads(_core.normalize_config_json(json.dumps(config)))


def apply_degradation(kind: str, params: Mapping[str, Any], frames: np.ndarray,
                      seed: int = 0, stream: int = 0) -> np.ndarray:
    """Applies one degradation with explicit parameters to a frame or clip."""
    return _core.apply_degradation(kind, json.dumps(params), np.asarray(frames, dtype=np.float64), seed, stream)


def sample_plan(config: Mapping[str, Any] | None = None, clip_index: int = 0, frame_count: int = 1) -> dict:
    """The plan ``degrade`` would draw for clip ``clip_index``."""
    return json.loads(_core.sample_plan(_config_text(config), clip_index, frame_count))


def degrade_clips(clips: Sequence[np.ndarray], config: Mapping[str, Any] | None = None,
                  jobs: int = 1) -> tuple[list[np.ndarray], dict]:
    """Degrades clips with one fresh plan each; returns outputs and the manifest."""
    arrays = [np.asarray(c, dtype=np.float64) for c in clips]
    out, manifest = _core.degrade_clips(arrays, _config_text(config), jobs)
    return out, json.loads(manifest)


def replay(frames: np.ndarray, plan: Mapping[str, Any], config: Mapping[str, Any] | None = None) -> np.ndarray:
    """Re-applies a recorded plan (e.g. from a manifest) to a clip."""
    return _core.replay(np.asarray(frames, dtype=np.float64), json.dumps(plan), _config_text(config))


def run_cli(args: Sequence[str]) -> int:
    """Runs the command line interface in-process and returns its exit code."""
    return _core.run_cli(list(args))


def main() -> None:
    exe = os.path.join(os.path.dirname(__file__), "bin", "vdegrade")
    if os.path.exists(exe):
        sys.exit(subprocess.call([exe, *sys.argv[1:]]))
    sys.exit(run_cli(sys.argv[1:]))
