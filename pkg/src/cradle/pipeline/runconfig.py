"""Settings for one agent run."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

from ..io_env import PauseStrategy

Rect = tuple[int, int, int, int]
Mode = Literal["games", "software"]


@dataclass(frozen=True)
class AugmentConfig:
    grid: bool = False
    grid_rows: int = 3
    grid_cols: int = 5
    bands: bool = False
    pointer: bool = False
    marks: Literal["none", "standard", "uniform"] = "none"
    min_mark_area: int = 16
    watermark: str | None = None

    def __post_init__(self):
        if self.marks not in ("none", "standard", "uniform"):
            raise ValueError(f"unknown mark style {self.marks!r}")
        if self.grid_rows < 1 or self.grid_cols < 1:
            raise ValueError("grid needs at least one row and column")

    @property
    def any(self) -> bool:
        return self.grid or self.bands or self.pointer or self.marks != "none"


@dataclass(frozen=True)
class ToolbarConfig:
    region: Rect
    submenu_region: Rect | None = None
    hover_wait: float = 0.2
    min_item_size: int = 8


@dataclass(frozen=True)
class RunConfig:
    task: str
    mode: Mode = "games"
    max_steps: int = 20
    actions_per_step: int = 1
    pause: PauseStrategy = PauseStrategy("none")
    fps: float = 2.0
    tick_seconds: float = 0.05
    k: int = 5
    top_k: int = 10
    short_task_window: int = 3
    summary_stride: int = 1
    sentence_cap: int = 8
    reflection_width: int = 512
    text_region: Rect | None = None
    keyframe_threshold: float = 0.02
    settle: float = 0.0
    generate_skills: bool = True
    model: str = "gpt-4o"
    temperature: float = 0.0
    max_tokens: int = 1024
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    toolbar: ToolbarConfig | None = None

    def __post_init__(self):
        if self.mode not in ("games", "software"):
            raise ValueError(f"mode must be games or software, got {self.mode!r}")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.actions_per_step not in (1, 2):
            raise ValueError("actions_per_step must be 1 or 2")
        if self.mode == "games" and self.actions_per_step != 1:
            raise ValueError("games mode executes one action per step")
        if self.short_task_window < 1 or self.k < 1 or self.top_k < 1 or self.summary_stride < 1:
            raise ValueError("window, k, top_k and summary stride must be positive")
        if not 0 < self.fps <= 60:
            raise ValueError("fps must lie in (0, 60]")
        if not 0 < self.keyframe_threshold < 1:
            raise ValueError("keyframe threshold must lie in (0, 1)")

    @property
    def reflection_frames(self) -> int:
        """Games look at a short sampled clip, software at its first and last frame."""
        return 8 if self.mode == "games" else 2
