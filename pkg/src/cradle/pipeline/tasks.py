"""Task stack with long/short horizons and reflection outcomes."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any, Literal

Horizon = Literal["long", "short"]
DEFAULT_SHORT_WINDOW = 3


@dataclass(frozen=True)
class TaskSpec:
    description: str
    horizon: Horizon = "long"
    created_iter: int = 0

    def __post_init__(self):
        if self.horizon not in ("long", "short"):
            raise ValueError(f"horizon must be long or short, got {self.horizon!r}")

    def to_json(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class ReflectionOutcome:
    last_action_ok: bool = True
    task_done: bool = False
    failure_analysis: str = ""
    continue_held_action: bool = False

    def __post_init__(self):
        if not self.last_action_ok and not self.failure_analysis.strip():
            raise ValueError("a failed action needs a failure analysis")

    def to_json(self) -> dict[str, Any]:
        return asdict(self)

    def summary(self) -> str:
        if self.last_action_ok:
            return "last action succeeded" + ("; task done" if self.task_done else "")
        return f"last action failed: {self.failure_analysis}"


class TaskStack:
    """Stack of tasks whose bottom is the run's root task.

    At most one short task is active at a time; it sits on top of the stack
    and expires once it has been active for ``window`` iterations. The root
    task is never popped.
    """

    def __init__(self, root: TaskSpec, window: int = DEFAULT_SHORT_WINDOW):
        if window < 1:
            raise ValueError("short-task window must be at least 1")
        self.window = window
        self._stack = [root]

    @property
    def active(self) -> TaskSpec:
        return self._stack[-1]

    @property
    def tasks(self) -> list[TaskSpec]:
        return list(self._stack)

    def __len__(self) -> int:
        return len(self._stack)

    def push(self, task: TaskSpec) -> bool:
        """Adopt ``task``; returns False when it equals the active task."""
        if task.description.strip().lower() == self.active.description.strip().lower():
            return False
        if self.active.horizon == "short" and len(self._stack) > 1:
            self._stack.pop()
        self._stack.append(task)
        return True

    def pop(self) -> TaskSpec | None:
        """Finish the active task and resume the last long-horizon one."""
        if len(self._stack) == 1:
            return None
        done = self._stack.pop()
        while len(self._stack) > 1 and self._stack[-1].horizon == "short":
            self._stack.pop()
        return done

    def expire(self, iteration: int) -> TaskSpec | None:
        """Drop the active short task once it has had its window of iterations."""
        top = self.active
        if top.horizon == "short" and len(self._stack) > 1 and iteration - top.created_iter >= self.window:
            return self.pop()
        return None
