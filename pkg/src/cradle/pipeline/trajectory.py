"""Trajectory files (JSON lines) and deterministic replay.

Line kinds, in order: one ``header`` (carrying ``schema``), an optional
``prelude`` (toolbar exploration before the loop), one ``iteration`` per loop
step and a closing ``result``. Every line that changed the environment lists
its input events as ``[tick, kind, arg]`` triples plus the render digest at
its end tick, so replaying the events against a fresh scenario reproduces
each checkpoint.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable

from ..errors import DigestMismatch, TrajectoryParseError
from ..io_env import Event

SCHEMA = "trajectory/1"


@dataclass(frozen=True)
class RunResult:
    steps_used: int
    success: bool
    reason: str
    trajectory: str | None = None
    stage_ticks: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        return asdict(self)


def _dump(obj: dict[str, Any]) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def encode_events(log: Iterable[tuple[int, Event]]) -> list[list]:
    return [[tick, *ev.to_json()] for tick, ev in log]


def decode_events(items: Iterable[list]) -> list[tuple[int, Event]]:
    out = []
    for item in items:
        tick, kind, arg = item
        out.append((int(tick), Event.from_json([kind, arg])))
    return out


class TrajectoryWriter:
    def __init__(self, path: str | Path, header: dict[str, Any]):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("w", encoding="utf-8")
        self.lines = 0
        self.write({"kind": "header", "schema": SCHEMA, **header})

    def write(self, obj: dict[str, Any]) -> None:
        self._fh.write(_dump(obj) + "\n")
        self._fh.flush()
        self.lines += 1

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()


def read_trajectory(path: str | Path) -> list[dict[str, Any]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise TrajectoryParseError(f"cannot read trajectory {path}: {exc}") from None
    lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise TrajectoryParseError(f"line {lineno}: {exc.msg}") from None
        if not isinstance(obj, dict) or "kind" not in obj:
            raise TrajectoryParseError(f"line {lineno}: not a trajectory record")
        lines.append(obj)
    if not lines or lines[0].get("kind") != "header" or lines[0].get("schema") != SCHEMA:
        raise TrajectoryParseError(f"missing {SCHEMA} header")
    if lines[-1].get("kind") != "result":
        raise TrajectoryParseError("trajectory has no result line (truncated?)")
    for i, obj in enumerate(lines[1:-1], 2):
        if obj["kind"] not in ("prelude", "iteration"):
            raise TrajectoryParseError(f"record {i}: unexpected kind {obj['kind']!r}")
    return lines


def summarize(lines: list[dict[str, Any]], path: str | None = None) -> RunResult:
    result = lines[-1]
    iterations = [o for o in lines if o["kind"] == "iteration"]
    stage_ticks: dict[str, int] = {}
    for it in iterations:
        for stage, t in it.get("stage_ticks", {}).items():
            stage_ticks[stage] = stage_ticks.get(stage, 0) + int(t)
    try:
        return RunResult(int(result["steps_used"]), bool(result["success"]), str(result["reason"]), path,
                         dict(sorted(stage_ticks.items())))
    except KeyError as exc:
        raise TrajectoryParseError(f"result line lacks {exc}") from None


def replay(lines: list[dict[str, Any]], env) -> list[str]:
    """Feed every recorded event into ``env`` and check each digest checkpoint.

    Returns the checkpoint digests; raises :class:`DigestMismatch` at the first
    divergence.
    """
    header = lines[0]
    if env.digest() != header.get("initial_digest"):
        raise DigestMismatch("initial render differs from the recorded one")
    seen = []
    for obj in lines[1:]:
        try:
            events = decode_events(obj.get("events", []))
            end_tick = int(obj["end_tick"])
            want = obj["render_digest"]
        except (KeyError, TypeError, ValueError) as exc:
            raise TrajectoryParseError(f"{obj.get('kind')} record is malformed: {exc}") from None
        for tick, ev in events:
            env.emit(tick, ev)
        env.step_to(end_tick)
        got = env.digest()
        if got != want:
            where = obj.get("iteration", obj["kind"])
            raise DigestMismatch(f"render digest differs at {where} (tick {end_tick})")
        seen.append(got)
    return seen
