"""Argument signatures of the primitives callable from skill bodies.

Slot kinds beyond the four parameter kinds narrow what a string may contain:
``key`` (one key name), ``keys`` (``+``-joined key names), ``button``,
``wait`` (sync/async) and ``coords`` (absolute/relative). ``duration`` is a
number checked against the executor's ceiling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

_NONE = object()


@dataclass(frozen=True)
class Slot:
    name: str
    kind: str
    default: Any = _NONE

    @property
    def required(self) -> bool:
        return self.default is _NONE


def _sig(*slots: Slot) -> tuple[Slot, ...]:
    return slots


PRIMITIVES: dict[str, tuple[Slot, ...]] = {
    "key_press": _sig(Slot("key", "key"), Slot("duration", "duration", 0.1)),
    "key_hold": _sig(Slot("key", "key")),
    "key_release": _sig(Slot("key", "key")),
    "key_combo": _sig(Slot("keys", "keys"), Slot("duration", "duration", 0.1), Slot("wait", "wait", "sync")),
    "hotkey": _sig(Slot("keys", "keys"), Slot("duration", "duration", 0.1), Slot("wait", "wait", "sync")),
    "type_text": _sig(Slot("text", "string"), Slot("duration", "duration", 0.0)),
    "button_click": _sig(Slot("button", "button", "left"), Slot("duration", "duration", 0.05)),
    "button_hold": _sig(Slot("button", "button", "left")),
    "button_release": _sig(Slot("button", "button", "left")),
    "mouse_move": _sig(Slot("pos", "point"), Slot("speed", "duration", 0.0), Slot("coords", "coords", "absolute")),
    "mouse_drag": _sig(Slot("pos", "point"), Slot("coords", "coords", "absolute")),
    "scroll": _sig(Slot("distance", "number"), Slot("duration", "duration", 0.0)),
    "wait": _sig(Slot("duration", "duration")),
    "click_on_label": _sig(Slot("label", "label")),
    "double_click_on_label": _sig(Slot("label", "label")),
    "hover_over_label": _sig(Slot("label", "label")),
    "mouse_drag_to_label": _sig(Slot("label", "label")),
}

# slot kind -> parameter kind a param reference must have to fill it
SLOT_PARAM_KIND = {
    "key": "string", "keys": "string", "button": "string", "wait": "string", "coords": "string",
    "string": "string", "number": "number", "duration": "number", "point": "point", "label": "label",
}


def arity(slots: tuple[Slot, ...]) -> tuple[int, int]:
    return sum(1 for s in slots if s.required), len(slots)
