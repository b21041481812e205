"""Unified keyboard/mouse action space and its executor.

Every primitive is lowered to a *timeline*: a list of ``(offset_ticks, kind,
arg)`` low-level events plus a total duration. Synchronous primitives walk the
timeline on the caller's clock; asynchronous ones emit the offset-0 events
immediately and schedule the remainder as clock callbacks.
"""

from __future__ import annotations

import logging
import math
import string
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Literal, Protocol, Sequence, Union

from .clock import SimClock
from .errors import (
    AlreadyHeld,
    BackendFailure,
    CoordinateOutOfBounds,
    CradleError,
    DurationOutOfRange,
    InvalidKey,
    InvalidPrimitive,
    ReleaseNotHeld,
)

log = logging.getLogger(__name__)

KEYS: frozenset[str] = frozenset(
    list(string.ascii_lowercase)
    + list(string.digits)
    + ["esc", "enter", "space", "tab", "shift", "ctrl", "alt", "up", "down", "left", "right"]
    + [f"f{i}" for i in range(1, 13)]
)
BUTTONS = ("left", "middle", "right")
TWEENS = ("identity", "linear", "ease_in", "ease_out", "ease_in_out")
DEFAULT_MAX_DURATION = 30.0

Wait_ = Literal["sync", "async"]
Coords = Literal["absolute", "relative"]


def check_key(key: str) -> str:
    if key not in KEYS:
        raise InvalidKey(f"unknown key name {key!r}")
    return key


def _check_duration(value: float, what: str = "duration") -> None:
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
        raise DurationOutOfRange(f"{what} must be a finite number, got {value!r}")
    if value < 0:
        raise DurationOutOfRange(f"{what} must be >= 0, got {value}")


def _check_keys(keys: Sequence[str]) -> tuple[str, ...]:
    keys = tuple(keys)
    if not keys:
        raise InvalidPrimitive("key list must not be empty")
    if len(set(keys)) != len(keys):
        raise InvalidPrimitive(f"duplicate keys in {keys}")
    for k in keys:
        check_key(k)
    return keys


def _check_button(button: str) -> None:
    if button not in BUTTONS:
        raise InvalidPrimitive(f"unknown mouse button {button!r}")


# --- primitives ---------------------------------------------------------------


@dataclass(frozen=True)
class KeyPress:
    key: str
    duration: float = 0.1

    def __post_init__(self):
        check_key(self.key)
        _check_duration(self.duration)


@dataclass(frozen=True)
class KeyHold:
    key: str

    def __post_init__(self):
        check_key(self.key)


@dataclass(frozen=True)
class KeyRelease:
    key: str

    def __post_init__(self):
        check_key(self.key)


@dataclass(frozen=True)
class KeyCombo:
    keys: tuple[str, ...]
    duration: float = 0.1
    wait: Wait_ = "sync"

    def __post_init__(self):
        object.__setattr__(self, "keys", _check_keys(self.keys))
        _check_duration(self.duration)
        if self.wait not in ("sync", "async"):
            raise InvalidPrimitive(f"wait must be sync or async, got {self.wait!r}")


@dataclass(frozen=True)
class Hotkey:
    keys: tuple[str, ...]
    duration: float = 0.1
    wait: Wait_ = "sync"

    def __post_init__(self):
        object.__setattr__(self, "keys", _check_keys(self.keys))
        _check_duration(self.duration)
        if self.wait not in ("sync", "async"):
            raise InvalidPrimitive(f"wait must be sync or async, got {self.wait!r}")


@dataclass(frozen=True)
class TypeText:
    text: str
    duration: float = 0.0

    def __post_init__(self):
        if not isinstance(self.text, str):
            raise InvalidPrimitive("text must be a string")
        _check_duration(self.duration)


@dataclass(frozen=True)
class ButtonClick:
    button: str = "left"
    duration: float = 0.05

    def __post_init__(self):
        _check_button(self.button)
        _check_duration(self.duration)


@dataclass(frozen=True)
class ButtonHold:
    button: str = "left"

    def __post_init__(self):
        _check_button(self.button)


@dataclass(frozen=True)
class ButtonRelease:
    button: str = "left"

    def __post_init__(self):
        _check_button(self.button)


@dataclass(frozen=True)
class MouseMove:
    x: float
    y: float
    speed: float = 0.0
    coords: Coords = "absolute"
    tween: str = "identity"

    def __post_init__(self):
        _check_duration(self.speed, "speed")
        if self.coords not in ("absolute", "relative"):
            raise InvalidPrimitive(f"coords must be absolute or relative, got {self.coords!r}")
        if self.tween not in TWEENS:
            raise InvalidPrimitive(f"unknown tween mode {self.tween!r}")
        if self.coords == "relative" and not (0 <= self.x <= 1 and 0 <= self.y <= 1):
            raise CoordinateOutOfBounds(f"relative coordinates ({self.x}, {self.y}) outside [0,1]")


@dataclass(frozen=True)
class MouseDrag:
    x: float
    y: float
    coords: Coords = "absolute"

    def __post_init__(self):
        if self.coords not in ("absolute", "relative"):
            raise InvalidPrimitive(f"coords must be absolute or relative, got {self.coords!r}")
        if self.coords == "relative" and not (0 <= self.x <= 1 and 0 <= self.y <= 1):
            raise CoordinateOutOfBounds(f"relative coordinates ({self.x}, {self.y}) outside [0,1]")


@dataclass(frozen=True)
class Scroll:
    distance: int
    duration: float = 0.0
    orientation: Literal["vertical"] = "vertical"

    def __post_init__(self):
        _check_duration(self.duration)
        if self.orientation != "vertical":
            raise InvalidPrimitive("only vertical scrolling is supported")


@dataclass(frozen=True)
class Wait:
    duration: float = 0.0

    def __post_init__(self):
        _check_duration(self.duration)


ActionPrimitive = Union[
    KeyPress, KeyHold, KeyRelease, KeyCombo, Hotkey, TypeText,
    ButtonClick, ButtonHold, ButtonRelease, MouseMove, MouseDrag, Scroll, Wait,
]
PRIMITIVE_TYPES: dict[str, type] = {
    cls.__name__: cls
    for cls in (KeyPress, KeyHold, KeyRelease, KeyCombo, Hotkey, TypeText, ButtonClick,
                ButtonHold, ButtonRelease, MouseMove, MouseDrag, Scroll, Wait)
}


def primitive_to_dict(p: ActionPrimitive) -> dict[str, Any]:
    d = asdict(p)
    if "keys" in d:
        d["keys"] = list(d["keys"])
    return {"type": type(p).__name__, **d}


def primitive_from_dict(d: dict[str, Any]) -> ActionPrimitive:
    d = dict(d)
    cls = PRIMITIVE_TYPES.get(d.pop("type", None))
    if cls is None:
        raise InvalidPrimitive(f"unknown primitive in {d}")
    if "keys" in d:
        d["keys"] = tuple(d["keys"])
    return cls(**d)


def primitive_durations(p: ActionPrimitive) -> list[float]:
    return [getattr(p, f.name) for f in fields(p) if f.name in ("duration", "speed")]


# --- events, backends, reports ------------------------------------------------


@dataclass(frozen=True)
class Event:
    """One low-level input event: key_down/key_up/button_down/button_up/
    pointer_to/scroll, plus focus_out/focus_in for window switching."""

    kind: str
    arg: Any = None

    def to_json(self) -> list:
        arg = list(self.arg) if isinstance(self.arg, tuple) else self.arg
        return [self.kind, arg]

    @classmethod
    def from_json(cls, data: Sequence) -> "Event":
        kind, arg = data
        return cls(kind, tuple(arg) if isinstance(arg, list) else arg)


class Backend(Protocol):
    screen_size: tuple[int, int]

    def emit(self, tick: int, event: Event) -> None: ...


class RecordingBackend:
    """Backend that only logs; the default sink for tests."""

    def __init__(self, screen_size: tuple[int, int] = (1920, 1080)):
        self.screen_size = screen_size
        self.log: list[tuple[int, Event]] = []

    def emit(self, tick: int, event: Event) -> None:
        self.log.append((tick, event))

    def events(self) -> list[Event]:
        return [e for _, e in self.log]


@dataclass
class HeldState:
    held_keys: set[str] = field(default_factory=set)
    held_buttons: set[str] = field(default_factory=set)

    @property
    def empty(self) -> bool:
        return not self.held_keys and not self.held_buttons


@dataclass(frozen=True)
class ExecReport:
    primitive: Any
    started_at: int
    finished_at: int
    outcome: Literal["ok", "error", "not-run"] = "ok"
    error: str | None = None

    def to_json(self) -> dict[str, Any]:
        p = self.primitive
        if isinstance(p, tuple(PRIMITIVE_TYPES.values())):
            p = primitive_to_dict(p)
        return {"primitive": p, "started_at": self.started_at,
                "finished_at": self.finished_at, "outcome": self.outcome, "error": self.error}


@dataclass(frozen=True)
class PauseStrategy:
    kind: Literal["key", "focus", "none"] = "none"
    key: str = "esc"

    def __post_init__(self):
        if self.kind not in ("key", "focus", "none"):
            raise ValueError(f"unknown pause strategy {self.kind!r}")
        if self.kind == "key":
            check_key(self.key)

    @classmethod
    def parse(cls, text: str) -> "PauseStrategy":
        """Parse ``none``, ``focus`` or ``key:<name>``."""
        text = text.strip()
        if text.startswith("key"):
            _, _, key = text.partition(":")
            return cls("key", key or "esc")
        return cls(text)  # type: ignore[arg-type]

    def __str__(self) -> str:
        return f"key:{self.key}" if self.kind == "key" else self.kind


def resolve_coordinates(x: float, y: float, coords: str, screen: tuple[int, int]) -> tuple[int, int]:
    """Map a point to integral absolute pixels.

    Relative inputs map by ``floor(x*w), floor(y*h)`` with 1.0 clamped onto the
    last pixel row/column.
    """
    w, h = screen
    if coords == "relative":
        if not (0 <= x <= 1 and 0 <= y <= 1):
            raise CoordinateOutOfBounds(f"relative point ({x}, {y}) outside [0,1]")
        return min(int(math.floor(x * w)), w - 1), min(int(math.floor(y * h)), h - 1)
    if coords != "absolute":
        raise ValueError(f"unknown coordinate system {coords!r}")
    if not (0 <= x < w and 0 <= y < h):
        raise CoordinateOutOfBounds(f"point ({x}, {y}) outside {w}x{h} screen")
    return int(math.floor(x)), int(math.floor(y))


# --- executor -----------------------------------------------------------------


def _char_keys(ch: str) -> tuple[str, ...]:
    if ch == " ":
        return ("space",)
    if ch == "\n":
        return ("enter",)
    if ch == "\t":
        return ("tab",)
    if ch.isalpha() and ch.isupper() and ch.lower() in KEYS:
        return ("shift", ch.lower())
    return (ch,)


class IOEnv:
    """Executes primitives against a backend on a simulated clock.

    Single-threaded by contract; owns the held-key/button state.
    """

    def __init__(self, backend: Backend, clock: SimClock, *, max_duration: float = DEFAULT_MAX_DURATION):
        self.backend = backend
        self.clock = clock
        self.max_duration = max_duration
        self.held = HeldState()
        self.pointer: tuple[int, int] = (0, 0)
        self._pending: dict[int, tuple[str, ...]] = {}
        self._generation: dict[str, int] = {}  # key -> number of times it went down

    @property
    def screen(self) -> tuple[int, int]:
        return tuple(self.backend.screen_size)  # type: ignore[return-value]

    # low-level ------------------------------------------------------------

    def _emit(self, kind: str, arg: Any = None) -> None:
        if kind == "key_down":
            self.held.held_keys.add(arg)
            self._generation[arg] = self._generation.get(arg, 0) + 1
        elif kind == "key_up":
            self.held.held_keys.discard(arg)
        elif kind == "button_down":
            self.held.held_buttons.add(arg)
        elif kind == "button_up":
            self.held.held_buttons.discard(arg)
        elif kind == "pointer_to":
            self.pointer = arg
        try:
            self.backend.emit(self.clock.now, Event(kind, arg))
        except CradleError:
            raise
        except Exception as exc:
            raise BackendFailure(f"backend rejected {kind} {arg!r}: {exc}") from exc

    def _check_range(self, p: ActionPrimitive) -> None:
        for d in primitive_durations(p):
            if d > self.max_duration:
                raise DurationOutOfRange(f"{d} s exceeds ceiling {self.max_duration} s")

    def _timeline(self, p: ActionPrimitive) -> tuple[list[tuple[int, str, Any]], int]:
        held = self.held
        ticks = self.clock.ticks_for

        def need_free(keys: Sequence[str]) -> None:
            for k in keys:
                if k in held.held_keys:
                    raise AlreadyHeld(f"key {k!r} is already held")

        if isinstance(p, KeyPress):
            need_free([p.key])
            n = ticks(p.duration)
            return [(0, "key_down", p.key), (n, "key_up", p.key)], n
        if isinstance(p, KeyHold):
            need_free([p.key])
            return [(0, "key_down", p.key)], 0
        if isinstance(p, KeyRelease):
            if p.key not in held.held_keys:
                raise ReleaseNotHeld(f"key {p.key!r} is not held")
            return [(0, "key_up", p.key)], 0
        if isinstance(p, KeyCombo):
            need_free(p.keys)
            n = ticks(p.duration)
            evs = [(0, "key_down", k) for k in p.keys]
            evs += [(n, "key_up", k) for k in reversed(p.keys)]
            return evs, n
        if isinstance(p, Hotkey):
            # keys go down one after another across the duration, then release in reverse
            need_free(p.keys)
            n = ticks(p.duration)
            count = len(p.keys)
            evs = [((i * n) // count, "key_down", k) for i, k in enumerate(p.keys)]
            evs += [(n, "key_up", k) for k in reversed(p.keys)]
            return evs, n
        if isinstance(p, TypeText):
            n = ticks(p.duration)
            evs: list[tuple[int, str, Any]] = []
            count = max(len(p.text), 1)
            for i, ch in enumerate(p.text):
                keys = _char_keys(ch)
                need_free(keys)
                at = (i * n) // count
                evs += [(at, "key_down", k) for k in keys]
                evs += [(at, "key_up", k) for k in reversed(keys)]
            return evs, n
        if isinstance(p, ButtonClick):
            if p.button in held.held_buttons:
                raise AlreadyHeld(f"button {p.button!r} is already held")
            n = ticks(p.duration)
            return [(0, "button_down", p.button), (n, "button_up", p.button)], n
        if isinstance(p, ButtonHold):
            if p.button in held.held_buttons:
                raise AlreadyHeld(f"button {p.button!r} is already held")
            return [(0, "button_down", p.button)], 0
        if isinstance(p, ButtonRelease):
            if p.button not in held.held_buttons:
                raise ReleaseNotHeld(f"button {p.button!r} is not held")
            return [(0, "button_up", p.button)], 0
        if isinstance(p, MouseMove):
            tx, ty = resolve_coordinates(p.x, p.y, p.coords, self.screen)
            n = ticks(p.speed)
            if n == 0:
                return [(0, "pointer_to", (tx, ty))], 0
            sx, sy = self.pointer
            evs = []
            for i in range(1, n + 1):
                px = sx + ((tx - sx) * i) // n if tx >= sx else sx - ((sx - tx) * i) // n
                py = sy + ((ty - sy) * i) // n if ty >= sy else sy - ((sy - ty) * i) // n
                evs.append((i, "pointer_to", (px, py)))
            return evs, n
        if isinstance(p, MouseDrag):
            if "left" in held.held_buttons:
                raise AlreadyHeld("button 'left' is already held")
            tx, ty = resolve_coordinates(p.x, p.y, p.coords, self.screen)
            return [(0, "button_down", "left"), (0, "pointer_to", (tx, ty)), (0, "button_up", "left")], 0
        if isinstance(p, Scroll):
            return [(0, "scroll", int(p.distance))], ticks(p.duration)
        if isinstance(p, Wait):
            return [], ticks(p.duration)
        raise InvalidPrimitive(f"not an action primitive: {p!r}")

    # public ---------------------------------------------------------------

    def execute(self, p: ActionPrimitive) -> ExecReport:
        """Execute one primitive; raises on invalid input or backend failure."""
        self._check_range(p)
        timeline, total = self._timeline(p)
        start = self.clock.now
        is_async = getattr(p, "wait", "sync") == "async"
        if is_async and total > 0:
            now_events = [(k, a) for off, k, a in timeline if off == 0]
            later: dict[int, list[tuple[str, Any]]] = {}
            for off, k, a in timeline:
                if off > 0:
                    later.setdefault(off, []).append((k, a))
            owned: dict[str, int] = {}
            for k, a in now_events:
                self._emit(k, a)
                if k == "key_down":
                    owned[a] = self._generation[a]
            for off, evs in sorted(later.items()):
                self._schedule_async(start + off, evs, owned)
            return ExecReport(p, start, start + total)
        t = 0
        for off, kind, arg in timeline:
            if off > t:
                self.clock.advance(off - t)
                t = off
            self._emit(kind, arg)
        if total > t:
            self.clock.advance(total - t)
        return ExecReport(p, start, self.clock.now)

    def _schedule_async(self, at: int, evs: list[tuple[str, Any]], owned: dict[str, int]) -> None:
        """Deferred events of an async primitive. A deferred key_up only fires
        for a press this primitive made itself, so a key released and pressed
        again in the meantime is left alone."""
        keys = tuple(a for k, a in evs if k in ("key_down", "key_up"))

        def fire() -> None:
            self._pending.pop(handle, None)
            for kind, arg in evs:
                if kind == "key_up":
                    if arg not in self.held.held_keys or self._generation.get(arg) != owned.get(arg):
                        continue  # released early, possibly re-pressed by someone else
                elif kind == "key_down" and arg in self.held.held_keys:
                    continue
                self._emit(kind, arg)
                if kind == "key_down":
                    owned[arg] = self._generation[arg]

        handle = self.clock.schedule(at, fire)
        self._pending[handle] = keys

    def execute_sequence(self, ps: Sequence[ActionPrimitive], abort_on_error: bool = True) -> list[ExecReport]:
        if not ps:
            raise ValueError("primitive sequence must not be empty")
        reports: list[ExecReport] = []
        failed = False
        for p in ps:
            now = self.clock.now
            if failed and abort_on_error:
                reports.append(ExecReport(p, now, now, "not-run"))
                continue
            try:
                reports.append(self.execute(p))
            except CradleError as exc:
                failed = True
                reports.append(ExecReport(p, now, self.clock.now, "error", type(exc).__name__ + ": " + str(exc)))
        return reports

    def pause(self, strategy: PauseStrategy) -> ExecReport:
        return self._toggle(strategy, "pause")

    def unpause(self, strategy: PauseStrategy) -> ExecReport:
        return self._toggle(strategy, "unpause")

    def _toggle(self, strategy: PauseStrategy, what: str) -> ExecReport:
        start = self.clock.now
        if strategy.kind == "key":
            self.execute(KeyPress(strategy.key, 0.0))
        elif strategy.kind == "focus":
            self._emit("focus_out" if what == "pause" else "focus_in")
        return ExecReport(f"{what}:{strategy}", start, self.clock.now)

    def release_all(self) -> ExecReport:
        start = self.clock.now
        for handle in list(self._pending):
            self.clock.cancel(handle)
        self._pending.clear()
        for k in sorted(self.held.held_keys):
            self._emit("key_up", k)
        for b in sorted(self.held.held_buttons):
            self._emit("button_up", b)
        return ExecReport("release_all", start, self.clock.now)
