"""Deterministic virtual desktop: tile world, widgets, tooltips and pause."""

from __future__ import annotations

import hashlib
import logging
from collections import Counter
from fractions import Fraction
from typing import Any

import numpy as np

from ..augmentation.font import draw_text, text_size
from ..io_env import Event
from ..observation import Frame
from .scenario import STATUS_H, WALKABLE, InputSpec, Scenario, WidgetSpec

log = logging.getLogger(__name__)

DIRS = {"w": "up", "s": "down", "a": "left", "d": "right"}
STEP = {"up": (0, -1), "down": (0, 1), "left": (-1, 0), "right": (1, 0)}
CLOCKWISE = ["up", "right", "down", "left"]
TURN_RATE = Fraction(2)  # quarter turns per held second
TOOLTIP_TICKS = 2
MAX_INPUT = 16

BG = (28, 30, 38)
GRASS = (64, 140, 64)
WALL = (96, 96, 100)
DOOR = (150, 92, 40)
GOAL = (232, 200, 40)
AVATAR = (40, 80, 220)
WIDGET_ON = (200, 200, 200)
WIDGET_OFF = (112, 112, 112)
TOOLTIP_BG = (255, 255, 208)
FOCUS = (0, 90, 255)
OBSTACLE_COLORS = {"rock": (140, 120, 100), "tree": (20, 96, 36), "weed": (150, 200, 60), "log": (110, 70, 30)}


def _kind_color(kind: str) -> tuple[int, int, int]:
    if kind in OBSTACLE_COLORS:
        return OBSTACLE_COLORS[kind]
    d = hashlib.sha256(kind.encode()).digest()
    return d[0] // 2 + 64, d[1] // 2 + 64, d[2] // 2 + 64


def _fill(px: np.ndarray, rect, color) -> None:
    x0, y0, x1, y1 = rect
    px[max(y0, 0):max(y1, 0), max(x0, 0):max(x1, 0)] = color


def _border(px: np.ndarray, rect, color, width: int = 1) -> None:
    x0, y0, x1, y1 = rect
    _fill(px, (x0, y0, x1, y0 + width), color)
    _fill(px, (x0, y1 - width, x1, y1), color)
    _fill(px, (x0, y0, x0 + width, y1), color)
    _fill(px, (x1 - width, y0, x1, y1), color)


class SimEnv:
    """Simulated screen and the backend that receives io-env events.

    The environment keeps a wall tick (every clock tick) and a sim tick that
    only advances while the environment is running, i.e. focused and not
    paused under the scenario's pause mode.
    """

    def __init__(self, scenario: Scenario, tick_seconds: float = 0.05):
        self.scenario = scenario
        self.tick_seconds = Fraction(str(tick_seconds))
        self.screen_size = scenario.screen
        self.wall_tick = 0
        self.sim_ticks = 0
        self.focused = True
        self.paused = False
        self.grid = [list(r) for r in scenario.grid]
        self.avatar = scenario.avatar
        self.facing = "down"
        self.inventory: Counter[str] = Counter()
        self.cleared = 0
        self.selected_tool: str | None = None
        self.blocked = False
        self.held_keys: list[str] = []
        self.buttons: set[str] = set()
        self.pointer = (0, 0)
        self.move_key: str | None = None
        self.progress = Fraction(0)
        self.turn_key: str | None = None
        self.turn_progress = Fraction(0)
        self.open_group: str | None = None
        self.focused_input: str | None = None
        self.values = {i.id: "" for i in scenario.inputs}
        self.submitted: dict[str, str] = {}
        self.clicked: list[str] = []
        self.hover: str | None = None
        self.hover_ticks = 0
        self.message = ""
        self.log: list[tuple[int, Event]] = []
        self.ignored: list[tuple[int, Event]] = []
        rng = np.random.default_rng(scenario.seed)
        self._shade = rng.integers(-10, 11, size=(max(scenario.rows, 1), max(scenario.cols, 1)))

    # time ---------------------------------------------------------------------

    @property
    def running(self) -> bool:
        mode = self.scenario.pause
        if mode == "none":
            return True
        if mode == "focus":
            return self.focused
        return not self.paused

    def step(self, ticks: int = 1) -> None:
        for _ in range(ticks):
            self.wall_tick += 1
            if not self.running:
                continue
            self.sim_ticks += 1
            if self.hover is not None:
                self.hover_ticks += 1
            if self.move_key is not None:
                self.progress += self.scenario.move_rate * self.tick_seconds
                while self.progress >= 1:
                    self.progress -= 1
                    if not self._try_move(DIRS[self.move_key]):
                        self.progress = Fraction(0)
                        break
            if self.turn_key is not None:
                self.turn_progress += TURN_RATE * self.tick_seconds
                while self.turn_progress >= 1:
                    self.turn_progress -= 1
                    self._rotate(self.turn_key)

    def step_to(self, tick: int) -> None:
        if tick < self.wall_tick:
            raise ValueError(f"cannot step back from tick {self.wall_tick} to {tick}")
        self.step(tick - self.wall_tick)

    def on_tick(self, tick: int) -> None:
        self.step_to(tick)

    # backend ------------------------------------------------------------------

    def emit(self, tick: int, event: Event) -> None:
        self.step_to(tick)
        self.log.append((tick, event))
        self.apply(event)

    def _ignore(self, event: Event, why: str) -> None:
        self.ignored.append((self.wall_tick, event))
        log.debug("ignored %s %r: %s", event.kind, event.arg, why)

    def apply(self, event: Event) -> None:
        kind, arg = event.kind, event.arg
        if kind in ("focus_out", "focus_in"):
            if self.scenario.pause != "focus":
                return self._ignore(event, "focus does not pause this scenario")
            self.focused = kind == "focus_in"
        elif kind == "key_down":
            self._key_down(event, arg)
        elif kind == "key_up":
            self._key_up(event, arg)
        elif kind == "pointer_to":
            w, h = self.screen_size
            x, y = int(arg[0]), int(arg[1])
            self.pointer = (min(max(x, 0), w - 1), min(max(y, 0), h - 1))
            target = self._element_at(self.pointer)
            tid = target.id if target is not None else None
            if tid != self.hover:
                self.hover, self.hover_ticks = tid, 0
        elif kind == "button_down":
            if arg in self.buttons:
                return self._ignore(event, "button already down")
            self.buttons.add(arg)
            self.hover_ticks = 0  # a click interrupts the hover, hiding any tooltip
            if arg == "left" and self.running:
                self._click()
        elif kind == "button_up":
            self.buttons.discard(arg)
        else:
            self._ignore(event, "unsupported event")

    def _key_down(self, event: Event, key: str) -> None:
        if key in self.held_keys:
            return self._ignore(event, "key already down")
        self.held_keys.append(key)
        pause = self.scenario.pause
        if pause.startswith("key:") and key == pause[4:]:
            self.paused = not self.paused
            return
        if not self.running:
            return self._ignore(event, "environment paused")
        if self.focused_input is not None:
            if key == "enter":
                self._submit(self.focused_input)
            elif len(key) == 1 or key == "space":
                value = self.values[self.focused_input]
                if len(value) < MAX_INPUT:
                    self.values[self.focused_input] = value + (" " if key == "space" else key)
            return
        if not self.grid:
            return
        if key in DIRS:
            self.facing = DIRS[key]
            self.move_key, self.progress = key, Fraction(0)
        elif key in ("left", "right"):
            self.turn_key, self.turn_progress = key, Fraction(0)
        elif key in self.scenario.tools:
            self.selected_tool = self.scenario.tools[key]
            self.message = f"selected {self.selected_tool}"
        elif key == "c":
            self._use_tool()

    def _key_up(self, event: Event, key: str) -> None:
        if key not in self.held_keys:
            return self._ignore(event, "key not down")
        self.held_keys.remove(key)
        if key == self.move_key:
            if self.running and self.progress * 2 >= 1:
                self._try_move(DIRS[key])
            self.move_key, self.progress = None, Fraction(0)
        if key == self.turn_key:
            if self.running and self.turn_progress * 2 >= 1:
                self._rotate(key)
            self.turn_key, self.turn_progress = None, Fraction(0)

    # world rules --------------------------------------------------------------

    def _tile(self, c: int, r: int) -> str | None:
        if 0 <= r < len(self.grid) and 0 <= c < len(self.grid[0]):
            return self.grid[r][c]
        return None

    def _try_move(self, direction: str) -> bool:
        dc, dr = STEP[direction]
        c, r = self.avatar
        if self._tile(c + dc, r + dr) in WALKABLE:
            self.avatar = (c + dc, r + dr)
            self.blocked = False
            return True
        self.blocked = True
        self.message = "blocked"
        return False

    def _rotate(self, key: str) -> None:
        i = CLOCKWISE.index(self.facing)
        self.facing = CLOCKWISE[(i + (1 if key == "right" else -1)) % 4]

    def _use_tool(self) -> None:
        dc, dr = STEP[self.facing]
        c, r = self.avatar[0] + dc, self.avatar[1] + dr
        ob = self.scenario.obstacles.get(self._tile(c, r) or "")
        if ob is None:
            self.message = "nothing to use a tool on"
        elif self.selected_tool is None:
            self.message = "no tool selected"
        elif self.selected_tool != ob.tool:
            self.message = f"{self.selected_tool} cannot clear {ob.kind}"
        else:
            self.grid[r][c] = "."
            self.cleared += 1
            self.inventory[ob.kind] += 1
            self.message = f"cleared {ob.kind}"

    def _visible_widgets(self) -> list[WidgetSpec]:
        return [w for w in self.scenario.widgets if w.group is None or w.group == self.open_group]

    def _element_at(self, pos) -> WidgetSpec | InputSpec | None:
        x, y = pos
        for el in reversed(self._visible_widgets() + list(self.scenario.inputs)):
            x0, y0, x1, y1 = el.rect
            if x0 <= x < x1 and y0 <= y < y1:
                return el
        return None

    def _click(self) -> None:
        el = self._element_at(self.pointer)
        if el is None:
            self.focused_input = None
            return
        if isinstance(el, InputSpec):
            self.focused_input = el.id
            return
        if not el.enabled:
            return
        if el.id not in self.clicked:
            self.clicked.append(el.id)
        kind, _, target = el.effect.partition(":")
        if kind == "open":
            self.open_group = target
        elif kind == "focus":
            self.focused_input = target
        elif kind == "submit":
            self._submit(target)
        elif kind == "tool":
            self.selected_tool = target
        self.message = f"clicked {el.label}"

    def _submit(self, input_id: str) -> None:
        value = self.values[input_id]
        self.submitted[input_id] = value
        self.focused_input = None
        self.message = f"submitted {value or 'nothing'}"

    # observation ----------------------------------------------------------------

    def tooltip(self) -> str | None:
        if self.hover is None or self.hover_ticks < TOOLTIP_TICKS:
            return None
        for w in self._visible_widgets():
            if w.id == self.hover and w.enabled and w.tooltip:
                return w.tooltip
        return None

    def check_goal(self) -> bool:
        if not self.scenario.goals:
            return False
        for g in self.scenario.goals:
            if g.kind == "cleared" and self.cleared < int(g.args[0]):
                return False
            if g.kind == "reach":
                c, r = self.avatar
                if self.grid[r][c] != g.args[0]:
                    return False
            if g.kind == "clicked" and g.args[0] not in self.clicked:
                return False
            if g.kind == "submitted":
                value = self.submitted.get(g.args[0])
                if value is None or not value.strip().isdigit():
                    return False
                if not int(g.args[1]) <= int(value) <= int(g.args[2]):
                    return False
        return True

    def state(self) -> dict[str, Any]:
        """Application state, excluding time and physical device state."""
        return {
            "grid": ["".join(r) for r in self.grid], "avatar": self.avatar, "facing": self.facing,
            "inventory": dict(sorted(self.inventory.items())), "cleared": self.cleared,
            "tool": self.selected_tool, "blocked": self.blocked, "open_group": self.open_group,
            "focused_input": self.focused_input, "values": dict(self.values), "submitted": dict(self.submitted),
            "clicked": list(self.clicked), "message": self.message, "paused": self.paused,
            "focused": self.focused, "pointer": self.pointer,
        }

    def render(self) -> np.ndarray:
        w, h = self.screen_size
        px = np.empty((h, w, 3), dtype=np.uint8)
        px[:] = BG
        t = self.scenario.tile
        for r, row in enumerate(self.grid):
            for c, ch in enumerate(row):
                rect = (c * t, r * t, (c + 1) * t, (r + 1) * t)
                if ch == "#":
                    _fill(px, rect, WALL)
                elif ch == "D":
                    _fill(px, rect, DOOR)
                elif ch == "G":
                    _fill(px, rect, GOAL)
                else:
                    s = int(self._shade[r, c])
                    _fill(px, rect, (GRASS[0] + s, GRASS[1] + s, GRASS[2] + s))
                    if ch in self.scenario.obstacles:
                        ob = self.scenario.obstacles[ch]
                        _fill(px, (rect[0] + 4, rect[1] + 4, rect[2] - 4, rect[3] - 4), _kind_color(ob.kind))
                _border(px, rect, (0, 0, 0))
        if self.avatar is not None and self.grid:
            c, r = self.avatar
            x0, y0 = c * t, r * t
            _fill(px, (x0 + 6, y0 + 6, x0 + t - 6, y0 + t - 6), AVATAR)
            dc, dr = STEP[self.facing]
            cx, cy = x0 + t // 2 + dc * (t // 2 - 9), y0 + t // 2 + dr * (t // 2 - 9)
            _fill(px, (cx - 2, cy - 2, cx + 2, cy + 2), (255, 255, 255))
        for tx in self.scenario.texts:
            draw_text(px, tx.x, tx.y, tx.text, (255, 255, 255))
        for wdg in self._visible_widgets():
            _fill(px, wdg.rect, WIDGET_ON if wdg.enabled else WIDGET_OFF)
            _border(px, wdg.rect, (0, 0, 0))
            x0, y0, x1, y1 = wdg.rect
            tw, th = text_size(wdg.label)
            draw_text(px, x0 + (x1 - x0 - tw) // 2, y0 + (y1 - y0 - th) // 2, wdg.label, (0, 0, 0),
                      clip=(x0 + 1, y0 + 1, x1 - 1, y1 - 1))
        for inp in self.scenario.inputs:
            x0, y0, x1, y1 = inp.rect
            _fill(px, inp.rect, (255, 255, 255))
            _border(px, inp.rect, FOCUS if self.focused_input == inp.id else (0, 0, 0),
                    2 if self.focused_input == inp.id else 1)
            if inp.label:
                draw_text(px, x0, y0 - 9, inp.label, (255, 255, 255))
            draw_text(px, x0 + 3, y0 + (y1 - y0 - 7) // 2, self.values[inp.id], (0, 0, 0),
                      clip=(x0 + 2, y0 + 2, x1 - 2, y1 - 2))
        tip = self.tooltip()
        if tip is not None:
            tw, th = text_size(tip)
            bw, bh = tw + 6, th + 6
            bx = min(max(self.pointer[0] + 8, 0), max(w - bw, 0))
            by = self.pointer[1] + 14
            if by + bh > h - STATUS_H:
                by = max(self.pointer[1] - bh - 4, 0)
            _fill(px, (bx, by, bx + bw, by + bh), TOOLTIP_BG)
            _border(px, (bx, by, bx + bw, by + bh), (0, 0, 0))
            draw_text(px, bx + 3, by + 3, tip, (0, 0, 0))
        _fill(px, (0, h - STATUS_H, w, h), (0, 0, 0))
        parts = []
        if self.grid:
            parts += [self.selected_tool or "no tool", f"cleared {self.cleared}"]
        if self.message:
            parts.append(self.message)
        if not self.running:
            parts.append("paused")
        draw_text(px, 2, h - STATUS_H + 3, ", ".join(parts), (255, 255, 255))
        return px

    def frame(self, index: int = 0) -> Frame:
        return Frame(index, self.wall_tick, self.render())

    def digest(self) -> str:
        return hashlib.sha256(self.render().tobytes()).hexdigest()
