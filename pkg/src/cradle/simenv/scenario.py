"""Line-oriented scenario files for the simulated desktop.

Directives, one per line; lines starting with ``#`` outside the grid block are
comments::

    seed 7
    screen 320 240
    tile 32
    move_rate 2
    pause focus | key esc | none
    grid                      # rows follow until ``end``
    #..R.
    .@..D
    end
    avatar <col> <row>        # alternative to '@' in the grid
    tool <digit> <name>
    obstacle <char> <kind> <tool>
    widget <id> x0,y0,x1,y1 "<label>" "<tooltip>" enabled|disabled effect=<e> [group=<g>]
    input <id> x0,y0,x1,y1 "<label>"
    text x,y "<text>"
    goal cleared <n> | reach <char> | clicked <widget> | submitted <input> <lo> <hi>

Grid characters: ``.`` free, ``#`` wall, ``D`` door, ``G`` goal, ``@`` avatar
start (a free tile), plus any declared obstacle character. Widget effects are
``none``, ``open:<group>``, ``focus:<input>``, ``submit:<input>`` and
``tool:<name>``.
"""

from __future__ import annotations

import shlex
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from ..errors import ScenarioParseError

Rect = tuple[int, int, int, int]
WALKABLE = {".", "D", "G"}
STATUS_H = 12  # status bar height at the bottom of the screen


@dataclass(frozen=True)
class ObstacleKind:
    char: str
    kind: str
    tool: str


@dataclass(frozen=True)
class WidgetSpec:
    id: str
    rect: Rect
    label: str
    tooltip: str = ""
    enabled: bool = True
    effect: str = "none"
    group: str | None = None


@dataclass(frozen=True)
class InputSpec:
    id: str
    rect: Rect
    label: str = ""


@dataclass(frozen=True)
class TextSpec:
    x: int
    y: int
    text: str


@dataclass(frozen=True)
class Goal:
    kind: str
    args: tuple[str, ...]

    def __str__(self) -> str:
        return " ".join((self.kind,) + self.args)


@dataclass
class Scenario:
    seed: int = 0
    screen: tuple[int, int] = (320, 240)
    tile: int = 32
    move_rate: Fraction = Fraction(2)
    pause: str = "none"
    grid: list[str] = field(default_factory=list)
    avatar: tuple[int, int] | None = None
    tools: dict[str, str] = field(default_factory=dict)
    obstacles: dict[str, ObstacleKind] = field(default_factory=dict)
    widgets: list[WidgetSpec] = field(default_factory=list)
    inputs: list[InputSpec] = field(default_factory=list)
    texts: list[TextSpec] = field(default_factory=list)
    goals: list[Goal] = field(default_factory=list)
    source: str = ""

    @property
    def cols(self) -> int:
        return len(self.grid[0]) if self.grid else 0

    @property
    def rows(self) -> int:
        return len(self.grid)


def _rect(text: str, lineno: int) -> Rect:
    try:
        x0, y0, x1, y1 = (int(v) for v in text.split(","))
    except ValueError:
        raise ScenarioParseError(f"line {lineno}: bad rectangle {text!r}") from None
    if x0 >= x1 or y0 >= y1:
        raise ScenarioParseError(f"line {lineno}: empty rectangle {text!r}")
    return x0, y0, x1, y1


def _int(text: str, lineno: int, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ScenarioParseError(f"line {lineno}: {what} must be an integer, got {text!r}") from None


def parse_scenario(text: str) -> Scenario:
    sc = Scenario(source=text)
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        lineno = i + 1
        raw = lines[i]
        i += 1
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            words = shlex.split(line, comments=False)
        except ValueError as exc:
            raise ScenarioParseError(f"line {lineno}: {exc}") from None
        head, args = words[0], words[1:]

        def need(n: int) -> None:
            if len(args) < n:
                raise ScenarioParseError(f"line {lineno}: {head} needs {n} arguments")

        if head == "seed":
            need(1)
            sc.seed = _int(args[0], lineno, "seed")
        elif head == "screen":
            need(2)
            sc.screen = (_int(args[0], lineno, "width"), _int(args[1], lineno, "height"))
            if min(sc.screen) < 16:
                raise ScenarioParseError(f"line {lineno}: screen too small")
        elif head == "tile":
            need(1)
            sc.tile = _int(args[0], lineno, "tile size")
            if sc.tile < 4:
                raise ScenarioParseError(f"line {lineno}: tile must be at least 4 px")
        elif head == "move_rate":
            need(1)
            try:
                sc.move_rate = Fraction(args[0])
            except ValueError:
                raise ScenarioParseError(f"line {lineno}: bad move_rate {args[0]!r}") from None
            if sc.move_rate <= 0:
                raise ScenarioParseError(f"line {lineno}: move_rate must be positive")
        elif head == "pause":
            need(1)
            if args[0] == "key":
                need(2)
                sc.pause = f"key:{args[1]}"
            elif args[0] in ("focus", "none"):
                sc.pause = args[0]
            else:
                raise ScenarioParseError(f"line {lineno}: unknown pause mode {args[0]!r}")
        elif head == "grid":
            while i < len(lines) and lines[i].strip() != "end":
                sc.grid.append(lines[i].strip())
                i += 1
            if i >= len(lines):
                raise ScenarioParseError(f"line {lineno}: grid block is not closed with 'end'")
            i += 1
        elif head == "avatar":
            need(2)
            sc.avatar = (_int(args[0], lineno, "column"), _int(args[1], lineno, "row"))
        elif head == "tool":
            need(2)
            if len(args[0]) != 1 or not args[0].isdigit():
                raise ScenarioParseError(f"line {lineno}: tool slot must be one digit")
            sc.tools[args[0]] = args[1]
        elif head == "obstacle":
            need(3)
            ch = args[0]
            if len(ch) != 1 or ch in WALKABLE | {"#", "@"}:
                raise ScenarioParseError(f"line {lineno}: obstacle character {ch!r} is reserved or invalid")
            sc.obstacles[ch] = ObstacleKind(ch, args[1], args[2])
        elif head == "widget":
            need(5)
            wid, rect, label, tooltip, state = args[:5]
            if state not in ("enabled", "disabled"):
                raise ScenarioParseError(f"line {lineno}: widget state must be enabled or disabled")
            opts = {}
            for opt in args[5:]:
                key, sep, value = opt.partition("=")
                if not sep or key not in ("effect", "group"):
                    raise ScenarioParseError(f"line {lineno}: unknown widget option {opt!r}")
                opts[key] = value
            effect = opts.get("effect", "none")
            kind = effect.split(":", 1)[0]
            if kind not in ("none", "open", "focus", "submit", "tool") or (kind != "none" and ":" not in effect):
                raise ScenarioParseError(f"line {lineno}: unknown effect {effect!r}")
            sc.widgets.append(WidgetSpec(wid, _rect(rect, lineno), label, tooltip, state == "enabled",
                                         effect, opts.get("group")))
        elif head == "input":
            need(2)
            sc.inputs.append(InputSpec(args[0], _rect(args[1], lineno), args[2] if len(args) > 2 else ""))
        elif head == "text":
            need(2)
            xy = args[0].split(",")
            if len(xy) != 2:
                raise ScenarioParseError(f"line {lineno}: text position must be x,y")
            sc.texts.append(TextSpec(_int(xy[0], lineno, "x"), _int(xy[1], lineno, "y"), args[1]))
        elif head == "goal":
            need(2)
            kind = args[0]
            arity = {"cleared": 1, "reach": 1, "clicked": 1, "submitted": 3}
            if kind not in arity or len(args) - 1 != arity[kind]:
                raise ScenarioParseError(f"line {lineno}: bad goal {' '.join(args)!r}")
            if kind == "cleared":
                _int(args[1], lineno, "count")
            if kind == "submitted":
                _int(args[2], lineno, "lower bound")
                _int(args[3], lineno, "upper bound")
            sc.goals.append(Goal(kind, tuple(args[1:])))
        else:
            raise ScenarioParseError(f"line {lineno}: unknown directive {head!r}")
    _check(sc)
    return sc


def _check(sc: Scenario) -> None:
    w, h = sc.screen
    if sc.grid:
        if len({len(r) for r in sc.grid}) != 1:
            raise ScenarioParseError("grid rows must all have the same length")
        if sc.cols * sc.tile > w or sc.rows * sc.tile > h - STATUS_H:
            raise ScenarioParseError("grid does not fit on the screen")
        known = WALKABLE | {"#", "@"} | set(sc.obstacles)
        starts = []
        for r, row in enumerate(sc.grid):
            for c, ch in enumerate(row):
                if ch not in known:
                    raise ScenarioParseError(f"unknown grid character {ch!r} at column {c}, row {r}")
                if ch == "@":
                    starts.append((c, r))
        if len(starts) > 1:
            raise ScenarioParseError("more than one '@' in the grid")
        if starts:
            if sc.avatar is not None and sc.avatar != starts[0]:
                raise ScenarioParseError("avatar directive disagrees with '@' in the grid")
            sc.avatar = starts[0]
            c, r = starts[0]
            sc.grid[r] = sc.grid[r][:c] + "." + sc.grid[r][c + 1:]
        if sc.avatar is None:
            raise ScenarioParseError("grid scenario without an avatar")
        c, r = sc.avatar
        if not (0 <= r < sc.rows and 0 <= c < sc.cols):
            raise ScenarioParseError(f"avatar {sc.avatar} is off the grid")
        if sc.grid[r][c] not in WALKABLE:
            raise ScenarioParseError(f"avatar {sc.avatar} stands on a blocked tile {sc.grid[r][c]!r}")
        for ob in sc.obstacles.values():
            if ob.tool not in sc.tools.values():
                raise ScenarioParseError(f"obstacle {ob.kind!r} needs undeclared tool {ob.tool!r}")
    elif sc.avatar is not None:
        raise ScenarioParseError("avatar declared without a grid")
    ids = [x.id for x in sc.widgets] + [x.id for x in sc.inputs]
    if len(set(ids)) != len(ids):
        raise ScenarioParseError("widget and input ids must be unique")
    inputs = {x.id for x in sc.inputs}
    for wdg in sc.widgets:
        x0, y0, x1, y1 = wdg.rect
        if x1 > w or y1 > h or x0 < 0 or y0 < 0:
            raise ScenarioParseError(f"widget {wdg.id!r} lies outside the screen")
        kind, _, target = wdg.effect.partition(":")
        if kind in ("focus", "submit") and target not in inputs:
            raise ScenarioParseError(f"widget {wdg.id!r} refers to unknown input {target!r}")
        if kind == "tool" and target not in sc.tools.values():
            raise ScenarioParseError(f"widget {wdg.id!r} selects unknown tool {target!r}")
    for g in sc.goals:
        if g.kind == "reach" and (not sc.grid or g.args[0] not in WALKABLE):
            raise ScenarioParseError(f"goal {g} needs a grid and a walkable target")
        if g.kind == "clicked" and g.args[0] not in {x.id for x in sc.widgets}:
            raise ScenarioParseError(f"goal {g} names an unknown widget")
        if g.kind == "submitted" and g.args[0] not in inputs:
            raise ScenarioParseError(f"goal {g} names an unknown input")


def load_scenario_file(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioParseError(f"cannot read scenario {path}: {exc}") from None
    return parse_scenario(text)
