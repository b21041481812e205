"""Lower a skill call to a flat list of action primitives."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping

from ..augmentation.marks import MarkSet, centroid
from ..errors import ArgumentMismatch, ExpressionOverflow, LabelNotFound, ProgramTooLarge, UnknownCallee
from ..io_env import (
    ActionPrimitive,
    ButtonClick,
    ButtonHold,
    ButtonRelease,
    Hotkey,
    KeyCombo,
    KeyHold,
    KeyPress,
    KeyRelease,
    MouseDrag,
    MouseMove,
    Scroll,
    TypeText,
    Wait,
    resolve_coordinates,
)
from .ast import BinOp, CallSkill, Num, Point, PrimitiveCall, Ref, Repeat, SkillScript, Str
from .calls import NativeSkill, Skill, SkillCall, value_kind_ok
from .signatures import PRIMITIVES

MAX_MAGNITUDE = 1e9
MAX_PRIMITIVES = 100_000


@dataclass
class CompileContext:
    registry: Mapping[str, Skill]
    screen: tuple[int, int]
    marks: MarkSet | None = None
    max_primitives: int = MAX_PRIMITIVES


def _eval(e, env: dict[str, Any]) -> Any:
    if isinstance(e, (Num, Str)):
        return e.value
    if isinstance(e, Ref):
        return env[e.name]
    if isinstance(e, Point):
        return (_eval(e.x, env), _eval(e.y, env))
    if isinstance(e, BinOp):
        a, b = _eval(e.left, env), _eval(e.right, env)
        try:
            if e.op == "+":
                v = a + b
            elif e.op == "-":
                v = a - b
            elif e.op == "*":
                v = a * b
            else:
                v = a / b
        except ZeroDivisionError:
            raise ExpressionOverflow(f"division by zero at {e.loc[0]}:{e.loc[1]}") from None
        except TypeError:
            raise ArgumentMismatch(f"arithmetic on non-numbers at {e.loc[0]}:{e.loc[1]}") from None
        if not math.isfinite(v) or abs(v) > MAX_MAGNITUDE:
            raise ExpressionOverflow(f"value {v} out of range at {e.loc[0]}:{e.loc[1]}")
        return v
    raise TypeError(f"not an expression: {e!r}")


def _label_point(label: Any, ctx: CompileContext) -> tuple[int, int]:
    mark = ctx.marks.get(int(label)) if ctx.marks is not None else None
    if mark is None:
        raise LabelNotFound(f"no mark with id {label}")
    return centroid(mark.rect)


def _lower(name: str, values: list[Any], ctx: CompileContext) -> list[ActionPrimitive]:
    slots = PRIMITIVES[name]
    a = {s.name: (values[i] if i < len(values) else s.default) for i, s in enumerate(slots)}
    if name == "key_press":
        return [KeyPress(a["key"], float(a["duration"]))]
    if name == "key_hold":
        return [KeyHold(a["key"])]
    if name == "key_release":
        return [KeyRelease(a["key"])]
    if name in ("key_combo", "hotkey"):
        cls = KeyCombo if name == "key_combo" else Hotkey
        return [cls(tuple(a["keys"].split("+")), float(a["duration"]), a["wait"])]
    if name == "type_text":
        return [TypeText(a["text"], float(a["duration"]))]
    if name == "button_click":
        return [ButtonClick(a["button"], float(a["duration"]))]
    if name == "button_hold":
        return [ButtonHold(a["button"])]
    if name == "button_release":
        return [ButtonRelease(a["button"])]
    if name == "mouse_move":
        x, y = resolve_coordinates(a["pos"][0], a["pos"][1], a["coords"], ctx.screen)
        return [MouseMove(x, y, float(a["speed"]))]
    if name == "mouse_drag":
        x, y = resolve_coordinates(a["pos"][0], a["pos"][1], a["coords"], ctx.screen)
        return [MouseDrag(x, y)]
    if name == "scroll":
        return [Scroll(int(a["distance"]), float(a["duration"]))]
    if name == "wait":
        return [Wait(float(a["duration"]))]
    x, y = _label_point(a["label"], ctx)
    if name == "click_on_label":
        return [MouseMove(x, y), ButtonClick("left", 0.05)]
    if name == "double_click_on_label":
        return [MouseMove(x, y), ButtonClick("left", 0.05), ButtonClick("left", 0.05)]
    if name == "hover_over_label":
        return [MouseMove(x, y)]
    if name == "mouse_drag_to_label":
        return [MouseDrag(x, y)]
    raise UnknownCallee(f"unknown primitive {name!r}")


def _check_args(skill: Skill, args: tuple[Any, ...]) -> dict[str, Any]:
    kinds = skill.param_kinds()
    if len(args) != len(kinds):
        raise ArgumentMismatch(f"{skill.name} takes {len(kinds)} arguments, got {len(args)}")
    for p, v in zip(skill.params, args):
        if not value_kind_ok(p.kind, v):
            raise ArgumentMismatch(f"{skill.name}: argument {p.name} must be a {p.kind}, got {v!r}")
    return {p.name: (tuple(v) if isinstance(v, list) else v) for p, v in zip(skill.params, args)}


def _compile_skill(skill: Skill, args: tuple[Any, ...], ctx: CompileContext, out: list[ActionPrimitive],
                   depth: int) -> None:
    env = _check_args(skill, args)
    if isinstance(skill, NativeSkill):
        out.extend(skill.fn(env, ctx))
        return
    if depth > 64:
        raise ProgramTooLarge("skill call nesting deeper than 64")

    def run(stmts) -> None:
        for s in stmts:
            if isinstance(s, Repeat):
                for _ in range(s.count):
                    run(s.body)
            elif isinstance(s, PrimitiveCall):
                out.extend(_lower(s.name, [_eval(e, env) for e in s.args], ctx))
            elif isinstance(s, CallSkill):
                callee = ctx.registry.get(s.name)
                if callee is None:
                    raise UnknownCallee(f"{skill.name} calls unknown skill {s.name!r}")
                _compile_skill(callee, tuple(_eval(e, env) for e in s.args), ctx, out, depth + 1)
            if len(out) > ctx.max_primitives:
                raise ProgramTooLarge(f"compiled program exceeds {ctx.max_primitives} primitives")

    run(skill.body)


def compile_call(call: SkillCall, registry: Mapping[str, Skill], screen: tuple[int, int],
                 marks: MarkSet | None = None, *, max_primitives: int = MAX_PRIMITIVES) -> list[ActionPrimitive]:
    """Inline callees depth-first, unroll repeats and resolve labels/relative points."""
    skill = registry.get(call.name)
    if skill is None:
        raise UnknownCallee(f"no skill named {call.name!r}")
    ctx = CompileContext(registry, screen, marks, max_primitives)
    out: list[ActionPrimitive] = []
    _compile_skill(skill, tuple(call.args), ctx, out, 0)
    return out


def compile_script(script: SkillScript, args: tuple[Any, ...], registry: Mapping[str, Skill],
                   screen: tuple[int, int], marks: MarkSet | None = None) -> list[ActionPrimitive]:
    """Compile a script that is not (yet) in the registry."""
    ctx = CompileContext(registry, screen, marks)
    out: list[ActionPrimitive] = []
    _compile_skill(script, tuple(args), ctx, out, 0)
    return out
