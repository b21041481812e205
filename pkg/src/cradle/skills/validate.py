"""Static checks of a parsed script against a skill registry."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from ..io_env import BUTTONS, DEFAULT_MAX_DURATION, KEYS
from .ast import BinOp, CallSkill, Loc, Num, Point, PrimitiveCall, Ref, Repeat, SkillScript, Str
from .calls import Skill
from .signatures import PRIMITIVES, SLOT_PARAM_KIND, arity


@dataclass(frozen=True)
class ValidationError:
    code: str
    message: str
    loc: Loc = (0, 0)

    def __str__(self) -> str:
        return f"{self.code} at {self.loc[0]}:{self.loc[1]}: {self.message}"


_ENUMS = {"button": BUTTONS, "wait": ("sync", "async"), "coords": ("absolute", "relative")}


def _expr_kind(e, params: dict[str, str], errors: list[ValidationError]) -> str | None:
    if isinstance(e, Num):
        return "number"
    if isinstance(e, Str):
        return "string"
    if isinstance(e, Ref):
        if e.name not in params:
            errors.append(ValidationError("UnknownParam", f"unknown parameter {e.name!r}", e.loc))
            return None
        return params[e.name]
    if isinstance(e, Point):
        for c in (e.x, e.y):
            k = _expr_kind(c, params, errors)
            if k not in (None, "number"):
                errors.append(ValidationError("KindMismatch", f"point components must be numbers, got {k}", e.loc))
        return "point"
    if isinstance(e, BinOp):
        for side in (e.left, e.right):
            k = _expr_kind(side, params, errors)
            if k not in (None, "number"):
                errors.append(ValidationError("KindMismatch", f"arithmetic needs numbers, got {k}", e.loc))
        if e.op == "/" and isinstance(e.right, Num) and e.right.value == 0:
            errors.append(ValidationError("ExpressionOverflow", "division by zero", e.loc))
        return "number"
    return None


def _check_slot(slot_kind: str, e, params: dict[str, str], errors: list[ValidationError],
                max_duration: float) -> None:
    want = SLOT_PARAM_KIND[slot_kind]
    got = _expr_kind(e, params, errors)
    if got is None:
        return
    if slot_kind == "label" and got == "number":
        if not (isinstance(e, Num) and float(e.value).is_integer() and e.value >= 1):
            errors.append(ValidationError("KindMismatch", "label literal must be a positive integer", e.loc))
        return
    if got != want:
        errors.append(ValidationError("KindMismatch", f"expected {want}, got {got}", e.loc))
        return
    if isinstance(e, Str):
        if slot_kind == "key" and e.value not in KEYS:
            errors.append(ValidationError("InvalidKey", f"unknown key {e.value!r}", e.loc))
        elif slot_kind == "keys":
            keys = e.value.split("+")
            bad = [k for k in keys if k not in KEYS]
            if bad or len(set(keys)) != len(keys):
                errors.append(ValidationError("InvalidKey", f"bad key combination {e.value!r}", e.loc))
        elif slot_kind in _ENUMS and e.value not in _ENUMS[slot_kind]:
            errors.append(ValidationError("KindMismatch", f"{slot_kind} must be one of {_ENUMS[slot_kind]}", e.loc))
    if slot_kind == "duration" and isinstance(e, Num) and not (0 <= e.value <= max_duration):
        errors.append(ValidationError("DurationOutOfRange", f"{e.value} s outside [0, {max_duration}]", e.loc))


def _reaches(start: str, target: str, graph: Mapping[str, set[str]]) -> bool:
    seen: set[str] = set()
    stack = list(graph.get(start, ()))
    while stack:
        n = stack.pop()
        if n == target:
            return True
        if n not in seen:
            seen.add(n)
            stack.extend(graph.get(n, ()))
    return False


def validate(script: SkillScript, registry: Mapping[str, Skill], *, max_duration: float = DEFAULT_MAX_DURATION,
             replacing: bool = False) -> list[ValidationError]:
    """All problems found; an empty list means the script is acceptable.

    ``replacing`` skips the duplicate-name check (used when updating a skill).
    """
    errors: list[ValidationError] = []
    if script.name in registry and not replacing:
        errors.append(ValidationError("DuplicateName", f"a skill named {script.name!r} already exists", script.loc))
    if not script.doc.strip():
        errors.append(ValidationError("EmptyDoc", "documentation must not be empty", script.loc))
    params: dict[str, str] = {}
    for p in script.params:
        if p.name in params:
            errors.append(ValidationError("DuplicateParam", f"parameter {p.name!r} declared twice", p.loc))
        params[p.name] = p.kind

    def walk(stmts) -> None:
        for s in stmts:
            if isinstance(s, Repeat):
                walk(s.body)
            elif isinstance(s, PrimitiveCall):
                slots = PRIMITIVES[s.name]
                lo, hi = arity(slots)
                if not lo <= len(s.args) <= hi:
                    errors.append(ValidationError(
                        "ArityMismatch", f"{s.name} takes {lo}..{hi} arguments, got {len(s.args)}", s.loc))
                for slot, a in zip(slots, s.args):
                    _check_slot(slot.kind, a, params, errors, max_duration)
            elif isinstance(s, CallSkill):
                if s.name == script.name:
                    callee_kinds = script.param_kinds()
                elif s.name in registry:
                    callee_kinds = registry[s.name].param_kinds()
                else:
                    errors.append(ValidationError("UnknownCallee", f"no skill named {s.name!r}", s.loc))
                    for a in s.args:
                        _expr_kind(a, params, errors)
                    continue
                if len(s.args) != len(callee_kinds):
                    errors.append(ValidationError(
                        "ArityMismatch", f"{s.name} takes {len(callee_kinds)} arguments, got {len(s.args)}", s.loc))
                for kind, a in zip(callee_kinds, s.args):
                    _check_slot(kind, a, params, errors, max_duration)

    walk(script.body)

    graph = {name: skill.callees() for name, skill in registry.items()}
    graph[script.name] = script.callees()
    if _reaches(script.name, script.name, graph):
        errors.append(ValidationError("RecursionRejected", f"{script.name!r} calls itself", script.loc))
    return errors
