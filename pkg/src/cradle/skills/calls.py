"""Skill invocations and native (runtime-implemented) skills."""

from __future__ import annotations

import ast as pyast
import math
from dataclasses import dataclass
from typing import Any, Callable, Mapping, Sequence, Union

from ..errors import MalformedCall
from .ast import Param, SkillScript, format_number, quote


@dataclass(frozen=True)
class SkillCall:
    name: str
    args: tuple[Any, ...] = ()

    def __str__(self) -> str:
        return f"{self.name}({', '.join(format_value(a) for a in self.args)})"

    def to_json(self) -> dict[str, Any]:
        return {"name": self.name, "args": [list(a) if isinstance(a, tuple) else a for a in self.args]}


def format_value(v: Any) -> str:
    if isinstance(v, str):
        return quote(v)
    if isinstance(v, (tuple, list)):
        return "(" + ", ".join(format_value(x) for x in v) + ")"
    return format_number(v)


@dataclass(frozen=True)
class NativeSkill:
    """A skill implemented in the runtime rather than in the script language.

    ``fn(args, ctx)`` returns primitives; ``args`` maps parameter names to values.
    """

    name: str
    params: tuple[Param, ...]
    doc: str
    fn: Callable[[dict[str, Any], Any], list] = lambda args, ctx: []

    def param_kinds(self) -> list[str]:
        return [p.kind for p in self.params]

    def callees(self) -> set[str]:
        return set()


Skill = Union[SkillScript, NativeSkill]

INFEASIBLE = "task_is_not_feasible"

BUILTIN_NATIVES: dict[str, NativeSkill] = {
    INFEASIBLE: NativeSkill(
        INFEASIBLE, (), "Declare that the current task cannot be completed; ends the run."),
}


def value_kind_ok(kind: str, v: Any) -> bool:
    if kind == "number":
        return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)
    if kind == "string":
        return isinstance(v, str)
    if kind == "point":
        return isinstance(v, (tuple, list)) and len(v) == 2 and all(value_kind_ok("number", c) for c in v)
    if kind == "label":
        return value_kind_ok("number", v) and float(v).is_integer() and v >= 1
    return False


def bind_args(skill: Skill, args: Sequence[Any], kwargs: Mapping[str, Any] | None = None) -> dict[str, Any]:
    """Match positional and keyword arguments against a skill's parameters."""
    params = skill.params
    kwargs = dict(kwargs or {})
    if len(args) > len(params):
        raise MalformedCall(f"{skill.name} takes {len(params)} arguments, got {len(args)}")
    bound = {p.name: a for p, a in zip(params, args)}
    for k, v in kwargs.items():
        if k not in {p.name for p in params}:
            raise MalformedCall(f"{skill.name} has no parameter {k!r}")
        if k in bound:
            raise MalformedCall(f"{skill.name} got {k!r} twice")
        bound[k] = v
    missing = [p.name for p in params if p.name not in bound]
    if missing:
        raise MalformedCall(f"{skill.name} missing arguments {missing}")
    return bound


def _literal(node: pyast.AST) -> Any:
    value = pyast.literal_eval(node)
    if isinstance(value, list):
        value = tuple(value)
    if isinstance(value, bool) or not isinstance(value, (int, float, str, tuple)):
        raise ValueError(f"unsupported literal {value!r}")
    return value


def parse_call(text: str, registry: Mapping[str, Skill] | None = None) -> SkillCall:
    """Parse ``name(arg, key=value)`` with literal arguments.

    Keyword arguments need ``registry`` to be placed in parameter order.
    """
    text = text.strip().rstrip(";").strip()
    try:
        node = pyast.parse(text, mode="eval").body
    except SyntaxError as exc:
        raise MalformedCall(f"cannot parse call {text!r}: {exc.msg}") from None
    if not isinstance(node, pyast.Call) or not isinstance(node.func, pyast.Name):
        raise MalformedCall(f"not a skill call: {text!r}")
    try:
        args = [_literal(a) for a in node.args]
        kwargs = {k.arg: _literal(k.value) for k in node.keywords if k.arg}
    except (ValueError, SyntaxError) as exc:
        raise MalformedCall(f"non-literal argument in {text!r}: {exc}") from None
    name = node.func.id
    if kwargs:
        skill = (registry or {}).get(name)
        if skill is None:
            raise MalformedCall(f"keyword arguments for unknown skill {name!r}")
        bound = bind_args(skill, args, kwargs)
        args = [bound[p.name] for p in skill.params]
    return SkillCall(name, tuple(args))


def parse_calls(text: str, registry: Mapping[str, Skill] | None = None) -> list[SkillCall]:
    """One call per non-empty line; bullets, numbering and code fences are ignored."""
    calls = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("```"):
            continue
        line = line.lstrip("-*").strip()
        if line[:1].isdigit() and "." in line[:4]:
            line = line.split(".", 1)[1].strip()
        if line.startswith("`") and line.endswith("`"):
            line = line.strip("`")
        calls.append(parse_call(line, registry))
    return calls
