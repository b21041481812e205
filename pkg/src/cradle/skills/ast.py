"""Syntax tree for skill scripts and the canonical serializer."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

KINDS = ("number", "string", "point", "label")
Loc = tuple[int, int]


def _loc() -> Loc:
    return field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Num:
    value: int | float
    loc: Loc = _loc()


@dataclass(frozen=True)
class Str:
    value: str
    loc: Loc = _loc()


@dataclass(frozen=True)
class Ref:
    name: str
    loc: Loc = _loc()


@dataclass(frozen=True)
class Point:
    x: "Expr"
    y: "Expr"
    loc: Loc = _loc()


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    loc: Loc = _loc()


Expr = Union[Num, Str, Ref, Point, BinOp]


@dataclass(frozen=True)
class Param:
    name: str
    kind: str
    loc: Loc = _loc()


@dataclass(frozen=True)
class PrimitiveCall:
    name: str
    args: tuple[Expr, ...]
    loc: Loc = _loc()


@dataclass(frozen=True)
class CallSkill:
    name: str
    args: tuple[Expr, ...]
    loc: Loc = _loc()


@dataclass(frozen=True)
class Repeat:
    count: int
    body: tuple["Statement", ...]
    loc: Loc = _loc()


Statement = Union[PrimitiveCall, CallSkill, Repeat]


@dataclass(frozen=True)
class SkillScript:
    name: str
    params: tuple[Param, ...]
    doc: str
    body: tuple[Statement, ...]
    loc: Loc = _loc()

    def param_kinds(self) -> list[str]:
        return [p.kind for p in self.params]

    def callees(self) -> set[str]:
        out: set[str] = set()

        def walk(stmts):
            for s in stmts:
                if isinstance(s, CallSkill):
                    out.add(s.name)
                elif isinstance(s, Repeat):
                    walk(s.body)

        walk(self.body)
        return out

    def __str__(self) -> str:
        return serialize(self)


# --- serializer -----------------------------------------------------------------


def quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t") + '"'


def format_number(v: int | float) -> str:
    if isinstance(v, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def format_expr(e: Expr) -> str:
    if isinstance(e, Num):
        return format_number(e.value)
    if isinstance(e, Str):
        return quote(e.value)
    if isinstance(e, Ref):
        return e.name
    if isinstance(e, Point):
        return f"({format_expr(e.x)}, {format_expr(e.y)})"
    if isinstance(e, BinOp):
        return f"{format_expr(e.left)} {e.op} {format_expr(e.right)}"
    raise TypeError(f"not an expression: {e!r}")


def _format_stmts(stmts, indent: int) -> list[str]:
    pad = "    " * indent
    lines = []
    for s in stmts:
        if isinstance(s, Repeat):
            lines.append(f"{pad}repeat {s.count} {{")
            lines += _format_stmts(s.body, indent + 1)
            lines.append(f"{pad}}}")
        else:
            args = ", ".join(format_expr(a) for a in s.args)
            prefix = "call " if isinstance(s, CallSkill) else ""
            lines.append(f"{pad}{prefix}{s.name}({args});")
    return lines


def serialize(script: SkillScript) -> str:
    params = ", ".join(f"{p.name}: {p.kind}" for p in script.params)
    lines = [f"skill {script.name}({params}) doc {quote(script.doc)} {{"]
    lines += _format_stmts(script.body, 1)
    lines.append("}")
    return "\n".join(lines) + "\n"
