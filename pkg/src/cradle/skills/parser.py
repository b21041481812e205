"""Recursive-descent parser for skill scripts.

Grammar::

    library := skill*
    skill   := "skill" NAME "(" [param {"," param}] ")" "doc" STRING "{" stmt+ "}"
    param   := NAME ":" KIND
    stmt    := PRIM "(" args ")" [";"] | "call" NAME "(" args ")" [";"]
             | "repeat" INT "{" stmt+ "}"
    expr    := atom [("+"|"-"|"*"|"/") atom]
    atom    := NUMBER | "-" NUMBER | STRING | NAME | "(" expr "," expr ")"

``#`` starts a comment that runs to the end of the line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import SkillSyntaxError
from .ast import KINDS, BinOp, CallSkill, Num, Param, Point, PrimitiveCall, Ref, Repeat, SkillScript, Str
from .signatures import PRIMITIVES

MAX_REPEAT = 1000
KEYWORDS = {"skill", "doc", "call", "repeat"}

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+|\#[^\n]*)
  | (?P<nl>\n)
  | (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<punct>[(){},:;+\-*/])
    """,
    re.VERBOSE,
)
_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise SkillSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind != "ws":
            tokens.append(Token(kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


def _unquote(tok: Token) -> str:
    body = tok.text[1:-1]
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            nxt = body[i + 1]
            if nxt not in _ESCAPES:
                raise SkillSyntaxError(f"unknown escape \\{nxt}", tok.line, tok.col + i + 1)
            out.append(_ESCAPES[nxt])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, expected: str) -> SkillSyntaxError:
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        return SkillSyntaxError(f"unexpected {found}", t.line, t.col, expected)

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("punct", "name")

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(repr(text))
        t = self.tok
        self.i += 1
        return t

    def expect_kind(self, kind: str, what: str) -> Token:
        if self.tok.kind != kind:
            raise self.error(what)
        t = self.tok
        self.i += 1
        return t

    def name(self, what: str = "identifier") -> Token:
        t = self.expect_kind("name", what)
        if t.text in KEYWORDS:
            self.i -= 1
            raise self.error(what)
        return t

    # ---------------------------------------------------------------------

    def library(self) -> list[SkillScript]:
        out = []
        while self.tok.kind != "eof":
            out.append(self.skill())
        return out

    def skill(self) -> SkillScript:
        start = self.expect("skill")
        name = self.name("skill name")
        self.expect("(")
        params: list[Param] = []
        if not self.at(")"):
            while True:
                pname = self.name("parameter name")
                self.expect(":")
                kind = self.expect_kind("name", "parameter kind")
                if kind.text not in KINDS:
                    self.i -= 1
                    raise self.error("one of " + "|".join(KINDS))
                params.append(Param(pname.text, kind.text, (pname.line, pname.col)))
                if not self.at(","):
                    break
                self.expect(",")
        self.expect(")")
        if not self.at("doc"):
            raise self.error("'doc' clause")
        self.expect("doc")
        doc = _unquote(self.expect_kind("string", "documentation string"))
        body = self.block()
        return SkillScript(name.text, tuple(params), doc, body, (start.line, start.col))

    def block(self) -> tuple:
        self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise self.error("'}'")
            stmts.append(self.statement())
        if not stmts:
            raise self.error("at least one statement")
        self.expect("}")
        return tuple(stmts)

    def statement(self):
        t = self.tok
        loc = (t.line, t.col)
        if self.at("repeat"):
            self.i += 1
            count_tok = self.expect_kind("number", "repeat count")
            if not count_tok.text.isdigit() or not (1 <= int(count_tok.text) <= MAX_REPEAT):
                raise SkillSyntaxError(f"repeat count must be an integer in 1..{MAX_REPEAT}",
                                       count_tok.line, count_tok.col, "integer repeat count")
            return Repeat(int(count_tok.text), self.block(), loc)
        if self.at("call"):
            self.i += 1
            callee = self.name("skill name")
            args = self.args()
            self._semi()
            return CallSkill(callee.text, args, loc)
        if t.kind != "name" or t.text not in PRIMITIVES:
            raise self.error("primitive name, 'call' or 'repeat'")
        self.i += 1
        args = self.args()
        self._semi()
        return PrimitiveCall(t.text, args, loc)

    def _semi(self) -> None:
        if self.at(";"):
            self.i += 1

    def args(self) -> tuple:
        self.expect("(")
        out = []
        if not self.at(")"):
            while True:
                out.append(self.expr())
                if not self.at(","):
                    break
                self.expect(",")
        self.expect(")")
        return tuple(out)

    def expr(self):
        left = self.atom()
        if self.tok.kind == "punct" and self.tok.text in "+-*/":
            op = self.tok
            self.i += 1
            right = self.atom()
            return BinOp(op.text, left, right, (op.line, op.col))
        return left

    def atom(self):
        t = self.tok
        loc = (t.line, t.col)
        if t.kind == "number":
            self.i += 1
            return Num(_number(t.text), loc)
        if self.at("-") and self.toks[self.i + 1].kind == "number":
            self.i += 2
            return Num(-_number(self.toks[self.i - 1].text), loc)
        if t.kind == "string":
            self.i += 1
            return Str(_unquote(t), loc)
        if t.kind == "name" and t.text not in KEYWORDS:
            self.i += 1
            return Ref(t.text, loc)
        if self.at("("):
            self.i += 1
            x = self.expr()
            self.expect(",")
            y = self.expr()
            self.expect(")")
            return Point(x, y, loc)
        raise self.error("expression")


def _number(text: str) -> int | float:
    if any(c in text for c in ".eE"):
        return float(text)
    return int(text)


def parse(text: str) -> SkillScript:
    """Parse exactly one skill definition."""
    p = _Parser(text)
    script = p.skill()
    if p.tok.kind != "eof":
        raise p.error("end of input")
    return script


def parse_library(text: str) -> list[SkillScript]:
    return _Parser(text).library()


_FENCE = re.compile(r"```[ \t]*(\w*)[^\n]*\n(.*?)```", re.DOTALL)


def extract_code_blocks(llm_text: str, tag: str = "skill") -> list[str]:
    """Bodies of every fenced block tagged ``tag``, in document order."""
    return [m.group(2) for m in _FENCE.finditer(llm_text) if m.group(1) == tag]
