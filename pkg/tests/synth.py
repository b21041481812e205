"""Synthetic rasters shared by the augmentation and acceptance tests."""

from __future__ import annotations

import numpy as np

from cradle.augmentation import MarkSet, Template
from cradle.observation import Frame

CELL = 16
BOX = 14  # mark rect side; the 12x12 watermark covers 144/196 of it


def watermark_template() -> Template:
    px = np.zeros((12, 12, 3), np.uint8)
    px[2:10, 2:10] = (250, 250, 250)
    px[4:8, 4:8] = (20, 120, 220)
    px[0, :] = (200, 40, 40)
    return Template("watermark", px, 0.9)


def watermark_scene(rng: np.random.Generator, rows: int = 12, cols: int = 18, n_marked: int = 50):
    """A frame of rows*cols boxes; ``n_marked`` of them carry a watermark copy.

    The rest hold random noise, a shifted-colour copy with the watermark's
    shape broken, or a flat fill. Returns (frame, marks, watermark ids)."""
    tpl = watermark_template()
    h, w = rows * CELL, cols * CELL
    px = np.full((h, w, 3), 90, np.uint8)
    rects = []
    for r in range(rows):
        for c in range(cols):
            rects.append((c * CELL + 1, r * CELL + 1, c * CELL + 1 + BOX, r * CELL + 1 + BOX))
    marked = set(rng.choice(len(rects), size=n_marked, replace=False).tolist())
    for i, (x0, y0, x1, y1) in enumerate(rects):
        if i in marked:
            px[y0:y1, x0:x1] = (30, 30, 30)
            ox, oy = rng.integers(0, BOX - 12 + 1, size=2)
            px[y0 + oy:y0 + oy + 12, x0 + ox:x0 + ox + 12] = tpl.pixels
        elif i % 3 == 0:
            px[y0:y1, x0:x1] = rng.integers(0, 256, (BOX, BOX, 3), dtype=np.uint8)
        elif i % 3 == 1:
            decoy = tpl.pixels.copy()
            decoy[2:10, 2:10] = (20, 120, 220)  # outer square gone
            decoy[4:8, 4:8] = (250, 250, 250)
            decoy[0, :] = 0
            decoy[:, 0] = (200, 40, 40)
            px[y0:y0 + 12, x0:x0 + 12] = decoy
        else:
            px[y0:y1, x0:x1] = (10 * (i % 20), 60, 200)
    frame = Frame(0, 0, px)
    return frame, MarkSet.from_rects(rects), sorted(i + 1 for i in marked)


# --- skill scripts ----------------------------------------------------------------

from cradle.skills.ast import BinOp, CallSkill, Num, Param, Point, PrimitiveCall, Ref, Repeat, SkillScript, Str  # noqa: E402
from cradle.skills.signatures import PRIMITIVES  # noqa: E402

_WORDS = ["move", "open", "tap", "pick", "menu", "road", "door", "tool", "fast", "left"]
_TEXT = ["w", "ctrl+c", "enter", "hello \"world\"", "tab\tsep", "line\nbreak", "back\\slash", ""]


def _number(rng) -> int | float:
    if rng.random() < 0.5:
        return int(rng.integers(-50, 500))
    return float(np.round(rng.normal(0, 40), int(rng.integers(0, 6))))


def _expr(rng, depth: int = 0):
    r = rng.random()
    if r < 0.35:
        return Num(_number(rng))
    if r < 0.55:
        return Str(str(rng.choice(_TEXT)))
    if r < 0.7:
        return Ref(str(rng.choice(["a", "b", "pos", "key"])))
    if r < 0.85 and depth < 2:
        return Point(_expr(rng, depth + 1), _expr(rng, depth + 1))
    return BinOp(str(rng.choice(list("+-*/"))), _atom(rng, depth + 1), _atom(rng, depth + 1))


def _atom(rng, depth: int):
    e = _expr(rng, depth)
    return e if not isinstance(e, BinOp) else Num(_number(rng))


def _stmts(rng, depth: int = 0) -> tuple:
    out = []
    for _ in range(int(rng.integers(1, 4))):
        r = rng.random()
        nargs = int(rng.integers(0, 3))
        args = tuple(_expr(rng) for _ in range(nargs))
        if r < 0.6:
            out.append(PrimitiveCall(str(rng.choice(sorted(PRIMITIVES))), args))
        elif r < 0.85 or depth >= 2:
            out.append(CallSkill(f"helper_{rng.integers(0, 9)}", args))
        else:
            out.append(Repeat(int(rng.integers(1, 1001)), _stmts(rng, depth + 1)))
    return tuple(out)


def skill_corpus(rng: np.random.Generator, n: int = 50) -> list[SkillScript]:
    """Syntactically valid scripts covering every statement and expression form.

    They are not meant to validate: arity and kinds are random."""
    out = []
    for i in range(n):
        k = int(rng.integers(0, 4))
        kinds = ["number", "string", "point", "label"]
        params = tuple(Param(f"p{j}", str(rng.choice(kinds))) for j in range(k))
        name = "_".join(rng.choice(_WORDS, size=2)) + f"_{i}"
        doc = str(rng.choice(_TEXT)) or "does a thing"
        out.append(SkillScript(name, params, doc, _stmts(rng)))
    return out


# --- skill stores --------------------------------------------------------------------

from cradle.memory import SkillEntry, SkillStore  # noqa: E402


def tiny_script(name: str, doc: str = "does a thing") -> SkillScript:
    return SkillScript(name, (), doc, (PrimitiveCall("wait", (Num(0.1),)),))


def random_store(rng: np.random.Generator, size: int, dim: int = 8, dup_rate: float = 0.2) -> SkillStore:
    """Random unit embeddings; some entries copy an earlier vector (or its
    positive multiple) so that exact cosine ties occur."""
    store = SkillStore(dim)
    vecs: list[np.ndarray] = []
    names = [f"s{i:03d}" for i in range(size)]
    rng.shuffle(names)  # insertion order differs from name order
    for name in names:
        if vecs and rng.random() < dup_rate:
            v = vecs[int(rng.integers(0, len(vecs)))] * float(rng.choice([1.0, 2.0, 0.5]))
        else:
            v = rng.normal(size=dim)
        vecs.append(v)
        store.add(SkillEntry(tiny_script(name), v))
    return store


def brute_retrieve(store: SkillStore, q: np.ndarray, k: int) -> list[str]:
    """Oracle: cosine via explicit norms, ordered by (−similarity, name)."""
    import math

    rows = []
    qn = math.sqrt(sum(float(x) * float(x) for x in q))
    for e in store.entries():
        # embeddings are normalised on entry; recompute the cosine from scratch anyway
        v = e.embedding
        vn = math.sqrt(sum(float(x) * float(x) for x in v))
        cos = sum(float(a) * float(b) for a, b in zip(v, q)) / (vn * qn)
        rows.append((round(-cos, 12), e.name))
    rows.sort()
    return [name for _, name in rows[:k]]


# --- trade ledgers -----------------------------------------------------------------------

from fractions import Fraction  # noqa: E402

from cradle.harness import TradeLedger, Transaction  # noqa: E402


def random_ledger(rng: np.random.Generator) -> TradeLedger:
    n = int(rng.integers(1, 40))
    rows = []
    for _ in range(n):
        v = float(np.round(rng.uniform(1, 2000), 2))
        b = float(np.round(v * rng.uniform(0.3, 1.2), 2)) or 0.01
        s = float(np.round(v * rng.uniform(0.5, 2.0), 2))
        rows.append(Transaction(b, s, v))
    return TradeLedger(tuple(rows), int(rng.integers(0, 10)))


def oracle_trade(ledger: TradeLedger) -> dict[str, float]:
    """The nine trade formulas in exact rational arithmetic, as percentages."""
    B = [Fraction(t.buy) for t in ledger.transactions]
    S = [Fraction(t.sell) for t in ledger.transactions]
    V = [Fraction(t.valuation) for t in ledger.transactions]
    n, m = len(B), ledger.failed
    sb, ss, sv = sum(B), sum(S), sum(V)
    rates = [(s - b) / b for b, s in zip(B, S)]
    out = {
        "TR": Fraction(n, n + m),
        "GPM": (ss - sb) / ss,
        "ROI": (ss - sb) / sb,
        "VD": (ss - sv) / sv,
        "BPVR": sb / sv,
        "SPVR": ss / sv,
        "APR": sum(rates) / n,
        "MRR": max(rates),
        "mRR": min(rates),
    }
    return {k: float(100 * v) for k, v in out.items()}


# --- frame sampling -----------------------------------------------------------------


def oracle_indices(n: int, m: int) -> list[int]:
    """Evenly spaced indices by exact rationals, halves rounded up, duplicates dropped."""
    if n <= m:
        return list(range(n))
    if m == 1:
        return [0]
    out = []
    for i in range(m):
        q = Fraction(i * (n - 1), m - 1)
        idx = q.numerator // q.denominator
        if q - idx >= Fraction(1, 2):
            idx += 1
        if idx not in out:
            out.append(idx)
    return out
