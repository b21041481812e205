"""Set-of-mark overlays derived from segmentation proposals."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Protocol, Sequence

import numpy as np
from scipy import ndimage

from ..errors import SegmenterFailure
from ..observation import Frame
from .font import draw_text, text_size
from .templates import Template, iou, ncc_map

Rect = tuple[int, int, int, int]

# 12-colour cycle for standard-style borders; arbitrary but fixed.
PALETTE = [
    (230, 25, 75), (60, 180, 75), (255, 225, 25), (0, 130, 200), (245, 130, 48), (145, 30, 180),
    (70, 240, 240), (240, 50, 230), (210, 245, 60), (250, 190, 190), (0, 128, 128), (170, 110, 40),
]
UNIFORM_BORDER = (255, 0, 0)
BORDER = 2
LABEL_PAD = 2
DEDUP_IOU = 0.9


@dataclass(frozen=True)
class Mark:
    id: int
    rect: Rect
    score: float = 1.0


@dataclass(frozen=True)
class MarkSet:
    marks: tuple[Mark, ...] = ()

    def __post_init__(self):
        ids = [m.id for m in self.marks]
        if ids != list(range(1, len(ids) + 1)):
            raise ValueError("mark ids must be dense from 1 in order")
        for m in self.marks:
            x0, y0, x1, y1 = m.rect
            if not (x0 < x1 and y0 < y1):
                raise ValueError(f"degenerate mark rect {m.rect}")

    def __len__(self) -> int:
        return len(self.marks)

    def __iter__(self):
        return iter(self.marks)

    def get(self, mark_id: int) -> Mark | None:
        if 1 <= mark_id <= len(self.marks):
            return self.marks[mark_id - 1]
        return None

    def rects(self) -> list[Rect]:
        return [m.rect for m in self.marks]

    @classmethod
    def from_rects(cls, rects: Iterable[Rect], scores: Iterable[float] | None = None) -> "MarkSet":
        rects = list(rects)
        scores = list(scores) if scores is not None else [1.0] * len(rects)
        return cls(tuple(Mark(i + 1, tuple(int(v) for v in r), float(s)) for i, (r, s) in enumerate(zip(rects, scores))))

    def dumps(self) -> str:
        return "".join(f"{m.id} {m.rect[0]} {m.rect[1]} {m.rect[2]} {m.rect[3]} {m.score:.6f}\n" for m in self.marks)

    @classmethod
    def loads(cls, text: str) -> "MarkSet":
        marks = []
        for line in text.splitlines():
            if line.strip():
                i, x0, y0, x1, y1, s = line.split()
                marks.append(Mark(int(i), (int(x0), int(y0), int(x1), int(y1)), float(s)))
        return cls(tuple(marks))


def centroid(rect: Rect) -> tuple[int, int]:
    x0, y0, x1, y1 = rect
    return (x0 + x1) // 2, (y0 + y1) // 2


# --- segmentation ------------------------------------------------------------------

class Segmenter(Protocol):
    def __call__(self, frame: Frame) -> Sequence: ...


@dataclass
class ComponentSegmenter:
    """Colour-quantised connected-component labelling; a deterministic stand-in
    for a learned segmentation model. Components spanning the whole frame and
    those smaller than ``min_area`` are dropped."""

    step: int = 32
    connectivity: int = 8
    min_area: int = 1

    def __call__(self, frame: Frame) -> list[tuple[Rect, float]]:
        q = (frame.pixels // self.step).astype(np.int32)
        levels = 256 // self.step + 1
        code = (q[:, :, 0] * levels + q[:, :, 1]) * levels + q[:, :, 2]
        structure = np.ones((3, 3), bool) if self.connectivity == 8 else None
        h, w = code.shape
        out: list[tuple[Rect, float]] = []
        for value in np.unique(code):
            labels, n = ndimage.label(code == value, structure=structure)
            if n == 0:
                continue
            slices = ndimage.find_objects(labels)
            areas = ndimage.sum_labels(np.ones_like(labels), labels, index=np.arange(1, n + 1))
            for sl, area in zip(slices, areas):
                ys, xs = sl
                rect = (xs.start, ys.start, xs.stop, ys.stop)
                if area < self.min_area or rect == (0, 0, w, h):
                    continue
                box = (rect[2] - rect[0]) * (rect[3] - rect[1])
                out.append((rect, float(area) / box))
        return out


def _proposal_rect(p) -> tuple[Rect, float]:
    if isinstance(p, np.ndarray):
        ys, xs = np.nonzero(p)
        if len(xs) == 0:
            raise SegmenterFailure("empty mask proposal")
        rect = (int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1)
        return rect, float(len(xs)) / ((rect[2] - rect[0]) * (rect[3] - rect[1]))
    if len(p) == 2 and not isinstance(p[0], (int, np.integer)):
        rect, score = p
        return tuple(int(v) for v in rect), float(score)
    return tuple(int(v) for v in p), 1.0


def segment_to_marks(frame: Frame, segmenter: Segmenter) -> MarkSet:
    try:
        proposals = list(segmenter(frame))
    except SegmenterFailure:
        raise
    except Exception as exc:
        raise SegmenterFailure(f"segmenter failed: {exc}") from exc
    items: list[tuple[Rect, float]] = []
    for p in proposals:
        rect, score = _proposal_rect(p)
        x0, y0, x1, y1 = rect
        rect = (max(0, x0), max(0, y0), min(frame.width, x1), min(frame.height, y1))
        if rect[0] >= rect[2] or rect[1] >= rect[3]:
            continue
        items.append((rect, score))
    # higher-scoring proposals win when merging duplicates
    items.sort(key=lambda it: (-it[1], it[0]))
    kept: list[tuple[Rect, float]] = []
    for rect, score in items:
        if all(iou(rect, k[0]) <= DEDUP_IOU for k in kept):
            kept.append((rect, score))
    kept.sort(key=lambda it: (it[0][1], it[0][0], it[0][3], it[0][2]))
    return MarkSet.from_rects([r for r, _ in kept], [s for _, s in kept])


# --- rendering ------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MarkedFrame:
    frame: Frame
    offset: tuple[int, int]  # where the original (0, 0) landed in the output
    label_rects: dict[int, Rect]


def _draw_border(px: np.ndarray, rect: Rect, color, width: int = BORDER) -> None:
    h, w = px.shape[:2]
    x0, y0, x1, y1 = rect
    x0c, y0c, x1c, y1c = max(x0, 0), max(y0, 0), min(x1, w), min(y1, h)
    if x0c >= x1c or y0c >= y1c:
        return
    bw = min(width, x1 - x0, y1 - y0)
    px[y0c:min(y0 + bw, h), x0c:x1c] = color
    px[max(y1 - bw, 0):y1c, x0c:x1c] = color
    px[y0c:y1c, x0c:min(x0 + bw, w)] = color
    px[y0c:y1c, max(x1 - bw, 0):x1c] = color


def _label_box(text: str) -> tuple[int, int]:
    tw, th = text_size(text)
    return tw + 2 * LABEL_PAD, th + 2 * LABEL_PAD


def render_marks(frame: Frame, marks: MarkSet, style: str = "standard") -> MarkedFrame:
    """Draw numbered boxes.

    ``standard``: palette borders, label sitting on the box's top-left corner
    outside the box, with the image padded so every label fits.
    ``uniform``: one border colour, black-on-white label inside the box.
    """
    if style not in ("standard", "uniform"):
        raise ValueError(f"unknown mark style {style!r}")
    src = frame.pixels
    h, w = src.shape[:2]
    labels: dict[int, Rect] = {}
    if style == "uniform":
        px = src.copy()
        for m in marks:
            _draw_border(px, m.rect, UNIFORM_BORDER)
        for m in marks:
            x0, y0, x1, y1 = m.rect
            lw, lh = _label_box(str(m.id))
            lr = (x0, y0, min(x0 + lw, x1), min(y0 + lh, y1))
            px[lr[1]:lr[3], lr[0]:lr[2]] = (255, 255, 255)
            draw_text(px, x0 + LABEL_PAD, y0 + LABEL_PAD, str(m.id), (0, 0, 0), clip=lr)
            labels[m.id] = lr
        return MarkedFrame(frame.with_pixels(px), (0, 0), labels)

    raw: dict[int, Rect] = {}
    for m in marks:
        lw, lh = _label_box(str(m.id))
        x0, y0 = m.rect[0], m.rect[1]
        raw[m.id] = (x0, y0 - lh, x0 + lw, y0)
    pad_l = max([0] + [-r[0] for r in raw.values()])
    pad_t = max([0] + [-r[1] for r in raw.values()])
    pad_r = max([0] + [r[2] - w for r in raw.values()])
    pad_b = max([0] + [r[3] - h for r in raw.values()])
    px = np.full((h + pad_t + pad_b, w + pad_l + pad_r, 3), 255, dtype=np.uint8)
    px[pad_t:pad_t + h, pad_l:pad_l + w] = src

    def shift(r: Rect) -> Rect:
        return r[0] + pad_l, r[1] + pad_t, r[2] + pad_l, r[3] + pad_t

    for m in marks:
        _draw_border(px, shift(m.rect), PALETTE[(m.id - 1) % len(PALETTE)])
    for m in marks:
        color = PALETTE[(m.id - 1) % len(PALETTE)]
        lr = shift(raw[m.id])
        px[lr[1]:lr[3], lr[0]:lr[2]] = color
        ink = (0, 0, 0) if sum(color) > 380 else (255, 255, 255)
        draw_text(px, lr[0] + LABEL_PAD, lr[1] + LABEL_PAD, str(m.id), ink, clip=lr)
        labels[m.id] = lr
    return MarkedFrame(frame.with_pixels(px), (pad_l, pad_t), labels)


# --- watermark filtering -------------------------------------------------------------


def is_watermark(frame: Frame, rect: Rect, template: Template, min_cover: float = 0.5) -> bool:
    """A mark is a watermark when the template matches inside it above threshold
    and the template covers at least ``min_cover`` of the mark's area."""
    x0, y0, x1, y1 = rect
    tw, th = template.size
    if x1 - x0 < tw or y1 - y0 < th:
        return False
    if tw * th < min_cover * (x1 - x0) * (y1 - y0):
        return False
    scores = ncc_map(frame.pixels[y0:y1, x0:x1], template.pixels)
    return float(scores.max()) >= template.match_threshold


def filter_watermarks(marks: MarkSet, frame: Frame, watermark: Template) -> MarkSet:
    keep = [m for m in marks if not is_watermark(frame, m.rect, watermark)]
    return MarkSet.from_rects([m.rect for m in keep], [m.score for m in keep])


def relabel(marks: Sequence[Mark]) -> MarkSet:
    return MarkSet(tuple(replace(m, id=i + 1) for i, m in enumerate(marks)))


def marks_in_region(marks: MarkSet, region: Rect, min_size: int = 1) -> list[Mark]:
    """Marks fully inside ``region`` that are not nested within another such mark."""
    rx0, ry0, rx1, ry1 = region
    inside = [m for m in marks if rx0 <= m.rect[0] and ry0 <= m.rect[1] and m.rect[2] <= rx1 and m.rect[3] <= ry1
              and m.rect[2] - m.rect[0] >= min_size and m.rect[3] - m.rect[1] >= min_size]

    def within(a: Rect, b: Rect) -> bool:
        return a != b and b[0] <= a[0] and b[1] <= a[1] and a[2] <= b[2] and a[3] <= b[3]

    return [m for m in inside if not any(within(m.rect, o.rect) for o in inside)]

