"""Coordinate grid, left/right colour bands and pointer redraw."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import CoordinateOutOfBounds, FrameTooNarrow
from ..observation import Frame
from .font import draw_text, text_size

BLUE = (0, 0, 255)
YELLOW = (255, 255, 0)
MAGENTA = (255, 0, 255)
WHITE = (255, 255, 255)

BAND_WIDTH = 16
GRID_LINE = 2


@dataclass(frozen=True)
class GridSpec:
    rows: int = 3
    cols: int = 5
    label_style: str = "coords"  # "coords" draws "r,c", "index" draws the cell id

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid needs at least one row and one column")


def grid_cells(width: int, height: int, spec: GridSpec) -> dict[int, tuple[int, int, int, int]]:
    """Cell id (1-based, row-major) -> (x0, y0, x1, y1); the cells partition the frame."""
    xs = [(c * width) // spec.cols for c in range(spec.cols + 1)]
    ys = [(r * height) // spec.rows for r in range(spec.rows + 1)]
    cells = {}
    for r in range(spec.rows):
        for c in range(spec.cols):
            cells[r * spec.cols + c + 1] = (xs[c], ys[r], xs[c + 1], ys[r + 1])
    return cells


def draw_grid(frame: Frame, spec: GridSpec = GridSpec()) -> tuple[Frame, dict[int, tuple[int, int, int, int]]]:
    px = frame.pixels.copy()
    h, w = px.shape[:2]
    cells = grid_cells(w, h, spec)
    half = GRID_LINE // 2
    for c in range(1, spec.cols):
        x = (c * w) // spec.cols
        px[:, max(0, x - half):min(w, x - half + GRID_LINE)] = WHITE
    for r in range(1, spec.rows):
        y = (r * h) // spec.rows
        px[max(0, y - half):min(h, y - half + GRID_LINE), :] = WHITE
    for cid, (x0, y0, x1, y1) in cells.items():
        r, c = divmod(cid - 1, spec.cols)
        label = f"{r},{c}" if spec.label_style == "coords" else str(cid)
        tw, th = text_size(label)
        draw_text(px, x0 + (x1 - x0 - tw) // 2, y0 + 4, label, WHITE, clip=(x0, y0, x1, y1))
    return frame.with_pixels(px), cells


def draw_side_bands(frame: Frame, width: int = BAND_WIDTH) -> Frame:
    """Blue band on the left edge, yellow band on the right edge."""
    if frame.width <= 2 * width:
        raise FrameTooNarrow(f"frame width {frame.width} leaves no room for two {width}px bands")
    px = frame.pixels.copy()
    px[:, :width] = BLUE
    px[:, -width:] = YELLOW
    return frame.with_pixels(px)


_ARROW = """
X.......
XX......
XXX.....
XXXX....
XXXXX...
XXXXXX..
XXXXXXX.
XXXXXXXX
XXXXX...
XX.XX...
X...XX..
.....XX.
"""
POINTER_MASK = np.array([[c == "X" for c in row] for row in _ARROW.split()], dtype=bool)


def pointer_footprint(pos: tuple[int, int], size: tuple[int, int]) -> tuple[int, int, int, int]:
    """Bounding rect of the pointer glyph at ``pos`` after clipping to ``size``."""
    x, y = pos
    w, h = size
    mh, mw = POINTER_MASK.shape
    return x, y, min(x + mw, w), min(y + mh, h)


def draw_pointer(frame: Frame, pos: tuple[int, int], color=MAGENTA) -> Frame:
    x, y = pos
    if not (0 <= x < frame.width and 0 <= y < frame.height):
        raise CoordinateOutOfBounds(f"pointer {pos} outside {frame.width}x{frame.height}")
    px = frame.pixels.copy()
    x0, y0, x1, y1 = pointer_footprint(pos, frame.size)
    sub = POINTER_MASK[: y1 - y0, : x1 - x0]
    px[y0:y1, x0:x1][sub] = color
    return frame.with_pixels(px)
