"""Normalized cross-correlation template matching for icon grounding."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import fftconvolve

from ..errors import InvalidTemplate, TemplateLargerThanFrame
from ..observation import Frame, load_png

Rect = tuple[int, int, int, int]


@dataclass(frozen=True, eq=False)
class Template:
    name: str
    pixels: np.ndarray
    match_threshold: float = 0.9

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.ndim != 3 or px.shape[2] != 3 or px.size == 0:
            raise InvalidTemplate(f"template {self.name!r} must be a non-empty HxWx3 raster")
        if np.ptp(px.astype(np.int16)) == 0:
            raise InvalidTemplate(f"template {self.name!r} is flat; correlation is undefined")
        if not (0 < self.match_threshold <= 1):
            raise InvalidTemplate("match_threshold must be in (0, 1]")
        object.__setattr__(self, "pixels", px)

    @property
    def size(self) -> tuple[int, int]:
        return self.pixels.shape[1], self.pixels.shape[0]


@dataclass(frozen=True)
class Detection:
    name: str
    rect: Rect
    score: float


def _box_sum(a: np.ndarray, th: int, tw: int) -> np.ndarray:
    c = np.pad(a, ((1, 0), (1, 0))).cumsum(0).cumsum(1)
    return c[th:, tw:] - c[:-th, tw:] - c[th:, :-tw] + c[:-th, :-tw]


def ncc_map(image: np.ndarray, template: np.ndarray) -> np.ndarray:
    """Score for every valid top-left placement; shape (H-h+1, W-w+1).

    Windows and the template are treated as flat RGB vectors. Flat windows
    score 0.
    """
    img = image.astype(np.float64)
    tpl = template.astype(np.float64)
    th, tw = tpl.shape[:2]
    if th > img.shape[0] or tw > img.shape[1]:
        raise TemplateLargerThanFrame(f"template {tw}x{th} exceeds image {img.shape[1]}x{img.shape[0]}")
    n = th * tw * tpl.shape[2]
    tz = tpl - tpl.mean()
    tnorm = np.sqrt((tz ** 2).sum())
    num = np.zeros((img.shape[0] - th + 1, img.shape[1] - tw + 1))
    s1 = np.zeros_like(num)
    s2 = np.zeros_like(num)
    for ch in range(img.shape[2]):
        num += fftconvolve(img[:, :, ch], tz[::-1, ::-1, ch], mode="valid")
        s1 += _box_sum(img[:, :, ch], th, tw)
        s2 += _box_sum(img[:, :, ch] ** 2, th, tw)
    var = np.maximum(s2 - s1 ** 2 / n, 0.0)
    denom = np.sqrt(var) * tnorm
    # windows whose variance is lost to rounding are treated as flat
    flat = var <= 1e-9 * max(1.0, float(s2.max()))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(flat, 0.0, num / np.where(flat, 1.0, denom))
    return np.clip(out, -1.0, 1.0)


def iou(a: Rect, b: Rect) -> float:
    ix = max(0, min(a[2], b[2]) - max(a[0], b[0]))
    iy = max(0, min(a[3], b[3]) - max(a[1], b[1]))
    inter = ix * iy
    if inter == 0:
        return 0.0
    area = lambda r: (r[2] - r[0]) * (r[3] - r[1])  # noqa: E731
    return inter / (area(a) + area(b) - inter)


def match_templates(frame: Frame, templates: list[Template], nms_iou: float = 0.3) -> list[Detection]:
    """All detections above each template's threshold, greedily non-max suppressed."""
    out: list[Detection] = []
    for t in templates:
        tw, th = t.size
        if tw > frame.width or th > frame.height:
            raise TemplateLargerThanFrame(f"template {t.name!r} ({tw}x{th}) larger than frame")
        scores = ncc_map(frame.pixels, t.pixels)
        ys, xs = np.nonzero(scores >= t.match_threshold - 1e-12)
        cand = sorted(zip(-scores[ys, xs], ys.tolist(), xs.tolist()))
        kept: list[Detection] = []
        for neg, y, x in cand:
            rect = (x, y, x + tw, y + th)
            if all(iou(rect, d.rect) <= nms_iou for d in kept):
                kept.append(Detection(t.name, rect, float(min(1.0, -neg))))
        out.extend(kept)
    out.sort(key=lambda d: (-d.score, d.rect[1], d.rect[0], d.name))
    return out


def load_templates(directory: str | Path, threshold: float = 0.9) -> list[Template]:
    """Every ``<name>.png`` in ``directory`` becomes a template called ``name``."""
    out = []
    for path in sorted(Path(directory).glob("*.png")):
        out.append(Template(path.stem, load_png(path).pixels, threshold))
    return out
