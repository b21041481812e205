"""Screen capture into a bounded frame ring, clips, keyframes and frame sampling."""

from __future__ import annotations

import hashlib
import threading
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from PIL import Image

from .clock import SimClock
from .errors import EmptyClip, InvalidConfig, InvalidTarget, RegionOutOfBounds, SourceUnavailable

Rect = tuple[int, int, int, int]


@dataclass(frozen=True, eq=False)
class Frame:
    index: int
    timestamp: int
    pixels: np.ndarray  # H x W x 3, uint8, read-only

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3 or px.shape[0] * px.shape[1] == 0:
            raise ValueError(f"frame pixels must be a non-empty HxWx3 array, got {px.shape}")
        if px.dtype != np.uint8:
            px = px.astype(np.uint8)
        if px.flags.writeable:
            px = px.copy()
            px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def size(self) -> tuple[int, int]:
        return self.width, self.height

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.width}x{self.height}".encode())
        h.update(self.pixels.tobytes())
        return h.hexdigest()

    def with_pixels(self, pixels: np.ndarray) -> "Frame":
        return Frame(self.index, self.timestamp, pixels)


def frame_from_array(pixels: np.ndarray, index: int = 0, timestamp: int = 0) -> Frame:
    return Frame(index, timestamp, pixels)


@dataclass(frozen=True, eq=False)
class VideoClip:
    frames: tuple[Frame, ...]
    fps: float
    action_marker_start: int
    action_marker_end: int

    def __post_init__(self):
        if not self.frames:
            raise EmptyClip("a clip needs at least one frame")
        if self.fps <= 0:
            raise InvalidConfig("fps must be positive")
        for f in self.frames:
            if not (self.action_marker_start <= f.timestamp <= self.action_marker_end):
                raise ValueError(f"frame {f.index} at {f.timestamp} outside clip markers")

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def first(self) -> Frame:
        return self.frames[0]

    @property
    def last(self) -> Frame:
        return self.frames[-1]


@dataclass(frozen=True)
class CaptureConfig:
    fps: float = 2.0
    source: str = "screen"
    ring_capacity: int = 600
    reflection_width: int = 512

    def __post_init__(self):
        if not (0 < self.fps <= 60):
            raise InvalidConfig(f"fps must be in (0, 60], got {self.fps}")
        if self.ring_capacity < 1:
            raise InvalidConfig("ring capacity must be at least 1")


class Capture:
    """Capture handle: samples ``source`` every 1/fps seconds of clock time."""

    def __init__(self, source: Callable[[], np.ndarray], clock: SimClock, config: CaptureConfig):
        self.source = source
        self.clock = clock
        self.config = config
        self.interval = max(1, clock.ticks_for(1.0 / config.fps))
        self._ring: deque[Frame] = deque(maxlen=config.ring_capacity)
        self._lock = threading.Lock()
        self._next_index = 0
        self._start_tick = clock.now
        self._marker_index = -1
        self._marker_tick = clock.now
        self.running = False

    def _on_tick(self, tick: int) -> None:
        if (tick - self._start_tick) % self.interval == 0:
            self.push(self._grab(), tick)

    def _grab(self) -> np.ndarray:
        try:
            return np.asarray(self.source())
        except Exception as exc:
            raise SourceUnavailable(f"capture source failed: {exc}") from exc

    def push(self, pixels: np.ndarray, tick: int | None = None) -> Frame:
        """Append a frame (also used to inject frames directly)."""
        tick = self.clock.now if tick is None else tick
        with self._lock:
            if self._ring and tick <= self._ring[-1].timestamp:
                raise ValueError("frame timestamps must strictly increase")
            frame = Frame(self._next_index, tick, pixels)
            self._next_index += 1
            self._ring.append(frame)
            return frame

    def snap(self) -> Frame:
        """Capture now unless a frame already exists for the current tick."""
        with self._lock:
            last = self._ring[-1] if self._ring else None
        if last is not None and last.timestamp == self.clock.now:
            return last
        return self.push(self._grab())

    def frames(self) -> list[Frame]:
        with self._lock:
            return list(self._ring)

    def latest(self) -> Frame | None:
        with self._lock:
            return self._ring[-1] if self._ring else None

    def clip_since_last_action(self) -> VideoClip:
        with self._lock:
            new = [f for f in self._ring if f.index > self._marker_index]
            if not new:
                raise EmptyClip("no frames captured since the last marker")
            start = min(self._marker_tick, new[0].timestamp)
            end = max(self.clock.now, new[-1].timestamp)
            self._marker_index = new[-1].index
            self._marker_tick = end
        return VideoClip(tuple(new), self.config.fps, start, end)


def start_capture(source: Callable[[], np.ndarray] | None, config: CaptureConfig, clock: SimClock) -> Capture:
    if source is None or not callable(source):
        raise SourceUnavailable("capture source must be a callable returning a raster")
    handle = Capture(source, clock, config)
    clock.add_listener(handle._on_tick)
    handle.running = True
    return handle


def stop_capture(handle: Capture) -> None:
    handle.clock.remove_listener(handle._on_tick)
    handle.running = False


# --- clip processing ------------------------------------------------------------


def _region_mean_diff(a: np.ndarray, b: np.ndarray, region: Rect) -> float:
    x0, y0, x1, y1 = region
    da = a[y0:y1, x0:x1].astype(np.int16)
    db = b[y0:y1, x0:x1].astype(np.int16)
    return float(np.abs(da - db).mean()) / 255.0


def extract_keyframes(clip: VideoClip, text_region: Rect | None = None, threshold: float = 0.02) -> list[Frame]:
    """Frames whose text region differs from the last kept keyframe by more than
    ``threshold`` (mean absolute difference, as a fraction of full scale)."""
    if not (0 < threshold < 1):
        raise ValueError("threshold must be in (0, 1)")
    w, h = clip.first.size
    region = text_region or (0, 0, w, h)
    x0, y0, x1, y1 = region
    if not (0 <= x0 < x1 <= w and 0 <= y0 < y1 <= h):
        raise RegionOutOfBounds(f"region {region} outside {w}x{h} frame")
    kept = [clip.first]
    for f in clip.frames[1:]:
        if _region_mean_diff(kept[-1].pixels, f.pixels, region) > threshold:
            kept.append(f)
    return kept


def sample_indices(n: int, max_n: int) -> list[int]:
    """Uniform indices ``round_half_up(i*(n-1)/(max_n-1))`` for a clip of ``n`` frames."""
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    if n <= max_n:
        return list(range(n))
    if max_n == 1:
        return [0]
    out: list[int] = []
    for i in range(max_n):
        idx = int(Fraction(i * (n - 1), max_n - 1) + Fraction(1, 2))
        if not out or out[-1] != idx:
            out.append(idx)
    return out


def sample_frames(clip: VideoClip, max_n: int = 8) -> list[Frame]:
    return [clip.frames[i] for i in sample_indices(len(clip.frames), max_n)]


def downscale(frame: Frame, target: tuple[int, int]) -> Frame:
    """Nearest-neighbour downscale to ``target`` (w, h), letterboxing in black when
    the aspect ratios differ."""
    tw, th = target
    w, h = frame.size
    if tw < 1 or th < 1 or tw > w or th > h:
        raise InvalidTarget(f"target {target} must be within 1..{w}x{h}")
    scale = min(Fraction(tw, w), Fraction(th, h))
    iw = max(1, min(tw, int(w * scale + Fraction(1, 2))))
    ih = max(1, min(th, int(h * scale + Fraction(1, 2))))
    xs = ((np.arange(iw) * 2 + 1) * w) // (2 * iw)
    ys = ((np.arange(ih) * 2 + 1) * h) // (2 * ih)
    inner = frame.pixels[ys[:, None], xs[None, :]]
    if (iw, ih) == (tw, th):
        return frame.with_pixels(inner)
    out = np.zeros((th, tw, 3), dtype=np.uint8)
    ox, oy = (tw - iw) // 2, (th - ih) // 2
    out[oy:oy + ih, ox:ox + iw] = inner
    return frame.with_pixels(out)


def downscale_to_width(frame: Frame, width: int) -> Frame:
    """Downscale keeping aspect ratio; frames already narrower pass through."""
    if frame.width <= width:
        return frame
    height = max(1, int(Fraction(frame.height * width, frame.width) + Fraction(1, 2)))
    return downscale(frame, (width, height))


# --- persistence ------------------------------------------------------------------


def save_png(frame: Frame, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(frame.pixels, "RGB").save(path, format="PNG")
    return path


def load_png(path: str | Path, index: int = 0, timestamp: int = 0) -> Frame:
    with Image.open(path) as im:
        return Frame(index, timestamp, np.asarray(im.convert("RGB")))


def save_clip(clip: VideoClip, directory: str | Path) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = ["clip v1", f"fps {clip.fps}", f"markers {clip.action_marker_start} {clip.action_marker_end}"]
    for f in clip.frames:
        name = f"frame_{f.index:06d}.png"
        save_png(f, directory / name)
        lines.append(f"frame {f.index} {f.timestamp} {name}")
    (directory / "manifest.txt").write_text("\n".join(lines) + "\n")
    return directory


def load_clip(directory: str | Path) -> VideoClip:
    directory = Path(directory)
    lines = (directory / "manifest.txt").read_text().splitlines()
    if not lines or lines[0] != "clip v1":
        raise ValueError("not a clip manifest")
    fps = 0.0
    markers = (0, 0)
    frames: list[Frame] = []
    for line in lines[1:]:
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "fps":
            fps = float(parts[1])
        elif parts[0] == "markers":
            markers = (int(parts[1]), int(parts[2]))
        elif parts[0] == "frame":
            frames.append(load_png(directory / parts[3], int(parts[1]), int(parts[2])))
    return VideoClip(tuple(frames), fps, *markers)


def frames_equal(a: Sequence[Frame], b: Sequence[Frame]) -> bool:
    return len(a) == len(b) and all(x.index == y.index and np.array_equal(x.pixels, y.pixels) for x, y in zip(a, b))
