"""Visual prompting: grids, bands, pointer redraw, set-of-mark and template matching."""

from .marks import (
    ComponentSegmenter,
    Mark,
    MarkedFrame,
    MarkSet,
    centroid,
    filter_watermarks,
    marks_in_region,
    render_marks,
    segment_to_marks,
)
from .overlays import GridSpec, draw_grid, draw_pointer, draw_side_bands, grid_cells
from .templates import Detection, Template, load_templates, match_templates, ncc_map

__all__ = [
    "ComponentSegmenter", "Detection", "GridSpec", "Mark", "MarkSet", "MarkedFrame", "Template",
    "centroid", "draw_grid", "draw_pointer", "draw_side_bands", "filter_watermarks", "grid_cells",
    "load_templates", "marks_in_region", "match_templates", "ncc_map", "render_marks", "segment_to_marks",
]
