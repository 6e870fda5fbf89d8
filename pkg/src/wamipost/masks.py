"""Binary masks, connected-component labeling and per-component geometry.

A mask is a 2-D ``numpy.uint8`` array of shape ``(height, width)`` holding
only 0 (background) and 1 (foreground); coordinates are ``(row, col)`` with
the origin at the top-left pixel.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy import ndimage

from .errors import ComponentError, ParameterError

_STRUCTURES = {
    4: ndimage.generate_binary_structure(2, 1),
    8: ndimage.generate_binary_structure(2, 2),
}


def as_mask(data) -> np.ndarray:
    """Validate ``data`` as a binary mask and return it as a uint8 array."""
    arr = np.asarray(data)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ParameterError(f"mask must be a non-empty 2-D array, got shape {arr.shape}")
    if arr.dtype == np.bool_:
        return arr.astype(np.uint8)
    if not np.all((arr == 0) | (arr == 1)):
        raise ParameterError("mask values must be 0 or 1")
    return arr.astype(np.uint8, copy=False)


def empty_mask(width: int, height: int) -> np.ndarray:
    if width < 1 or height < 1:
        raise ParameterError(f"mask dimensions must be >= 1, got {width}x{height}")
    return np.zeros((height, width), dtype=np.uint8)


@dataclass(frozen=True)
class Rect:
    """Axis-aligned pixel rectangle; ``row``/``col`` is the top-left pixel."""

    row: int
    col: int
    height: int
    width: int

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise ParameterError(f"rect sides must be >= 1, got {self.height}x{self.width}")

    @property
    def area(self) -> int:
        return self.height * self.width

    def in_bounds(self, width: int, height: int) -> bool:
        return (self.row >= 0 and self.col >= 0
                and self.row + self.height <= height
                and self.col + self.width <= width)

    def gap(self, other: Rect) -> int:
        """Number of background rows/cols separating two rects (0 when touching, <0 overlapping)."""
        row_gap = max(other.row - (self.row + self.height), self.row - (other.row + other.height))
        col_gap = max(other.col - (self.col + self.width), self.col - (other.col + other.width))
        return max(row_gap, col_gap)


@dataclass(frozen=True, eq=False)
class Component:
    """One connected foreground region.

    ``rows``/``cols`` list the member pixels in raster order. ``shape`` is the
    ``(height, width)`` of the image the component belongs to. ``perimeter``
    counts member pixels with at least one 4-neighbor outside the component
    (out-of-image counts as outside).
    """

    label: int
    rows: np.ndarray
    cols: np.ndarray
    shape: tuple
    area: int
    bbox: tuple
    perimeter: int

    @classmethod
    def from_pixels(cls, label: int, rows, cols, shape) -> Component:
        rows = np.asarray(rows, dtype=np.intp)
        cols = np.asarray(cols, dtype=np.intp)
        if rows.size == 0:
            raise ComponentError("component must contain at least one pixel")
        # dedupe and put in raster order
        flat = np.unique(rows * shape[1] + cols)
        rows, cols = np.divmod(flat, shape[1])
        r0, c0 = int(rows.min()), int(cols.min())
        r1, c1 = int(rows.max()), int(cols.max())
        local = np.zeros((r1 - r0 + 3, c1 - c0 + 3), dtype=bool)
        local[rows - r0 + 1, cols - c0 + 1] = True
        perimeter = int(np.count_nonzero(local & ~_interior(local)))
        return cls(int(label), rows, cols, (int(shape[0]), int(shape[1])),
                   int(flat.size), (r0, c0, r1, c1), perimeter)

    @classmethod
    def from_rect(cls, label: int, rect: Rect, shape) -> Component:
        rr, cc = np.mgrid[rect.row:rect.row + rect.height, rect.col:rect.col + rect.width]
        return cls.from_pixels(label, rr.ravel(), cc.ravel(), shape)

    @property
    def bbox_height(self) -> int:
        return self.bbox[2] - self.bbox[0] + 1

    @property
    def bbox_width(self) -> int:
        return self.bbox[3] - self.bbox[1] + 1

    @property
    def aspect_ratio(self) -> float:
        h, w = self.bbox_height, self.bbox_width
        return min(h, w) / max(h, w)

    @property
    def pixel_set(self) -> frozenset:
        return frozenset(zip(self.rows.tolist(), self.cols.tolist()))

    @property
    def flat_indices(self) -> np.ndarray:
        return self.rows * self.shape[1] + self.cols

    def __repr__(self):
        return (f"Component(label={self.label}, area={self.area}, bbox={self.bbox}, "
                f"perimeter={self.perimeter})")


@dataclass(frozen=True, eq=False)
class LabelMap:
    labels: np.ndarray
    component_count: int

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


def _interior(fg: np.ndarray) -> np.ndarray:
    """Foreground pixels whose four 4-neighbors are all foreground (outside = background)."""
    inner = fg.copy()
    inner[1:, :] &= fg[:-1, :]
    inner[:-1, :] &= fg[1:, :]
    inner[:, 1:] &= fg[:, :-1]
    inner[:, :-1] &= fg[:, 1:]
    inner[0, :] = False
    inner[-1, :] = False
    inner[:, 0] = False
    inner[:, -1] = False
    return inner


def label_array(mask, connectivity: int = 8) -> tuple[np.ndarray, int]:
    """Label ``mask`` and return ``(labels, count)`` with labels in raster order of first pixel."""
    if connectivity not in _STRUCTURES:
        raise ParameterError(f"connectivity must be 4 or 8, got {connectivity}")
    mask = as_mask(mask)
    labels, count = ndimage.label(mask, structure=_STRUCTURES[connectivity])
    labels = labels.astype(np.int32, copy=False)
    if count > 1:
        flat = labels.ravel()
        values, first = np.unique(flat, return_index=True)
        if values[0] == 0:
            values, first = values[1:], first[1:]
        order = values[np.argsort(first, kind="stable")]
        remap = np.zeros(count + 1, dtype=np.int32)
        remap[order] = np.arange(1, count + 1, dtype=np.int32)
        labels = remap[labels]
    return labels, int(count)


def region_measures(labels: np.ndarray, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-label ``(areas, perimeters)`` arrays of length ``count + 1`` (index 0 unused)."""
    fg = labels > 0
    areas = np.bincount(labels.ravel(), minlength=count + 1)
    boundary = fg & ~_interior(fg)
    perimeters = np.bincount(labels[boundary], minlength=count + 1)
    areas[0] = perimeters[0] = 0
    return areas, perimeters


def region_bbox_sides(labels: np.ndarray, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-label bounding-box ``(heights, widths)``, length ``count + 1``."""
    heights = np.zeros(count + 1, dtype=np.int64)
    widths = np.zeros(count + 1, dtype=np.int64)
    for i, sl in enumerate(ndimage.find_objects(labels, max_label=count), start=1):
        if sl is not None:
            heights[i] = sl[0].stop - sl[0].start
            widths[i] = sl[1].stop - sl[1].start
    return heights, widths


def label_components(mask, connectivity: int = 8) -> tuple[LabelMap, list[Component]]:
    """Label connected foreground regions of ``mask``.

    Label 1 is the component whose first pixel comes first in raster order,
    and so on; the returned components are sorted by label.
    """
    labels, count = label_array(mask, connectivity)
    label_map = LabelMap(labels, count)
    if count == 0:
        return label_map, []

    shape = labels.shape
    flat = labels.ravel()
    idx = np.flatnonzero(flat)
    order = np.argsort(flat[idx], kind="stable")
    idx = idx[order]
    areas, perimeters = region_measures(labels, count)
    bounds = np.cumsum(areas[1:])[:-1]
    rows, cols = np.divmod(idx, shape[1])
    starts = np.concatenate(([0], bounds))
    rmin = np.minimum.reduceat(rows, starts)
    rmax = np.maximum.reduceat(rows, starts)
    cmin = np.minimum.reduceat(cols, starts)
    cmax = np.maximum.reduceat(cols, starts)

    components = []
    for i, (r, c) in enumerate(zip(np.split(rows, bounds), np.split(cols, bounds))):
        components.append(Component(
            i + 1, r, c, shape, int(areas[i + 1]),
            (int(rmin[i]), int(cmin[i]), int(rmax[i]), int(cmax[i])),
            int(perimeters[i + 1]),
        ))
    return label_map, components


def component_stats(component: Component) -> tuple[int, tuple, int, float]:
    """Return ``(area, bbox, perimeter, aspect_ratio)``.

    The aspect ratio is the short bounding-box side over the long one, so it
    lies in (0, 1] regardless of orientation.
    """
    return component.area, component.bbox, component.perimeter, component.aspect_ratio


def render_components(components: Iterable[Component], width: int, height: int) -> np.ndarray:
    out = empty_mask(width, height)
    for comp in components:
        if comp.rows.size and (comp.rows.min() < 0 or comp.cols.min() < 0
                               or comp.rows.max() >= height or comp.cols.max() >= width):
            raise ComponentError(
                f"component {comp.label} has pixels outside a {width}x{height} image")
        out[comp.rows, comp.cols] = 1
    return out

