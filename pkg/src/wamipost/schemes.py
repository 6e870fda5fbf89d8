"""Post-processing schemes: each maps a detection mask to a cleaned mask.

``Proposed`` sieves 8-connected objects by area and then closes the result.
The other four are the comparison schemes (filtered dilation, heuristic
area/aspect filtering, shape-index filtering, sieving + opening).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import ContextError, ParameterError
from .masks import Component, as_mask, label_array, region_bbox_sides, region_measures
from .morphology import StructuringElement, closing, dilate, disk, median_filter, opening, square

# Area ranges used for the two aerial datasets (inclusive at both ends).
TUCSON_AREA_RANGE = (5, 160)
PHOENIX_AREA_RANGE = (5, 180)


@dataclass(frozen=True)
class NoOp:
    name = "noop"


@dataclass(frozen=True)
class Proposed:
    t_low: int = TUCSON_AREA_RANGE[0]
    t_high: int = TUCSON_AREA_RANGE[1]
    se: StructuringElement = field(default_factory=lambda: square(1))
    name = "proposed"

    def __post_init__(self):
        if not 0 <= self.t_low <= self.t_high:
            raise ParameterError(f"need 0 <= t_low <= t_high, got [{self.t_low}, {self.t_high}]")

    @classmethod
    def tucson(cls) -> Proposed:
        return cls(*TUCSON_AREA_RANGE, square(1))

    @classmethod
    def phoenix(cls) -> Proposed:
        return cls(*PHOENIX_AREA_RANGE, square(1))


@dataclass(frozen=True)
class FilteredDilation:
    median_window: int = 3
    dilation_se: StructuringElement = field(default_factory=lambda: square(1))
    name = "filtered-dilation"

    def __post_init__(self):
        if self.median_window < 1 or self.median_window % 2 == 0:
            raise ParameterError(f"median window must be a positive odd integer, got {self.median_window}")


@dataclass(frozen=True)
class HeuristicFiltering:
    area_fraction: float = 0.05
    aspect_min: float = 0.2
    name = "heuristic"

    def __post_init__(self):
        if not 0 < self.area_fraction < 1:
            raise ParameterError(f"area_fraction must lie in (0, 1), got {self.area_fraction}")
        if not 0 <= self.aspect_min <= 1:
            raise ParameterError(f"aspect_min must lie in [0, 1], got {self.aspect_min}")


@dataclass(frozen=True)
class ShapeIndexFiltering:
    """``si_min=None`` means: use the lowest shape index among ground-truth objects."""

    si_min: Optional[float] = None
    name = "shape-index"

    def __post_init__(self):
        if self.si_min is not None and self.si_min < 0:
            raise ParameterError(f"si_min must be >= 0, got {self.si_min}")


@dataclass(frozen=True)
class SieveAndOpen:
    area_max: int = 2000
    open_se: StructuringElement = field(default_factory=lambda: disk(5))
    name = "sieve-open"

    def __post_init__(self):
        if self.area_max < 0:
            raise ParameterError(f"area_max must be >= 0, got {self.area_max}")


SchemeSpec = Union[NoOp, Proposed, FilteredDilation, HeuristicFiltering, ShapeIndexFiltering, SieveAndOpen]

SCHEME_NAMES = ("noop", "proposed", "filtered-dilation", "heuristic", "shape-index", "sieve-open")


@dataclass(frozen=True, eq=False)
class GroundTruthContext:
    gt_components: Sequence[Component]

    def require(self, what: str) -> None:
        if not self.gt_components:
            raise ContextError(f"{what} needs at least one ground-truth object")

    @property
    def max_area(self) -> int:
        self.require("max ground-truth area")
        return max(c.area for c in self.gt_components)

    @property
    def min_shape_index(self) -> float:
        self.require("min ground-truth shape index")
        return min(shape_index(c) for c in self.gt_components)


def shape_index(component: Component) -> float:
    """Perimeter divided by ``4 * sqrt(area)``."""
    return component.perimeter / (4.0 * math.sqrt(component.area))


def _select(labels: np.ndarray, keep: np.ndarray) -> np.ndarray:
    keep = keep.copy()
    keep[0] = False
    return keep[labels].astype(np.uint8)


def sieve_area(mask, t_low: int, t_high: int) -> np.ndarray:
    """Keep the 8-connected objects whose area ``A`` satisfies ``t_low <= A <= t_high``."""
    if t_low > t_high:
        raise ParameterError(f"t_low ({t_low}) must not exceed t_high ({t_high})")
    labels, count = label_array(mask, 8)
    areas = np.bincount(labels.ravel(), minlength=count + 1)
    return _select(labels, (areas >= t_low) & (areas <= t_high))


def apply_proposed(mask, spec: Proposed = Proposed()) -> np.ndarray:
    # exactly two stages: closing may merge survivors past t_high, no re-sieve
    return closing(sieve_area(mask, spec.t_low, spec.t_high), spec.se)


def apply_filtered_dilation(mask, spec: FilteredDilation = FilteredDilation()) -> np.ndarray:
    return dilate(median_filter(mask, spec.median_window), spec.dilation_se)


def apply_heuristic_filtering(mask, spec: HeuristicFiltering, ctx: Optional[GroundTruthContext]) -> np.ndarray:
    """Drop objects smaller than ``area_fraction`` of the largest GT object or flatter than ``aspect_min``.

    Both comparisons keep ties.
    """
    if ctx is None:
        raise ContextError("heuristic filtering needs a ground-truth context")
    cutoff = spec.area_fraction * ctx.max_area
    labels, count = label_array(mask, 8)
    areas = np.bincount(labels.ravel(), minlength=count + 1)
    heights, widths = region_bbox_sides(labels, count)
    with np.errstate(invalid="ignore", divide="ignore"):
        aspect = np.minimum(heights, widths) / np.maximum(heights, widths)
    keep = (areas >= cutoff) & (aspect >= spec.aspect_min)
    return _select(labels, keep)


def apply_shape_index_filtering(mask, spec: ShapeIndexFiltering,
                                ctx: Optional[GroundTruthContext] = None) -> np.ndarray:
    if spec.si_min is not None:
        si_min = spec.si_min
    elif ctx is None:
        raise ContextError("shape-index filtering needs si_min or a ground-truth context")
    else:
        si_min = ctx.min_shape_index
    labels, count = label_array(mask, 8)
    areas, perimeters = region_measures(labels, count)
    with np.errstate(invalid="ignore", divide="ignore"):
        si = perimeters / (4.0 * np.sqrt(areas))
    return _select(labels, si >= si_min)


def apply_sieve_and_open(mask, spec: SieveAndOpen = SieveAndOpen()) -> np.ndarray:
    labels, count = label_array(mask, 8)
    areas = np.bincount(labels.ravel(), minlength=count + 1)
    sieved = _select(labels, areas <= spec.area_max)
    return opening(sieved, spec.open_se)


def apply_scheme(mask, spec: SchemeSpec, ctx: Optional[GroundTruthContext] = None) -> np.ndarray:
    if isinstance(spec, NoOp):
        return as_mask(mask).copy()
    if isinstance(spec, Proposed):
        return apply_proposed(mask, spec)
    if isinstance(spec, FilteredDilation):
        return apply_filtered_dilation(mask, spec)
    if isinstance(spec, HeuristicFiltering):
        return apply_heuristic_filtering(mask, spec, ctx)
    if isinstance(spec, ShapeIndexFiltering):
        return apply_shape_index_filtering(mask, spec, ctx)
    if isinstance(spec, SieveAndOpen):
        return apply_sieve_and_open(mask, spec)
    raise ParameterError(f"unknown scheme spec {spec!r}")


def needs_context(spec: SchemeSpec) -> bool:
    if isinstance(spec, HeuristicFiltering):
        return True
    return isinstance(spec, ShapeIndexFiltering) and spec.si_min is None


def default_scheme(name: str) -> SchemeSpec:
    """Scheme with its default parameters, looked up by CLI name."""
    table = {
        "noop": NoOp,
        "proposed": Proposed,
        "filtered-dilation": FilteredDilation,
        "heuristic": HeuristicFiltering,
        "shape-index": ShapeIndexFiltering,
        "sieve-open": SieveAndOpen,
    }
    try:
        return table[name]()
    except KeyError:
        raise ParameterError(f"unknown scheme {name!r}; choose from {', '.join(SCHEME_NAMES)}") from None
