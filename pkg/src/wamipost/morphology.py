"""Binary morphology with fixed border semantics.

Dilation treats pixels outside the image as background and erosion treats
them as foreground. With the centrally symmetric elements used here this
keeps ``erode(X) == ~dilate(~X)`` exact at the borders, makes closing
extensive and opening anti-extensive.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ParameterError
from .masks import as_mask

SHAPES = ("square", "disk")


@dataclass(frozen=True)
class StructuringElement:
    shape: str
    radius: int

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ParameterError(f"structuring element shape must be one of {SHAPES}, got {self.shape!r}")
        if int(self.radius) != self.radius or self.radius < 0:
            raise ParameterError(f"structuring element radius must be a non-negative integer, got {self.radius}")

    @cached_property
    def offsets(self) -> tuple:
        """All ``(drow, dcol)`` offsets of the element, origin included."""
        r = self.radius
        out = []
        for dr in range(-r, r + 1):
            for dc in range(-r, r + 1):
                if self.shape == "square" or dr * dr + dc * dc <= r * r:
                    out.append((dr, dc))
        return tuple(out)

    def footprint(self) -> np.ndarray:
        size = 2 * self.radius + 1
        fp = np.zeros((size, size), dtype=np.uint8)
        for dr, dc in self.offsets:
            fp[dr + self.radius, dc + self.radius] = 1
        return fp

    def __str__(self):
        return f"{self.shape}({self.radius})"


def square(radius: int) -> StructuringElement:
    """``(2r+1) x (2r+1)`` square; ``square(1)`` is the 3x3 element."""
    return StructuringElement("square", radius)


def disk(radius: int) -> StructuringElement:
    return StructuringElement("disk", radius)


def _spans(d: int, n: int):
    """Destination and source slices along one axis for ``dst[i] <- src[i + d]``."""
    if d >= 0:
        return slice(0, n - d), slice(d, n)
    return slice(-d, n), slice(0, n + d)


def dilate(mask, se: StructuringElement) -> np.ndarray:
    """``out(p) = 1`` iff ``mask(p - o) = 1`` for some offset ``o``; pixels pushed off-image are lost."""
    src = as_mask(mask).astype(bool)
    h, w = src.shape
    out = np.zeros_like(src)
    for dr, dc in se.offsets:
        if abs(dr) >= h or abs(dc) >= w:
            continue
        (dst_r, src_r), (dst_c, src_c) = _spans(-dr, h), _spans(-dc, w)
        out[dst_r, dst_c] |= src[src_r, src_c]
    return out.view(np.uint8)


def erode(mask, se: StructuringElement) -> np.ndarray:
    """``out(p) = 1`` iff every ``p + o`` is off-image or foreground."""
    src = as_mask(mask).astype(bool)
    h, w = src.shape
    out = np.ones_like(src)
    for dr, dc in se.offsets:
        if abs(dr) >= h or abs(dc) >= w:
            continue
        (dst_r, src_r), (dst_c, src_c) = _spans(dr, h), _spans(dc, w)
        out[dst_r, dst_c] &= src[src_r, src_c]
    return out.view(np.uint8)


def opening(mask, se: StructuringElement) -> np.ndarray:
    return dilate(erode(mask, se), se)


def closing(mask, se: StructuringElement) -> np.ndarray:
    return erode(dilate(mask, se), se)


def median_filter(mask, window: int = 3) -> np.ndarray:
    """Majority vote over a ``window x window`` neighborhood, off-image pixels voting background.

    ``window`` must be odd so the neighborhood has an odd pixel count and a
    strict majority always exists.
    """
    if int(window) != window or window < 1 or window % 2 == 0:
        raise ParameterError(f"median window must be a positive odd integer, got {window}")
    src = as_mask(mask)
    h, w = src.shape
    r = window // 2
    padded = np.zeros((h + 2 * r + 1, w + 2 * r + 1), dtype=np.int32)
    padded[r + 1:r + 1 + h, r + 1:r + 1 + w] = src
    integral = padded.cumsum(0).cumsum(1)
    counts = (integral[window:window + h, window:window + w]
              - integral[0:h, window:window + w]
              - integral[window:window + h, 0:w]
              + integral[0:h, 0:w])
    return (counts > (window * window) // 2).astype(np.uint8)
