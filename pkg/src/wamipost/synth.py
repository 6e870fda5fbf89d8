"""Deterministic synthetic scenes: rectangular ground-truth vehicles and a
corrupted detection mask with misses, split objects, boundary jitter and
clutter.

Every random draw comes from one splitmix64 stream seeded per frame, so a
scene is bit-identical across runs and platforms. Draw order:

1. vehicles, in index order; each placement attempt draws
   (size index, row, col) and is retried until it fits;
2. per vehicle, in index order, exactly three draws: miss, jitter, split;
3. small clutter blobs, then large clutter blobs; each blob draws its size
   then (row, col) per placement attempt.

Integer draws use ``(value * n) >> 64`` and unit floats use the top 53 bits.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np

from .errors import PackingError, ParameterError
from .masks import Rect, empty_mask

MASK64 = (1 << 64) - 1


def prng_next(state: int) -> tuple[int, int]:
    """One splitmix64 step: returns ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state, value = prng_next(self.state)
        return value

    def below(self, n: int) -> int:
        """Integer in ``[0, n)``."""
        return (self.next_u64() * n) >> 64

    def integers(self, lo: int, hi: int) -> int:
        """Integer in ``[lo, hi]``."""
        return lo + self.below(hi - lo + 1)

    def uniform(self) -> float:
        """Float in ``[0, 1)``."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))


@dataclass(frozen=True)
class CorruptionParams:
    p_miss: float = 0.05
    p_split: float = 0.1
    boundary_jitter: int = 1
    n_small_clutter: int = 60
    n_large_clutter: int = 2
    # large clutter is always bigger than this many pixels
    t_high_reference: int = 160
    max_clutter_attempts: int = 100

    def __post_init__(self):
        for name in ("p_miss", "p_split"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ParameterError(f"{name} must lie in [0, 1], got {p}")
        for name in ("boundary_jitter", "n_small_clutter", "n_large_clutter", "t_high_reference"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0, got {getattr(self, name)}")

    @classmethod
    def none(cls) -> CorruptionParams:
        return cls(0.0, 0.0, 0, 0, 0)


@dataclass(frozen=True)
class SceneParams:
    width: int = 720
    height: int = 480
    n_vehicles: int = 40
    vehicle_area_range: tuple = (40, 150)
    vehicle_aspect_range: tuple = (0.4, 0.8)
    min_separation: int = 2
    corruption: CorruptionParams = field(default_factory=CorruptionParams)
    seed: int = 42
    max_attempts: int = 20000

    def __post_init__(self):
        lo, hi = self.vehicle_area_range
        if not 1 <= lo <= hi:
            raise ParameterError(f"bad vehicle area range {self.vehicle_area_range}")
        alo, ahi = self.vehicle_aspect_range
        if not 0 < alo <= ahi <= 1:
            raise ParameterError(f"bad vehicle aspect range {self.vehicle_aspect_range}")
        if self.width < 1 or self.height < 1 or self.n_vehicles < 0 or self.min_separation < 0:
            raise ParameterError("scene dimensions, vehicle count and separation must be non-negative")

    def vehicle_sizes(self) -> list:
        """All ``(height, width)`` pairs allowed by the area and aspect ranges, sorted."""
        lo, hi = self.vehicle_area_range
        alo, ahi = self.vehicle_aspect_range
        sizes = []
        for h in range(1, hi + 1):
            for w in range(1, hi // h + 1):
                if h * w >= lo and alo <= min(h, w) / max(h, w) <= ahi:
                    sizes.append((h, w))
        return sizes


@dataclass(frozen=True, eq=False)
class Scene:
    gt_mask: np.ndarray
    gt_rects: list
    det_mask: np.ndarray


def place_vehicles(params: SceneParams, rng: SplitMix64) -> list:
    sizes = params.vehicle_sizes()
    if not sizes:
        raise ParameterError("no vehicle size satisfies both area and aspect ranges")
    rects = []
    attempts = 0
    while len(rects) < params.n_vehicles:
        if attempts >= params.max_attempts:
            raise PackingError(
                f"placed only {len(rects)} of {params.n_vehicles} vehicles after "
                f"{attempts} attempts; try fewer vehicles or a smaller separation")
        attempts += 1
        h, w = sizes[rng.below(len(sizes))]
        if h > params.height or w > params.width:
            continue
        rect = Rect(rng.below(params.height - h + 1), rng.below(params.width - w + 1), h, w)
        if all(rect.gap(other) >= params.min_separation for other in rects):
            rects.append(rect)
    return rects


def render_rects(rects, width: int, height: int) -> np.ndarray:
    mask = empty_mask(width, height)
    for r in rects:
        mask[r.row:r.row + r.height, r.col:r.col + r.width] = 1
    return mask


_SMALL_SHAPES = {
    1: [(1, 1)],
    2: [(1, 2), (2, 1)],
    3: [(1, 3), (3, 1)],
    4: [(2, 2), (1, 4), (4, 1)],
}


def _stamp_clutter(det, gt_mask, h, w, rng, attempts):
    H, W = det.shape
    if h > H or w > W:
        return
    for _ in range(attempts):
        r, c = rng.below(H - h + 1), rng.below(W - w + 1)
        if not gt_mask[r:r + h, c:c + w].any():
            det[r:r + h, c:c + w] = 1
            return


def corrupt_detections(gt_rects, width: int, height: int, cp: CorruptionParams,
                       rng: SplitMix64) -> np.ndarray:
    """Build a detection mask from ground-truth rects.

    Per vehicle: dropped with ``p_miss``; otherwise grown or shrunk on all
    sides by a uniform amount in ``[-boundary_jitter, boundary_jitter]``
    (clipped to the image), then with ``p_split`` cut in two by clearing the
    middle column (wide rects) or middle row (tall rects). Clutter blobs are
    stamped anywhere that does not overlap a ground-truth rect; they may
    touch vehicles and merge with them.
    """
    det = empty_mask(width, height)
    j = cp.boundary_jitter
    for rect in gt_rects:
        u_miss = rng.uniform()
        k = rng.below(2 * j + 1) - j
        u_split = rng.uniform()
        if u_miss < cp.p_miss:
            continue
        r0, c0 = max(rect.row - k, 0), max(rect.col - k, 0)
        r1 = min(rect.row + rect.height + k, height)
        c1 = min(rect.col + rect.width + k, width)
        if r1 <= r0 or c1 <= c0:
            continue
        det[r0:r1, c0:c1] = 1
        if u_split < cp.p_split:
            if c1 - c0 >= r1 - r0:
                det[r0:r1, c0 + (c1 - c0) // 2] = 0
            else:
                det[r0 + (r1 - r0) // 2, c0:c1] = 0

    gt_mask = render_rects(gt_rects, width, height)
    for _ in range(cp.n_small_clutter):
        shapes = _SMALL_SHAPES[rng.integers(1, 4)]
        h, w = shapes[rng.below(len(shapes))]
        _stamp_clutter(det, gt_mask, h, w, rng, cp.max_clutter_attempts)
    for _ in range(cp.n_large_clutter):
        short = rng.integers(8, 16)
        base = max(short, cp.t_high_reference // short + 1)
        long_ = rng.integers(base, base + 16)
        h, w = (short, long_) if rng.below(2) else (long_, short)
        _stamp_clutter(det, gt_mask, h, w, rng, cp.max_clutter_attempts)
    return det


def generate_scene(params: SceneParams = SceneParams()) -> Scene:
    rng = SplitMix64(params.seed)
    rects = place_vehicles(params, rng)
    gt_mask = render_rects(rects, params.width, params.height)
    det = corrupt_detections(rects, params.width, params.height, params.corruption, rng)
    return Scene(gt_mask, rects, det)


def generate_frames(params: SceneParams, n_frames: int) -> Iterator[Scene]:
    """Frame ``i`` uses seed ``params.seed + i``."""
    for i in range(n_frames):
        yield generate_scene(replace(params, seed=(params.seed + i) & MASK64))
