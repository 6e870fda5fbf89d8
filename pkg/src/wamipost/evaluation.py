"""Overlap matching of detections to ground truth, and the derived metrics.

Classification rules:

* FP -- a detection that intersects no ground-truth object.
* FN -- a ground-truth object that intersects no detection.
* TP -- one-to-one (detection, ground truth) pairs among intersecting pairs.
  The matching maximizes the number of pairs, then the total overlap in
  pixels, so a ground-truth object hit by several detections is credited
  to the one with the largest overlap (and vice versa).

A detection that intersects ground truth but is left out of the matching is
neither TP nor FP (``unmatched_overlapping``); a ground-truth object that
only intersects detections claimed elsewhere is neither TP nor FN.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats
from scipy.optimize import linear_sum_assignment

from .errors import DimensionError, ParameterError
from .masks import Component


@dataclass
class MatchResult:
    tp: int
    fn: int
    fp: int
    pairs: list = field(default_factory=list)  # (det_label, gt_label, overlap_pixels)
    unmatched_overlapping: list = field(default_factory=list)  # det labels
    fp_labels: list = field(default_factory=list)
    fn_labels: list = field(default_factory=list)
    detection_count: int = 0
    gt_count: int = 0

    @property
    def total_overlap(self) -> int:
        return sum(p[2] for p in self.pairs)


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    fscore: float
    pwc: float

    def as_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall,
                "fscore": self.fscore, "pwc": self.pwc}


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    ci95_halfwidth: float
    n: int


def _check_shapes(det: Sequence[Component], gt: Sequence[Component]):
    shapes = {c.shape for c in det} | {c.shape for c in gt}
    if len(shapes) > 1:
        raise DimensionError(f"components come from images of different sizes: {sorted(shapes)}")
    return shapes.pop() if shapes else None


def overlap_table(det: Sequence[Component], gt: Sequence[Component]) -> dict:
    """``{(det_index, gt_index): overlapping pixel count}`` for all intersecting pairs."""
    shape = _check_shapes(det, gt)
    table = {}
    if shape is None or not det or not gt:
        return table
    total = sum(c.area for c in det)
    index_img = np.zeros(shape[0] * shape[1], dtype=np.int32)
    for i, comp in enumerate(det):
        index_img[comp.flat_indices] = i + 1
    if np.count_nonzero(index_img) == total:
        for j, g in enumerate(gt):
            hits = index_img[g.flat_indices]
            hits = hits[hits > 0]
            if hits.size:
                counts = np.bincount(hits)
                for i in np.flatnonzero(counts):
                    table[(int(i) - 1, j)] = int(counts[i])
    else:
        # overlapping detections: fall back to pairwise intersection
        for i, d in enumerate(det):
            for j, g in enumerate(gt):
                if (d.bbox[0] > g.bbox[2] or g.bbox[0] > d.bbox[2]
                        or d.bbox[1] > g.bbox[3] or g.bbox[1] > d.bbox[3]):
                    continue
                n = np.intersect1d(d.flat_indices, g.flat_indices, assume_unique=True).size
                if n:
                    table[(i, j)] = int(n)
    return table


def _solve_block(dets: list, gts: list, table: dict, det, gt) -> list:
    """Optimal matching inside one connected block of the overlap graph."""
    if len(dets) == 1 or len(gts) == 1:
        cands = [(i, j) for i in dets for j in gts if (i, j) in table]
        best = min(cands, key=lambda ij: (-table[ij], gt[ij[1]].label, det[ij[0]].label))
        return [best]
    pairs = sorted(((i, j) for i in dets for j in gts if (i, j) in table),
                   key=lambda ij: (-table[ij], gt[ij[1]].label, det[ij[0]].label))
    n_pairs = len(pairs)
    total = sum(table[p] for p in pairs)
    # cardinality dominates overlap, overlap dominates the tie-break bonus
    card_weight = total + 1
    tie_scale = min(len(dets), len(gts)) * n_pairs + 1
    use_ties = (2 * card_weight) * tie_scale * min(len(dets), len(gts)) < 2 ** 52
    rows = {i: k for k, i in enumerate(dets)}
    cols = {j: k for k, j in enumerate(gts)}
    weights = np.zeros((len(dets), len(gts)))
    for rank, (i, j) in enumerate(pairs):
        w = card_weight + table[(i, j)]
        if use_ties:
            w = w * tie_scale + (n_pairs - rank)
        weights[rows[i], cols[j]] = w
    r, c = linear_sum_assignment(weights, maximize=True)
    return [(dets[a], gts[b]) for a, b in zip(r, c) if weights[a, b] > 0]


def match_detections(det: Sequence[Component], gt: Sequence[Component]) -> MatchResult:
    """Classify detections against ground truth by pixel overlap.

    Ties between equally good matchings prefer pairs with larger overlap,
    then smaller ground-truth label, then smaller detection label.
    """
    det = list(det)
    gt = list(gt)
    table = overlap_table(det, gt)

    # connected blocks of the bipartite overlap graph, via union-find
    parent = list(range(len(det) + len(gt)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in table:
        a, b = find(i), find(len(det) + j)
        if a != b:
            parent[max(a, b)] = min(a, b)
    blocks = {}
    for i, j in table:
        dets, gts = blocks.setdefault(find(i), (set(), set()))
        dets.add(i)
        gts.add(j)

    chosen = []
    for root in sorted(blocks):
        dets, gts = blocks[root]
        chosen.extend(_solve_block(sorted(dets), sorted(gts), table, det, gt))

    touched_det = {i for i, _ in table}
    touched_gt = {j for _, j in table}
    matched_det = {i for i, _ in chosen}
    pairs = sorted(((det[i].label, gt[j].label, table[(i, j)]) for i, j in chosen),
                   key=lambda p: (p[1], p[0]))
    fp_labels = [d.label for i, d in enumerate(det) if i not in touched_det]
    fn_labels = [g.label for j, g in enumerate(gt) if j not in touched_gt]
    unmatched = [det[i].label for i in sorted(touched_det - matched_det)]
    return MatchResult(
        tp=len(pairs), fn=len(fn_labels), fp=len(fp_labels), pairs=pairs,
        unmatched_overlapping=unmatched, fp_labels=fp_labels, fn_labels=fn_labels,
        detection_count=len(det), gt_count=len(gt),
    )


def metrics_from_counts(tp: int, fn: int, fp: int) -> Metrics:
    """Precision, recall, F-score and PWC (in percent, true negatives taken as 0).

    Empty denominators resolve to precision 1, recall 1, F-score 0 and PWC 0.
    """
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    fscore = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    wrong = tp + fp + fn
    pwc = 100.0 * (fp + fn) / wrong if wrong else 0.0
    return Metrics(precision, recall, fscore, pwc)


def compute_metrics(m: MatchResult) -> Metrics:
    return metrics_from_counts(m.tp, m.fn, m.fp)


def summarize(values: Sequence[float]) -> SummaryStats:
    """Mean and two-sided 95% Student-t confidence half-width."""
    x = np.asarray(values, dtype=float)
    n = x.size
    if n == 0:
        raise ParameterError("summarize needs at least one value")
    mean = float(x.mean())
    if n == 1:
        return SummaryStats(mean, 0.0, 1)
    sd = float(x.std(ddof=1))
    if sd == 0.0:
        return SummaryStats(mean, 0.0, n)
    half = float(stats.t.ppf(0.975, n - 1)) * sd / np.sqrt(n)
    return SummaryStats(mean, half, n)
