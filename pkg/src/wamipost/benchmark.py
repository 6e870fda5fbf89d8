"""Run schemes over frames and collect per-frame evaluation rows."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Mapping, Sequence

from .evaluation import compute_metrics, match_detections
from .masks import label_components
from .report import EvalReport, FrameRow
from .schemes import GroundTruthContext, apply_scheme, needs_context


def evaluate_mask(det_mask, gt_components):
    """Label ``det_mask`` and match it against ground truth; returns ``(match, metrics)``."""
    _, det = label_components(det_mask)
    match = match_detections(det, gt_components)
    return match, compute_metrics(match)


def evaluate_frame(frame: int, det_mask, gt_components, schemes: Sequence) -> list:
    """One :class:`FrameRow` per ``(name, spec)`` in ``schemes``."""
    ctx = GroundTruthContext(list(gt_components))
    rows = []
    for name, spec in schemes:
        if needs_context(spec):
            ctx.require(f"scheme {name!r} on frame {frame}")
        out = apply_scheme(det_mask, spec, ctx)
        match, m = evaluate_mask(out, gt_components)
        rows.append(FrameRow(frame, name, match.tp, match.fn, match.fp,
                             m.precision, m.recall, m.fscore, m.pwc))
    return rows


def _run(args):
    return evaluate_frame(*args)


def compare(det_masks: Mapping, gt: Mapping, schemes: Sequence, jobs: int = 1) -> EvalReport:
    """Evaluate every scheme on every frame.

    ``det_masks`` maps frame index to detection mask (or to a zero-argument
    loader returning one), ``gt`` maps frame index to ground-truth
    components, ``schemes`` is a sequence of ``(name, spec)``. The report is
    independent of ``jobs`` and of frame order.
    """
    tasks = []
    for frame in sorted(det_masks):
        mask = det_masks[frame]
        if callable(mask):
            mask = mask()
        tasks.append((frame, mask, gt.get(frame, []), list(schemes)))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run, tasks))
    else:
        results = [_run(t) for t in tasks]
    return EvalReport.from_frames([row for rows in results for row in rows])
