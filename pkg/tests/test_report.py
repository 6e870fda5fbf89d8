import json

import numpy as np
import pytest

from oracles import ci95_oracle
from wamipost.benchmark import compare, evaluate_frame
from wamipost.errors import FormatError
from wamipost.formats import rects_to_components
from wamipost.report import (METRIC_NAMES, EvalReport, FrameRow, parse_report, read_report,
                             report_to_csv, report_to_json, write_report)
from wamipost.schemes import NoOp, Proposed, SieveAndOpen
from wamipost.synth import SceneParams, generate_frames

SCHEMES = [("noop", NoOp()), ("proposed", Proposed()), ("sieve-open", SieveAndOpen())]


@pytest.fixture(scope="module")
def frames():
    params = SceneParams(width=200, height=150, n_vehicles=10, seed=3)
    dets, gt = {}, {}
    for i, scene in enumerate(generate_frames(params, 6)):
        dets[i] = scene.det_mask
        gt[i] = rects_to_components(scene.gt_rects, (params.width, params.height))
    return dets, gt


@pytest.fixture(scope="module")
def report(frames):
    return compare(*frames, SCHEMES)


def test_perfect_frame_row():
    params = SceneParams(n_vehicles=40, seed=1)
    scene = next(iter(generate_frames(params, 1)))
    gt = rects_to_components(scene.gt_rects, (params.width, params.height))
    rows = evaluate_frame(0, scene.gt_mask, gt, [("noop", NoOp())])
    text = report_to_csv(EvalReport.from_frames(rows))
    assert "0,noop,40,0,0,1.000000,1.000000,1.000000,0.000000" in text.splitlines()


def test_layout(report):
    assert len(report.per_frame) == 6 * len(SCHEMES)
    assert [(r.frame, r.scheme) for r in report.per_frame[:3]] == [(0, "noop"), (0, "proposed"), (0, "sieve-open")]
    assert len(report.summary) == len(SCHEMES) * len(METRIC_NAMES)
    text = report_to_csv(report)
    frame_block, summary_block = text.split("\n\n")
    assert frame_block.splitlines()[0] == "frame,scheme,tp,fn,fp,precision,recall,fscore,pwc"
    assert summary_block.splitlines()[0] == "scheme,metric,mean,ci95_halfwidth,n"


def test_summary_recomputes_from_rows(report):
    for s in report.summary:
        values = [getattr(r, s.metric) for r in report.per_frame if r.scheme == s.scheme]
        mean, half = ci95_oracle(values)
        assert s.n == len(values)
        assert abs(s.mean - mean) < 1e-9
        assert abs(s.ci95_halfwidth - half) < 1e-9


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_file_round_trip(tmp_path, report, fmt):
    path = tmp_path / f"r.{fmt}"
    write_report(report, path, fmt)
    back = read_report(path)
    assert [(r.frame, r.scheme, r.tp, r.fn, r.fp) for r in back.per_frame] == \
        [(r.frame, r.scheme, r.tp, r.fn, r.fp) for r in report.per_frame]
    for a, b in zip(back.per_frame, report.per_frame):
        for m in METRIC_NAMES:
            assert getattr(a, m) == pytest.approx(getattr(b, m), abs=5e-7)
    for a, b in zip(back.summary, report.summary):
        assert (a.scheme, a.metric, a.n) == (b.scheme, b.metric, b.n)
        assert a.mean == pytest.approx(b.mean, abs=5e-7)
        assert a.ci95_halfwidth == pytest.approx(b.ci95_halfwidth, abs=5e-7)
    # rewriting what was read gives the same bytes
    write_report(back, tmp_path / f"again.{fmt}", fmt)
    assert (tmp_path / f"again.{fmt}").read_text() == path.read_text()


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_summary_recomputes_from_file(tmp_path, report, fmt):
    path = tmp_path / f"r.{fmt}"
    write_report(report, path, fmt)
    back = read_report(path)
    for s in back.summary:
        values = [getattr(r, s.metric) for r in back.per_frame if r.scheme == s.scheme]
        mean, half = ci95_oracle(values)
        # file values carry six decimals, so the recomputation drifts by rounding only
        assert abs(s.mean - mean) <= 1e-6
        assert abs(s.ci95_halfwidth - half) <= 1e-5


def test_json_structure(report):
    doc = json.loads(report_to_json(report))
    assert set(doc) == {"per_frame", "summary"}
    assert set(doc["per_frame"][0]) == {"frame", "scheme", "tp", "fn", "fp",
                                        "precision", "recall", "fscore", "pwc"}


def test_compare_is_order_and_jobs_invariant(frames, report):
    dets, gt = frames
    reversed_dets = {k: dets[k] for k in sorted(dets, reverse=True)}
    assert report_to_csv(compare(reversed_dets, gt, SCHEMES)) == report_to_csv(report)
    assert report_to_csv(compare(dets, gt, SCHEMES, jobs=3)) == report_to_csv(report)


def test_compare_accepts_loaders(frames, report):
    dets, gt = frames
    lazy = {k: (lambda m=m: m) for k, m in dets.items()}
    assert report_to_csv(compare(lazy, gt, SCHEMES)) == report_to_csv(report)


def test_frame_without_gt_counts_everything_fp():
    mask = np.zeros((10, 10), np.uint8)
    mask[1:3, 1:3] = 1
    report = compare({0: mask}, {}, [("noop", NoOp())])
    (row,) = report.per_frame
    assert (row.tp, row.fn, row.fp) == (0, 0, 1)


def test_single_frame_summary_has_zero_width():
    rows = [FrameRow(0, "noop", 1, 0, 0, 1.0, 1.0, 1.0, 0.0)]
    s = EvalReport.from_frames(rows).summary_for("noop", "fscore")
    assert (s.mean, s.ci95_halfwidth, s.n) == (1.0, 0.0, 1)


@pytest.mark.parametrize("text, fmt", [
    ("frame,scheme\n0,noop\n", "csv"),
    ("frame,scheme,tp,fn,fp,precision,recall,fscore,pwc\n0,noop,x,0,0,1,1,1,0\n\n"
     "scheme,metric,mean,ci95_halfwidth,n\n", "csv"),
    ("{not json", "json"),
    ('{"per_frame": [{"frame": 0}]}', "json"),
])
def test_malformed_reports(text, fmt):
    with pytest.raises(FormatError):
        parse_report(text, fmt)
