import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import random_mask
from wamipost.errors import DimensionError, FormatError
from wamipost.evaluation import match_detections
from wamipost.formats import (BLUE, GREEN, RED, YELLOW, encode_pbm, frame_path, list_frames,
                              overlay_image, parse_pbm, parse_ppm, read_ground_truth, read_gt_rects,
                              read_mask, render_overlay, write_gt_csv, write_mask)
from wamipost.masks import Rect, label_components, render_components

masks = st.tuples(st.integers(1, 40), st.integers(1, 40)).flatmap(
    lambda shape: arrays(np.uint8, shape, elements=st.integers(0, 1)))


def test_plain_example():
    m = parse_pbm(b"P1\n2 2\n1 0\n0 1\n")
    np.testing.assert_array_equal(m, [[1, 0], [0, 1]])


def test_raw_bytes_are_msb_first():
    data = encode_pbm(np.array([[1, 0], [0, 1]], np.uint8), "P4")
    assert data == b"P4\n2 2\n\x80\x40"


def test_raw_row_padding():
    m = np.zeros((2, 9), np.uint8)
    m[0, 8] = 1
    m[1, 0] = 1
    data = encode_pbm(m)
    assert data.endswith(b"\x00\x80\x80\x00")
    np.testing.assert_array_equal(parse_pbm(data), m)


@settings(max_examples=200, deadline=None)
@given(masks, st.sampled_from(["P1", "P4"]))
def test_round_trip(m, fmt):
    np.testing.assert_array_equal(parse_pbm(encode_pbm(m, fmt)), m)


def test_plain_lines_stay_short():
    data = encode_pbm(np.ones((2, 150), np.uint8), "P1").decode()
    assert max(len(line) for line in data.splitlines()) <= 70


def test_plain_with_comments_and_packed_digits():
    data = b"P1 # comment\n# another\n3 # w\n2\n101\n  0 1\t1\n"
    np.testing.assert_array_equal(parse_pbm(data), [[1, 0, 1], [0, 1, 1]])


def test_raw_with_comment_in_header():
    data = b"P4\n# made by hand\n8 1\n\xa5"
    np.testing.assert_array_equal(parse_pbm(data), [[1, 0, 1, 0, 0, 1, 0, 1]])


@pytest.mark.parametrize("data, fragment", [
    (b"P3\n1 1\n1\n", "magic"),
    (b"P1\nx 2\n", "width"),
    (b"P1\n2", "height"),
    (b"P1\n0 2\n", "positive"),
    (b"P4\n40000 40000\n", "exceed"),
    (b"P4\n8 2\n\xff", "truncated payload"),
    (b"P1\n2 2\n1 0 1", "truncated raster"),
    (b"P1\n2 2\n1 0 2 1", "unexpected byte"),
    (b"P1\n2 2\n1 0 # c\n2 1", "unexpected byte"),
])
def test_malformed_input_raises_with_offset(data, fragment):
    with pytest.raises(FormatError, match=fragment) as info:
        parse_pbm(data, "bad.pbm")
    assert info.value.offset is not None
    assert 0 <= info.value.offset <= len(data)
    assert "bad.pbm" in str(info.value)


def test_bad_raster_byte_offset_is_exact():
    data = b"P1\n2 2\n1 0 2 1"
    with pytest.raises(FormatError) as info:
        parse_pbm(data)
    assert info.value.offset == data.index(b"2 1")


def test_invert_on_read(tmp_path):
    m = np.array([[1, 0, 0], [0, 1, 1]], np.uint8)
    write_mask(m, tmp_path / "m.pbm")
    np.testing.assert_array_equal(read_mask(tmp_path / "m.pbm", invert=True), 1 - m)
    np.testing.assert_array_equal(read_mask(tmp_path / "m.pbm"), m)


def test_frame_listing(tmp_path):
    for i in (3, 0, 12):
        write_mask(np.ones((1, 1), np.uint8), frame_path(tmp_path, i))
    (tmp_path / "notes.pbm").write_bytes(b"P1\n1 1\n1\n")
    frames = list_frames(tmp_path)
    assert sorted(frames) == [0, 3, 12]
    assert frames[12].name == "frame_0012.pbm"


def test_duplicate_frame_index(tmp_path):
    write_mask(np.ones((1, 1), np.uint8), tmp_path / "a_7.pbm")
    write_mask(np.ones((1, 1), np.uint8), tmp_path / "b_007.pbm")
    with pytest.raises(FormatError, match="twice"):
        list_frames(tmp_path)


def test_gt_csv_single_row(tmp_path):
    p = tmp_path / "gt.csv"
    p.write_text("frame,row,col,height,width\n0,10,20,5,12\n")
    gt = read_ground_truth(p, (720, 480))
    (c,) = gt[0]
    assert c.area == 60
    assert c.bbox == (10, 20, 14, 31)


def test_header_only_gt_makes_everything_fp(tmp_path):
    p = tmp_path / "gt.csv"
    p.write_text("frame,row,col,height,width\n")
    gt = read_ground_truth(p, (20, 20))
    assert gt == {}
    m = np.zeros((20, 20), np.uint8)
    m[2:4, 2:4] = m[10:12, 10:15] = 1
    _, det = label_components(m)
    r = match_detections(det, gt.get(0, []))
    assert (r.tp, r.fn, r.fp) == (0, 0, 2)


@pytest.mark.parametrize("body, line", [
    ("0,1,2,3\n", 2),
    ("0,1,2,3,4\n0,1,x,3,4\n", 3),
    ("0,1,2,0,4\n", 2),
    ("\n0,1,2,3,4\n-1,1,2,3,4\n", 4),
    ("0,18,0,5,5\n", 2),
])
def test_gt_csv_errors_carry_line_numbers(tmp_path, body, line):
    p = tmp_path / "gt.csv"
    p.write_text("frame,row,col,height,width\n" + body)
    with pytest.raises(FormatError) as info:
        read_gt_rects(p, (20, 20))
    assert info.value.line == line
    assert f":{line}" in str(info.value) or f"line {line}" in str(info.value)


def test_gt_csv_bad_header(tmp_path):
    p = tmp_path / "gt.csv"
    p.write_text("frame,x,y,h,w\n")
    with pytest.raises(FormatError) as info:
        read_gt_rects(p, (20, 20))
    assert info.value.line == 1


def test_gt_csv_round_trip(tmp_path):
    rects = {0: [Rect(1, 2, 3, 4), Rect(10, 10, 5, 5)], 4: [Rect(0, 0, 2, 2)]}
    write_gt_csv(rects, tmp_path / "gt.csv")
    assert read_gt_rects(tmp_path / "gt.csv", (30, 30)) == rects


def test_csv_and_mask_directory_agree(tmp_path):
    rects = {0: [Rect(1, 2, 3, 4), Rect(10, 10, 5, 5)], 2: [Rect(0, 0, 2, 7)]}
    write_gt_csv(rects, tmp_path / "gt.csv")
    gt_dir = tmp_path / "gt"
    gt_dir.mkdir()
    for f in (0, 1, 2):
        mask = np.zeros((20, 30), np.uint8)
        for r in rects.get(f, []):
            mask[r.row:r.row + r.height, r.col:r.col + r.width] = 1
        write_mask(mask, frame_path(gt_dir, f))
    a = read_ground_truth(tmp_path / "gt.csv", (30, 20))
    b = read_ground_truth(gt_dir, (30, 20))
    assert sorted(a) == sorted(b) == [0, 2]
    for f in a:
        assert [(c.area, c.bbox) for c in a[f]] == [(c.area, c.bbox) for c in b[f]]


def test_mask_directory_size_mismatch(tmp_path):
    write_mask(np.ones((4, 4), np.uint8), frame_path(tmp_path, 0))
    with pytest.raises(DimensionError):
        read_ground_truth(tmp_path, (5, 4))


def _scene():
    gt_mask = np.zeros((30, 30), np.uint8)
    gt_mask[2:6, 2:6] = 1          # matched
    gt_mask[20:24, 20:24] = 1      # missed
    det = np.zeros((30, 30), np.uint8)
    det[2:5, 2:4] = 1              # tp
    det[4:6, 5:6] = 1              # second piece on the same gt, unmatched overlapping
    det[12:14, 12:14] = 1          # fp
    _, gt = label_components(gt_mask)
    _, dets = label_components(det)
    return det, gt, match_detections(dets, gt)


def _count(rgb, color):
    return int(np.all(rgb == color, axis=2).sum())


def test_overlay_colors_match_pixel_counts(tmp_path):
    det, gt, m = _scene()
    assert (m.tp, m.fp, m.fn, len(m.unmatched_overlapping)) == (1, 1, 1, 1)
    rgb = render_overlay(det, gt, m, tmp_path / "o.ppm")
    _, dets = label_components(det)
    by_label = {d.label: d for d in dets}
    assert _count(rgb, GREEN) == sum(by_label[p[0]].area for p in m.pairs)
    assert _count(rgb, RED) == sum(by_label[i].area for i in m.fp_labels)
    assert _count(rgb, YELLOW) == sum(by_label[i].area for i in m.unmatched_overlapping)
    assert _count(rgb, BLUE) == sum(g.area for g in gt if g.label in m.fn_labels)
    np.testing.assert_array_equal(parse_ppm((tmp_path / "o.ppm").read_bytes()), rgb)


def test_overlay_random_scenes(rng):
    for _ in range(50):
        det = random_mask(rng, max_side=24, min_side=8)
        gt_mask = random_mask(rng, max_side=24, min_side=8)
        gt_mask = np.resize(gt_mask, det.shape).astype(np.uint8)
        _, dets = label_components(det)
        _, gt = label_components(gt_mask)
        m = match_detections(dets, gt)
        rgb = overlay_image(det, gt, m)
        assert _count(rgb, GREEN) + _count(rgb, RED) + _count(rgb, YELLOW) == int(det.sum())
        missed = render_components([g for g in gt if g.label in m.fn_labels], det.shape[1], det.shape[0])
        assert _count(rgb, BLUE) == int(missed.sum())
        # a missed gt never touches any detection
        assert not (missed & det).any()


def test_overlay_rejects_size_mismatch():
    det, gt, m = _scene()
    with pytest.raises(DimensionError):
        overlay_image(det[:20], gt, m)


def test_overlay_of_gt_against_itself_is_green_and_black():
    m = np.zeros((20, 20), np.uint8)
    m[1:4, 1:8] = m[10:15, 10:13] = 1
    _, comps = label_components(m)
    rgb = overlay_image(m, comps, match_detections(comps, comps))
    colors = {tuple(c) for c in rgb.reshape(-1, 3).tolist()}
    assert colors == {GREEN, (0, 0, 0)}
