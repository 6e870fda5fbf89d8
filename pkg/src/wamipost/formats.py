"""File formats: netpbm bitmaps (P1/P4), color overlays (P6) and ground truth.

Bitmaps follow the netpbm convention that 1 (black) is foreground. Detector
dumps that use the opposite polarity can be read with ``invert=True``.

Ground truth is either a CSV of rectangles with header
``frame,row,col,height,width`` (0-based, top-left origin) or a directory of
per-frame bitmaps named ``<anything><frame number>.pbm``.
"""
from __future__ import annotations

import csv
import io
import re
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DimensionError, FormatError
from .masks import Component, Rect, as_mask, label_components

MAX_PIXELS = 1 << 30
GT_HEADER = ["frame", "row", "col", "height", "width"]
_WS = b" \t\n\r\v\f"

# overlay palette
GREEN = (0, 255, 0)      # detection matched as TP
RED = (255, 0, 0)        # false-positive detection
BLUE = (0, 0, 255)       # missed ground truth (FN)
YELLOW = (255, 255, 0)   # detection touching GT but left unmatched


class _Reader:
    def __init__(self, data: bytes, path):
        self.data = data
        self.pos = 0
        self.path = path

    def fail(self, message, offset=None):
        raise FormatError(message, path=self.path, offset=self.pos if offset is None else offset)

    def skip_space(self):
        data = self.data
        while self.pos < len(data):
            ch = data[self.pos:self.pos + 1]
            if ch == b"#":
                end = data.find(b"\n", self.pos)
                self.pos = len(data) if end < 0 else end + 1
            elif ch in _WS:
                self.pos += 1
            else:
                break

    def header_int(self, what):
        self.skip_space()
        start = self.pos
        while self.pos < len(self.data) and self.data[self.pos:self.pos + 1].isdigit():
            self.pos += 1
        if start == self.pos:
            if self.pos >= len(self.data):
                self.fail(f"truncated header, expected {what}")
            self.fail(f"expected decimal {what}")
        return int(self.data[start:self.pos])


def parse_pbm(data: bytes, path=None) -> np.ndarray:
    """Decode P1 or P4 bytes into a mask."""
    rd = _Reader(data, path)
    magic = data[:2]
    if magic not in (b"P1", b"P4"):
        rd.fail(f"not a PBM bitmap (magic {magic!r})", offset=0)
    rd.pos = 2
    width = rd.header_int("width")
    height = rd.header_int("height")
    if width < 1 or height < 1:
        rd.fail(f"dimensions must be positive, got {width}x{height}")
    if width * height > MAX_PIXELS:
        rd.fail(f"dimensions {width}x{height} exceed {MAX_PIXELS} pixels")

    if magic == b"P4":
        if rd.pos >= len(data) or data[rd.pos:rd.pos + 1] not in _WS:
            rd.fail("expected one whitespace byte after header")
        rd.pos += 1
        row_bytes = (width + 7) // 8
        need = row_bytes * height
        payload = data[rd.pos:rd.pos + need]
        if len(payload) < need:
            rd.fail(f"truncated payload: need {need} bytes, have {len(payload)}",
                    offset=len(data))
        packed = np.frombuffer(payload, dtype=np.uint8).reshape(height, row_bytes)
        return np.unpackbits(packed, axis=1)[:, :width].copy()

    total = width * height
    rest = np.frombuffer(data, dtype=np.uint8, offset=rd.pos)
    if not (rest == ord("#")).any():
        is_bit = (rest == 0x30) | (rest == 0x31)
        is_ws = np.isin(rest, np.frombuffer(_WS, dtype=np.uint8))
        bit_pos = np.flatnonzero(is_bit)
        stop = bit_pos[total - 1] + 1 if bit_pos.size >= total else rest.size
        bad = np.flatnonzero(~(is_bit | is_ws)[:stop])
        if bad.size:
            rd.fail(f"unexpected byte {bytes([rest[bad[0]]])!r} in P1 raster",
                    offset=rd.pos + int(bad[0]))
        if bit_pos.size < total:
            rd.fail(f"truncated raster: got {bit_pos.size} of {total} pixels", offset=len(data))
        return (rest[bit_pos[:total]] - 0x30).astype(np.uint8).reshape(height, width)

    bits = np.empty(total, dtype=np.uint8)
    n = 0
    while n < total:
        rd.skip_space()
        if rd.pos >= len(data):
            rd.fail(f"truncated raster: got {n} of {total} pixels")
        ch = data[rd.pos]
        if ch not in (0x30, 0x31):
            rd.fail(f"unexpected byte {bytes([ch])!r} in P1 raster")
        bits[n] = ch - 0x30
        n += 1
        rd.pos += 1
    return bits.reshape(height, width)


def read_mask(path, invert: bool = False) -> np.ndarray:
    mask = parse_pbm(Path(path).read_bytes(), path)
    return 1 - mask if invert else mask


def encode_pbm(mask, fmt: str = "P4") -> bytes:
    mask = as_mask(mask)
    h, w = mask.shape
    if fmt == "P4":
        return f"P4\n{w} {h}\n".encode() + np.packbits(mask, axis=1).tobytes()
    if fmt == "P1":
        out = io.StringIO()
        out.write(f"P1\n{w} {h}\n")
        for row in mask:
            line = "".join("1" if v else "0" for v in row)
            # plain PBM lines stay under 70 characters
            for i in range(0, len(line), 70):
                out.write(line[i:i + 70] + "\n")
        return out.getvalue().encode("ascii")
    raise ValueError(f"unsupported bitmap format {fmt!r}")


def write_mask(mask, path, fmt: str = "P4") -> None:
    Path(path).write_bytes(encode_pbm(mask, fmt))


def encode_ppm(rgb: np.ndarray) -> bytes:
    h, w, _ = rgb.shape
    return f"P6\n{w} {h}\n255\n".encode() + np.ascontiguousarray(rgb, dtype=np.uint8).tobytes()


def parse_ppm(data: bytes, path=None) -> np.ndarray:
    rd = _Reader(data, path)
    if data[:2] != b"P6":
        rd.fail(f"not a binary PPM (magic {data[:2]!r})", offset=0)
    rd.pos = 2
    width = rd.header_int("width")
    height = rd.header_int("height")
    maxval = rd.header_int("maxval")
    if maxval != 255:
        rd.fail(f"only maxval 255 is supported, got {maxval}")
    rd.pos += 1
    need = width * height * 3
    payload = data[rd.pos:rd.pos + need]
    if len(payload) < need:
        rd.fail(f"truncated payload: need {need} bytes, have {len(payload)}", offset=len(data))
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3).copy()


_FRAME_RE = re.compile(r"(\d+)$")


def frame_path(directory, index: int) -> Path:
    return Path(directory) / f"frame_{index:04d}.pbm"


def list_frames(directory) -> dict:
    """Map frame index to path for every ``*.pbm`` whose stem ends in digits."""
    frames = {}
    for p in sorted(Path(directory).glob("*.pbm")):
        m = _FRAME_RE.search(p.stem)
        if m is None:
            continue
        idx = int(m.group(1))
        if idx in frames:
            raise FormatError(f"frame {idx} appears twice ({frames[idx].name}, {p.name})", path=directory)
        frames[idx] = p
    return frames


def read_gt_rects(path, frame_size: tuple) -> dict:
    """Parse a ground-truth CSV into ``{frame: [Rect, ...]}`` (file order kept)."""
    width, height = frame_size
    rects = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != GT_HEADER:
            raise FormatError(f"expected header {','.join(GT_HEADER)}", path=path, line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not f.strip() for f in row):
                continue
            if len(row) != 5:
                raise FormatError(f"expected 5 fields, got {len(row)}", path=path, line=lineno)
            try:
                frame, r, c, h, w = (int(f.strip()) for f in row)
            except ValueError:
                raise FormatError(f"non-integer field in {row!r}", path=path, line=lineno) from None
            if frame < 0 or h < 1 or w < 1:
                raise FormatError("frame must be >= 0 and sides >= 1", path=path, line=lineno)
            rect = Rect(r, c, h, w)
            if not rect.in_bounds(width, height):
                raise FormatError(f"rect {rect} outside {width}x{height} frame", path=path, line=lineno)
            rects.setdefault(frame, []).append(rect)
    return rects


def rects_to_components(rects, frame_size: tuple) -> list:
    width, height = frame_size
    return [Component.from_rect(i + 1, r, (height, width)) for i, r in enumerate(rects)]


def read_ground_truth(path, frame_size: tuple) -> dict:
    """Load ground truth as ``{frame: [Component, ...]}``.

    ``frame_size`` is ``(width, height)``. Frames without any ground truth
    are absent from the result; look them up with ``.get(frame, [])``.
    CSV rectangles become one component each (even if they touch); mask
    directories are 8-connected labeled.
    """
    path = Path(path)
    if path.is_dir():
        out = {}
        width, height = frame_size
        for idx, p in list_frames(path).items():
            mask = read_mask(p)
            if mask.shape != (height, width):
                raise DimensionError(
                    f"{p}: ground-truth mask is {mask.shape[1]}x{mask.shape[0]}, expected {width}x{height}")
            _, comps = label_components(mask)
            if comps:
                out[idx] = comps
        return out
    return {frame: rects_to_components(rs, frame_size)
            for frame, rs in read_gt_rects(path, frame_size).items()}


def write_gt_csv(rects_by_frame: dict, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(GT_HEADER)
        for frame in sorted(rects_by_frame):
            for r in rects_by_frame[frame]:
                writer.writerow([frame, r.row, r.col, r.height, r.width])


def overlay_image(det_mask, gt_components, match) -> np.ndarray:
    """RGB array coloring detections by their match class and missed GT in blue.

    ``match`` must come from matching the 8-connected components of
    ``det_mask`` (as returned by ``label_components``) against ``gt_components``.
    """
    det_mask = as_mask(det_mask)
    shape = det_mask.shape
    for g in gt_components:
        if g.shape != shape:
            raise DimensionError(f"ground truth is {g.shape[1]}x{g.shape[0]}, detections {shape[1]}x{shape[0]}")
    label_map, _ = label_components(det_mask)
    labels = label_map.labels
    palette = np.zeros((label_map.component_count + 1, 3), dtype=np.uint8)
    for lab in match.fp_labels:
        palette[lab] = RED
    for lab in match.unmatched_overlapping:
        palette[lab] = YELLOW
    for lab, _, _ in match.pairs:
        palette[lab] = GREEN
    rgb = palette[labels]
    missed = set(match.fn_labels)
    for g in gt_components:
        if g.label in missed:
            rgb[g.rows, g.cols] = BLUE
    return rgb


def render_overlay(det_mask, gt_components, match, path: Optional[str] = None) -> np.ndarray:
    """Write the overlay as a P6 image to ``path`` and return the RGB array."""
    rgb = overlay_image(det_mask, gt_components, match)
    if path is not None:
        Path(path).write_bytes(encode_ppm(rgb))
    return rgb
