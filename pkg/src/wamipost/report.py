"""Evaluation reports: per-frame counts and metrics plus per-scheme summaries.

CSV reports hold two tables separated by a blank line, each with its own
header row. JSON reports hold the same rows under ``per_frame`` and
``summary``. Floats are written with six digits after the decimal point.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import FormatError
from .evaluation import summarize

METRIC_NAMES = ("precision", "recall", "fscore", "pwc")


@dataclass(frozen=True)
class FrameRow:
    frame: int
    scheme: str
    tp: int
    fn: int
    fp: int
    precision: float
    recall: float
    fscore: float
    pwc: float


@dataclass(frozen=True)
class SummaryRow:
    scheme: str
    metric: str
    mean: float
    ci95_halfwidth: float
    n: int


FRAME_COLUMNS = [f.name for f in fields(FrameRow)]
SUMMARY_COLUMNS = [f.name for f in fields(SummaryRow)]


@dataclass
class EvalReport:
    per_frame: list = field(default_factory=list)
    summary: list = field(default_factory=list)

    @classmethod
    def from_frames(cls, rows) -> EvalReport:
        """Sort frame rows and derive one summary row per (scheme, metric)."""
        order = {}
        for r in rows:
            order.setdefault(r.scheme, len(order))
        rows = sorted(rows, key=lambda r: (r.frame, order[r.scheme]))
        summary = []
        for scheme in order:
            mine = [r for r in rows if r.scheme == scheme]
            for metric in METRIC_NAMES:
                s = summarize([getattr(r, metric) for r in mine])
                summary.append(SummaryRow(scheme, metric, s.mean, s.ci95_halfwidth, s.n))
        return cls(rows, summary)

    def summary_for(self, scheme: str, metric: str) -> SummaryRow:
        for row in self.summary:
            if row.scheme == scheme and row.metric == metric:
                return row
        raise KeyError((scheme, metric))


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def report_to_csv(report: EvalReport) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(FRAME_COLUMNS)
    for r in report.per_frame:
        writer.writerow([_fmt(v) for v in asdict(r).values()])
    out.write("\n")
    writer.writerow(SUMMARY_COLUMNS)
    for r in report.summary:
        writer.writerow([_fmt(v) for v in asdict(r).values()])
    return out.getvalue()


def _round(row: dict) -> dict:
    return {k: round(v, 6) if isinstance(v, float) else v for k, v in row.items()}


def report_to_json(report: EvalReport) -> str:
    doc = {
        "per_frame": [_round(asdict(r)) for r in report.per_frame],
        "summary": [_round(asdict(r)) for r in report.summary],
    }
    return json.dumps(doc, indent=2) + "\n"


def write_report(report: EvalReport, path, fmt: str = "csv") -> None:
    if fmt == "csv":
        text = report_to_csv(report)
    elif fmt == "json":
        text = report_to_json(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    Path(path).write_text(text, encoding="utf-8")


def _coerce(cls, values: dict, where: str):
    kwargs = {}
    for f in fields(cls):
        if f.name not in values:
            raise FormatError(f"missing column {f.name!r}", path=where)
        raw = values[f.name]
        try:
            kwargs[f.name] = raw if f.type == "str" else (int(raw) if f.type == "int" else float(raw))
        except (TypeError, ValueError):
            raise FormatError(f"bad value {raw!r} for {f.name}", path=where) from None
    return cls(**kwargs)


def parse_report(text: str, fmt: str, where: str = "<report>") -> EvalReport:
    if fmt == "json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(str(exc), path=where, line=exc.lineno) from None
        return EvalReport([_coerce(FrameRow, r, where) for r in doc.get("per_frame", [])],
                          [_coerce(SummaryRow, r, where) for r in doc.get("summary", [])])
    blocks = text.split("\n\n")
    if len(blocks) != 2:
        raise FormatError("expected a frame table and a summary table separated by a blank line", path=where)
    tables = []
    for block, cls in zip(blocks, (FrameRow, SummaryRow)):
        reader = csv.DictReader(io.StringIO(block))
        tables.append([_coerce(cls, row, where) for row in reader])
    return EvalReport(*tables)


def read_report(path) -> EvalReport:
    path = Path(path)
    fmt = "json" if path.suffix.lower() == ".json" else "csv"
    return parse_report(path.read_text(encoding="utf-8"), fmt, str(path))
