"""Experiment reports: rows, fitted constants, CSV and JSON persistence."""

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

CSV_HEADER = ("experiment", "case_id", "gamma", "s", "a", "b", "w1", "w2", "eps", "eta",
              "lhs", "rhs", "ratio", "pass")
_FLOATS = CSV_HEADER[2:13]


@dataclass
class Row:
    case_id: str
    lhs: float
    rhs: float
    ratio: float
    gamma: float | None = None
    s: float | None = None
    a: float | None = None
    b: float | None = None
    w1: float | None = None
    w2: float | None = None
    eps: float | None = None
    eta: float | None = None
    passed: bool | None = None
    group: str = ""
    detail: dict = field(default_factory=dict)


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    rows: list = field(default_factory=list)
    fitted: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool | None:
        """False if any check failed; None when nothing could be checked."""
        if not self.checks:
            return None
        return all(c["ok"] for c in self.checks.values())

    def ratios(self, group: str) -> list:
        return [r.ratio for r in self.rows if r.group == group]

    def groups(self) -> list:
        seen = []
        for r in self.rows:
            if r.group and r.group not in seen:
                seen.append(r.group)
        return seen


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    v = float(x)
    return repr(v) if math.isfinite(v) else str(v)


def emit_report(report: ExperimentReport, path) -> tuple:
    """Write ``<experiment>.csv`` and ``<experiment>.json`` into a directory.

    If ``path`` ends in ``.csv`` it is used as the CSV name and the sidecar sits
    next to it.  Returns both paths.
    """
    p = Path(path)
    if p.suffix == ".csv":
        csv_path = p
    else:
        p.mkdir(parents=True, exist_ok=True)
        csv_path = p / f"{report.experiment}.csv"
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    json_path = csv_path.with_suffix(".json")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in report.rows:
            w.writerow([report.experiment, r.case_id] + [_fmt(getattr(r, k)) for k in _FLOATS]
                       + [_fmt(r.passed)])
    sidecar = {
        "experiment": report.experiment,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "config": report.config,
        "fitted": report.fitted,
        "checks": report.checks,
        "passed": report.passed,
        "notes": report.notes,
        "rows": [{"case_id": r.case_id, "group": r.group, "detail": r.detail} for r in report.rows],
    }
    json_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True, default=_json_default) + "\n")
    return csv_path, json_path


def _json_default(o):
    if hasattr(o, "tolist"):
        return o.tolist()
    if hasattr(o, "__dataclass_fields__"):
        return asdict(o)
    return str(o)


def read_csv(path) -> list:
    """Parse an emitted CSV back into dicts with floats (None for empty cells)."""
    out = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            row = dict(rec)
            for k in _FLOATS:
                row[k] = float(row[k]) if row[k] != "" else None
            row["pass"] = None if row["pass"] == "" else row["pass"] == "1"
            out.append(row)
    return out
