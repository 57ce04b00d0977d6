"""Experiment reports and their JSON/CSV serialisation.

A report holds named per-replica samples, test verdicts and provenance. The
serialised form is a pure function of these fields, so a rerun with the same
seed produces byte-identical files. Wall-clock time is never written into the
report itself.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SCHEMA = 1


def _num(x):
    """JSON-safe scalar: NaN and infinities become strings."""
    if x is None:
        return None
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (str,)) or obj is None:
        return obj
    return _num(obj)


@dataclass
class StatSample:
    name: str
    values: np.ndarray
    replica_ids: np.ndarray

    def summary(self) -> dict:
        v = self.values[np.isfinite(self.values)]
        out = {"name": self.name, "count": int(self.values.size)}
        if v.size:
            q = np.quantile(v, [0.1, 0.25, 0.5, 0.75, 0.9])
            out.update(mean=float(v.mean()), std=float(v.std(ddof=1)) if v.size > 1 else 0.0,
                       min=float(v.min()), max=float(v.max()),
                       quantiles={"q10": q[0], "q25": q[1], "q50": q[2], "q75": q[3], "q90": q[4]})
        return out


@dataclass
class Verdict:
    name: str
    statistic: float
    passed: bool
    p: float | None = None
    threshold: float | None = None
    kind: str = "exact"
    note: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "statistic": self.statistic, "p": self.p, "threshold": self.threshold,
                "pass": bool(self.passed), "kind": self.kind, "note": self.note}


@dataclass
class ExperimentReport:
    """Named statistic samples, verdicts and provenance of one experiment run.

    ``kind`` on a test is ``"exact"`` for identities the theory fixes and
    ``"calibrated"`` for thresholds set by pilot runs.
    """

    name: str
    params: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)
    stats: list = field(default_factory=list)
    tests: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def add_stat(self, name: str, values, replica_ids=None) -> None:
        values = np.asarray(values, dtype=float).ravel()
        ids = np.arange(values.size) if replica_ids is None else np.asarray(replica_ids)
        if ids.size != values.size:
            raise ValueError("replica ids and values differ in length")
        self.stats.append(StatSample(name, values, ids))

    def add_test(self, name: str, statistic, passed: bool, p=None, threshold=None,
                 kind: str = "exact", note: str = "") -> Verdict:
        t = Verdict(name, _num(statistic), bool(passed), _num(p), _num(threshold), kind, note)
        self.tests.append(t)
        return t

    def merge(self, other: "ExperimentReport", prefix: str | None = None) -> None:
        """Append another report's stats and tests under ``prefix``."""
        pre = f"{other.name if prefix is None else prefix}/"
        for s in other.stats:
            self.stats.append(StatSample(pre + s.name, s.values, s.replica_ids))
        for t in other.tests:
            self.tests.append(Verdict(pre + t.name, t.statistic, t.passed, t.p, t.threshold, t.kind, t.note))
        self.notes.extend(pre + n for n in other.notes)

    def test(self, name: str) -> Verdict:
        for t in self.tests:
            if t.name == name:
                return t
        raise KeyError(name)

    @property
    def passed(self) -> bool:
        return all(t.passed for t in self.tests)

    def to_dict(self) -> dict:
        return _clean({
            "schema": SCHEMA,
            "name": self.name,
            "params": self.params,
            "seeds": self.seeds,
            "stats": [s.summary() for s in self.stats],
            "tests": [t.to_dict() for t in self.tests],
            "notes": list(self.notes),
            "pass": self.passed,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def csv_rows(self) -> list[tuple]:
        return [(int(i), s.name, _num(v)) for s in self.stats for i, v in zip(s.replica_ids, s.values)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["replica_id", "statistic", "value"])
        for row in self.csv_rows():
            w.writerow([row[0], row[1], repr(row[2]) if isinstance(row[2], float) else row[2]])
        return buf.getvalue()


def emit(report: ExperimentReport, out_dir, fmt: str = "both") -> list[Path]:
    """Write ``<name>.json`` and/or ``<name>.csv`` under ``out_dir``."""
    if fmt not in ("json", "csv", "both"):
        raise ValueError(f"unknown format {fmt!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    if fmt in ("json", "both"):
        p = out / f"{report.name}.json"
        p.write_text(report.to_json())
        paths.append(p)
    if fmt in ("csv", "both"):
        p = out / f"{report.name}.csv"
        p.write_text(report.to_csv())
        paths.append(p)
    return paths
