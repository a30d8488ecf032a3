"""Per-run measurement records and their on-disk forms."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .errors import RecordError

DEFAULT_METRIC_SETS = ("train", "test")


@dataclass(frozen=True)
class RunRecord:
    """Raw measurements of one run.

    ``measurements`` maps a metric-set name (``"train"``, ``"test"``) to a
    mapping of objective name to raw value. ``status`` is ``"ok"`` or
    ``"failed"``; failed records carry the reason in ``error``.
    """

    run_id: int | str
    assignment: dict
    measurements: dict
    status: str = "ok"
    error: str | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def values(self, metric_set: str) -> dict:
        try:
            return self.measurements[metric_set]
        except KeyError:
            raise RecordError(f"run {self.run_id!r} has no metric set {metric_set!r}") from None

    def to_dict(self) -> dict:
        d = {
            "run_id": self.run_id,
            "assignment": self.assignment,
            "measurements": self.measurements,
            "status": self.status,
        }
        if self.error is not None:
            d["error"] = self.error
        if self.metadata:
            d["metadata"] = self.metadata
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    @classmethod
    def from_dict(cls, doc) -> "RunRecord":
        try:
            return cls(
                run_id=doc["run_id"],
                assignment=dict(doc.get("assignment", {})),
                measurements={k: dict(v) for k, v in doc.get("measurements", {}).items()},
                status=doc.get("status", "ok"),
                error=doc.get("error"),
                metadata=dict(doc.get("metadata", {})),
            )
        except (KeyError, TypeError, AttributeError) as exc:
            raise RecordError(f"malformed run record: {exc}") from None

    @classmethod
    def load(cls, path) -> "RunRecord":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def check_metric_sets(record: RunRecord, objectives: Iterable[str], metric_sets: Iterable[str]) -> None:
    for ms in metric_sets:
        vals = record.values(ms)
        missing = [o for o in objectives if o not in vals]
        if missing:
            raise RecordError(f"run {record.run_id!r}, metric set {ms!r}: missing objectives {missing}")


def fmt(x) -> str:
    """Six significant digits, the CSV convention for floats."""
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def records_to_csv(records: list[RunRecord], factor_names: list[str]) -> str:
    cols: list[tuple[str, str]] = []
    for r in records:
        for ms, vals in r.measurements.items():
            for obj in vals:
                if (ms, obj) not in cols:
                    cols.append((ms, obj))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["run_id", *factor_names, *(f"{ms}.{o}" for ms, o in cols), "status"])
    for r in records:
        w.writerow(
            [
                r.run_id,
                *(fmt(r.assignment.get(n, "")) for n in factor_names),
                *(fmt(r.measurements.get(ms, {}).get(o, "")) for ms, o in cols),
                r.status,
            ]
        )
    return buf.getvalue()


def write_records(records: list[RunRecord], directory, factor_names: list[str]) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for r in records:
        (d / f"{r.run_id}.json").write_text(r.to_json())


def load_records(directory) -> list[RunRecord]:
    d = Path(directory)
    if not d.is_dir():
        return []
    recs = [RunRecord.load(p) for p in d.glob("*.json")]
    return sorted(recs, key=sort_key)


def sort_key(record: RunRecord):
    rid = record.run_id
    return (0, rid, "") if isinstance(rid, int) else (1, 0, str(rid))
