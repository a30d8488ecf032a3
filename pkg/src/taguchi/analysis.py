"""Main-effects analysis of an orthogonal experiment.

Group means of J per factor level, the level-wise optimum H*, variation
ranges with importance ranks, and comparison against a confirmation run.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .design_space import realize
from .errors import RecordError
from .objective import NormSpec, aggregate
from .orthogonal_array import ExperimentPlan
from .records import RunRecord

TIE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class GroupTable:
    factor: str
    levels: tuple  # level values
    members: tuple  # run ids per level
    means: np.ndarray  # mean J per level
    metric_set: str = "train"

    @property
    def range(self) -> float:
        return float(np.max(self.means) - np.min(self.means))

    def to_dict(self) -> dict:
        return {
            "factor": self.factor,
            "metric_set": self.metric_set,
            "levels": [
                {"index": i + 1, "value": v, "runs": list(m), "mean": float(mu)}
                for i, (v, m, mu) in enumerate(zip(self.levels, self.members, self.means))
            ],
        }


@dataclass(frozen=True)
class OptimalLevel:
    factor: str
    index: int  # 1-based
    value: object
    tie: bool = False


@dataclass(frozen=True)
class FactorImportance:
    factor: str
    range: float
    rank: int
    tie: bool = False


@dataclass
class Confirmation:
    run_id: object
    assignment: dict
    j: dict  # metric set -> J(H*)
    best_run: dict  # metric set -> (run id, J) of the best orthogonal run
    beats_all: dict  # metric set -> bool, strictly below every run
    ties_best: dict  # metric set -> bool

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "assignment": self.assignment,
            "metric_sets": {
                ms: {
                    "J": self.j[ms],
                    "best_run": self.best_run[ms][0],
                    "best_run_J": self.best_run[ms][1],
                    "beats_all_runs": self.beats_all[ms],
                    "ties_best_run": self.ties_best[ms],
                }
                for ms in self.j
            },
        }


@dataclass
class AnalysisReport:
    objective: str
    norm: NormSpec
    selection_metric_set: str
    run_ids: list
    run_j: dict  # metric set -> array of J in run order
    tables: dict  # metric set -> list[GroupTable]
    optimum: list  # list[OptimalLevel]
    importance: list  # list[FactorImportance]
    confirmation: Confirmation | None = None

    @property
    def optimal_indices(self) -> tuple:
        return tuple(o.index for o in self.optimum)

    @property
    def optimal_assignment(self) -> dict:
        return {o.factor: o.value for o in self.optimum}

    @property
    def ranks(self) -> tuple:
        return tuple(f.rank for f in self.importance)

    def to_dict(self) -> dict:
        d = {
            "objective": self.objective,
            "norm": self.norm.to_dict(),
            "selection_metric_set": self.selection_metric_set,
            "runs": [
                {"run_id": rid, **{ms: float(js[i]) for ms, js in self.run_j.items()}}
                for i, rid in enumerate(self.run_ids)
            ],
            "group_tables": {ms: [t.to_dict() for t in ts] for ms, ts in self.tables.items()},
            "optimum": [
                {"factor": o.factor, "index": o.index, "value": o.value, "tie": o.tie}
                for o in self.optimum
            ],
            "importance": [
                {"factor": f.factor, "range": f.range, "rank": f.rank, "tie": f.tie}
                for f in self.importance
            ],
        }
        if self.confirmation is not None:
            d["confirmation"] = self.confirmation.to_dict()
        return d


# --------------------------------------------------------------------------- #


def ordered_records(plan: ExperimentPlan, records: Sequence[RunRecord]) -> list[RunRecord]:
    """Records for runs 0..R-1 in plan order; raises listing missing/duplicate ids."""
    by_id: dict = {}
    dupes = []
    for r in records:
        if not isinstance(r.run_id, int) or isinstance(r.run_id, bool):
            continue  # confirmation or foreign records
        if r.run_id in by_id:
            dupes.append(r.run_id)
        by_id[r.run_id] = r
    missing = [i for i in range(plan.runs) if i not in by_id or not by_id[i].ok]
    extra = sorted(i for i in by_id if not 0 <= i < plan.runs)
    if missing or dupes or extra:
        parts = []
        if missing:
            parts.append(f"missing or failed runs {missing}")
        if dupes:
            parts.append(f"duplicate runs {sorted(set(dupes))}")
        if extra:
            parts.append(f"runs not in plan {extra}")
        raise RecordError("incomplete record set: " + "; ".join(parts))
    out = [by_id[i] for i in range(plan.runs)]
    for row, rec in zip(plan.rows, out):
        if rec.assignment and not _same_assignment(rec.assignment, row.assignment):
            raise RecordError(
                f"run {row.run_id}: record assignment {rec.assignment} does not match plan {row.assignment}"
            )
    return out


def _same_assignment(a: Mapping, b: Mapping) -> bool:
    return set(a) == set(b) and all(a[k] == b[k] for k in b)


def run_values(plan: ExperimentPlan, records: Sequence[RunRecord], norm: NormSpec, metric_set: str) -> np.ndarray:
    """J of every plan run, in run order."""
    recs = ordered_records(plan, records)
    return np.array([aggregate(norm, r.values(metric_set)) for r in recs])


def group_tables_from_values(plan: ExperimentPlan, values: np.ndarray, metric_set: str = "train") -> list[GroupTable]:
    m0 = plan.index_matrix - 1
    L = plan.array.levels
    means = kernels.group_means(m0, values, L)
    tables = []
    for k, f in enumerate(plan.space.factors):
        members = tuple(tuple(int(i) for i in np.flatnonzero(m0[:, k] == lv)) for lv in range(f.n_levels))
        tables.append(GroupTable(f.name, f.levels, members, means[k, : f.n_levels].copy(), metric_set))
    return tables


def group_means(
    plan: ExperimentPlan, records: Sequence[RunRecord], norm: NormSpec, metric_set: str = "train"
) -> list[GroupTable]:
    """Per-factor tables of mean J over the runs at each level."""
    return group_tables_from_values(plan, run_values(plan, records, norm, metric_set), metric_set)


def _tied(values: np.ndarray, target: float) -> np.ndarray:
    return np.isclose(values, target, rtol=TIE_RTOL, atol=0.0)


def select_optimum(tables: Sequence[GroupTable]) -> list[OptimalLevel]:
    """Level with the smallest group mean, lowest index on ties."""
    out = []
    for t in tables:
        tied = np.flatnonzero(_tied(t.means, np.min(t.means)))
        best = int(tied[0])
        tie = len(tied) > 1
        out.append(OptimalLevel(t.factor, best + 1, t.levels[best], tie))
    return out


def variation_ranges(tables: Sequence[GroupTable]) -> list[FactorImportance]:
    """Max minus min group mean per factor; rank 1 is the widest range."""
    ranges = np.array([t.range for t in tables])
    order = sorted(range(len(tables)), key=lambda k: (-ranges[k], k))
    ranks = np.empty(len(tables), dtype=int)
    ranks[order] = np.arange(1, len(tables) + 1)
    out = []
    for k, t in enumerate(tables):
        tie = int(np.count_nonzero(_tied(ranges, ranges[k]))) > 1
        out.append(FactorImportance(t.factor, float(ranges[k]), int(ranks[k]), tie))
    return out


def analyze(
    plan: ExperimentPlan,
    records: Sequence[RunRecord],
    norm: NormSpec,
    metric_sets: Sequence[str] = ("train",),
    selection: str = "train",
    objective: str = "J",
) -> AnalysisReport:
    """Full analysis for one objective configuration.

    Selection and ranking use ``selection``; every metric set in
    ``metric_sets`` gets its own group tables for reporting.
    """
    metric_sets = list(dict.fromkeys([selection, *metric_sets]))
    run_j = {ms: run_values(plan, records, norm, ms) for ms in metric_sets}
    tables = {ms: group_tables_from_values(plan, run_j[ms], ms) for ms in metric_sets}
    return AnalysisReport(
        objective=objective,
        norm=norm,
        selection_metric_set=selection,
        run_ids=[r.run_id for r in plan.rows],
        run_j=run_j,
        tables=tables,
        optimum=select_optimum(tables[selection]),
        importance=variation_ranges(tables[selection]),
    )


def confirm(report: AnalysisReport, record: RunRecord, plan: ExperimentPlan) -> Confirmation:
    """Compare J at the suggested optimum against every orthogonal run."""
    expected = realize(plan.space, report.optimal_indices)
    if not _same_assignment(record.assignment, expected):
        diff = {
            k: (record.assignment.get(k), expected.get(k))
            for k in sorted(set(expected) | set(record.assignment))
            if record.assignment.get(k) != expected.get(k)
        }
        raise RecordError(f"confirmation assignment differs from H* (got, expected): {diff}")
    if not record.ok:
        raise RecordError(f"confirmation run {record.run_id!r} failed: {record.error}")
    j, best, beats, ties = {}, {}, {}, {}
    for ms, runs in report.run_j.items():
        if ms not in record.measurements:
            continue
        jj = aggregate(report.norm, record.values(ms))
        b = int(np.argmin(runs))
        j[ms] = jj
        best[ms] = (report.run_ids[b], float(runs[b]))
        beats[ms] = bool(jj < runs.min())
        ties[ms] = bool(jj == runs.min())
    conf = Confirmation(record.run_id, dict(record.assignment), j, best, beats, ties)
    report.confirmation = conf
    return conf


# --------------------------------------------------------------------------- #
# rendering


def _fmt(x: float) -> str:
    return f"{x:.4f}"


def _grid(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(str(c)) for c in col) for col in zip(header, *rows)]
    line = lambda cells: "  ".join(str(c).rjust(w) for c, w in zip(cells, widths))  # noqa: E731
    return "\n".join([line(header), line(["-" * w for w in widths]), *(line(r) for r in rows)])


def render_text(reports: Mapping[str, AnalysisReport]) -> str:
    """Aligned-column rendering: group tables per factor, H*, then ranges and ranks."""
    out = []
    names = list(reports)
    first = reports[names[0]]
    for k, t0 in enumerate(first.tables[first.selection_metric_set]):
        header = [t0.factor, "runs"]
        cols = []
        for name in names:
            rep = reports[name]
            for ms in rep.tables:
                header.append(f"{ms} {name}")
                cols.append(rep.tables[ms][k].means)
        rows = [
            [str(v), ",".join(map(str, t0.members[i])), *(_fmt(c[i]) for c in cols)]
            for i, v in enumerate(t0.levels)
        ]
        out.append(f"Group means for {t0.factor}\n" + _grid(header, rows))
    for name in names:
        rep = reports[name]
        opt = ", ".join(f"{o.factor}={o.value}{' (tie)' if o.tie else ''}" for o in rep.optimum)
        out.append(f"H* [{name}, {rep.selection_metric_set}]: {opt}")
    header = ["factor", *(f"range {n}" for n in names), *(f"rank {n}" for n in names)]
    rows = []
    for k, f in enumerate(first.importance):
        rows.append(
            [
                f.factor,
                *(_fmt(reports[n].importance[k].range) for n in names),
                *(f"{reports[n].importance[k].rank}{'*' if reports[n].importance[k].tie else ''}" for n in names),
            ]
        )
    out.append("Variation range and importance rank\n" + _grid(header, rows))
    confs = [(n, reports[n].confirmation) for n in names if reports[n].confirmation is not None]
    for n, c in confs:
        parts = []
        for ms in c.j:
            verdict = "beats all runs" if c.beats_all[ms] else ("ties best run" if c.ties_best[ms] else "does not beat all runs")
            parts.append(f"{ms} J={_fmt(c.j[ms])} (best run {c.best_run[ms][0]}: {_fmt(c.best_run[ms][1])}) {verdict}")
        out.append(f"Confirmation [{n}]: " + "; ".join(parts))
    return "\n\n".join(out) + "\n"


def reports_to_json(reports: Mapping[str, AnalysisReport]) -> str:
    return json.dumps({"objectives": {n: r.to_dict() for n, r in reports.items()}}, indent=2) + "\n"
