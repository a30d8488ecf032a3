"""Backends that turn plan rows into run records.

* :class:`ReplayEvaluator` reads a results table keyed by ``run_id``.
* :class:`SubprocessEvaluator` runs an external command per run and reads a
  JSON result document it writes.
* :class:`SyntheticEvaluator` computes an analytic test function, with
  seeded noise.
"""
from __future__ import annotations

import csv
import json
import math
import os
import shlex
import string
import subprocess
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .design_space import DesignSpace, indices_of
from .errors import EvaluatorError, RecordError
from .orthogonal_array import ExperimentPlan, PlanRow
from .records import RunRecord, sort_key

SEED_ENV = "TAGUCHI_SEED"


def env_seed(default: int) -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise EvaluatorError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _coerce(text: str):
    text = text.strip()
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


# --------------------------------------------------------------------------- #
# replay


class ReplayEvaluator:
    """Replays a CSV of results.

    Header: ``run_id``, optional factor columns, ``<metric_set>.<objective>``
    measurement columns and an optional ``confirm`` tag column. Rows with a
    non-empty ``confirm`` tag are confirmation runs, not plan runs.
    """

    kind = "replay"

    def __init__(self, path):
        self.path = Path(path)
        if not self.path.exists():
            raise EvaluatorError(f"replay table {self.path} does not exist")
        with open(self.path, newline="") as fh:
            reader = csv.DictReader(fh)
            self.columns = list(reader.fieldnames or [])
            rows = list(reader)
        if "run_id" not in self.columns:
            raise EvaluatorError(f"replay table {self.path} has no run_id column")
        self.measure_cols = [c for c in self.columns if "." in c]
        self.factor_cols = [c for c in self.columns if c not in ("run_id", "confirm") and "." not in c]
        self.rows: dict = {}
        self.confirm_rows: dict = {}
        for raw in rows:
            tag = (raw.get("confirm") or "").strip()
            rid = _coerce(raw["run_id"])
            target = self.confirm_rows if tag else self.rows
            key = tag or rid
            if key in target:
                raise EvaluatorError(f"replay table {self.path}: duplicate run_id {key!r}")
            target[key] = raw

    def _record(self, rid, raw, tag=None) -> RunRecord:
        measurements: dict = {}
        for col in self.measure_cols:
            ms, obj = col.split(".", 1)
            val = _coerce(raw[col])
            if val is None:
                continue
            measurements.setdefault(ms, {})[obj] = float(val)
        assignment = {c: _coerce(raw[c]) for c in self.factor_cols}
        meta = {"source": self.path.name}
        if tag:
            meta["confirm"] = tag
        return RunRecord(rid, assignment, measurements, metadata=meta)

    def check_plan(self, plan: ExperimentPlan) -> None:
        ids = set(self.rows)
        want = {r.run_id for r in plan.rows}
        if ids != want:
            raise EvaluatorError(
                f"replay table covers runs {sorted(ids, key=str)} but the plan has {sorted(want)}"
            )

    def evaluate_row(self, row: PlanRow, space: DesignSpace) -> RunRecord:
        raw = self.rows.get(row.run_id)
        if raw is None:
            return RunRecord(row.run_id, row.assignment, {}, "failed", "run_id not in replay table")
        rec = self._record(row.run_id, raw)
        if rec.assignment:
            try:
                same = indices_of(space, rec.assignment) == row.indices
            except Exception:
                same = False
            if not same:
                return RunRecord(
                    row.run_id,
                    row.assignment,
                    rec.measurements,
                    "failed",
                    f"replayed assignment {rec.assignment} does not match plan {row.assignment}",
                )
        return RunRecord(row.run_id, dict(row.assignment), rec.measurements, metadata=rec.metadata)

    def confirmations(self) -> list[RunRecord]:
        return [self._record(tag, raw, tag) for tag, raw in self.confirm_rows.items()]

    def evaluate_assignment(self, run_id, assignment: Mapping, space: DesignSpace) -> RunRecord:
        for rec in self.confirmations():
            if rec.assignment == dict(assignment) or (
                rec.assignment and indices_of(space, rec.assignment) == indices_of(space, assignment)
            ):
                return RunRecord(run_id, dict(assignment), rec.measurements, metadata=rec.metadata)
        return RunRecord(run_id, dict(assignment), {}, "failed", "no replayed row for this assignment")


# --------------------------------------------------------------------------- #
# subprocess


class SubprocessEvaluator:
    """Runs ``command`` once per run.

    ``{factor}`` and ``{run_id}`` placeholders are substituted per token
    after shell-style splitting, so values never reach a shell. The command
    must write a JSON document ``{metric_set: {objective: value}}`` to
    ``result_path`` (relative to ``workdir``).
    """

    kind = "subprocess"

    def __init__(self, command, timeout: float | None = None, result_path: str = "{run_id}.json",
                 workdir=".", env: Mapping[str, str] | None = None):
        self.argv = shlex.split(command) if isinstance(command, str) else list(command)
        if not self.argv:
            raise EvaluatorError("subprocess evaluator needs a command")
        self.timeout = timeout
        self.result_path = result_path
        self.workdir = Path(workdir)
        self.env = dict(env or {})

    def placeholders(self) -> set[str]:
        names = set()
        for tok in [*self.argv, self.result_path]:
            for _, field, _, _ in string.Formatter().parse(tok):
                if field is not None:
                    names.add(field)
        return names

    def check_space(self, space: DesignSpace) -> None:
        unknown = self.placeholders() - set(space.names) - {"run_id"}
        if unknown:
            raise EvaluatorError(f"command template references unknown placeholders {sorted(unknown)}")

    def evaluate_assignment(self, run_id, assignment: Mapping, space: DesignSpace | None = None) -> RunRecord:
        subs = {**{k: v for k, v in assignment.items()}, "run_id": run_id}
        try:
            argv = [tok.format(**subs) for tok in self.argv]
            out_path = self.workdir / self.result_path.format(**subs)
        except (KeyError, IndexError) as exc:
            return RunRecord(run_id, dict(assignment), {}, "failed", f"bad command template: {exc}")
        self.workdir.mkdir(parents=True, exist_ok=True)
        if out_path.exists():
            out_path.unlink()
        env = {**os.environ, **self.env, "TAGUCHI_RUN_ID": str(run_id)}
        t0 = time.perf_counter()
        try:
            proc = subprocess.run(argv, cwd=self.workdir, timeout=self.timeout, env=env,
                                  capture_output=True, text=True)
        except subprocess.TimeoutExpired:
            return RunRecord(run_id, dict(assignment), {}, "failed", f"timed out after {self.timeout}s",
                             {"wall_time": time.perf_counter() - t0})
        except OSError as exc:
            return RunRecord(run_id, dict(assignment), {}, "failed", f"could not start: {exc}")
        wall = time.perf_counter() - t0
        meta = {"wall_time": wall, "exit_status": proc.returncode}
        if proc.returncode != 0:
            tail = proc.stderr.strip().splitlines()[-1:] if proc.stderr else []
            return RunRecord(run_id, dict(assignment), {}, "failed",
                             f"exit status {proc.returncode}" + (f": {tail[0]}" if tail else ""), meta)
        try:
            doc = json.loads(out_path.read_text())
            measurements = {str(ms): {str(o): float(v) for o, v in vals.items()} for ms, vals in doc.items()}
        except (OSError, ValueError, AttributeError, TypeError) as exc:
            return RunRecord(run_id, dict(assignment), {}, "failed", f"unparsable result {out_path.name}: {exc}", meta)
        return RunRecord(run_id, dict(assignment), measurements, metadata=meta)

    def evaluate_row(self, row: PlanRow, space: DesignSpace) -> RunRecord:
        return self.evaluate_assignment(row.run_id, row.assignment, space)


# --------------------------------------------------------------------------- #
# synthetic functions


class SyntheticFunction:
    """Noise-free test function evaluated on 0-based level-index matrices."""

    name = "base"
    metric_sets = ("train",)

    def __init__(self, space: DesignSpace, seed: int = 0):
        self.space = space
        self.seed = seed

    def values(self, idx: np.ndarray) -> dict:
        raise NotImplementedError


class SumFunction(SyntheticFunction):
    """error = sum of the numeric level values."""

    name = "sum"

    def __init__(self, space, seed=0):
        super().__init__(space, seed)
        for f in space.factors:
            if f.kind != "numeric":
                raise EvaluatorError(f"'sum' needs numeric factors; {f.name!r} is {f.kind}")
        self._levels = [np.asarray(f.levels, dtype=float) for f in space.factors]

    def values(self, idx):
        total = np.zeros(idx.shape[0])
        for k, lv in enumerate(self._levels):
            total = total + lv[idx[:, k]]
        return {"train": {"error": total}}


class AdditiveFunction(SyntheticFunction):
    """Random main effects, no interactions; effects drawn from ``seed``."""

    name = "additive"

    def __init__(self, space, seed=0):
        super().__init__(space, seed)
        rng = np.random.default_rng([seed, 0xADD])
        self.tables = rng.uniform(0.0, 1.0, size=(space.n_factors, max(space.shape)))

    def values(self, idx):
        total = np.zeros(idx.shape[0])
        for k in range(idx.shape[1]):
            total = total + self.tables[k, idx[:, k]]
        return {"train": {"error": total}}


class ConstantFunction(SyntheticFunction):
    name = "constant"

    def values(self, idx):
        return {"train": {"error": np.full(idx.shape[0], 0.5)}}


class CNNSurrogate(SyntheticFunction):
    """Smooth stand-in for CNN training outcomes on the five-factor CIFAR space.

    Training error falls with an effective-training term that couples
    epochs, sampling rate and backbone depth, with mild penalties away from
    lr 0.1 and batch 64. Training time grows with epochs, sampling and depth.
    Purely synthetic.
    """

    name = "cnn_surrogate"
    metric_sets = ("train", "test")
    required = ("lr", "epochs", "sampling", "backbone", "batch")

    def __init__(self, space, seed=0):
        super().__init__(space, seed)
        missing = [n for n in self.required if n not in space.names]
        if missing:
            raise EvaluatorError(f"cnn_surrogate needs factors {list(self.required)}; missing {missing}")
        self._cols = [space.names.index(n) for n in self.required]
        self._levels = [np.asarray(space.factor(n).levels, dtype=float) for n in self.required]

    def values(self, idx):
        lr, ep, sr, bb, bs = (lv[idx[:, c]] for lv, c in zip(self._levels, self._cols))
        capacity = np.log(bb / 20.0) / math.log(110.0 / 20.0)
        progress = (ep / 150.0) * sr**0.7 * (0.7 + 0.3 * capacity)
        train_err = (
            0.0005
            + 0.12 * np.exp(-4.0 * progress)
            + 0.006 * np.log10(lr / 0.1) ** 2
            + 0.002 * np.log2(bs / 64.0) ** 2
        )
        test_err = train_err + 0.05 + 0.02 * (1.0 - capacity) + 0.01 * (1.0 - sr)
        t = 8.0 * ep * sr * (bb / 20.0) ** 0.8 * (128.0 / bs) ** 0.2
        return {"train": {"error": train_err, "time": t}, "test": {"error": test_err, "time": t}}


SYNTHETIC = {
    cls.name: cls for cls in (SumFunction, AdditiveFunction, ConstantFunction, CNNSurrogate)
}


def synthetic_function(name: str, space: DesignSpace, seed: int = 0) -> SyntheticFunction:
    if name not in SYNTHETIC:
        raise EvaluatorError(f"unknown synthetic function {name!r}; expected one of {sorted(SYNTHETIC)}")
    return SYNTHETIC[name](space, seed)


def run_seed(seed: int, run_id) -> list[int]:
    """Per-run noise seed; independent of evaluation order."""
    rid = run_id if isinstance(run_id, int) else zlib.crc32(str(run_id).encode())
    return [seed, 1, rid]


def add_noise(values: dict, noise: float, rngs: Sequence[np.random.Generator]) -> dict:
    """Multiplicative log-normal noise on every ``error`` measurement."""
    if noise <= 0:
        return values
    out = {}
    for ms, objs in values.items():
        out[ms] = dict(objs)
        if "error" in objs:
            z = np.array([rng.standard_normal() for rng in rngs])
            out[ms]["error"] = objs["error"] * np.exp(noise * z)
    return out


class SyntheticEvaluator:
    kind = "synthetic"

    def __init__(self, function: str, space: DesignSpace, seed: int = 0, noise: float = 0.0,
                 function_seed: int | None = None):
        if noise < 0:
            raise EvaluatorError(f"noise must be >= 0, got {noise!r}")
        self.seed = seed
        self.noise = noise
        self.function = synthetic_function(function, space, seed if function_seed is None else function_seed)

    def measure(self, idx0: np.ndarray, run_ids: Sequence) -> dict:
        vals = self.function.values(np.asarray(idx0, dtype=np.int64))
        # each run's noise stream is seeded on its own, so metric sets stay paired per run
        rngs = [np.random.default_rng(run_seed(self.seed, rid)) for rid in run_ids]
        return add_noise(vals, self.noise, rngs)

    def evaluate_assignment(self, run_id, assignment: Mapping, space: DesignSpace) -> RunRecord:
        idx = np.array([indices_of(space, assignment)]) - 1
        vals = self.measure(idx, [run_id])
        measurements = {ms: {o: float(v[0]) for o, v in objs.items()} for ms, objs in vals.items()}
        meta = {"function": self.function.name, "seed": self.seed, "noise": self.noise}
        return RunRecord(run_id, dict(assignment), measurements, metadata=meta)

    def evaluate_row(self, row: PlanRow, space: DesignSpace) -> RunRecord:
        return self.evaluate_assignment(row.run_id, row.assignment, space)


# --------------------------------------------------------------------------- #


def evaluator_from_dict(doc: Mapping, space: DesignSpace, base_dir=".", seed: int | None = None):
    """Build an evaluator from its config document.

    ``{"kind": "replay", "path": ...}``,
    ``{"kind": "subprocess", "command": ..., "timeout": ..., "result_path": ..., "workdir": ...}``,
    ``{"kind": "synthetic", "function": ..., "seed": ..., "noise": ...}``.
    """
    kind = doc.get("kind")
    base = Path(base_dir)
    if kind == "replay":
        return ReplayEvaluator(base / doc["path"])
    if kind == "subprocess":
        ev = SubprocessEvaluator(
            doc["command"],
            doc.get("timeout"),
            doc.get("result_path", "{run_id}.json"),
            base / doc.get("workdir", "."),
            doc.get("env"),
        )
        ev.check_space(space)
        return ev
    if kind == "synthetic":
        # precedence: explicit seed, then TAGUCHI_SEED, then the config value
        s = seed if seed is not None else env_seed(int(doc.get("seed", 0)))
        return SyntheticEvaluator(doc["function"], space, s, float(doc.get("noise", 0.0)))
    raise EvaluatorError(f"unknown evaluator kind {kind!r}")


def evaluate(evaluator, plan: ExperimentPlan) -> list[RunRecord]:
    """One record per plan row, sorted by run id; failures are recorded, not raised."""
    if isinstance(evaluator, ReplayEvaluator):
        evaluator.check_plan(plan)
    return sorted((evaluator.evaluate_row(row, plan.space) for row in plan.rows), key=sort_key)


def parallel_evaluate(evaluator, plan: ExperimentPlan, max_in_flight: int = 1) -> list[RunRecord]:
    """Same result as :func:`evaluate`, with up to ``max_in_flight`` runs at once."""
    if max_in_flight < 1:
        raise EvaluatorError(f"max_in_flight must be >= 1, got {max_in_flight}")
    if isinstance(evaluator, ReplayEvaluator) or max_in_flight == 1:
        return evaluate(evaluator, plan)
    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        futures = [pool.submit(evaluator.evaluate_row, row, plan.space) for row in plan.rows]
        records = [f.result() for f in futures]
    return sorted(records, key=sort_key)


def failures(records: Sequence[RunRecord]) -> list[RunRecord]:
    return [r for r in records if not r.ok]


def require_complete(records: Sequence[RunRecord]) -> None:
    bad = failures(records)
    if bad:
        raise RecordError("failed runs: " + ", ".join(f"{r.run_id} ({r.error})" for r in bad))
