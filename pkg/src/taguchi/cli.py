"""Command-line interface.

    taguchi plan     --config CFG      write plan.csv / plan.json
    taguchi run      --config CFG      evaluate every plan row
    taguchi analyze  --config CFG      group means, H*, ranges and ranks
    taguchi confirm  --config CFG      evaluate / ingest H* and compare
    taguchi bench    --space SPACE     Taguchi vs random vs exhaustive regret
    taguchi arrays dump                print the array catalog

Exit codes: 0 success, 2 validation error, 3 evaluator failure,
4 incomplete records.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import analysis, bench
from .design_space import DesignSpace, grid_size
from .errors import DesignError, EvaluatorError, ObjectiveError, RecordError, TaguchiError
from .evaluator import ReplayEvaluator, env_seed, evaluator_from_dict, parallel_evaluate
from .objective import NormSpec, preset
from .orthogonal_array import ExperimentPlan, OrthogonalArray, auto_array, catalog, plan, validate
from .records import RunRecord, load_records, records_to_csv, sort_key, write_records

EXIT_OK, EXIT_VALIDATION, EXIT_EVALUATOR, EXIT_INCOMPLETE = 0, 2, 3, 4

DEFAULT_OBJECTIVES = {
    "obj1": {"preset": "single_error"},
    "obj2": {"preset": "error_and_time", "alpha_e": 0.8},
}


class IncompleteRecords(RecordError):
    pass


@dataclass
class ProjectConfig:
    space_path: Path
    array: object = "auto"
    objectives: dict = field(default_factory=lambda: dict(DEFAULT_OBJECTIVES))
    metric_sets: list = field(default_factory=lambda: ["train", "test"])
    evaluator: dict | None = None
    selection: str = "train"
    output_dir: Path = Path("taguchi-out")
    base_dir: Path = Path(".")
    max_in_flight: int = 1
    seed: int | None = None

    @classmethod
    def load(cls, path, overrides: argparse.Namespace | None = None) -> "ProjectConfig":
        doc = {}
        base = Path(".")
        if path is not None:
            p = Path(path)
            if not p.exists():
                raise DesignError(f"config file {p} does not exist")
            doc = json.loads(p.read_text())
            base = p.parent
        ov = vars(overrides) if overrides is not None else {}

        space = ov.get("space") or (base / doc["space"] if "space" in doc else None)
        if space is None:
            raise DesignError("no design space given (config 'space' or --space)")
        space = Path(space)
        if not space.exists():
            raise DesignError(f"design-space file {space} does not exist")

        if ov.get("output_dir"):
            out = Path(ov["output_dir"])
        else:
            out = base / doc.get("output_dir", "taguchi-out")

        array = ov.get("array") or doc.get("array", "auto")
        if isinstance(array, dict) and "file" in array:
            array = {"file": str(base / array["file"])}

        cfg = cls(
            space_path=space,
            array=array,
            objectives=doc.get("objectives", dict(DEFAULT_OBJECTIVES)),
            metric_sets=list(doc.get("metric_sets", ["train", "test"])),
            evaluator=doc.get("evaluator"),
            selection=ov.get("selection") or doc.get("selection_metric_set", "train"),
            output_dir=out,
            base_dir=base,
            max_in_flight=int(ov.get("max_in_flight") or doc.get("max_in_flight", 1)),
            seed=ov.get("seed"),
        )
        cfg.norms()  # validate presets early
        return cfg

    def space(self) -> DesignSpace:
        return DesignSpace.load(self.space_path)

    def resolve_array(self, space: DesignSpace) -> OrthogonalArray:
        a = self.array
        if isinstance(a, dict):
            arr = OrthogonalArray.load(a["file"])
        elif a == "auto":
            arr = auto_array(space)
        elif a in catalog():
            arr = catalog()[a]
            if arr.columns > space.n_factors:
                arr = arr.take_columns(space.n_factors)
        elif str(a).endswith(".json"):
            arr = OrthogonalArray.load(self.base_dir / a)
        else:
            raise DesignError(f"unknown array {a!r}; use 'auto', a catalog name {sorted(catalog())} or a JSON file")
        report = validate(arr)
        if not report.passed:
            raise DesignError(f"array {arr.name!r} is not a strength-2 orthogonal array: {report.summary()}")
        return arr

    def norms(self) -> dict[str, NormSpec]:
        out = {}
        for name, doc in self.objectives.items():
            if isinstance(doc, str):
                doc = {"preset": doc}
            if "path" in doc:
                out[name] = NormSpec.load(self.base_dir / doc["path"])
            else:
                out[name] = NormSpec.from_dict(doc)
        if not out:
            raise ObjectiveError("no objectives configured")
        return out

    def make_evaluator(self, space: DesignSpace):
        if not self.evaluator:
            raise EvaluatorError("no evaluator configured")
        return evaluator_from_dict(self.evaluator, space, self.base_dir, self.seed)

    @property
    def plan_path(self) -> Path:
        return self.output_dir / "plan.json"

    @property
    def records_dir(self) -> Path:
        return self.output_dir / "records"

    @property
    def confirm_dir(self) -> Path:
        return self.output_dir / "confirm"


def _load_plan(cfg: ProjectConfig) -> ExperimentPlan:
    if not cfg.plan_path.exists():
        raise DesignError(f"no plan at {cfg.plan_path}; run 'taguchi plan' first")
    doc = json.loads(cfg.plan_path.read_text())
    if not doc.get("runs"):
        raise DesignError(f"plan {cfg.plan_path} has no runs")
    return ExperimentPlan.from_dict(doc)


# --------------------------------------------------------------------------- #
# commands


def cmd_plan(cfg: ProjectConfig, out=None) -> int:
    out = out or sys.stdout
    space = cfg.space()
    arr = cfg.resolve_array(space)
    p = plan(space, arr)
    p.write(cfg.output_dir)
    n = grid_size(space)
    print(f"R={p.runs}, N={n}, saved={n - p.runs}", file=out)
    print(f"array {arr.name}; wrote {cfg.output_dir / 'plan.csv'} and {cfg.plan_path}", file=out)
    return EXIT_OK


def cmd_run(cfg: ProjectConfig, force: bool = False, out=None) -> int:
    out = out or sys.stdout
    p = _load_plan(cfg)
    ev = cfg.make_evaluator(p.space)
    done = {r.run_id: r for r in load_records(cfg.records_dir) if r.ok} if not force else {}
    todo = [row for row in p.rows if row.run_id not in done]
    fresh = []
    if todo:
        sub = ExperimentPlan(p.space, p.array, tuple(todo))
        if isinstance(ev, ReplayEvaluator):
            missing = [row.run_id for row in todo if row.run_id not in ev.rows]
            if missing:
                raise EvaluatorError(f"replay table has no rows for runs {missing}")
            fresh = [ev.evaluate_row(row, p.space) for row in todo]
        else:
            fresh = parallel_evaluate(ev, sub, cfg.max_in_flight)
        write_records(fresh, cfg.records_dir, p.space.names)
    records = sorted([*done.values(), *fresh], key=sort_key)
    (cfg.output_dir / "records.csv").write_text(records_to_csv(records, p.space.names))

    n_confirm = 0
    if isinstance(ev, ReplayEvaluator):
        confirms = ev.confirmations()
        if confirms:
            write_records(confirms, cfg.confirm_dir, p.space.names)
            n_confirm = len(confirms)

    failed = [r for r in records if not r.ok]
    print(
        f"{len(fresh)} runs evaluated, {len(done)} already complete, {len(failed)} failed"
        + (f", {n_confirm} confirmation records" if n_confirm else ""),
        file=out,
    )
    for r in failed:
        print(f"  run {r.run_id}: {r.error}", file=out)
    return EXIT_EVALUATOR if failed else EXIT_OK


def _analyze(cfg: ProjectConfig) -> tuple[ExperimentPlan, dict]:
    p = _load_plan(cfg)
    records = load_records(cfg.records_dir)
    try:
        analysis.ordered_records(p, records)
    except RecordError as exc:
        raise IncompleteRecords(str(exc)) from None
    reports = {
        name: analysis.analyze(p, records, norm, cfg.metric_sets, cfg.selection, name)
        for name, norm in cfg.norms().items()
    }
    return p, reports


def cmd_analyze(cfg: ProjectConfig, out=None) -> int:
    out = out or sys.stdout
    _, reports = _analyze(cfg)
    text = analysis.render_text(reports)
    (cfg.output_dir / "report.json").write_text(analysis.reports_to_json(reports))
    (cfg.output_dir / "report.txt").write_text(text)
    out.write(text)
    return EXIT_OK


def _confirmation_record(cfg, p, name, report, record_path) -> RunRecord:
    expected = report.optimal_assignment
    if record_path is not None:
        return RunRecord.load(record_path)
    stored = load_records(cfg.confirm_dir)
    tagged = [r for r in stored if r.run_id == name or r.metadata.get("confirm") == name]
    if tagged:
        return tagged[0]
    matching = [r for r in stored if r.assignment == expected]
    if matching:
        return matching[0]
    ev = cfg.make_evaluator(p.space)
    rec = ev.evaluate_assignment(f"confirm_{name}", expected, p.space)
    if not rec.ok:
        raise EvaluatorError(f"confirmation run for {name} failed: {rec.error}")
    write_records([rec], cfg.confirm_dir, p.space.names)
    return rec


def cmd_confirm(cfg: ProjectConfig, record_path=None, objective=None, out=None) -> int:
    out = out or sys.stdout
    if not (cfg.output_dir / "report.json").exists():
        raise DesignError(f"no analysis report in {cfg.output_dir}; run 'taguchi analyze' first")
    p, reports = _analyze(cfg)
    names = [objective] if objective else list(reports)
    for name in names:
        if name not in reports:
            raise ObjectiveError(f"unknown objective {name!r}; configured: {list(reports)}")
        rec = _confirmation_record(cfg, p, name, reports[name], record_path)
        analysis.confirm(reports[name], rec, p)
    chosen = {n: reports[n] for n in names}
    doc = {n: r.confirmation.to_dict() for n, r in chosen.items()}
    (cfg.output_dir / "confirm.json").write_text(json.dumps(doc, indent=2) + "\n")
    for n, r in chosen.items():
        c = r.confirmation
        for ms in c.j:
            if c.beats_all[ms]:
                verdict = "dominates all runs"
            elif c.ties_best[ms]:
                verdict = "ties the best run"
            else:
                verdict = "does not dominate"
            print(
                f"{n} {ms}: J(H*)={c.j[ms]:.4f} best run {c.best_run[ms][0]} J={c.best_run[ms][1]:.4f} -> {verdict}",
                file=out,
            )
    return EXIT_OK


def cmd_bench(args, out=None) -> int:
    out = out or sys.stdout
    if args.config:
        cfg = ProjectConfig.load(args.config, args)
        space = cfg.space()
        arr = cfg.resolve_array(space)
    else:
        if not args.space:
            raise DesignError("bench needs --space or --config")
        space = DesignSpace.load(args.space)
        arr = None
    norm = preset("single_error") if args.objective == "single_error" else preset("error_and_time", alpha_e=args.alpha_e)
    seed = env_seed(0) if args.seed is None else args.seed
    budgets = [int(b) for b in args.budgets.split(",")] if args.budgets else None
    results = bench.run_bench(
        space, args.function, norm, budgets, args.trials, seed, args.noise, args.selection or "train", arr, args.cap
    )
    summary = bench.summary_csv(bench.summarize(results))
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(summary)
    if args.trials_out:
        Path(args.trials_out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.trials_out).write_text(bench.trials_csv(results))
    out.write(summary)
    return EXIT_OK


def cmd_arrays_dump(args, out=None) -> int:
    out = out or sys.stdout
    cat = catalog()
    names = [args.name] if args.name else list(cat)
    for n in names:
        if n not in cat:
            raise DesignError(f"no catalog array {n!r}; available: {list(cat)}")
    if args.format == "json":
        out.write(json.dumps({n: cat[n].to_dict() for n in names}, indent=2) + "\n")
    else:
        for n in names:
            a = cat[n]
            print(f"{n}: {a.runs} runs, {a.columns} columns, {a.levels} levels", file=out)
            for row in a.matrix:
                print("  " + " ".join(map(str, row)), file=out)
    return EXIT_OK


# --------------------------------------------------------------------------- #


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="taguchi", description="Orthogonal-array hyperparameter search")
    sub = parser.add_subparsers(dest="command", required=True)

    def project(p):
        p.add_argument("--config", "-c", help="project config JSON")
        p.add_argument("--space", help="design-space JSON (overrides config)")
        p.add_argument("--array", help="'auto', catalog name or array JSON file")
        p.add_argument("--output-dir", "-o", help="output directory (overrides config)")
        p.add_argument("--selection", help="metric set used for level selection")
        p.add_argument("--seed", type=int, default=None, help="synthetic evaluator seed")
        p.add_argument("--max-in-flight", type=int, default=None)

    project(sub.add_parser("plan", help="generate the experiment plan"))
    p_run = sub.add_parser("run", help="evaluate plan rows")
    project(p_run)
    p_run.add_argument("--force", action="store_true", help="re-run completed runs")
    project(sub.add_parser("analyze", help="main-effects analysis"))
    p_conf = sub.add_parser("confirm", help="confirmation run at H*")
    project(p_conf)
    p_conf.add_argument("--record", help="run-record JSON for the confirmation run")
    p_conf.add_argument("--objective", help="confirm only this objective configuration")

    p_bench = sub.add_parser("bench", help="regret benchmark on a synthetic function")
    project(p_bench)
    p_bench.add_argument("--function", default="cnn_surrogate")
    p_bench.add_argument("--budgets", help="comma-separated random-search budgets (default: R)")
    p_bench.add_argument("--trials", type=int, default=100)
    p_bench.add_argument("--noise", type=float, default=0.1)
    p_bench.add_argument("--objective", choices=["single_error", "error_and_time"], default="single_error")
    p_bench.add_argument("--alpha-e", type=float, default=0.8)
    p_bench.add_argument("--cap", type=int, default=bench.DEFAULT_CAP, help="max grid size for exhaustive search")
    p_bench.add_argument("--out", help="summary CSV path")
    p_bench.add_argument("--trials-out", help="per-trial CSV path")

    p_arr = sub.add_parser("arrays", help="array catalog")
    arr_sub = p_arr.add_subparsers(dest="arrays_command", required=True)
    p_dump = arr_sub.add_parser("dump", help="print catalog arrays")
    p_dump.add_argument("--name")
    p_dump.add_argument("--format", choices=["text", "json"], default="text")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "arrays":
            return cmd_arrays_dump(args)
        if args.command == "bench":
            return cmd_bench(args)
        cfg = ProjectConfig.load(args.config, args)
        if args.command == "plan":
            return cmd_plan(cfg)
        if args.command == "run":
            return cmd_run(cfg, force=args.force)
        if args.command == "analyze":
            return cmd_analyze(cfg)
        if args.command == "confirm":
            return cmd_confirm(cfg, args.record, args.objective)
    except IncompleteRecords as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCOMPLETE
    except EvaluatorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EVALUATOR
    except (TaguchiError, OverflowError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
