import json
import shutil
import sys

import pytest

from taguchi.cli import main

from conftest import FIXTURES, SPACE_JSON


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def proj(tmp_path):
    """Copy of the CIFAR-10 fixture project with outputs under tmp_path."""
    for f in ("cifar10_space.json", "cifar10_table2.csv", "cifar10.json"):
        shutil.copy(FIXTURES / f, tmp_path / f)
    cfg = json.loads((tmp_path / "cifar10.json").read_text())
    cfg["output_dir"] = "out"
    (tmp_path / "cifar10.json").write_text(json.dumps(cfg))
    return tmp_path


def write_space(path, levels):
    doc = {"factors": [{"name": f"x{i + 1}", "levels": lv} for i, lv in enumerate(levels)]}
    path.write_text(json.dumps(doc))
    return path


def test_plan_counts(capsys, proj):
    code, out, _ = run(capsys, "plan", "-c", str(proj / "cifar10.json"))
    assert code == 0
    assert "R=16, N=1024, saved=1008" in out
    lines = (proj / "out" / "plan.csv").read_text().splitlines()
    assert lines[0] == "run_id,lr,epochs,sampling,backbone,batch"
    assert lines[1] == "0,0.01,150,1.0,110,256"
    assert len(lines) == 17


@pytest.mark.parametrize(
    "levels,expect",
    [([[1, 2, 3]], "R=3, N=3, saved=0"), ([[1, 2, 3]] * 4, "R=9, N=81, saved=72"), ([[0, 1]] * 3, "R=4, N=8, saved=4")],
)
def test_plan_other_shapes(capsys, tmp_path, levels, expect):
    space = write_space(tmp_path / "s.json", levels)
    code, out, _ = run(capsys, "plan", "--space", str(space), "-o", str(tmp_path / "o"))
    assert code == 0 and expect in out


def test_plan_validation_errors(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"factors": [{"name": "a", "levels": [1, 1]}]}))
    assert run(capsys, "plan", "--space", str(bad), "-o", str(tmp_path))[0] == 2
    assert run(capsys, "plan", "--space", str(tmp_path / "missing.json"))[0] == 2
    uneven = write_space(tmp_path / "u.json", [[1, 2], [1, 2, 3]])
    code, _, err = run(capsys, "plan", "--space", str(uneven), "-o", str(tmp_path))
    assert code == 2 and "error:" in err


def test_full_pipeline(capsys, proj):
    cfg = str(proj / "cifar10.json")
    assert run(capsys, "plan", "-c", cfg)[0] == 0
    code, out, _ = run(capsys, "run", "-c", cfg)
    assert code == 0 and "16 runs evaluated" in out and "2 confirmation records" in out
    code, out, _ = run(capsys, "run", "-c", cfg)
    assert "0 runs evaluated, 16 already complete" in out
    code, out, _ = run(capsys, "run", "-c", cfg, "--force")
    assert "16 runs evaluated" in out
    code, out, _ = run(capsys, "analyze", "-c", cfg)
    assert code == 0
    assert "lr=0.1, epochs=150, sampling=1.0, backbone=110, batch=64" in out
    report = json.loads((proj / "out" / "report.json").read_text())
    assert set(report["objectives"]) == {"obj1", "obj2"}
    code, out, _ = run(capsys, "confirm", "-c", cfg)
    assert code == 0
    assert out.count("dominates all runs") == 4
    doc = json.loads((proj / "out" / "confirm.json").read_text())
    assert all(m["beats_all_runs"] for m in doc["obj1"]["metric_sets"].values())


def test_outputs_byte_identical(capsys, proj, tmp_path):
    cfg = str(proj / "cifar10.json")
    snaps = []
    for _ in range(2):
        shutil.rmtree(proj / "out", ignore_errors=True)
        for cmd in ("plan", "run", "analyze", "confirm"):
            assert run(capsys, cmd, "-c", cfg)[0] == 0
        snaps.append({p.relative_to(proj / "out"): p.read_bytes() for p in sorted((proj / "out").rglob("*")) if p.is_file()})
    assert snaps[0] == snaps[1]


def test_confirm_wrong_record(capsys, proj, tmp_path):
    cfg = str(proj / "cifar10.json")
    for cmd in ("plan", "run", "analyze"):
        run(capsys, cmd, "-c", cfg)
    rec = json.loads((proj / "out" / "confirm" / "obj1.json").read_text())
    rec["assignment"]["batch"] = 256
    p = tmp_path / "wrong.json"
    p.write_text(json.dumps(rec))
    code, _, err = run(capsys, "confirm", "-c", cfg, "--record", str(p), "--objective", "obj1")
    assert code == 2 and "batch" in err


def test_confirm_before_analyze(capsys, proj):
    cfg = str(proj / "cifar10.json")
    run(capsys, "plan", "-c", cfg)
    assert run(capsys, "confirm", "-c", cfg)[0] == 2


def test_incomplete_records(capsys, proj):
    cfg = str(proj / "cifar10.json")
    run(capsys, "plan", "-c", cfg)
    run(capsys, "run", "-c", cfg)
    (proj / "out" / "records" / "5.json").unlink()
    code, _, err = run(capsys, "analyze", "-c", cfg)
    assert code == 4 and "5" in err


def test_evaluator_failure_exit(capsys, tmp_path):
    write_space(tmp_path / "s.json", [[1, 2], [3, 4], [5, 6]])
    script = tmp_path / "flaky.py"
    script.write_text(
        "import json, sys\n"
        "a, rid = float(sys.argv[1]), sys.argv[2]\n"
        "if rid == '2': sys.exit(1)\n"
        "json.dump({'train': {'error': a}}, open(rid + '.json', 'w'))\n"
    )
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "space": "s.json",
        "objectives": {"obj1": "single_error"},
        "metric_sets": ["train"],
        "evaluator": {"kind": "subprocess", "command": f"{sys.executable} {script} {{x1}} {{run_id}}", "workdir": "work"},
        "output_dir": "out",
    }))
    run(capsys, "plan", "-c", str(cfg))
    code, out, _ = run(capsys, "run", "-c", str(cfg), "--max-in-flight", "2")
    assert code == 3 and "run 2" in out
    assert run(capsys, "analyze", "-c", str(cfg))[0] == 4


def test_synthetic_project(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "space": str(SPACE_JSON),
        "evaluator": {"kind": "synthetic", "function": "cnn_surrogate", "noise": 0.0},
        "output_dir": "out",
    }))
    for cmd in ("plan", "run", "analyze", "confirm"):
        code, out, err = run(capsys, cmd, "-c", str(cfg))
        assert code == 0, (cmd, err)
    assert (tmp_path / "out" / "confirm" / "confirm_obj1.json").exists()


def test_arrays_dump(capsys):
    code, out, _ = run(capsys, "arrays", "dump", "--name", "L16(4^5)")
    assert code == 0
    assert out.splitlines()[0] == "L16(4^5): 16 runs, 5 columns, 4 levels"
    assert out.splitlines()[1].split() == ["1", "4", "4", "4", "4"]
    code, out, _ = run(capsys, "arrays", "dump", "--format", "json")
    assert "L9(3^4)" in json.loads(out)
    assert run(capsys, "arrays", "dump", "--name", "L99")[0] == 2


def test_bench_cli(capsys, tmp_path):
    out_csv, trials_csv = tmp_path / "b" / "summary.csv", tmp_path / "b" / "trials.csv"
    code, out, _ = run(capsys, "bench", "--space", str(SPACE_JSON), "--trials", "5", "--budgets", "16,64",
                       "--out", str(out_csv), "--trials-out", str(trials_csv), "--seed", "1")
    assert code == 0
    lines = out_csv.read_text().splitlines()
    assert lines[0].startswith("strategy,budget,trials,mean_regret")
    assert [l.split(",")[:2] for l in lines[1:]] == [["taguchi", "16"], ["random", "16"], ["random", "64"], ["exhaustive", "1024"]]
    assert len(trials_csv.read_text().splitlines()) == 1 + 5 * 4
    assert out == out_csv.read_text()
    assert run(capsys, "bench", "--space", str(SPACE_JSON), "--cap", "100", "--trials", "1")[0] == 2
