"""Regret benchmark: Taguchi selection vs. random search vs. exhaustive grid.

Each trial draws a fresh noise stream (and, for seeded functions such as
``additive``, a fresh function). Strategies pick a point from noisy
observations; regret is the noise-free J at that point minus the
noise-free grid optimum.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from . import kernels
from .design_space import DesignSpace, grid_size
from .errors import DesignError
from .evaluator import SyntheticEvaluator
from .objective import NormSpec, aggregate_array
from .orthogonal_array import OrthogonalArray, auto_array

DEFAULT_CAP = 10**6


@dataclass
class TrialResult:
    trial: int
    strategy: str
    budget: int
    selected: tuple  # 1-based level indices
    true_j: float
    regret: float


def _trial_seed(seed: int, trial: int) -> int:
    return int(np.random.SeedSequence([seed, trial]).generate_state(1)[0])


def taguchi_select(evaluator: SyntheticEvaluator, array: OrthogonalArray, selection: str, norm: NormSpec) -> np.ndarray:
    """0-based level indices chosen from group means over the array's runs."""
    m0 = array.matrix - 1
    meas = evaluator.measure(m0, list(range(array.runs)))
    j = aggregate_array(norm, meas[selection])
    means = kernels.group_means(m0, j, array.levels)
    return np.argmin(means, axis=1)


def run_bench(
    space: DesignSpace,
    function: str,
    norm: NormSpec,
    budgets=None,
    trials: int = 100,
    seed: int = 0,
    noise: float = 0.1,
    selection: str = "train",
    array: OrthogonalArray | None = None,
    cap: int = DEFAULT_CAP,
) -> list[TrialResult]:
    n = grid_size(space)
    if n > cap:
        raise DesignError(f"exhaustive search refused: grid size {n} exceeds cap {cap}")
    array = array or auto_array(space)
    budgets = list(budgets) if budgets else [array.runs]
    for b in budgets:
        if not 1 <= b <= n:
            raise DesignError(f"random-search budget {b} outside 1..{n}")
    shape = np.array(space.shape)
    grid = kernels.grid_indices(shape)

    results = []
    for t in range(trials):
        ts = _trial_seed(seed, t)
        ev = SyntheticEvaluator(function, space, ts, noise)
        truth = aggregate_array(norm, ev.function.values(grid)[selection])
        best = float(truth.min())

        def record(strategy, budget, idx0):
            flat = int(np.ravel_multi_index(tuple(idx0), tuple(shape)))
            tj = float(truth[flat])
            results.append(TrialResult(t, strategy, budget, tuple(int(i) + 1 for i in idx0), tj, tj - best))

        record("taguchi", array.runs, taguchi_select(ev, array, selection, norm))

        for b in budgets:
            rng = np.random.default_rng([ts, 2, b])
            pts = rng.choice(n, size=b, replace=False)
            # separate noise stream so random-search draws never reuse taguchi's
            rev = SyntheticEvaluator(function, space, _trial_seed(ts, 1000 + b), noise, function_seed=ts)
            meas = rev.measure(grid[pts], list(range(b)))
            obs = aggregate_array(norm, meas[selection])
            record("random", b, grid[pts[int(np.argmin(obs))]])

        record("exhaustive", n, grid[int(np.argmin(truth))])
    return results


def summarize(results: list[TrialResult]) -> list[dict]:
    keys = list(dict.fromkeys((r.strategy, r.budget) for r in results))
    rows = []
    for strategy, budget in keys:
        reg = np.array([r.regret for r in results if r.strategy == strategy and r.budget == budget])
        rows.append(
            {
                "strategy": strategy,
                "budget": budget,
                "trials": len(reg),
                "mean_regret": float(reg.mean()),
                "median_regret": float(np.median(reg)),
                "max_regret": float(reg.max()),
                "zero_regret_fraction": float(np.mean(reg == 0.0)),
            }
        )
    return rows


def summary_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = ["strategy", "budget", "trials", "mean_regret", "median_regret", "max_regret", "zero_regret_fraction"]
    w.writerow(cols)
    for r in rows:
        w.writerow([f"{r[c]:.6g}" if isinstance(r[c], float) else r[c] for c in cols])
    return buf.getvalue()


def trials_csv(results: list[TrialResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["trial", "strategy", "budget", "selected", "true_J", "regret"])
    for r in results:
        w.writerow([r.trial, r.strategy, r.budget, " ".join(map(str, r.selected)), f"{r.true_j:.6g}", f"{r.regret:.6g}"])
    return buf.getvalue()
