"""Strength-2 orthogonal arrays and experiment plans built from them."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .design_space import DesignSpace, realize
from .errors import DesignError
from .galois import field as gf_field
from .galois import prime_power


@dataclass(frozen=True, eq=False)
class OrthogonalArray:
    """R x K matrix of 1-based level indices over ``levels`` symbols."""

    matrix: np.ndarray
    levels: int
    name: str = "constructed"

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.int64, copy=True)
        if m.ndim != 2 or m.shape[0] == 0 or m.shape[1] == 0:
            raise DesignError(f"array matrix must be a non-empty 2-D table, got shape {m.shape}")
        if m.min() < 1 or m.max() > self.levels:
            raise DesignError(f"array {self.name!r}: entries must lie in 1..{self.levels}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def runs(self) -> int:
        return self.matrix.shape[0]

    @property
    def columns(self) -> int:
        return self.matrix.shape[1]

    def __eq__(self, other):
        if not isinstance(other, OrthogonalArray):
            return NotImplemented
        return (
            self.levels == other.levels
            and self.name == other.name
            and np.array_equal(self.matrix, other.matrix)
        )

    def __hash__(self):
        return hash((self.name, self.levels, self.matrix.tobytes()))

    def take_columns(self, k: int) -> "OrthogonalArray":
        if not 1 <= k <= self.columns:
            raise DesignError(f"array {self.name!r} has {self.columns} columns, cannot take {k}")
        if k == self.columns:
            return self
        return OrthogonalArray(self.matrix[:, :k], self.levels, self.name)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "runs": self.runs,
            "columns": self.columns,
            "levels": self.levels,
            "matrix": self.matrix.tolist(),
        }

    @classmethod
    def from_dict(cls, doc) -> "OrthogonalArray":
        try:
            return cls(doc["matrix"], int(doc["levels"]), doc.get("name", "file"))
        except KeyError as exc:
            raise DesignError(f"array document missing {exc.args[0]!r}") from None

    @classmethod
    def load(cls, path) -> "OrthogonalArray":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


# --------------------------------------------------------------------------- #
# catalog

# Rows in the order of the published L16(4^5) table; group memberships in the
# bundled CIFAR-10 fixture depend on this exact order.
_L16_4_5 = [
    [1, 4, 4, 4, 4],
    [2, 3, 4, 1, 2],
    [4, 1, 4, 2, 3],
    [1, 1, 1, 1, 1],
    [2, 4, 3, 2, 1],
    [2, 1, 2, 3, 4],
    [4, 3, 2, 4, 1],
    [4, 2, 3, 1, 4],
    [3, 2, 4, 3, 1],
    [3, 1, 3, 4, 2],
    [1, 3, 3, 3, 3],
    [4, 4, 1, 3, 2],
    [3, 3, 1, 2, 4],
    [1, 2, 2, 2, 2],
    [2, 2, 1, 4, 3],
    [3, 4, 2, 1, 3],
]

_L4_2_3 = [
    [1, 1, 1],
    [1, 2, 2],
    [2, 1, 2],
    [2, 2, 1],
]

_L8_2_7 = [
    [1, 1, 1, 1, 1, 1, 1],
    [1, 1, 1, 2, 2, 2, 2],
    [1, 2, 2, 1, 1, 2, 2],
    [1, 2, 2, 2, 2, 1, 1],
    [2, 1, 2, 1, 2, 1, 2],
    [2, 1, 2, 2, 1, 2, 1],
    [2, 2, 1, 1, 2, 2, 1],
    [2, 2, 1, 2, 1, 1, 2],
]

_L9_3_4 = [
    [1, 1, 1, 1],
    [1, 2, 2, 2],
    [1, 3, 3, 3],
    [2, 1, 2, 3],
    [2, 2, 3, 1],
    [2, 3, 1, 2],
    [3, 1, 3, 2],
    [3, 2, 1, 3],
    [3, 3, 2, 1],
]


def _build_catalog() -> dict[str, OrthogonalArray]:
    cat = {
        "L4(2^3)": OrthogonalArray(_L4_2_3, 2, "L4(2^3)"),
        "L8(2^7)": OrthogonalArray(_L8_2_7, 2, "L8(2^7)"),
        "L9(3^4)": OrthogonalArray(_L9_3_4, 3, "L9(3^4)"),
        "L16(4^5)": OrthogonalArray(_L16_4_5, 4, "L16(4^5)"),
    }
    cat["L25(5^6)"] = OrthogonalArray(gf_construct(5, 6).matrix, 5, "L25(5^6)")
    cat["L27(3^13)"] = OrthogonalArray(rao_hamming(3, 3).matrix, 3, "L27(3^13)")
    return cat


_CATALOG: dict[str, OrthogonalArray] | None = None


def catalog() -> dict[str, OrthogonalArray]:
    """Named standard arrays, smallest first within each level count."""
    global _CATALOG
    if _CATALOG is None:
        _CATALOG = _build_catalog()
    return dict(_CATALOG)


def single_column(levels: int) -> OrthogonalArray:
    """The trivial one-factor design: every level once."""
    if levels < 1:
        raise DesignError("levels must be >= 1")
    return OrthogonalArray(np.arange(1, levels + 1)[:, None], levels, f"L{levels}({levels}^1)")


def catalog_lookup(k: int, levels: int) -> OrthogonalArray:
    """Smallest catalog array with ``levels`` symbols and at least ``k`` columns.

    Extra columns are dropped from the right. A single factor gets the
    trivial L-run design.
    """
    if k < 1:
        raise DesignError(f"need at least one column, got {k}")
    if k == 1:
        return single_column(levels)
    fits = [a for a in catalog().values() if a.levels == levels and a.columns >= k]
    if not fits:
        hint = ""
        if prime_power(levels) and k <= levels + 1:
            hint = f"; gf_construct({levels}, {k}) can build one"
        raise DesignError(f"no catalog array with {levels} levels and >= {k} columns{hint}")
    best = min(fits, key=lambda a: (a.runs, a.columns))
    return best.take_columns(k)


def gf_construct(levels: int, k: int) -> OrthogonalArray:
    """Build OA(L^2, k, L, 2) over GF(L) for prime-power L and k <= L + 1.

    Row (a, b) gets ``a + c*b`` in column c for the first L field elements c,
    and ``b`` in the extra last column.
    """
    if prime_power(levels) is None:
        raise DesignError(f"gf_construct needs a prime-power level count, got {levels}")
    if not 1 <= k <= levels + 1:
        raise DesignError(
            f"gf_construct({levels}, {k}): a strength-2 array with L^2 runs "
            f"has at most L+1 = {levels + 1} columns"
        )
    gf = gf_field(levels)
    a, b = np.divmod(np.arange(levels * levels), levels)
    cols = [gf.add_table[a, gf.mul_table[c, b]] for c in range(levels)]
    cols.append(b)
    matrix = np.stack(cols, axis=1)[:, :k] + 1
    return OrthogonalArray(matrix, levels, "constructed")


def rao_hamming(levels: int, n: int) -> OrthogonalArray:
    """OA(q^n, (q^n - 1)/(q - 1), q, 2) over GF(q).

    Rows are all vectors x of GF(q)^n (first coordinate slowest); columns are
    the vectors c whose leading nonzero entry is 1, entry ``x . c``.
    """
    if prime_power(levels) is None:
        raise DesignError(f"rao_hamming needs a prime-power level count, got {levels}")
    if n < 1:
        raise DesignError("rao_hamming needs n >= 1")
    gf = gf_field(levels)
    xs = kernels.grid_indices([levels] * n)
    cs = [c for c in xs if np.any(c) and c[np.flatnonzero(c)[0]] == 1]
    # order columns by their highest nonzero coordinate, then lexicographically
    cs.sort(key=lambda c: (int(np.flatnonzero(c)[-1]), tuple(c[::-1])))
    cols = []
    for c in cs:
        acc = np.zeros(len(xs), dtype=np.int64)
        for i in range(n):
            acc = gf.add_table[acc, gf.mul_table[xs[:, i], c[i]]]
        cols.append(acc)
    return OrthogonalArray(np.stack(cols, axis=1) + 1, levels, "constructed")


# --------------------------------------------------------------------------- #
# validation


@dataclass
class ValidationReport:
    passed: bool
    runs: int
    columns: int
    levels: int
    column_counts: np.ndarray  # (K, L)
    pair_counts: dict  # (i, j) -> (L, L) histogram, i < j
    unbalanced_columns: list = field(default_factory=list)
    offending_pairs: list = field(default_factory=list)

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        msg = f"{status}: {self.runs} runs x {self.columns} columns over {self.levels} levels"
        if self.unbalanced_columns:
            msg += f"; unbalanced columns {[c + 1 for c in self.unbalanced_columns]}"
        if self.offending_pairs:
            msg += f"; non-orthogonal column pairs {[(i + 1, j + 1) for i, j in self.offending_pairs]}"
        return msg


def validate(array: OrthogonalArray) -> ValidationReport:
    """Check column balance and strength-2 pair balance with exact integer counts."""
    m0 = array.matrix - 1
    L, R, K = array.levels, array.runs, array.columns
    col_counts = kernels.column_counts(m0, L)
    pc = kernels.pair_counts(m0, L)

    unbalanced = []
    if R % L:
        unbalanced = list(range(K))
    else:
        unbalanced = [i for i in range(K) if not np.all(col_counts[i] == R // L)]

    pairs = {}
    offending = []
    flat = R // (L * L) if R % (L * L) == 0 else None
    for i in range(K):
        for j in range(i + 1, K):
            hist = pc[i, j]
            pairs[(i, j)] = hist
            if flat is None or not np.all(hist == flat):
                offending.append((i, j))
    return ValidationReport(
        passed=not unbalanced and not offending,
        runs=R,
        columns=K,
        levels=L,
        column_counts=col_counts,
        pair_counts=pairs,
        unbalanced_columns=unbalanced,
        offending_pairs=offending,
    )


# --------------------------------------------------------------------------- #
# plans


@dataclass(frozen=True)
class PlanRow:
    run_id: int
    indices: tuple  # 1-based level index per factor
    assignment: dict


@dataclass(frozen=True, eq=False)
class ExperimentPlan:
    space: DesignSpace
    array: OrthogonalArray
    rows: tuple

    @property
    def runs(self) -> int:
        return len(self.rows)

    @property
    def index_matrix(self) -> np.ndarray:
        return self.array.matrix

    def row(self, run_id: int) -> PlanRow:
        return self.rows[run_id]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["run_id", *self.space.names])
        for r in self.rows:
            w.writerow([r.run_id, *(r.assignment[n] for n in self.space.names)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "space": self.space.to_dict(),
            "array": self.array.to_dict(),
            "runs": [
                {"run_id": r.run_id, "indices": list(r.indices), "assignment": r.assignment}
                for r in self.rows
            ],
        }

    @classmethod
    def from_dict(cls, doc) -> "ExperimentPlan":
        return plan(DesignSpace.from_dict(doc["space"]), OrthogonalArray.from_dict(doc["array"]))

    def write(self, directory) -> tuple[Path, Path]:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        csv_path, json_path = d / "plan.csv", d / "plan.json"
        csv_path.write_text(self.to_csv())
        json_path.write_text(json.dumps(self.to_dict(), indent=2) + "\n")
        return csv_path, json_path

    @classmethod
    def load(cls, path) -> "ExperimentPlan":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def plan(space: DesignSpace, array: OrthogonalArray) -> ExperimentPlan:
    """Assign array columns to factors, in order, and realize every row."""
    if array.columns != space.n_factors:
        raise DesignError(
            f"array {array.name!r} has {array.columns} columns but the space has "
            f"{space.n_factors} factors"
        )
    for f in space.factors:
        if f.n_levels != array.levels:
            raise DesignError(
                f"factor {f.name!r} has {f.n_levels} levels but array {array.name!r} "
                f"uses {array.levels}; mixed-level designs are not supported"
            )
    rows = tuple(
        PlanRow(i, tuple(int(v) for v in idx), realize(space, [int(v) for v in idx]))
        for i, idx in enumerate(array.matrix)
    )
    return ExperimentPlan(space, array, rows)


def auto_array(space: DesignSpace) -> OrthogonalArray:
    """Catalog array for the space, falling back to the GF construction."""
    L = max(space.shape)
    K = space.n_factors
    try:
        return catalog_lookup(K, L)
    except DesignError as exc:
        if prime_power(L) and K <= L + 1:
            return gf_construct(L, K)
        raise DesignError(f"no array available for {K} factors at {L} levels: {exc}") from None
