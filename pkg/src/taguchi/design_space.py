"""Factors, level grids and the design space they span."""
from __future__ import annotations

import json
import math
import operator
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .errors import DesignError

# Grid counts feed int64 kernels; anything larger is refused.
MAX_GRID = 2**63 - 1

KINDS = ("numeric", "categorical")


@dataclass(frozen=True)
class Factor:
    """A named hyperparameter with an ordered, duplicate-free list of levels.

    Level values are kept exactly as supplied. Indices exposed to users are
    1-based, matching the usual orthogonal-array notation.
    """

    name: str
    levels: tuple
    kind: str = "numeric"

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        if not self.name or not isinstance(self.name, str):
            raise DesignError(f"factor name must be a non-empty string, got {self.name!r}")
        if self.kind not in KINDS:
            raise DesignError(f"factor {self.name!r}: kind must be one of {KINDS}, got {self.kind!r}")
        if not self.levels:
            raise DesignError(f"factor {self.name!r} has no levels")
        if len(set(self.levels)) != len(self.levels):
            raise DesignError(f"factor {self.name!r} has duplicate levels: {list(self.levels)}")
        if self.kind == "numeric":
            for v in self.levels:
                if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                    raise DesignError(f"factor {self.name!r}: numeric level {v!r} is not a finite number")

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def value(self, index: int):
        try:
            i = None if isinstance(index, bool) else operator.index(index)
        except TypeError:
            i = None
        if i is None or not 1 <= i <= self.n_levels:
            raise DesignError(
                f"factor {self.name!r}: level index {index!r} out of range 1..{self.n_levels}"
            )
        return self.levels[i - 1]

    def index(self, value) -> int:
        for i, v in enumerate(self.levels, start=1):
            if (type(v) is type(value) and v == value) or _same_number(v, value):
                return i
        raise DesignError(f"factor {self.name!r}: {value!r} is not one of its levels {list(self.levels)}")

    def to_dict(self) -> dict:
        return {"name": self.name, "kind": self.kind, "levels": list(self.levels)}


def _same_number(a, b) -> bool:
    numeric = (int, float)
    if isinstance(a, bool) or isinstance(b, bool):
        return False
    return isinstance(a, numeric) and isinstance(b, numeric) and a == b


@dataclass(frozen=True)
class DesignSpace:
    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise DesignError("design space needs at least one factor")
        names = [f.name for f in self.factors]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise DesignError(f"duplicate factor names: {dupes}")

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.factors]

    @property
    def n_factors(self) -> int:
        return len(self.factors)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(f.n_levels for f in self.factors)

    def factor(self, name: str) -> Factor:
        for f in self.factors:
            if f.name == name:
                return f
        raise DesignError(f"no factor named {name!r}")

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "DesignSpace":
        try:
            raw = doc["factors"]
        except (KeyError, TypeError):
            raise DesignError('design-space document must have a "factors" list') from None
        factors = []
        for item in raw:
            if "name" not in item or "levels" not in item:
                raise DesignError(f"factor entry needs name and levels: {item!r}")
            factors.append(Factor(item["name"], item["levels"], item.get("kind", "numeric")))
        return cls(factors)

    def to_dict(self) -> dict:
        return {"factors": [f.to_dict() for f in self.factors]}

    @classmethod
    def load(cls, path) -> "DesignSpace":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def grid_size(space: DesignSpace) -> int:
    """Number of points in the full factorial grid, the product of level counts."""
    n = 1
    for f in space.factors:
        n *= f.n_levels
        if n > MAX_GRID:
            raise OverflowError(
                f"grid size exceeds {MAX_GRID} at factor {f.name!r} "
                f"(running product {n})"
            )
    return n


def min_runs(space: DesignSpace) -> int:
    """Smallest run count that can estimate every main effect: 1 + sum(L_k - 1)."""
    return 1 + sum(f.n_levels - 1 for f in space.factors)


def realize(space: DesignSpace, level_indices: Sequence[int]) -> dict:
    """Map 1-based level indices to a ``{factor name: level value}`` assignment."""
    level_indices = list(level_indices)
    if len(level_indices) != space.n_factors:
        raise DesignError(
            f"expected {space.n_factors} level indices, got {len(level_indices)}"
        )
    return {f.name: f.value(i) for f, i in zip(space.factors, level_indices)}


def indices_of(space: DesignSpace, assignment: Mapping[str, Any]) -> tuple[int, ...]:
    """Inverse of :func:`realize`."""
    extra = set(assignment) - set(space.names)
    missing = [n for n in space.names if n not in assignment]
    if missing or extra:
        raise DesignError(f"assignment mismatch: missing {missing}, unknown {sorted(extra)}")
    return tuple(f.index(assignment[f.name]) for f in space.factors)


def space_from_levels(levels: Iterable[Iterable], names: Iterable[str] | None = None) -> DesignSpace:
    """Convenience constructor for numeric spaces, mostly for tests and benchmarks."""
    levels = [tuple(lv) for lv in levels]
    if names is None:
        names = [f"x{k + 1}" for k in range(len(levels))]
    return DesignSpace([Factor(n, lv) for n, lv in zip(names, levels)])
