"""Scaling, weighting and norm aggregation of multi-objective measurements.

Every objective is minimized. A run's raw measurements ``p_j`` are mapped to
``alpha_j * s_j(p_j)`` and the performance index J is a vector norm of those
components.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import ObjectiveError

WEIGHT_SUM_TOL = 1e-12


# --------------------------------------------------------------------------- #
# scalers


@dataclass(frozen=True)
class Identity:
    kind = "identity"

    def apply(self, x):
        return x

    def check_domain(self, x):
        pass

    def to_dict(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class Log10Scaled:
    """``log10(x) / divisor``; the training-time scaler of the bi-objective preset."""

    divisor: float = 1000.0
    kind = "log10_scaled"

    def __post_init__(self):
        if not self.divisor > 0:
            raise ObjectiveError(f"log10_scaled divisor must be > 0, got {self.divisor!r}")

    def apply(self, x):
        return np.log10(x) / self.divisor if isinstance(x, np.ndarray) else math.log10(x) / self.divisor

    def check_domain(self, x):
        if np.any(np.asarray(x) <= 0):
            raise ObjectiveError(f"log10_scaled needs strictly positive input, got {x!r}")

    def to_dict(self):
        return {"kind": self.kind, "divisor": self.divisor}


@dataclass(frozen=True)
class Affine:
    a: float
    b: float = 0.0
    kind = "affine"

    def apply(self, x):
        return self.a * x + self.b

    def check_domain(self, x):
        pass

    def to_dict(self):
        return {"kind": self.kind, "a": self.a, "b": self.b}


@dataclass(frozen=True)
class MinMax:
    """Linear map of ``[lo, hi]`` onto ``[0, 1]``, clamped."""

    lo: float
    hi: float
    kind = "minmax"

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ObjectiveError(f"minmax needs lo < hi, got lo={self.lo!r} hi={self.hi!r}")

    def apply(self, x):
        u = (x - self.lo) / (self.hi - self.lo)
        if isinstance(x, np.ndarray):
            return np.clip(u, 0.0, 1.0)
        return min(1.0, max(0.0, u))

    def check_domain(self, x):
        pass

    def to_dict(self):
        return {"kind": self.kind, "lo": self.lo, "hi": self.hi}


_SCALERS = {
    "identity": Identity,
    "log10_scaled": Log10Scaled,
    "affine": Affine,
    "minmax": MinMax,
}


def scaler_from_dict(doc) -> object:
    if isinstance(doc, str):
        doc = {"kind": doc}
    doc = dict(doc)
    kind = doc.pop("kind", None) or doc.pop("variant", None)
    if kind not in _SCALERS:
        raise ObjectiveError(f"unknown scaler {kind!r}; expected one of {sorted(_SCALERS)}")
    try:
        return _SCALERS[kind](**doc)
    except TypeError as exc:
        raise ObjectiveError(f"bad parameters for scaler {kind!r}: {exc}") from None


def scale(spec, raw: float) -> float:
    """Apply a scaler to one raw measurement, enforcing domain and non-negativity."""
    raw = float(raw)
    if not math.isfinite(raw):
        raise ObjectiveError(f"measurement must be finite, got {raw!r}")
    spec.check_domain(raw)
    out = spec.apply(raw)
    if out < 0:
        raise ObjectiveError(
            f"{spec.kind} scaler produced negative value {out!r} from {raw!r}; "
            "scaled objectives must be non-negative"
        )
    return out


# --------------------------------------------------------------------------- #
# objective / norm specs


@dataclass(frozen=True)
class ObjectiveSpec:
    name: str
    scaler: object = Identity()
    weight: float = 1.0

    def __post_init__(self):
        if not 0 < self.weight <= 1:
            raise ObjectiveError(f"objective {self.name!r}: weight must be in (0, 1], got {self.weight!r}")

    def to_dict(self):
        return {"name": self.name, "scaler": self.scaler.to_dict(), "weight": self.weight}


@dataclass(frozen=True)
class NormSpec:
    """Ordered objectives plus the norm order ``p`` (``math.inf`` for the max norm)."""

    objectives: tuple
    p: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "objectives", tuple(self.objectives))
        if not self.objectives:
            raise ObjectiveError("a norm spec needs at least one objective")
        names = [o.name for o in self.objectives]
        if len(set(names)) != len(names):
            raise ObjectiveError(f"duplicate objective names: {names}")
        if not (self.p >= 1):
            raise ObjectiveError(f"norm order p must be >= 1, got {self.p!r}")
        total = math.fsum(o.weight for o in self.objectives)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ObjectiveError(f"objective weights must sum to 1, got {total!r}")

    @property
    def names(self) -> list[str]:
        return [o.name for o in self.objectives]

    @property
    def weights(self) -> np.ndarray:
        return np.array([o.weight for o in self.objectives])

    def to_dict(self):
        norm = {"p": "inf"} if math.isinf(self.p) else {"p": self.p}
        return {"objectives": [o.to_dict() for o in self.objectives], "norm": norm}

    @classmethod
    def from_dict(cls, doc) -> "NormSpec":
        if "preset" in doc:
            params = {k: v for k, v in doc.items() if k != "preset"}
            return preset(doc["preset"], **params)
        try:
            objs = [
                ObjectiveSpec(o["name"], scaler_from_dict(o.get("scaler", "identity")), float(o.get("weight", 1.0)))
                for o in doc["objectives"]
            ]
        except KeyError as exc:
            raise ObjectiveError(f"objective entry missing {exc.args[0]!r}") from None
        norm = doc.get("norm", {"p": 2})
        if norm in ("max", "max_norm", "inf") or (isinstance(norm, dict) and str(norm.get("p")) in ("inf", "max")):
            p = math.inf
        else:
            p = float(norm.get("p", 2) if isinstance(norm, dict) else norm)
        return cls(objs, p)

    @classmethod
    def load(cls, path) -> "NormSpec":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def weighted_norm(components, p: float = 2.0) -> float:
    """Norm of already-weighted, non-negative components (no weight checks)."""
    comps = [float(c) for c in components]
    if len(comps) == 1:
        return abs(comps[0])
    if p == 2:
        return math.hypot(*comps)
    if math.isinf(p):
        return max(abs(c) for c in comps)
    return math.fsum(abs(c) ** p for c in comps) ** (1.0 / p)


def components(norm: NormSpec, raw: Mapping[str, float]) -> list[float]:
    out = []
    for obj in norm.objectives:
        if obj.name not in raw:
            raise ObjectiveError(f"missing value for objective {obj.name!r}")
        out.append(obj.weight * scale(obj.scaler, raw[obj.name]))
    return out


def aggregate(norm: NormSpec, raw: Mapping[str, float]) -> float:
    """Performance index J = || (alpha_j * s_j(p_j))_j ||."""
    return weighted_norm(components(norm, raw), norm.p)


def aggregate_array(norm: NormSpec, raw: Mapping[str, np.ndarray]) -> np.ndarray:
    """Vectorized :func:`aggregate` over arrays of measurements."""
    cols = []
    for obj in norm.objectives:
        if obj.name not in raw:
            raise ObjectiveError(f"missing value for objective {obj.name!r}")
        x = np.asarray(raw[obj.name], dtype=np.float64)
        obj.scaler.check_domain(x)
        s = obj.scaler.apply(x)
        if np.any(s < 0):
            raise ObjectiveError(f"objective {obj.name!r}: scaled values must be non-negative")
        cols.append(obj.weight * s)
    comp = np.abs(np.stack(cols))
    if comp.shape[0] == 1:
        return comp[0]
    if norm.p == 2:
        return np.hypot.reduce(comp, axis=0)
    if math.isinf(norm.p):
        return comp.max(axis=0)
    return np.sum(comp**norm.p, axis=0) ** (1.0 / norm.p)


# --------------------------------------------------------------------------- #
# presets


def single_error() -> NormSpec:
    return NormSpec([ObjectiveSpec("error", Identity(), 1.0)], 2.0)


def error_and_time(alpha_e: float = 0.8, divisor: float = 1000.0) -> NormSpec:
    """Error rate plus log10 training time, combined by the weighted 2-norm."""
    if not 0 < alpha_e < 1:
        raise ObjectiveError(f"alpha_e must lie in (0, 1), got {alpha_e!r}")
    return NormSpec(
        [
            ObjectiveSpec("error", Identity(), alpha_e),
            ObjectiveSpec("time", Log10Scaled(divisor), 1.0 - alpha_e),
        ],
        2.0,
    )


PRESETS = {"single_error": single_error, "error_and_time": error_and_time}


def preset(name: str, **params) -> NormSpec:
    if name not in PRESETS:
        raise ObjectiveError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}")
    try:
        return PRESETS[name](**params)
    except TypeError as exc:
        raise ObjectiveError(f"bad parameters for preset {name!r}: {exc}") from None
