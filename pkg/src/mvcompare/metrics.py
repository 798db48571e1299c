"""Performance measures computed from 2x2 confusion counts."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import UndefinedMeasure, ValidationError
from .ingest import ConfusionCounts, ExperimentTable

MEASURES = (
    "error",
    "tpr",
    "fpr",
    "precision",
    "recall",
    "fmeasure",
    "tp_raw",
    "fn_raw",
    "fp_raw",
    "tn_raw",
)
RAW_COUNTS = ("tp_raw", "fp_raw", "tn_raw", "fn_raw")


class MeasureSet(tuple):
    """Ordered, duplicate-free tuple of measure names."""

    def __new__(cls, measures: Sequence[str] | str):
        if isinstance(measures, str):
            measures = [m for m in measures.split(",") if m.strip()]
        names = tuple(m.strip().lower() for m in measures)
        if not names:
            raise ValidationError("at least one measure is required")
        unknown = [m for m in names if m not in MEASURES]
        if unknown:
            raise ValidationError(
                f"unknown measure(s) {', '.join(unknown)}; choose from {', '.join(MEASURES)}"
            )
        if len(set(names)) != len(names):
            raise ValidationError("duplicate measure in measure set")
        return super().__new__(cls, names)

    @property
    def p(self) -> int:
        return len(self)


@dataclass(frozen=True)
class PerformanceSample:
    """k x p matrix of measure vectors for one algorithm; row j is fold j."""

    algorithm: str
    vectors: np.ndarray
    measures: tuple[str, ...] = ()

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2:
            raise ValidationError("performance vectors must form a k x p matrix")
        if not np.all(np.isfinite(v)):
            raise ValidationError("performance vectors must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def k(self) -> int:
        return self.vectors.shape[0]

    @property
    def p(self) -> int:
        return self.vectors.shape[1]

    def column(self, i: int) -> np.ndarray:
        return self.vectors[:, i]


def _ratio(num, den, measure):
    if den == 0:
        raise UndefinedMeasure(f"{measure} is undefined: zero denominator")
    return num / den


def measure_from_counts(c: ConfusionCounts, m: str) -> float:
    if m == "error":
        return _ratio(c.fp + c.fn, c.total, m)
    if m in ("tpr", "recall"):
        return _ratio(c.tp, c.tp + c.fn, m)
    if m == "fpr":
        return _ratio(c.fp, c.fp + c.tn, m)
    if m == "precision":
        return _ratio(c.tp, c.tp + c.fp, m)
    if m == "fmeasure":
        prec = _ratio(c.tp, c.tp + c.fp, m)
        rec = _ratio(c.tp, c.tp + c.fn, m)
        return _ratio(2.0 * prec * rec, prec + rec, m)
    if m.endswith("_raw") and m in MEASURES:
        return float(getattr(c, m[:-4]))
    raise ValidationError(f"unknown measure {m!r}")


def performance_matrix(
    table: ExperimentTable, rep: int, algorithm: str, m: Sequence[str]
) -> PerformanceSample:
    measures = MeasureSet(m)
    if algorithm not in table.algorithms:
        raise ValidationError(f"unknown algorithm {algorithm!r}")
    if not 1 <= rep <= table.replications:
        raise ValidationError(f"replication {rep} out of range 1..{table.replications}")
    rows = []
    for j, counts in enumerate(table.fold_counts(algorithm, rep), start=1):
        row = []
        for name in measures:
            try:
                row.append(measure_from_counts(counts, name))
            except UndefinedMeasure as exc:
                raise UndefinedMeasure(
                    f"{algorithm}, rep {rep}, fold {j}: {exc}"
                ) from None
        rows.append(row)
    return PerformanceSample(algorithm, np.array(rows), tuple(measures))


def samples_for(
    table: ExperimentTable, measures: Sequence[str], rep: int = 1, algorithms=None
) -> list[PerformanceSample]:
    names = table.algorithms if algorithms is None else algorithms
    return [performance_matrix(table, rep, a, measures) for a in names]
