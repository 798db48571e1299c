"""Parsing and validation of cross-validated confusion-matrix results.

Two input formats are accepted.

CSV, header ``algorithm,rep,fold,tp,fn,fp,tn`` (the ``rep`` column may be
omitted, every row then belongs to replication 1)::

    algorithm,rep,fold,tp,fn,fp,tn
    svm2,1,3,90,10,20,80

JSON::

    {"folds": 10, "reps": 1,
     "results": [{"algorithm": "svm2", "rep": 1, "fold": 3,
                  "tp": 90, "fn": 10, "fp": 20, "tn": 80}, ...]}

Fold and replication labels are remapped to contiguous 1-based indices in
order of first appearance.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import ParseError, ValidationError

COUNT_FIELDS = ("tp", "fn", "fp", "tn")
CSV_HEADER = ("algorithm", "rep", "fold") + COUNT_FIELDS
CSV_HEADER_NOREP = ("algorithm", "fold") + COUNT_FIELDS


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fn: int
    fp: int
    tn: int

    def __post_init__(self):
        for name in COUNT_FIELDS:
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int):
                raise ValidationError(f"{name} must be an integer, got {v!r}")
            if v < 0:
                raise ValidationError(f"{name} must be nonnegative, got {v}")
        if self.total < 1:
            raise ValidationError("confusion matrix is empty (tp+fn+fp+tn = 0)")

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fn": self.fn, "fp": self.fp, "tn": self.tn}


@dataclass(frozen=True)
class ExperimentTable:
    """Confusion counts on an (algorithm, replication, fold) grid.

    Replication and fold indices are 1-based. ``cells`` is keyed by
    ``(algorithm, rep, fold)``.
    """

    algorithms: tuple[str, ...]
    replications: int
    folds: int
    cells: Mapping[tuple[str, int, int], ConfusionCounts] = field(repr=False)

    def cell(self, algorithm: str, rep: int, fold: int) -> ConfusionCounts:
        try:
            return self.cells[(algorithm, rep, fold)]
        except KeyError:
            raise ValidationError(
                f"no cell for algorithm {algorithm!r}, rep {rep}, fold {fold}"
            ) from None

    def fold_counts(self, algorithm: str, rep: int = 1) -> list[ConfusionCounts]:
        return [self.cell(algorithm, rep, j) for j in range(1, self.folds + 1)]

    def subset(self, algorithms: Iterable[str]) -> "ExperimentTable":
        names = tuple(algorithms)
        validate_table(self, names)
        cells = {key: c for key, c in self.cells.items() if key[0] in names}
        return ExperimentTable(names, self.replications, self.folds, cells)


def _parse_int(text, what, line):
    if isinstance(text, bool):
        raise ParseError(f"{what} must be an integer, got {text!r}", line)
    if isinstance(text, int):
        return text
    if isinstance(text, str):
        s = text.strip()
        try:
            return int(s)
        except ValueError:
            pass
    raise ParseError(f"{what} must be an integer, got {text!r}", line)


class _Builder:
    """Accumulates records, remaps labels and detects duplicates."""

    def __init__(self):
        self.algorithms: list[str] = []
        self.rep_index: dict[int, int] = {}
        self.fold_index: dict[int, int] = {}
        self.cells: dict[tuple[str, int, int], ConfusionCounts] = {}
        self.origin: dict[tuple[str, int, int], int] = {}

    def add(self, algorithm, rep, fold, counts, line):
        if not isinstance(algorithm, str) or not algorithm.strip():
            raise ParseError("algorithm name must be a nonempty string", line)
        algorithm = algorithm.strip()
        values = {}
        for name, raw in zip(COUNT_FIELDS, counts):
            v = _parse_int(raw, name, line)
            if v < 0:
                raise ParseError(f"{name} must be nonnegative, got {v}", line)
            values[name] = v
        if sum(values.values()) < 1:
            raise ParseError("confusion matrix is empty (tp+fn+fp+tn = 0)", line)
        rep = _parse_int(rep, "rep", line)
        fold = _parse_int(fold, "fold", line)
        if algorithm not in self.algorithms:
            self.algorithms.append(algorithm)
        r = self.rep_index.setdefault(rep, len(self.rep_index) + 1)
        f = self.fold_index.setdefault(fold, len(self.fold_index) + 1)
        key = (algorithm, r, f)
        if key in self.cells:
            raise ParseError(
                f"duplicate cell ({algorithm}, rep {rep}, fold {fold}); "
                f"first defined at line {self.origin[key]}",
                line,
            )
        self.cells[key] = ConfusionCounts(**values)
        self.origin[key] = line

    def build(self, declared_folds=None, declared_reps=None) -> ExperimentTable:
        if not self.cells:
            raise ParseError("no data rows")
        k, reps = len(self.fold_index), len(self.rep_index)
        if declared_folds is not None and declared_folds != k:
            raise ParseError(f"declared folds={declared_folds} but data has {k} folds")
        if declared_reps is not None and declared_reps != reps:
            raise ParseError(f"declared reps={declared_reps} but data has {reps} reps")
        fold_label = {v: lab for lab, v in self.fold_index.items()}
        rep_label = {v: lab for lab, v in self.rep_index.items()}
        for alg in self.algorithms:
            for r in range(1, reps + 1):
                for f in range(1, k + 1):
                    if (alg, r, f) not in self.cells:
                        raise ParseError(
                            f"missing cell ({alg}, rep {rep_label[r]}, fold {fold_label[f]})"
                        )
        table = ExperimentTable(tuple(self.algorithms), reps, k, dict(self.cells))
        validate_table(table, ())
        return table


def _decode(data) -> str:
    if isinstance(data, str):
        return data
    try:
        return bytes(data).decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise ParseError(f"input is not valid UTF-8: {exc}") from None


def _parse_csv(text: str) -> ExperimentTable:
    reader = csv.reader(io.StringIO(text, newline=""))
    header = None
    builder = _Builder()
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        cells = [c.strip() for c in row]
        if header is None:
            header = tuple(cells)
            if header not in (CSV_HEADER, CSV_HEADER_NOREP):
                raise ParseError(
                    f"bad header {','.join(header)!r}; expected {','.join(CSV_HEADER)!r}",
                    line,
                )
            continue
        if len(cells) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(cells)}", line)
        if len(header) == len(CSV_HEADER):
            alg, rep, fold, *counts = cells
        else:
            alg, fold, *counts = cells
            rep = 1
        builder.add(alg, rep, fold, counts, line)
    if header is None:
        raise ParseError("empty input: missing header")
    return builder.build()


def _parse_json(text: str) -> ExperimentTable:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    if not isinstance(doc, dict) or not isinstance(doc.get("results"), list):
        raise ParseError('JSON input must be an object with a "results" list')
    builder = _Builder()
    for pos, rec in enumerate(doc["results"], start=1):
        if not isinstance(rec, dict):
            raise ParseError("result entry must be an object", pos)
        missing = [f for f in ("algorithm", "fold") + COUNT_FIELDS if f not in rec]
        if missing:
            raise ParseError(f"result entry lacks {', '.join(missing)}", pos)
        builder.add(
            rec["algorithm"],
            rec.get("rep", 1),
            rec["fold"],
            [rec[f] for f in COUNT_FIELDS],
            pos,
        )
    folds = doc.get("folds")
    reps = doc.get("reps")
    return builder.build(
        None if folds is None else _parse_int(folds, "folds", None),
        None if reps is None else _parse_int(reps, "reps", None),
    )


def parse_table(data, format: str = "csv") -> ExperimentTable:
    """Parse ``data`` (bytes or str) in ``format`` ("csv" or "json")."""
    text = _decode(data)
    if format == "csv":
        return _parse_csv(text)
    if format == "json":
        return _parse_json(text)
    raise ValueError(f"unknown format {format!r}")


def read_table(path) -> ExperimentTable:
    """Read a table from disk; the format is taken from the file extension."""
    path = str(path)
    fmt = "json" if path.lower().endswith(".json") else "csv"
    with open(path, "rb") as fh:
        return parse_table(fh.read(), fmt)


def validate_table(table: ExperimentTable, required: Iterable[str] = ()) -> None:
    names = table.algorithms
    if any(not isinstance(a, str) or not a for a in names):
        raise ValidationError("algorithm names must be nonempty strings")
    if len(set(names)) != len(names):
        raise ValidationError("algorithm names must be unique")
    missing = [a for a in required if a not in names]
    if missing:
        raise ValidationError(f"missing algorithm(s): {', '.join(missing)}")
    if table.replications < 1:
        raise ValidationError("at least one replication is required")
    if table.folds < 2:
        raise ValidationError(f"at least 2 folds are required, got {table.folds}")
    for alg in names:
        for r in range(1, table.replications + 1):
            for f in range(1, table.folds + 1):
                if (alg, r, f) not in table.cells:
                    raise ValidationError(
                        f"ragged grid: {alg} lacks rep {r} fold {f}"
                    )
    expected = len(names) * table.replications * table.folds
    if len(table.cells) != expected:
        raise ValidationError(
            f"table has {len(table.cells)} cells, expected {expected}"
        )


def to_csv(table: ExperimentTable) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for alg in table.algorithms:
        for r in range(1, table.replications + 1):
            for f in range(1, table.folds + 1):
                c = table.cells[(alg, r, f)]
                writer.writerow([alg, r, f, c.tp, c.fn, c.fp, c.tn])
    return out.getvalue()


def to_json(table: ExperimentTable) -> str:
    results = []
    for alg in table.algorithms:
        for r in range(1, table.replications + 1):
            for f in range(1, table.folds + 1):
                rec = {"algorithm": alg, "rep": r, "fold": f}
                rec.update(table.cells[(alg, r, f)].as_dict())
                results.append(rec)
    doc = {"folds": table.folds, "reps": table.replications, "results": results}
    return json.dumps(doc, indent=1)
