"""Synthetic cross-validation experiments and Monte Carlo studies.

Random numbers
--------------
Every (algorithm, replication, fold) cell draws from its own substream: a
Philox-4x64 counter-based generator (numpy's ``Philox``) keyed by
``SeedSequence([seed, algorithm_index, rep, fold])``. A cell's values
therefore depend only on the seed and its own indices, never on how many
draws other cells made or in what order they ran.

Normal deviates come from the Box-Muller transform applied to the
substream's uniforms; correlated (tpr, fpr) pairs use the 2x2 Cholesky
factor of the per-algorithm covariance.

Sampling modes
--------------
``rate``: per fold draw (tpr, fpr) from the truncated bivariate normal and
round ``tpr * positives`` and ``fpr * negatives`` to counts.

``count``: per fold draw the rates as in ``rate`` mode (a point mass when
the standard deviations are zero), then ``tp ~ Binomial(positives, tpr)``
and ``fp ~ Binomial(negatives, fpr)``.

Draws outside (0, 1) are redrawn up to 100 times and then clamped; the
number of redraws and clamps is reported in the generation metadata.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import MvCompareError, SpecError
from .ingest import ConfusionCounts, ExperimentTable
from .metrics import performance_matrix
from .mvtests import anova, hotelling_paired, manova_wilks, paired_t
from .posthoc import holm_correct

MAX_REDRAWS = 100
CLAMP_EPS = 1e-9
SEED_LIMIT = 2 ** 64


@dataclass(frozen=True)
class AlgorithmPopulation:
    name: str
    tpr: float
    fpr: float
    sd_tpr: float = 0.0
    sd_fpr: float = 0.0
    corr: float = 0.0

    def same_population(self, other: "AlgorithmPopulation") -> bool:
        return (self.tpr, self.fpr, self.sd_tpr, self.sd_fpr, self.corr) == (
            other.tpr, other.fpr, other.sd_tpr, other.sd_fpr, other.corr)


@dataclass(frozen=True)
class PopulationSpec:
    algorithms: tuple[AlgorithmPopulation, ...]
    folds: int = 10
    positives: int = 1000
    negatives: int = 1000
    mode: str = "rate"
    replications: int = 1

    def __post_init__(self):
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        if not self.algorithms:
            raise SpecError("spec needs at least one algorithm")
        names = [a.name for a in self.algorithms]
        if len(set(names)) != len(names) or not all(names):
            raise SpecError("algorithm names must be unique and nonempty")
        if self.mode not in ("rate", "count"):
            raise SpecError(f"mode must be 'rate' or 'count', got {self.mode!r}")
        for label, v, lo in (("folds", self.folds, 2), ("positives", self.positives, 1),
                             ("negatives", self.negatives, 1),
                             ("replications", self.replications, 1)):
            if isinstance(v, bool) or not isinstance(v, int) or v < lo:
                raise SpecError(f"{label} must be an integer >= {lo}, got {v!r}")
        for a in self.algorithms:
            for label, v in (("tpr", a.tpr), ("fpr", a.fpr)):
                if not 0.0 < v < 1.0:
                    raise SpecError(f"{a.name}: mean {label} must lie in (0, 1), got {v}")
            for label, v in (("sd_tpr", a.sd_tpr), ("sd_fpr", a.sd_fpr)):
                if not (math.isfinite(v) and v >= 0.0):
                    raise SpecError(f"{a.name}: {label} must be >= 0, got {v}")
            if not -1.0 <= a.corr <= 1.0:
                raise SpecError(f"{a.name}: corr must lie in [-1, 1], got {a.corr}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.algorithms)

    def with_replications(self, reps: int) -> "PopulationSpec":
        return PopulationSpec(self.algorithms, self.folds, self.positives,
                              self.negatives, self.mode, reps)

    @classmethod
    def from_dict(cls, d: dict) -> "PopulationSpec":
        if not isinstance(d, dict):
            raise SpecError("spec must be a JSON object")
        algs = []
        try:
            for a in d["algorithms"]:
                sd = a.get("sd", 0.0)
                if isinstance(sd, (list, tuple)):
                    if len(sd) != 2:
                        raise SpecError("sd must be a number or a [tpr, fpr] pair")
                    sd_tpr, sd_fpr = sd
                else:
                    sd_tpr = sd_fpr = sd
                algs.append(AlgorithmPopulation(
                    str(a["name"]), float(a["tpr"]), float(a["fpr"]),
                    float(a.get("sd_tpr", sd_tpr)), float(a.get("sd_fpr", sd_fpr)),
                    float(a.get("corr", 0.0)),
                ))
            return cls(
                tuple(algs),
                folds=d.get("folds", 10),
                positives=d.get("positives", 1000),
                negatives=d.get("negatives", 1000),
                mode=d.get("mode", "rate"),
                replications=d.get("replications", 1),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, SpecError):
                raise
            raise SpecError(f"invalid spec: {exc!r}") from None

    def to_dict(self) -> dict:
        return {
            "folds": self.folds,
            "positives": self.positives,
            "negatives": self.negatives,
            "mode": self.mode,
            "replications": self.replications,
            "algorithms": [
                {"name": a.name, "tpr": a.tpr, "fpr": a.fpr,
                 "sd": [a.sd_tpr, a.sd_fpr], "corr": a.corr}
                for a in self.algorithms
            ],
        }


def substream(seed: int, algorithm: int, rep: int, fold: int) -> np.random.Generator:
    if not 0 <= seed < SEED_LIMIT:
        raise SpecError(f"seed must be in [0, 2**64), got {seed}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, algorithm, rep, fold])))


def box_muller(rng: np.random.Generator) -> tuple[float, float]:
    u1 = 1.0 - rng.random()  # (0, 1]
    u2 = rng.random()
    r = math.sqrt(-2.0 * math.log(u1))
    return r * math.cos(2.0 * math.pi * u2), r * math.sin(2.0 * math.pi * u2)


def normal_sample(seed: int, n: int, p: int, stream: int = 0) -> np.ndarray:
    """n x p standard normal matrix from one Box-Muller substream."""
    rng = substream(seed, stream, 0, 0)
    m = (n * p + 1) // 2
    u1 = 1.0 - rng.random(m)
    u2 = rng.random(m)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])
    return z[: n * p].reshape(n, p)


def _draw_rates(pop: AlgorithmPopulation, rng, meta: dict) -> tuple[float, float]:
    if pop.sd_tpr == 0.0 and pop.sd_fpr == 0.0:
        return pop.tpr, pop.fpr
    c = math.sqrt(max(0.0, 1.0 - pop.corr ** 2))
    for attempt in range(MAX_REDRAWS + 1):
        z0, z1 = box_muller(rng)
        tpr = pop.tpr + pop.sd_tpr * z0
        fpr = pop.fpr + pop.sd_fpr * (pop.corr * z0 + c * z1)
        if 0.0 < tpr < 1.0 and 0.0 < fpr < 1.0:
            meta["redraws"] += attempt
            return tpr, fpr
    meta["redraws"] += MAX_REDRAWS
    meta["clamped"] += 1
    clamp = lambda v: min(1.0 - CLAMP_EPS, max(CLAMP_EPS, v))
    return clamp(tpr), clamp(fpr)


def _round(x: float) -> int:
    return int(math.floor(x + 0.5))


def generate(spec: PopulationSpec, seed: int) -> tuple[ExperimentTable, dict]:
    """Generate a table plus metadata (redraw and clamp counts)."""
    meta = {"redraws": 0, "clamped": 0}
    cells = {}
    P, N = spec.positives, spec.negatives
    for a, pop in enumerate(spec.algorithms):
        for r in range(1, spec.replications + 1):
            for f in range(1, spec.folds + 1):
                rng = substream(seed, a, r, f)
                tpr, fpr = _draw_rates(pop, rng, meta)
                if spec.mode == "rate":
                    tp, fp = _round(tpr * P), _round(fpr * N)
                else:
                    tp, fp = int(rng.binomial(P, tpr)), int(rng.binomial(N, fpr))
                cells[(pop.name, r, f)] = ConfusionCounts(tp, P - tp, fp, N - fp)
    table = ExperimentTable(spec.names, spec.replications, spec.folds, cells)
    return table, meta


def gen_experiment(spec: PopulationSpec, seed: int) -> ExperimentTable:
    return generate(spec, seed)[0]


@dataclass
class StudyResult:
    """Rejection counts per test over Monte Carlo replications."""

    study: str
    reps: int
    alpha: float
    seed: int
    rejections: dict = field(default_factory=dict)
    valid: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    generation: dict = field(default_factory=dict)
    crosstabs: dict = field(default_factory=dict)

    def rate(self, test: str) -> float:
        n = self.valid.get(test, 0)
        return self.rejections.get(test, 0) / n if n else float("nan")

    @property
    def rates(self) -> dict:
        return {t: self.rate(t) for t in self.rejections}

    def _record(self, test: str, fn):
        self.rejections.setdefault(test, 0)
        self.valid.setdefault(test, 0)
        self.errors.setdefault(test, 0)
        try:
            reject = fn()
        except MvCompareError:
            self.errors[test] += 1
            return None
        self.valid[test] += 1
        self.rejections[test] += int(reject)
        return reject

    def to_dict(self) -> dict:
        return {
            "study": self.study,
            "reps": self.reps,
            "alpha": self.alpha,
            "seed": self.seed,
            "tests": {
                t: {"rejections": self.rejections[t], "valid": self.valid[t],
                    "errors": self.errors[t],
                    "rate": self.rate(t) if self.valid[t] else None}
                for t in self.rejections
            },
            "generation": dict(self.generation),
            "crosstabs": {k: v.to_dict() for k, v in self.crosstabs.items()},
        }


def _check_reps(reps: int):
    if isinstance(reps, bool) or not isinstance(reps, int) or reps < 1:
        raise SpecError(f"reps must be a positive integer, got {reps!r}")


def run_calibration(spec: PopulationSpec, reps: int, alpha: float = 0.05, seed: int = 0) -> StudyResult:
    """Type-I error rates under a true null (all populations identical).

    Paired t on error and Hotelling on (tpr, fpr) compare the first two
    algorithms; ANOVA on error and MANOVA on (tpr, fpr) use all of them.
    """
    _check_reps(reps)
    if len(spec.algorithms) < 2:
        raise SpecError("calibration needs at least 2 algorithms")
    first = spec.algorithms[0]
    if not all(first.same_population(a) for a in spec.algorithms[1:]):
        raise SpecError("calibration requires identical populations for all algorithms")
    table, meta = generate(spec.with_replications(reps), seed)
    res = StudyResult("calibration", reps, alpha, seed, generation=meta)
    names = spec.names
    for r in range(1, reps + 1):
        err = [performance_matrix(table, r, n, ["error"]) for n in names]
        rates = [performance_matrix(table, r, n, ["tpr", "fpr"]) for n in names]
        res._record("paired_t_error", lambda: paired_t(err[0], err[1], alpha).reject)
        res._record("hotelling_tpr_fpr", lambda: hotelling_paired(rates[0], rates[1], alpha)[0].reject)
        res._record("anova_error", lambda: anova(err, alpha).reject)
        res._record("manova_tpr_fpr", lambda: manova_wilks(rates, alpha)[0].reject)
    return res


POWER_TESTS = (
    ("error_t", ("error",)),
    ("tpr_t", ("tpr",)),
    ("fpr_t", ("fpr",)),
    ("tpr_fpr_hotelling", ("tpr", "fpr")),
    ("fmeasure_t", ("fmeasure",)),
    ("precision_recall_hotelling", ("precision", "recall")),
)


def merge_pair(spec_a: PopulationSpec, spec_b: PopulationSpec) -> PopulationSpec:
    """Combine two single-population specs into one two-algorithm spec."""
    shared = ("folds", "positives", "negatives", "mode")
    for attr in shared:
        if getattr(spec_a, attr) != getattr(spec_b, attr):
            raise SpecError(f"specs disagree on {attr}")
    a, b = spec_a.algorithms[0], spec_b.algorithms[0]
    if a.name == b.name:
        b = AlgorithmPopulation(b.name + "_b", b.tpr, b.fpr, b.sd_tpr, b.sd_fpr, b.corr)
    return PopulationSpec((a, b), spec_a.folds, spec_a.positives, spec_a.negatives, spec_a.mode)


def run_power(spec: PopulationSpec, reps: int, alpha: float = 0.05, seed: int = 0) -> StudyResult:
    """Rejection rates of univariate and multivariate tests for two populations."""
    _check_reps(reps)
    if len(spec.algorithms) != 2:
        raise SpecError("power study needs exactly 2 algorithms")
    table, meta = generate(spec.with_replications(reps), seed)
    res = StudyResult("power", reps, alpha, seed, generation=meta)
    a, b = spec.names
    for r in range(1, reps + 1):
        for test, measures in POWER_TESTS:
            def decide(measures=measures):
                x = performance_matrix(table, r, a, measures)
                y = performance_matrix(table, r, b, measures)
                if len(measures) == 1:
                    return paired_t(x, y, alpha).reject
                return hotelling_paired(x, y, alpha)[0].reject
            res._record(test, decide)
    return res


def run_power_pair(spec_a: PopulationSpec, spec_b: PopulationSpec, reps: int,
                   alpha: float = 0.05, seed: int = 0) -> StudyResult:
    return run_power(merge_pair(spec_a, spec_b), reps, alpha, seed)


@dataclass(frozen=True)
class CrossTab:
    """2x2 table: rows univariate (do not reject, reject), columns multivariate."""

    counts: tuple[tuple[int, int], tuple[int, int]]

    @property
    def n(self) -> int:
        return sum(map(sum, self.counts))

    @property
    def percentages(self) -> tuple[tuple[float, float], tuple[float, float]]:
        n = self.n
        return tuple(tuple(100.0 * c / n for c in row) for row in self.counts)

    @property
    def row_totals(self) -> tuple[int, int]:
        return tuple(sum(row) for row in self.counts)

    @property
    def col_totals(self) -> tuple[int, int]:
        return tuple(self.counts[0][j] + self.counts[1][j] for j in range(2))

    def to_dict(self) -> dict:
        n = self.n
        return {
            "n": n,
            "counts": [list(r) for r in self.counts],
            "percentages": [list(r) for r in self.percentages],
            "row_totals": list(self.row_totals),
            "col_totals": list(self.col_totals),
            "row_percentages": [100.0 * t / n for t in self.row_totals],
            "col_percentages": [100.0 * t / n for t in self.col_totals],
        }

    def render(self, title: str = "") -> str:
        pct = self.percentages
        rows = [f"{'':16}{'Multivariate':>24}",
                f"{'Univariate':16}{'Do not reject':>14}{'Reject':>10}{'Total':>10}"]
        labels = ("Do not reject", "Reject")
        for i in range(2):
            rows.append(f"{labels[i]:16}{pct[i][0]:14.2f}{pct[i][1]:10.2f}"
                        f"{100.0 * self.row_totals[i] / self.n:10.2f}")
        cols = [100.0 * t / self.n for t in self.col_totals]
        rows.append(f"{'Total':16}{cols[0]:14.2f}{cols[1]:10.2f}{100.0:10.2f}")
        return "\n".join(([title] if title else []) + rows)


def crosstab_decisions(pairs: Sequence[tuple[bool, bool]]) -> CrossTab:
    """Tabulate (univariate reject?, multivariate reject?) decision pairs."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("no decisions to tabulate")
    counts = [[0, 0], [0, 0]]
    for uni, multi in pairs:
        counts[int(bool(uni))][int(bool(multi))] += 1
    return CrossTab(tuple(tuple(r) for r in counts))


CROSSTAB_STUDIES = (
    ("error_vs_tpr_fpr", ("error",), ("tpr", "fpr")),
    ("fmeasure_vs_precision_recall", ("fmeasure",), ("precision", "recall")),
)


def table_decisions(table: ExperimentTable, rep: int, uni: Sequence[str], multi: Sequence[str],
                    alpha: float = 0.05, correct: bool = False) -> list[tuple[bool, bool]]:
    """Univariate and multivariate decisions for every algorithm pair in one replication.

    With ``correct`` both families are Holm-corrected across the pairs.
    Pairs where either test fails are skipped.
    """
    pu, pm = [], []
    for a, b in combinations(table.algorithms, 2):
        try:
            ou = paired_t(performance_matrix(table, rep, a, uni),
                          performance_matrix(table, rep, b, uni), alpha)
            om, _ = hotelling_paired(performance_matrix(table, rep, a, multi),
                                     performance_matrix(table, rep, b, multi), alpha)
        except MvCompareError:
            continue
        pu.append(ou.p_value)
        pm.append(om.p_value)
    if correct and pu:
        return list(zip(holm_correct(pu, alpha), holm_correct(pm, alpha)))
    return [(u <= alpha, m <= alpha) for u, m in zip(pu, pm)]


def run_crosstab(spec: PopulationSpec, reps: int, alpha: float = 0.05, seed: int = 0) -> StudyResult:
    """Univariate vs multivariate decisions over all pairs and replications."""
    _check_reps(reps)
    if len(spec.algorithms) < 2:
        raise SpecError("crosstab study needs at least 2 algorithms")
    table, meta = generate(spec.with_replications(reps), seed)
    res = StudyResult("crosstab", reps, alpha, seed, generation=meta)
    for name, uni, multi in CROSSTAB_STUDIES:
        for correct in (False, True):
            decisions = []
            for r in range(1, reps + 1):
                decisions.extend(table_decisions(table, r, uni, multi, alpha, correct))
            key = f"{name}_{'holm' if correct else 'uncorrected'}"
            if decisions:
                res.crosstabs[key] = crosstab_decisions(decisions)
    return res
