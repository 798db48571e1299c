"""Post hoc analysis after an omnibus test.

Holm step-down correction, pairwise test grids, maximal cliques of
non-differing algorithms, underline orderings and discriminant ("learned")
performance measures from the eigenvectors of E^-1 H.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import MvCompareError, ValidationError
from .metrics import PerformanceSample
from .mvtests import TestOutcome, hotelling_paired, paired_t, scatter_matrices, _matrix
from .numlin import gen_eig_spd


def holm_correct(p_values: Sequence[float], alpha: float = 0.05) -> list[bool]:
    """Holm's step-down procedure; returns reject flags in input order."""
    if not 0.0 < alpha < 1.0 + 1e-15:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    ps = [float(p) for p in p_values]
    for p in ps:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p-value out of [0, 1]: {p}")
    m = len(ps)
    order = sorted(range(m), key=lambda i: ps[i])
    reject = [False] * m
    for rank, i in enumerate(order):
        if ps[i] <= alpha / (m - rank):
            reject[i] = True
        else:
            break
    return reject


def holm_adjust(p_values: Sequence[float]) -> list[float]:
    """Holm-adjusted p-values: adjusted <= alpha iff Holm rejects at alpha."""
    ps = [float(p) for p in p_values]
    m = len(ps)
    order = sorted(range(m), key=lambda i: ps[i])
    adjusted = [0.0] * m
    running = 0.0
    for rank, i in enumerate(order):
        running = max(running, min(1.0, (m - rank) * ps[i]))
        adjusted[i] = running
    return adjusted


@dataclass(frozen=True)
class PairwiseGrid:
    """Symmetric L x L grid of pairwise p-values and Holm decisions.

    Diagonal entries of ``raw_p`` are 1 and of ``corrected_reject`` False.
    """

    algorithms: tuple[str, ...]
    raw_p: np.ndarray
    corrected_reject: np.ndarray
    alpha: float
    mode: str = "multivariate"
    statistics: np.ndarray | None = field(default=None, repr=False)

    def index(self, name: str) -> int:
        return self.algorithms.index(name)

    def rejects(self, a: str, b: str) -> bool:
        return bool(self.corrected_reject[self.index(a), self.index(b)])

    def pairs(self):
        """Yield (name_a, name_b, raw p, statistic, reject) for every pair."""
        for i, j in combinations(range(len(self.algorithms)), 2):
            stat = None if self.statistics is None else float(self.statistics[i, j])
            yield (self.algorithms[i], self.algorithms[j], float(self.raw_p[i, j]),
                   stat, bool(self.corrected_reject[i, j]))


def grid_from_decisions(algorithms: Sequence[str], reject_pairs, alpha: float = 0.05) -> PairwiseGrid:
    """Build a grid directly from a set of rejecting name pairs (no tests run)."""
    names = tuple(algorithms)
    n = len(names)
    rej = np.zeros((n, n), dtype=bool)
    raw = np.ones((n, n))
    for a, b in reject_pairs:
        i, j = names.index(a), names.index(b)
        rej[i, j] = rej[j, i] = True
        raw[i, j] = raw[j, i] = 0.0
    return PairwiseGrid(names, raw, rej, alpha, mode="given")


def _names(samples, algorithms):
    if algorithms is not None:
        names = tuple(algorithms)
    else:
        names = tuple(
            s.algorithm if isinstance(s, PerformanceSample) else f"A{i + 1}"
            for i, s in enumerate(samples)
        )
    if len(names) != len(samples):
        raise ValidationError("one name per sample is required")
    if len(set(names)) != len(names):
        raise ValidationError("algorithm names must be unique")
    return names


def pairwise_grid(
    samples: Sequence, alpha: float = 0.05, mode: str = "multivariate", algorithms=None
) -> PairwiseGrid:
    """Run all L(L-1)/2 paired tests and Holm-correct them as one family."""
    if mode not in ("multivariate", "univariate"):
        raise ValueError(f"unknown mode {mode!r}")
    names = _names(samples, algorithms)
    n = len(names)
    if n < 2:
        raise ValidationError("pairwise comparison needs at least 2 algorithms")
    raw = np.ones((n, n))
    stats = np.zeros((n, n))
    pairs = list(combinations(range(n), 2))
    for i, j in pairs:
        try:
            if mode == "multivariate":
                outcome, _ = hotelling_paired(samples[i], samples[j], alpha)
            else:
                outcome = paired_t(samples[i], samples[j], alpha)
        except MvCompareError as exc:
            raise type(exc)(f"pair ({names[i]}, {names[j]}): {exc}") from None
        raw[i, j] = raw[j, i] = outcome.p_value
        stats[i, j] = stats[j, i] = outcome.statistic
    decisions = holm_correct([raw[i, j] for i, j in pairs], alpha)
    rej = np.zeros((n, n), dtype=bool)
    for (i, j), r in zip(pairs, decisions):
        rej[i, j] = rej[j, i] = r
    return PairwiseGrid(names, raw, rej, alpha, mode, stats)


@dataclass(frozen=True)
class CliqueReport:
    cliques: tuple[tuple[str, ...], ...]


def _bron_kerbosch(r: set, p: set, x: set, adj: dict, out: list):
    if not p and not x:
        out.append(r)
        return
    pivot = max(p | x, key=lambda u: (len(adj[u] & p), -u))
    for v in sorted(p - adj[pivot]):
        _bron_kerbosch(r | {v}, p & adj[v], x & adj[v], adj, out)
        p = p - {v}
        x = x | {v}


def find_cliques(grid: PairwiseGrid) -> CliqueReport:
    """Maximal sets of algorithms with no rejected pair among them.

    Members are sorted by name and cliques sorted lexicographically.
    """
    n = len(grid.algorithms)
    adj = {
        i: {j for j in range(n) if j != i and not grid.corrected_reject[i, j]}
        for i in range(n)
    }
    found: list[set] = []
    _bron_kerbosch(set(), set(range(n)), set(), adj, found)
    cliques = sorted(tuple(sorted(grid.algorithms[i] for i in c)) for c in found)
    return CliqueReport(tuple(cliques))


@dataclass(frozen=True)
class OrderingReport:
    """Algorithms sorted by mean with underline groups.

    ``underline_groups`` holds 0-based inclusive (start, end) positions into
    ``order``.
    """

    measure: str
    order: tuple[str, ...]
    means: tuple[float, ...]
    underline_groups: tuple[tuple[int, int], ...]


def underline_groups(order: Sequence[str], grid: PairwiseGrid) -> list[tuple[int, int]]:
    """Maximal contiguous runs (length >= 2) with no rejected pair inside."""
    n = len(order)
    idx = [grid.index(a) for a in order]

    def clean(i, j):
        return not any(grid.corrected_reject[idx[a], idx[j]] for a in range(i, j))

    groups = []
    prev_end = -1
    end = 0
    for start in range(n):
        end = max(end, start)
        while end + 1 < n and clean(start, end + 1):
            end += 1
        if end > start and end > prev_end:
            groups.append((start, end))
            prev_end = end
    return groups


def ordering(
    samples: Sequence, grid: PairwiseGrid, ascending: bool = True,
    algorithms=None, measure: str = "",
) -> OrderingReport:
    names = _names(samples, algorithms)
    means = [float(_matrix(s)[:, 0].mean()) for s in samples]
    keyed = sorted(range(len(names)), key=lambda i: means[i] if ascending else -means[i])
    order = tuple(names[i] for i in keyed)
    return OrderingReport(
        measure,
        order,
        tuple(means[i] for i in keyed),
        tuple(underline_groups(order, grid)),
    )


def posthoc_dimensions(a, b, alpha: float = 0.05, measures=None) -> list[TestOutcome]:
    """Per-dimension paired t tests with Holm correction across dimensions.

    ``p_value`` holds the Holm-adjusted p-value (so ``reject`` is the
    corrected decision); the uncorrected value is in ``extra["raw_p"]``.
    """
    x, y = _matrix(a), _matrix(b)
    if x.shape != y.shape:
        raise ValidationError("samples differ in shape")
    p = x.shape[1]
    if measures is None:
        measures = getattr(a, "measures", None) or [f"dim{i + 1}" for i in range(p)]
    raw = []
    for i in range(p):
        try:
            raw.append(paired_t(x[:, i], y[:, i], alpha))
        except MvCompareError as exc:
            raise type(exc)(f"dimension {measures[i]}: {exc}") from None
    adjusted = holm_adjust([o.p_value for o in raw])
    return [
        TestOutcome(o.test, o.statistic, o.dof, adj, o.alpha, adj <= o.alpha,
                    {**o.extra, "raw_p": o.p_value, "measure": measures[i]})
        for i, (o, adj) in enumerate(zip(raw, adjusted))
    ]


@dataclass(frozen=True)
class LearnedMeasures:
    """Discriminant directions (columns of E^-1 H eigenvectors) and projections."""

    measures: tuple[str, ...]
    directions: tuple[np.ndarray, ...]
    eigenvalues: tuple[float, ...]
    variance_explained: tuple[float, ...]
    projections: dict = field(repr=False)
    requested: int | None = None

    @property
    def n_components(self) -> int:
        return len(self.directions)


def extract_measures(
    samples: Sequence, max_components: int | None = None, algorithms=None, measures=None
) -> LearnedMeasures:
    names = _names(samples, algorithms)
    mats = [_matrix(s) for s in samples]
    if len(mats) < 2:
        raise ValidationError("need at least 2 algorithms")
    k, p = mats[0].shape
    if k < 2:
        raise ValidationError("need at least 2 folds")
    if measures is None:
        measures = getattr(samples[0], "measures", None) or [f"x{i + 1}" for i in range(p)]
    h, e = scatter_matrices(mats)
    limit = min(p, len(mats) - 1)
    if max_components is not None:
        limit = min(limit, int(max_components))
    eig = gen_eig_spd(h, e, limit)
    lams = tuple(float(v) for v in eig.eigenvalues)
    total = sum(lams)
    explained = tuple(v / total for v in lams) if total > 0 else ()
    dirs = tuple(eig.eigenvectors[:, i].copy() for i in range(eig.effective_rank))
    proj = {n: m @ eig.eigenvectors for n, m in zip(names, mats)}
    return LearnedMeasures(tuple(measures), dirs, lams, explained, proj, max_components)
