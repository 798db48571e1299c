"""Paired t, one-way ANOVA, paired Hotelling T^2, MANOVA (Wilks) and Mardia tests.

All tests take plain arrays or :class:`~mvcompare.metrics.PerformanceSample`
objects and return a :class:`TestOutcome`. ``reject`` is ``p_value <= alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import dist
from .errors import DegenerateVariance, SingularCovariance, SingularScatter, ValidationError
from .metrics import PerformanceSample
from .numlin import cholesky, determinant, forward_substitute, mean_and_covariance, solve_spd

# Relative size under which a variance is treated as exactly zero.
ZERO_VAR_TOL = 1e-12


@dataclass(frozen=True)
class TestOutcome:
    test: str
    statistic: float
    dof: tuple[int, ...]
    p_value: float
    alpha: float
    reject: bool
    extra: dict = field(default_factory=dict)

    __test__ = False  # keep pytest from collecting this class

    def to_dict(self) -> dict:
        return {
            "test": self.test,
            "statistic": self.statistic,
            "dof": list(self.dof),
            "p_value": self.p_value,
            "alpha": self.alpha,
            "reject": self.reject,
            "extra": dict(self.extra),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TestOutcome":
        return cls(d["test"], d["statistic"], tuple(d["dof"]), d["p_value"],
                   d["alpha"], d["reject"], dict(d.get("extra", {})))


@dataclass(frozen=True)
class PairedDifferenceSummary:
    """Mean difference, its covariance and the max-difference direction."""

    k: int
    mean_diff: np.ndarray
    cov: np.ndarray
    direction: np.ndarray


def _outcome(test, statistic, dof, p, alpha, **extra) -> TestOutcome:
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    p = float(p)
    return TestOutcome(test, float(statistic), tuple(int(d) for d in dof), p,
                       float(alpha), bool(p <= alpha), extra)


def _matrix(x) -> np.ndarray:
    if isinstance(x, PerformanceSample):
        return np.asarray(x.vectors, dtype=float)
    m = np.asarray(x, dtype=float)
    if m.ndim == 1:
        m = m[:, None]
    return m


def _column(x) -> np.ndarray:
    m = _matrix(x)
    if m.shape[1] != 1:
        raise ValidationError(f"expected a single column, got {m.shape[1]}")
    return m[:, 0]


def paired_t(a, b, alpha: float = 0.05) -> TestOutcome:
    """Two-sided paired t test on one measure."""
    a, b = _column(a), _column(b)
    if a.shape != b.shape:
        raise ValidationError("paired samples must have the same length")
    k = a.shape[0]
    if k < 2:
        raise ValidationError("paired t test needs at least 2 pairs")
    d = a - b
    mean = d.mean()
    sd = d.std(ddof=1)
    scale = max(np.abs(a).max(), np.abs(b).max(), np.abs(d).max())
    if sd <= ZERO_VAR_TOL * scale:
        if np.all(d == 0):
            return _outcome("paired_t", 0.0, [k - 1], 1.0, alpha, mean_diff=0.0)
        raise DegenerateVariance(
            "paired differences have zero variance but nonzero mean"
        )
    t = mean / (sd / math.sqrt(k))
    return _outcome("paired_t", t, [k - 1], dist.t_two_sided_p(t, k - 1), alpha,
                    mean_diff=float(mean))


def hotelling_paired(a, b, alpha: float = 0.05) -> tuple[TestOutcome, PairedDifferenceSummary]:
    """Paired Hotelling T^2 on p-dimensional performance vectors.

    T^2 = k dbar' S_d^-1 dbar is referred to F_{p, k-p} after scaling by
    (k - p) / ((k - 1) p). The summary carries w = S_d^-1 dbar.
    """
    x, y = _matrix(a), _matrix(b)
    if x.shape != y.shape:
        raise ValidationError(
            f"paired samples differ in shape: {x.shape} vs {y.shape}"
        )
    k, p = x.shape
    if k - 1 < p:
        raise SingularCovariance(
            f"k-1 must be >= p for Hotelling's test (k={k}, p={p})", pivot=None
        )
    d = x - y
    dbar, s_d = mean_and_covariance(d, ddof=1)
    try:
        w = solve_spd(s_d, dbar)
    except SingularCovariance as exc:
        raise SingularCovariance(
            f"covariance of paired differences is singular (pivot {exc.pivot}); "
            f"differences are collinear or constant, and k-1 must be >= p",
            pivot=exc.pivot,
        ) from None
    t2 = k * float(dbar @ w)
    f = (k - p) / ((k - 1) * p) * t2
    pval = dist.f_upper_p(f, p, k - p)
    outcome = _outcome("hotelling_t2", t2, [p, k - 1], pval, alpha, f=f, f_dof=[p, k - p])
    return outcome, PairedDifferenceSummary(k, dbar, s_d, w)


def _groups(samples: Sequence) -> list[np.ndarray]:
    groups = [_matrix(s) for s in samples]
    if len(groups) < 2:
        raise ValidationError("need at least 2 groups")
    shape = groups[0].shape
    if any(g.shape != shape for g in groups):
        raise ValidationError("all groups must have the same k and p")
    if shape[0] < 2:
        raise ValidationError("each group needs at least 2 observations")
    return groups


def anova(samples: Sequence, alpha: float = 0.05) -> TestOutcome:
    """One-way ANOVA for L equal-size groups of one measure."""
    groups = [g[:, 0] for g in _groups([_column(s) for s in samples])]
    n_groups, k = len(groups), groups[0].shape[0]
    means = np.array([g.mean() for g in groups])
    grand = means.mean()
    ssb = k * float(np.sum((means - grand) ** 2))
    ssw = float(sum(np.sum((g - m) ** 2) for g, m in zip(groups, means)))
    df1, df2 = n_groups - 1, n_groups * (k - 1)
    scale = max(float(np.abs(np.concatenate(groups)).max()), 1e-300)
    if ssw <= (ZERO_VAR_TOL * scale) ** 2 * n_groups * k:
        if ssb <= (ZERO_VAR_TOL * scale) ** 2 * n_groups * k:
            return _outcome("anova", 0.0, [df1, df2], 1.0, alpha, ssb=ssb, ssw=ssw)
        raise DegenerateVariance("within-group variance is zero but group means differ")
    f = (ssb / df1) / (ssw / df2)
    return _outcome("anova", f, [df1, df2], dist.f_upper_p(f, df1, df2), alpha,
                    ssb=ssb, ssw=ssw)


def scatter_matrices(samples: Sequence) -> tuple[np.ndarray, np.ndarray]:
    """Between-group (H) and within-group (E) scatter matrices."""
    groups = _groups(samples)
    k = groups[0].shape[0]
    means = np.array([g.mean(axis=0) for g in groups])
    grand = means.mean(axis=0)
    dm = means - grand
    h = k * dm.T @ dm
    e = sum((g - m).T @ (g - m) for g, m in zip(groups, means))
    return h, e


def manova_wilks(samples: Sequence, alpha: float = 0.05) -> tuple[TestOutcome, np.ndarray, np.ndarray]:
    """One-way MANOVA with Wilks' lambda and Bartlett's chi-square approximation.

    The statistic is -(m - (p - n + 1) / 2) ln(lambda) with m = L(k-1) and
    n = L-1, compared against chi-square with p(L-1) degrees of freedom.
    """
    groups = _groups(samples)
    n_groups = len(groups)
    k, p = groups[0].shape
    h, e = scatter_matrices(groups)
    try:
        cholesky(e)
    except SingularCovariance:
        raise SingularScatter(
            f"within-group scatter E is singular (need L(k-1) >= p and "
            f"non-collinear measures; L={n_groups}, k={k}, p={p})"
        ) from None
    lam = determinant(e) / determinant(e + h)
    m, n = n_groups * (k - 1), n_groups - 1
    stat = max(0.0, -(m - (p - n + 1) / 2.0) * math.log(lam))
    dof = p * n
    outcome = _outcome("manova_wilks", stat, [dof], dist.chi2_upper_p(stat, dof), alpha,
                       wilks_lambda=lam)
    return outcome, h, e


def mardia_test(sample, alpha: float = 0.05) -> tuple[TestOutcome, TestOutcome]:
    """Mardia's multivariate skewness and kurtosis tests.

    Uses the k-denominator covariance and tests each statistic at alpha/2,
    so normality is retained iff neither outcome rejects.
    """
    x = _matrix(sample)
    k, p = x.shape
    if k <= p:
        raise ValidationError(f"Mardia's test needs k > p (k={k}, p={p})")
    mean, cov = mean_and_covariance(x, ddof=0)
    low = cholesky(cov)
    # Whitened deviations: g_ij = z_i . z_j
    z = forward_substitute(low, (x - mean).T).T
    # sum_ij g_ij^3 == sum_abc (sum_i z_ia z_ib z_ic)^2, computed exactly summed
    third = np.einsum("ia,ib,ic->abci", z, z, z).reshape(p ** 3, k)
    b1 = math.fsum(math.fsum(row) ** 2 for row in third) / k ** 2
    gii = np.einsum("ia,ia->i", z, z)
    b2 = float(np.mean(gii ** 2))
    half = alpha / 2.0
    skew_stat = k * b1 / 6.0
    skew_dof = p * (p + 1) * (p + 2) // 6
    skew = _outcome("mardia_skewness", skew_stat, [skew_dof],
                    dist.chi2_upper_p(skew_stat, skew_dof), half, b1p=b1)
    z_kurt = (b2 - p * (p + 2)) / math.sqrt(8.0 * p * (p + 2) / k)
    kurt = _outcome("mardia_kurtosis", z_kurt, [], dist.normal_two_sided_p(z_kurt), half, b2p=b2)
    return skew, kurt
