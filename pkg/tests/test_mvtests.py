import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from mvcompare.errors import DegenerateVariance, SingularCovariance, SingularScatter, ValidationError
from mvcompare.metrics import PerformanceSample
from mvcompare.mvtests import anova, hotelling_paired, manova_wilks, mardia_test, paired_t

DIFFS = np.array([[1.0, 0.0], [2.0, 2.0], [3.0, 1.0]])


def test_paired_t_hand_example():
    o = paired_t([1, 2, 3], [0, 0, 0], 0.05)
    assert o.statistic == pytest.approx(2 / (1 / math.sqrt(3)), abs=1e-12)
    assert o.dof == (2,)
    assert o.p_value == pytest.approx(0.0742, abs=1e-4)
    assert not o.reject


def test_paired_t_identical_and_degenerate():
    o = paired_t([0.1, 0.2, 0.3], [0.1, 0.2, 0.3])
    assert (o.statistic, o.p_value) == (0.0, 1.0)
    with pytest.raises(DegenerateVariance):
        paired_t([2, 3, 4], [1, 2, 3])


def test_paired_t_against_scipy():
    rng = np.random.default_rng(3)
    for _ in range(50):
        a, b = rng.normal(size=8), rng.normal(size=8) + 0.3
        ref = stats.ttest_rel(a, b)
        o = paired_t(a, b)
        assert o.statistic == pytest.approx(ref.statistic, rel=1e-12)
        assert o.p_value == pytest.approx(ref.pvalue, rel=1e-10)


def hotelling_oracle(diffs):
    """Exact rational T^2, F and w for a p=2 difference sample."""
    d = [[Fraction(v).limit_denominator() for v in row] for row in diffs]
    k = len(d)
    mean = [sum(r[i] for r in d) / k for i in range(2)]
    s = [[sum((r[i] - mean[i]) * (r[j] - mean[j]) for r in d) / (k - 1) for j in range(2)] for i in range(2)]
    det = s[0][0] * s[1][1] - s[0][1] * s[1][0]
    inv = [[s[1][1] / det, -s[0][1] / det], [-s[1][0] / det, s[0][0] / det]]
    w = [inv[i][0] * mean[0] + inv[i][1] * mean[1] for i in range(2)]
    t2 = k * (mean[0] * w[0] + mean[1] * w[1])
    return t2, Fraction(k - 2, (k - 1) * 2) * t2, w


def test_hotelling_fixture():
    t2, f, w = hotelling_oracle(DIFFS)
    assert (t2, f, w) == (12, 3, [2, 0])
    o, summary = hotelling_paired(DIFFS, np.zeros_like(DIFFS), 0.05)
    assert o.statistic == 12.0 and o.extra["f"] == 3.0
    assert o.dof == (2, 2) and o.extra["f_dof"] == [2, 1]
    assert o.p_value == pytest.approx(7 ** -0.5, abs=1e-12)
    assert not o.reject
    assert summary.direction.tolist() == [2.0, 0.0]
    np.testing.assert_array_equal(summary.mean_diff, [2, 1])


def test_hotelling_identical_samples_is_singular():
    a = np.random.default_rng(0).normal(size=(5, 2))
    with pytest.raises(SingularCovariance):
        hotelling_paired(a, a)


def test_hotelling_needs_enough_folds():
    a = np.random.default_rng(0).normal(size=(3, 3))
    with pytest.raises(SingularCovariance, match="k-1 must be >= p"):
        hotelling_paired(a, a + 1)
    with pytest.raises(ValidationError):
        hotelling_paired(np.zeros((4, 2)), np.zeros((5, 2)))


def test_hotelling_p1_matches_paired_t():
    rng = np.random.default_rng(8)
    a, b = rng.normal(size=10), rng.normal(size=10)
    o, _ = hotelling_paired(a, b)
    t = paired_t(a, b)
    assert o.statistic == pytest.approx(t.statistic ** 2, rel=1e-12)
    assert o.p_value == pytest.approx(t.p_value, rel=1e-12)


def test_hotelling_antisymmetry_and_scaling():
    rng = np.random.default_rng(4)
    a, b = rng.normal(size=(10, 3)), rng.normal(size=(10, 3))
    o1, s1 = hotelling_paired(a, b)
    o2, s2 = hotelling_paired(b, a)
    assert o1.statistic == pytest.approx(o2.statistic, rel=1e-12)
    assert o1.p_value == pytest.approx(o2.p_value, rel=1e-12)
    np.testing.assert_allclose(s1.direction, -s2.direction, rtol=1e-12)
    # shift the differences' mean by a factor c, keeping S_d fixed
    d = a - b
    c = 2.5
    shifted = d + (c - 1) * d.mean(axis=0)
    o3, _ = hotelling_paired(shifted, np.zeros_like(d))
    assert o3.statistic == pytest.approx(c ** 2 * o1.statistic, rel=1e-12)


def test_hotelling_accepts_performance_samples():
    a = PerformanceSample("x", DIFFS, ("tpr", "fpr"))
    b = PerformanceSample("y", np.zeros((3, 2)), ("tpr", "fpr"))
    assert hotelling_paired(a, b)[0].statistic == 12.0


def test_anova_examples():
    o = anova([[0, 1, 2], [2, 3, 4]])
    assert o.statistic == pytest.approx(6.0, abs=1e-12)
    assert o.dof == (1, 4)
    assert o.p_value == pytest.approx(0.0705, abs=1e-4)
    same = anova([[1, 2, 3]] * 3)
    assert (same.statistic, same.p_value) == (0.0, 1.0)
    with pytest.raises(DegenerateVariance):
        anova([[1, 1, 1], [2, 2, 2]])


def test_anova_two_groups_is_pooled_t_squared():
    rng = np.random.default_rng(5)
    a, b = rng.normal(size=7), rng.normal(size=7)
    t = stats.ttest_ind(a, b).statistic
    assert anova([a, b]).statistic == pytest.approx(t * t, rel=1e-12)
    groups = [rng.normal(size=9) for _ in range(4)]
    ref = stats.f_oneway(*groups)
    o = anova(groups)
    assert o.statistic == pytest.approx(ref.statistic, rel=1e-12)
    assert o.p_value == pytest.approx(ref.pvalue, rel=1e-10)


def test_manova_fixture():
    o, h, e = manova_wilks([[0, 1, 2], [2, 3, 4]])
    assert h.tolist() == [[6.0]] and e.tolist() == [[4.0]]
    assert o.extra["wilks_lambda"] == pytest.approx(0.4, abs=1e-12)
    assert o.statistic == pytest.approx(-3.5 * math.log(0.4), abs=1e-12)
    assert o.dof == (1,)
    assert o.p_value == pytest.approx(0.0733, abs=1e-3)


def test_manova_identical_groups():
    g = np.random.default_rng(1).normal(size=(6, 2))
    o, h, _ = manova_wilks([g, g.copy(), g.copy()])
    assert not h.any()
    assert o.extra["wilks_lambda"] == pytest.approx(1.0, abs=1e-12)
    assert o.statistic == pytest.approx(0.0, abs=1e-12)
    assert o.p_value == pytest.approx(1.0, abs=1e-12)


def test_manova_singular_scatter():
    with pytest.raises(SingularScatter):
        manova_wilks([np.ones((4, 2)), np.zeros((4, 2))])


def test_manova_against_statsmodels():
    pd = pytest.importorskip("pandas")
    smm = pytest.importorskip("statsmodels.multivariate.manova")
    rng = np.random.default_rng(12)
    groups = [rng.normal(size=(8, 3)) + i * 0.3 for i in range(4)]
    df = pd.DataFrame(np.vstack(groups), columns=["y1", "y2", "y3"])
    df["g"] = np.repeat(["a", "b", "c", "d"], 8)
    res = smm.MANOVA.from_formula("y1 + y2 + y3 ~ g", data=df).mv_test()
    ref = res.results["g"]["stat"].loc["Wilks' lambda", "Value"]
    o, _, _ = manova_wilks(groups)
    assert o.extra["wilks_lambda"] == pytest.approx(float(ref), rel=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from([2, 3, 5]), st.integers(3, 12), st.integers(0, 2 ** 32 - 1))
def test_lambda_f_identity(n_groups, k, seed):
    rng = np.random.default_rng(seed)
    groups = [rng.normal(size=k) + rng.normal() for _ in range(n_groups)]
    f = anova(groups).statistic
    lam = manova_wilks(groups)[0].extra["wilks_lambda"]
    assert lam == pytest.approx(1 / (1 + (n_groups - 1) / (n_groups * (k - 1)) * f), rel=1e-10)


def test_mardia_point_symmetric():
    x = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]], dtype=float)
    skew, kurt = mardia_test(x, 0.05)
    assert skew.statistic == 0.0 and skew.p_value == 1.0
    assert skew.dof == (4,)
    assert kurt.extra["b2p"] == pytest.approx(4.0, abs=1e-12)
    assert skew.alpha == kurt.alpha == 0.025


def test_mardia_against_direct_definition():
    rng = np.random.default_rng(6)
    x = rng.normal(size=(40, 3)) ** 3
    skew, kurt = mardia_test(x)
    dev = x - x.mean(axis=0)
    s = dev.T @ dev / len(x)
    g = dev @ np.linalg.inv(s) @ dev.T
    b1 = (g ** 3).sum() / len(x) ** 2
    b2 = (np.diag(g) ** 2).mean()
    assert skew.extra["b1p"] == pytest.approx(b1, rel=1e-10)
    assert kurt.extra["b2p"] == pytest.approx(b2, rel=1e-10)
    assert skew.statistic == pytest.approx(40 * b1 / 6, rel=1e-10)
    assert kurt.statistic == pytest.approx((b2 - 15) / math.sqrt(8 * 15 / 40), rel=1e-10)
    assert skew.reject or kurt.reject  # heavily skewed data


def test_mardia_needs_k_greater_than_p():
    with pytest.raises(ValidationError):
        mardia_test(np.eye(3))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2 ** 32 - 1))
def test_affine_invariance(p, seed):
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=(10, p)), rng.normal(size=(10, p)) + 0.2
    m = rng.normal(size=(p, p)) + 2 * np.eye(p)
    shift = rng.normal(size=p)
    t2 = hotelling_paired(a, b)[0].statistic
    t2m = hotelling_paired(a @ m.T + shift, b @ m.T + shift)[0].statistic
    assert t2m == pytest.approx(t2, rel=1e-8)
    groups = [rng.normal(size=(8, p)) + i for i in range(3)]
    lam = manova_wilks(groups)[0].extra["wilks_lambda"]
    lam_m = manova_wilks([g @ m.T + shift for g in groups])[0].extra["wilks_lambda"]
    assert lam_m == pytest.approx(lam, rel=1e-8)
