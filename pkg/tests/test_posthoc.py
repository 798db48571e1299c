from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mvcompare.errors import SingularCovariance
from mvcompare.metrics import PerformanceSample
from mvcompare.mvtests import hotelling_paired, paired_t, scatter_matrices
from mvcompare.posthoc import (
    extract_measures,
    find_cliques,
    grid_from_decisions,
    holm_adjust,
    holm_correct,
    ordering,
    pairwise_grid,
    posthoc_dimensions,
    underline_groups,
)


def brute_force_cliques(names, rejects):
    """All maximal subsets with no rejected pair, by exhaustive enumeration."""
    n = len(names)
    ok = []
    for mask in range(1, 1 << n):
        members = [i for i in range(n) if mask >> i & 1]
        if all(not rejects[i][j] for i, j in combinations(members, 2)):
            ok.append(mask)
    maximal = [m for m in ok if not any(o != m and o & m == m for o in ok)]
    return sorted(tuple(sorted(names[i] for i in range(n) if m >> i & 1)) for m in maximal)


def test_holm_examples():
    assert holm_correct([0.01, 0.04, 0.03], 0.05) == [True, False, False]
    assert holm_correct([0.9, 0.8], 0.05) == [False, False]
    assert holm_correct([0.04], 0.05) == [True]
    assert holm_correct([], 0.05) == []


def test_holm_adjusted_agrees_with_decisions():
    rng = np.random.default_rng(0)
    for _ in range(200):
        ps = rng.uniform(0, 0.2, size=rng.integers(1, 11)).tolist()
        for alpha in (0.01, 0.05, 0.1):
            assert [a <= alpha for a in holm_adjust(ps)] == holm_correct(ps, alpha)


def test_holm_matches_statsmodels():
    multitest = pytest.importorskip("statsmodels.stats.multitest")
    rng = np.random.default_rng(1)
    for _ in range(100):
        ps = rng.uniform(0, 0.1, size=rng.integers(1, 11))
        ref, adj, _, _ = multitest.multipletests(ps, 0.05, method="holm")
        assert holm_correct(ps, 0.05) == ref.tolist()
        np.testing.assert_allclose(holm_adjust(ps), adj, rtol=1e-12)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=12), st.floats(0.001, 0.2))
def test_holm_prefix_and_bonferroni(ps, alpha):
    dec = holm_correct(ps, alpha)
    order = sorted(range(len(ps)), key=lambda i: ps[i])
    flags = [dec[i] for i in order]
    assert flags == sorted(flags, reverse=True)  # rejections form a sorted prefix
    bonf = [p <= alpha / len(ps) for p in ps]
    assert all(d or not b for d, b in zip(dec, bonf))


def test_clique_examples():
    g = grid_from_decisions("ABCD", [("A", "C"), ("A", "D"), ("B", "D"), ("C", "D")])
    assert find_cliques(g).cliques == (("A", "B"), ("B", "C"), ("D",))
    assert find_cliques(grid_from_decisions("ABC", [])).cliques == (("A", "B", "C"),)


def test_five_algorithm_cliques():
    names = ["c4.5", "lda", "rf", "qda", "knn"]
    rejects = [(a, b) for a, b in combinations(names, 2) if {a, b} != {"lda", "rf"}]
    cl = find_cliques(grid_from_decisions(names, rejects)).cliques
    assert cl == (("c4.5",), ("knn",), ("lda", "rf"), ("qda",))


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 6), st.data())
def test_cliques_match_enumeration(n, data):
    names = [f"a{i}" for i in range(n)]
    pairs = list(combinations(names, 2))
    flags = data.draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    g = grid_from_decisions(names, [p for p, f in zip(pairs, flags) if f])
    rej = g.corrected_reject.tolist()
    assert list(find_cliques(g).cliques) == brute_force_cliques(names, rej)


def separated_samples(rng, k=10):
    base = rng.normal(size=(k, 2))
    a = base + rng.normal(scale=0.01, size=(k, 2))
    return [
        PerformanceSample("a", a),
        PerformanceSample("b", a.copy()),
        PerformanceSample("c", a + [5.0, 0.0] + rng.normal(scale=0.1, size=(k, 2))),
        PerformanceSample("d", a + [0.0, 5.0] + rng.normal(scale=0.1, size=(k, 2))),
    ]


def test_pairwise_grid_counts_and_fixture():
    rng = np.random.default_rng(0)
    samples = [PerformanceSample(f"s{i}", rng.normal(size=(10, 2)) + i) for i in range(5)]
    g = pairwise_grid(samples, 0.05)
    assert len(list(g.pairs())) == 10
    # the Holm family is all 10 pairs
    ps = [p for _, _, p, _, _ in g.pairs()]
    assert [r for *_, r in g.pairs()] == holm_correct(ps, 0.05)
    # direct per-pair oracle for the raw p-values
    for a, b, p, _, _ in g.pairs():
        direct = hotelling_paired(samples[g.index(a)], samples[g.index(b)])[0].p_value
        assert p == direct


def test_pairwise_grid_identical_pair_never_rejects():
    rng = np.random.default_rng(3)
    base = rng.normal(size=(10, 1))
    samples = [PerformanceSample("a", base), PerformanceSample("b", base.copy()),
               PerformanceSample("c", base + 10 + rng.normal(scale=0.1, size=(10, 1))),
               PerformanceSample("d", base + 20 + rng.normal(scale=0.1, size=(10, 1)))]
    g = pairwise_grid(samples, 0.05, "univariate")
    for a, b, _, _, r in g.pairs():
        assert r == ({a, b} != {"a", "b"})


def test_pairwise_grid_single_pair_is_plain_test():
    rng = np.random.default_rng(4)
    a, b = rng.normal(size=10), rng.normal(size=10) + 1
    g = pairwise_grid([a, b], 0.05, "univariate")
    t = paired_t(a, b, 0.05)
    assert g.raw_p[0, 1] == t.p_value and g.corrected_reject[0, 1] == t.reject


def test_pairwise_error_names_pair():
    a = np.random.default_rng(0).normal(size=(10, 2))
    with pytest.raises(SingularCovariance, match=r"pair \(x, y\)"):
        pairwise_grid([a, a, a + 1], 0.05, algorithms=["x", "y", "z"])


def test_ordering_examples():
    g = grid_from_decisions(["p", "q", "r"], [("p", "r"), ("q", "r")])
    o = ordering([[0.1, 0.1], [0.2, 0.2], [0.3, 0.3]], g, True, ["p", "q", "r"], "error")
    assert o.order == ("p", "q", "r")
    assert o.underline_groups == ((0, 1),)
    all_rej = grid_from_decisions("xyz", list(combinations("xyz", 2)))
    assert underline_groups(list("xyz"), all_rej) == []


def test_five_algorithm_ordering():
    order = ["rf", "lda", "qda", "knn", "c4.5"]
    keep = [{"rf", "lda"}, {"lda", "qda"}, {"qda", "knn"}]
    rejects = [p for p in combinations(order, 2) if set(p) not in keep]
    g = grid_from_decisions(order, rejects)
    assert underline_groups(order, g) == [(0, 1), (1, 2), (2, 3)]


def brute_force_underlines(order, g):
    n = len(order)
    runs = []
    for i in range(n):
        for j in range(i + 1, n):
            if all(not g.rejects(order[a], order[b]) for a, b in combinations(range(i, j + 1), 2)):
                runs.append((i, j))
    return sorted(r for r in runs if not any(o != r and o[0] <= r[0] and r[1] <= o[1] for o in runs))


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 7), st.data())
def test_underline_groups_maximal_runs(n, data):
    names = [f"a{i}" for i in range(n)]
    pairs = list(combinations(names, 2))
    flags = data.draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    g = grid_from_decisions(names, [p for p, f in zip(pairs, flags) if f])
    assert underline_groups(names, g) == brute_force_underlines(names, g)


def test_posthoc_dimensions():
    rng = np.random.default_rng(2)
    a = rng.normal(size=(10, 2))
    b = a + rng.normal(scale=0.1, size=(10, 2)) + [1.0, 0.0]
    out = posthoc_dimensions(a, b, 0.05, ["tpr", "fpr"])
    assert [o.reject for o in out] == [True, False]
    assert out[1].extra["measure"] == "fpr"
    same = posthoc_dimensions(a, a.copy())
    assert [o.p_value for o in same] == [1.0, 1.0]
    x, y = a[:, :1], b[:, :1]
    one = posthoc_dimensions(x, y)[0]
    t = paired_t(x, y)
    assert (one.p_value, one.reject) == (t.p_value, t.reject)


def test_extract_scalar_example():
    lm = extract_measures([[0, 1, 2], [2, 3, 4]])
    assert lm.eigenvalues == (1.5,)
    assert lm.variance_explained == (1.0,)
    assert lm.directions[0].tolist() == [1.0]
    np.testing.assert_allclose(lm.projections["A1"][:, 0], [0, 1, 2])


def test_extract_identical_samples():
    g = np.random.default_rng(0).normal(size=(6, 3))
    lm = extract_measures([g, g.copy(), g.copy()])
    assert lm.n_components == 0 and lm.variance_explained == ()


def test_extract_projection_ratios():
    rng = np.random.default_rng(9)
    samples = [rng.normal(size=(10, 4)) + rng.normal(size=4) for _ in range(4)]
    lm = extract_measures(samples)
    assert lm.n_components == 3  # min(p, L-1)
    assert sum(lm.variance_explained) == pytest.approx(1.0, abs=1e-12)
    h, e = scatter_matrices([lm.projections[f"A{i + 1}"] for i in range(4)])
    for i, lam in enumerate(lm.eigenvalues):
        assert h[i, i] / e[i, i] == pytest.approx(lam, rel=1e-8)
    assert extract_measures(samples, max_components=1).n_components == 1
