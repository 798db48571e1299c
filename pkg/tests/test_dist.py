import math

import numpy as np
import pytest
from scipy import stats

from mvcompare.dist import (
    betainc,
    chi2_upper_p,
    f_upper_p,
    gammainc_upper,
    normal_cdf,
    t_two_sided_p,
)


def test_t_examples():
    assert t_two_sided_p(0.0, 7) == 1.0
    # Cauchy: CDF(1) = 3/4
    assert t_two_sided_p(1.0, 1) == pytest.approx(0.5, abs=1e-12)
    # dof 2 closed form F(t) = 1/2 + t / (2 sqrt(2) sqrt(1 + t^2/2))
    t = math.sqrt(12.0)
    cdf = 0.5 + t / (2 * math.sqrt(2) * math.sqrt(1 + t * t / 2))
    assert t_two_sided_p(t, 2) == pytest.approx(2 * (1 - cdf), abs=1e-13)
    assert t_two_sided_p(t, 2) == pytest.approx(0.0742, abs=1e-4)


def test_f_examples():
    assert f_upper_p(0.0, 3, 5) == 1.0
    assert f_upper_p(3.0, 2, 1) == pytest.approx(7 ** -0.5, abs=1e-12)
    assert f_upper_p(6.0, 1, 4) == pytest.approx(t_two_sided_p(math.sqrt(6), 4), abs=1e-14)
    assert f_upper_p(6.0, 1, 4) == pytest.approx(0.0705, abs=1e-4)


def test_chi2_examples():
    assert chi2_upper_p(0.0, 3) == 1.0
    assert chi2_upper_p(2.0, 2) == pytest.approx(math.exp(-1), abs=1e-14)
    expected = 2 * (1 - normal_cdf(math.sqrt(3.207)))
    assert chi2_upper_p(3.207, 1) == pytest.approx(expected, abs=1e-12)
    assert chi2_upper_p(3.207, 1) == pytest.approx(0.0733, abs=1e-4)


def test_normal_examples():
    assert normal_cdf(0.0) == 0.5
    assert abs(normal_cdf(40.0) - 1.0) <= 1e-15
    # reference erf evaluation
    assert normal_cdf(1.7908) == pytest.approx(0.5 * (1 + math.erf(1.7908 / math.sqrt(2))), abs=1e-15)
    assert normal_cdf(1.7908) == pytest.approx(0.9633, abs=1e-4)


@pytest.mark.parametrize("k", range(1, 8))
def test_chi2_even_dof_poisson_sum(k):
    for x in (0.1, 1.0, 3.5, 10.0, 25.0):
        lam = x / 2
        poisson = math.exp(-lam) * sum(lam ** i / math.factorial(i) for i in range(k))
        assert chi2_upper_p(x, 2 * k) == pytest.approx(poisson, abs=1e-12)


def test_f_t_identity_grid():
    for t in np.linspace(-6, 6, 25):
        for m in (1, 2, 5, 9, 30):
            assert f_upper_p(t * t, 1, m) == pytest.approx(t_two_sided_p(t, m), abs=1e-10)


def test_against_scipy():
    rng = np.random.default_rng(0)
    for _ in range(500):
        d1, d2 = int(rng.integers(1, 40)), int(rng.integers(1, 200))
        f = float(rng.exponential(2.0))
        assert f_upper_p(f, d1, d2) == pytest.approx(stats.f.sf(f, d1, d2), rel=1e-10, abs=1e-15)
        x, k = float(rng.exponential(15.0)), int(rng.integers(1, 60))
        assert chi2_upper_p(x, k) == pytest.approx(stats.chi2.sf(x, k), rel=1e-10, abs=1e-15)
        t = float(rng.normal(scale=4.0))
        assert t_two_sided_p(t, d2) == pytest.approx(2 * stats.t.sf(abs(t), d2), rel=1e-10, abs=1e-15)
        z = float(rng.normal(scale=3.0))
        assert normal_cdf(z) == pytest.approx(stats.norm.cdf(z), abs=1e-15)


def test_special_functions_against_scipy():
    from scipy import special

    rng = np.random.default_rng(1)
    for _ in range(300):
        a, b, x = rng.uniform(0.1, 50), rng.uniform(0.1, 50), rng.uniform()
        assert betainc(a, b, x) == pytest.approx(special.betainc(a, b, x), rel=1e-10, abs=1e-14)
        assert gammainc_upper(a, 3 * x * a) == pytest.approx(special.gammaincc(a, 3 * x * a), rel=1e-10, abs=1e-14)


def test_monotone_in_statistic():
    grid = np.linspace(0, 30, 301)
    for dof in (1, 3, 10):
        t = [t_two_sided_p(v, dof) for v in grid]
        f = [f_upper_p(v, 2, dof) for v in grid]
        c = [chi2_upper_p(v, dof) for v in grid]
        for seq in (t, f, c):
            assert all(b <= a for a, b in zip(seq, seq[1:]))
            assert all(0.0 <= v <= 1.0 for v in seq)
    z = [normal_cdf(v) for v in np.linspace(-10, 10, 201)]
    assert all(b >= a for a, b in zip(z, z[1:]))
