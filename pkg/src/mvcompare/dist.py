"""Tail probabilities for the t, F, chi-square and normal distributions.

The t and F tails are expressed through the regularized incomplete beta
function I_x(a, b), the chi-square tail through the regularized upper
incomplete gamma function Q(a, x). Both are evaluated with the classic
series / modified-Lentz continued fraction pair.
"""

from __future__ import annotations

import math

EPS = 1e-16
FPMIN = 1e-300
MAXIT = 10000


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for I_x(a, b), modified Lentz method."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < FPMIN:
        d = FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b) for a, b > 0."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    lnfront = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(lnfront)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def gammainc_upper(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) for a > 0, x >= 0."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x <= 0.0:
        return 1.0
    lnfront = -x + a * math.log(x) - math.lgamma(a)
    if x < a + 1.0:
        ap = a
        term = total = 1.0 / a
        for _ in range(MAXIT):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * EPS:
                return 1.0 - total * math.exp(lnfront)
        raise ArithmeticError(f"incomplete gamma series did not converge (a={a}, x={x})")
    b = x + 1.0 - a
    c = 1.0 / FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, MAXIT + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < FPMIN:
            d = FPMIN
        c = b + an / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            return math.exp(lnfront) * h
    raise ArithmeticError(f"incomplete gamma fraction did not converge (a={a}, x={x})")


def _clip(p: float) -> float:
    return min(1.0, max(0.0, p))


def t_two_sided_p(t: float, dof: float) -> float:
    """Two-sided p-value 2 P(T_dof > |t|)."""
    if dof <= 0:
        raise ValueError("dof must be positive")
    if math.isnan(t):
        raise ValueError("t is NaN")
    if math.isinf(t):
        return 0.0
    return _clip(betainc(0.5 * dof, 0.5, dof / (dof + t * t)))


def f_upper_p(f: float, d1: float, d2: float) -> float:
    """Upper tail P(F_{d1,d2} > f)."""
    if d1 <= 0 or d2 <= 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isnan(f):
        raise ValueError("f is NaN")
    if f <= 0.0:
        return 1.0
    if math.isinf(f):
        return 0.0
    return _clip(betainc(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * f)))


def chi2_upper_p(x: float, dof: float) -> float:
    """Upper tail P(chi2_dof > x)."""
    if dof <= 0:
        raise ValueError("dof must be positive")
    if math.isnan(x):
        raise ValueError("x is NaN")
    if math.isinf(x):
        return 0.0
    return _clip(gammainc_upper(0.5 * dof, 0.5 * x))


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def normal_two_sided_p(z: float) -> float:
    return _clip(math.erfc(abs(z) / math.sqrt(2.0)))
