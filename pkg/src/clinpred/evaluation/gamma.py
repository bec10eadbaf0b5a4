"""Regularized incomplete gamma functions and the chi-square survival function."""
import math

EPS = 1e-15
TINY = 1e-300
MAX_ITER = 10_000


def _prefactor(a, x):
    return math.exp(-x + a * math.log(x) - math.lgamma(a))


def gammainc_series(a, x):
    """Lower regularized gamma P(a, x) by its power series (best for x < a + 1)."""
    if x <= 0:
        return 0.0
    term = total = 1.0 / a
    ap = a
    for _ in range(MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * EPS:
            break
    return total * _prefactor(a, x)


def gammaincc_cf(a, x):
    """Upper regularized gamma Q(a, x) by modified Lentz continued fraction (best for x > a + 1)."""
    if x <= 0:
        return 1.0
    b = x + 1.0 - a
    c = 1.0 / TINY
    d = 1.0 / b
    h = d
    for i in range(1, MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < TINY:
            d = TINY
        c = b + an / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            break
    return _prefactor(a, x) * h


def gammaincc(a, x):
    if x < a + 1.0:
        return 1.0 - gammainc_series(a, x)
    return gammaincc_cf(a, x)


def chi2_sf(stat, df):
    """P(X >= stat) for a chi-square variable with ``df`` degrees of freedom."""
    if stat <= 0:
        return 1.0
    return gammaincc(df / 2.0, stat / 2.0)
