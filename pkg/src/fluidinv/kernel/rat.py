"""Exact rational coefficients.

gmpy2.mpq is used when available (much faster for the large polynomial
workloads), with fractions.Fraction as a drop-in fallback.  Everything in
the kernel goes through `rat` so the backend stays swappable.
"""

from fractions import Fraction

try:
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover
    _Q = Fraction

QNUM = type(_Q(1))


def rat(num, den=1):
    """Build an exact rational from ints, strings ("3/4") or rationals."""
    if isinstance(num, QNUM) and den == 1:
        return num
    if isinstance(num, str):
        return _Q(Fraction(num))
    if isinstance(num, float):
        raise TypeError("floats are not allowed in exact arithmetic: %r" % num)
    return _Q(num) / _Q(den)


ZERO = rat(0)
ONE = rat(1)


def is_rat(x):
    return isinstance(x, (QNUM, int, Fraction))


def is_integer(q):
    return q.denominator == 1


def floor_rat(q):
    return int(q.numerator // q.denominator)


def as_int(q):
    if q.denominator != 1:
        raise ValueError("not an integer: %s" % q)
    return int(q.numerator)


def gcd_int(a, b):
    while b:
        a, b = b, a % b
    return abs(a)
