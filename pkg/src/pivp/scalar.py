"""Exact rational scalars.

All numbers in this package are arbitrary-precision rationals in reduced
form (stdlib ``Fraction``).  This module adds the handful of primitives the
solver needs on top of plain arithmetic: the bit-size measure ``rsize``,
round-to-nearest on a dyadic grid, an exact ceiling of ``-log2``, and a
rational upper bound on ``exp``.  Everything is exact; there is no floating
point anywhere.
"""

from __future__ import annotations

import re
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Iterable, Sequence, Union

from .errors import DimensionError, DomainError, ParameterError

try:  # big-integer fast path; plain int is a drop-in replacement
    from gmpy2 import mpz
except ImportError:  # pragma: no cover
    mpz = int

Rational = Fraction
RationalLike = Union[Fraction, int, str]
RVector = tuple[Fraction, ...]

_RATIONAL_RE = re.compile(r"^[+-]?\d+(?:/\d+)?$")


def as_rational(value: RationalLike) -> Fraction:
    """Coerce an int, Fraction, or canonical-format string to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return parse_rational(value)
    raise ParameterError(f"cannot interpret {value!r} as a rational")


def parse_rational(text: str) -> Fraction:
    """Parse the canonical text format: optional sign, integer, optional /denominator.

    Round-trips bit-exactly with :func:`format_rational`.
    """
    if not isinstance(text, str) or not _RATIONAL_RE.match(text.strip()):
        raise ParameterError(f"malformed rational {text!r}")
    body = text.strip()
    if "/" in body:
        num_text, den_text = body.split("/")
        den = int(den_text)
        if den == 0:
            raise ParameterError(f"zero denominator in {text!r}")
        return Fraction(int(num_text), den)
    return Fraction(int(body))


def format_rational(x: Fraction) -> str:
    """Canonical text form, ``"n"`` or ``"n/d"`` with d > 0."""
    return str(x)


def decimal_str(x: Fraction, digits: int = 30) -> str:
    """Decimal rendering with the given number of significant digits."""
    with localcontext() as ctx:
        ctx.prec = digits
        return str(Decimal(x.numerator) / Decimal(x.denominator))


def rvector(values: Iterable[RationalLike]) -> RVector:
    return tuple(as_rational(v) for v in values)


def infnorm(x: Sequence[Fraction]) -> Fraction:
    """Max-norm: the largest absolute value of any component."""
    if len(x) == 0:
        raise DimensionError("infnorm of an empty vector")
    return max(abs(c) for c in x)


def rsize(x: Fraction) -> int:
    """Bit-size measure of a reduced rational.

    Numerator and denominator each contribute max(1, ceil(log2(1 + |part|))),
    which equals max(1, part.bit_length()). Defined for 0 and monotone in
    magnitude.
    """
    return max(1, abs(x.numerator).bit_length()) + max(1, x.denominator.bit_length())


def round_to(x: Fraction, q: int) -> Fraction:
    """Nearest multiple of 2**-q, ties to the even multiple.

    The result differs from ``x`` by at most 2**-(q+1).
    """
    if q < 1:
        raise ParameterError(f"rounding precision must be >= 1, got {q}")
    m, rem = divmod(x.numerator << q, x.denominator)
    double = 2 * rem
    if double > x.denominator or (double == x.denominator and m % 2 != 0):
        m += 1
    return Fraction(m, 1 << q)


def ceil_neg_log2(z: Fraction) -> int:
    """Least integer m with 2**-m <= z, i.e. ceil(-log2(z)). Exact.

    The answer is located by comparing bit lengths of numerator and
    denominator, then checking the two neighbouring candidates.
    """
    if z <= 0:
        raise DomainError(f"ceil_neg_log2 requires a positive argument, got {z}")
    a, b = z.numerator, z.denominator
    guess = b.bit_length() - a.bit_length()
    for m in (guess - 1, guess, guess + 1):
        # test b <= a * 2^m without negative shifts
        if (b <= a << m if m >= 0 else b << (-m) <= a):
            return m
    raise AssertionError("bit-length bracketing failed")  # unreachable


def _ceil_to_bits(x: Fraction, precision: int) -> Fraction:
    """Smallest p-significant-bit dyadic >= x; relative error < 2**-(precision-2)."""
    num, den = x.numerator, x.denominator
    shift = precision - (num.bit_length() - den.bit_length())
    if shift >= 0:
        m = -((-num << shift) // den)
        return Fraction(m, 1 << shift)
    m = -(-num // (den << (-shift)))
    return Fraction(m << (-shift))


def _exp_series_upper(x: Fraction, rel_bits: int) -> Fraction:
    """Upper bound on exp(x) for 0 <= x <= 2, within relative 2**-rel_bits.

    Truncated series plus an explicit remainder bound for the dropped tail;
    both are exact rationals, so the result is >= exp(x) by construction.
    """
    term = Fraction(1)
    total = Fraction(1)
    j = 0
    while True:
        j += 1
        term *= x / j
        total += term
        # tail after term j is < term * (x/(j+1)) / (1 - x/(j+2))
        head = term * x / (j + 1)
        tail_bound = head / (1 - x / (j + 2))
        if tail_bound <= total * Fraction(1, 1 << (rel_bits + 1)):
            return total + tail_bound


def exp_upper(x: RationalLike, guard_bits: int = 32) -> Fraction:
    """Rational E with exp(x) <= E <= exp(x) * (1 + 2**-guard_bits), x >= 0.

    Arguments below 2 are handled by the truncated series with its remainder
    added. Larger arguments split into integer and fractional parts; the
    integer part is a binary power of a series upper bound on e, rounded
    upward between multiplications so every intermediate stays an upper
    bound.
    """
    x = as_rational(x)
    if x < 0:
        raise ParameterError(f"exp_upper requires a nonnegative argument, got {x}")
    if guard_bits < 1:
        raise ParameterError(f"guard_bits must be >= 1, got {guard_bits}")
    n = int(x)
    if n < 2:
        return _exp_series_upper(x, guard_bits + 1)
    frac = x - n
    sites = 2 * n.bit_length() + 4  # rounding sites in the power chain
    rel = guard_bits + sites.bit_length() + 3
    prec = rel + 4
    base = _exp_series_upper(Fraction(1), rel)
    acc = Fraction(1)
    for bit in bin(n)[2:]:
        acc = _ceil_to_bits(acc * acc, prec)
        if bit == "1":
            acc = _ceil_to_bits(acc * base, prec)
    return acc * _exp_series_upper(frac, rel)
