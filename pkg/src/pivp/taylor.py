"""Truncated Taylor series of the flow of y' = p(y), exactly.

The coefficients of the solution series are produced by the classical
order-by-order recurrence: if Y is the series of the solution then
(n+1) c_{n+1} is the degree-n coefficient of p(Y), which only involves
coefficients of Y up to order n.  Monomials of degree >= 2 are handled by
cached pairwise series products so each new order costs one binomial-weighted
convolution per product in the chain.

Everything is exact.  To keep the bookkeeping on integers, coefficients are
stored in a normalized form

    c_{i,n} = B_{i,n} / (S^((kp-1)n + 1) * Dp^n * n!)

where S is a common denominator of the initial state, Dp a common denominator
of the coefficients of p, and kp = max(1, deg p).  One checks that the
recurrence and all series products stay integral in this form (products of m
component series carry denominator S^((kp-1)n + m) Dp^n * prod n_l!, and the
multinomial weights n!/prod n_l! are integers), so the whole computation runs
on big integers and the division by (n+1) is absorbed by the factorial.  The
rational coefficients are recovered exactly on demand.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial, gcd
from typing import Sequence

from .errors import DimensionError, DomainError, ParameterError
from .polyvec import PolyVec
from .scalar import RVector, as_rational, ceil_neg_log2, infnorm, mpz, round_to


@dataclass
class OpCounter:
    """Approximate tally of big-number operations, for diagnostics."""

    count: int = 0

    def add(self, n: int) -> None:
        self.count += n


@dataclass(frozen=True)
class SeriesTruncation:
    """The first ``order`` Taylor coefficients of each solution component."""

    dimension: int
    order: int
    coefficients: tuple[tuple[Fraction, ...], ...]

    def component(self, i: int) -> tuple[Fraction, ...]:
        return self.coefficients[i]


def _common_denominator(values: Sequence[Fraction]) -> int:
    den = 1
    for v in values:
        den = den * v.denominator // gcd(den, v.denominator)
    return den


class _SeriesEngine:
    """Integer-normalized coefficient rows for one system and initial state."""

    def __init__(self, p: PolyVec, y0: Sequence[Fraction], ops: OpCounter | None):
        d = p.dimension
        if len(y0) != d:
            raise DimensionError(
                f"initial state has dimension {len(y0)}, system expects {d}"
            )
        self.p = p
        self.ops = ops
        self.kp = max(1, p.degree())
        self.state_den = _common_denominator(y0)
        S = mpz(self.state_den)
        self.coeff_den = _common_denominator(
            [c for poly in p.components for c in poly.terms.values()] or [Fraction(1)]
        )
        Dp = mpz(self.coeff_den)
        self.S, self.Dp = S, Dp
        s_pow = [mpz(1)]
        for _ in range(self.kp):
            s_pow.append(s_pow[-1] * S)

        # rows[i][n] is B_{i,n}; chains hold partial products of component series
        self.rows: list[list] = [
            [mpz(v.numerator) * (S // v.denominator)] for v in y0
        ]
        self._plan_chains()
        # per-component integer term tables: (source, padded coefficient)
        self.terms: list[list[tuple[tuple[str, int], object]]] = []
        self.constants: list = []
        for poly in p.components:
            rows = []
            const = mpz(0)
            for alpha, coeff in poly.terms.items():
                a_int = mpz(coeff.numerator) * (Dp // coeff.denominator)
                m = sum(alpha)
                if m == 0:
                    const += a_int * s_pow[self.kp]
                else:
                    rows.append((self._source_for(alpha), a_int * s_pow[self.kp - m]))
            self.terms.append(rows)
            self.constants.append(const)
        self._binrow = [mpz(1)]  # Pascal row for the current order

    def _plan_chains(self) -> None:
        """Pairwise-product chains for every monomial of degree >= 2.

        A monomial's variable list (sorted, with multiplicity) is built up one
        factor at a time; prefixes are shared across monomials through the
        cache keyed by the partial multi-index.
        """
        self.chain_specs: list[tuple[tuple[str, int], int]] = []
        self.chain_rows: list[list] = []
        self._chain_index: dict[tuple[int, ...], int] = {}
        d = self.p.dimension
        for poly in self.p.components:
            for alpha in poly.terms:
                if sum(alpha) < 2:
                    continue
                variables = [v for v in range(d) for _ in range(alpha[v])]
                partial = [0] * d
                partial[variables[0]] = 1
                source: tuple[str, int] = ("comp", variables[0])
                for v in variables[1:]:
                    partial[v] += 1
                    key = tuple(partial)
                    if key in self._chain_index:
                        idx = self._chain_index[key]
                    else:
                        idx = len(self.chain_specs)
                        self.chain_specs.append((source, v))
                        self.chain_rows.append([])
                        self._chain_index[key] = idx
                    source = ("chain", idx)

    def _source_for(self, alpha: tuple[int, ...]) -> tuple[str, int]:
        if sum(alpha) == 1:
            return ("comp", alpha.index(1))
        return ("chain", self._chain_index[alpha])

    def _row(self, source: tuple[str, int]) -> list:
        kind, idx = source
        return self.rows[idx] if kind == "comp" else self.chain_rows[idx]

    def extend(self, order: int) -> None:
        """Grow every component row to ``order`` coefficients."""
        while len(self.rows[0]) < order:
            n = len(self.rows[0]) - 1  # highest known order
            binrow = self._binrow
            for (prefix, var), out in zip(self.chain_specs, self.chain_rows):
                left = self._row(prefix)
                right = self.rows[var]
                acc = mpz(0)
                for j in range(n + 1):
                    acc += binrow[j] * left[j] * right[n - j]
                out.append(acc)
                if self.ops is not None:
                    self.ops.add(2 * (n + 1))
            for i, rows in enumerate(self.terms):
                total = self.constants[i] if n == 0 else mpz(0)
                for source, padded in rows:
                    total += padded * self._row(source)[n]
                self.rows[i].append(total)
                if self.ops is not None:
                    self.ops.add(len(rows) + 1)
            # next Pascal row
            self._binrow = (
                [mpz(1)]
                + [binrow[j] + binrow[j + 1] for j in range(n)]
                + [mpz(1)]
            )

    def denominator_at(self, n: int):
        """Exact denominator of the normalized coefficient of order n."""
        S, Dp = self.S, self.Dp
        return S ** ((self.kp - 1) * n + 1) * Dp**n * mpz(factorial(n))

    def rational_coefficients(self, order: int) -> list[tuple[Fraction, ...]]:
        self.extend(order)
        per_component: list[tuple[Fraction, ...]] = []
        dens = [int(self.denominator_at(n)) for n in range(order)]
        for row in self.rows:
            per_component.append(
                tuple(Fraction(int(row[n]), dens[n]) for n in range(order))
            )
        return per_component

    def evaluate_raw(self, order: int, dt: Fraction) -> tuple[list, object]:
        """Exact truncation value at offset dt as unreduced integer ratios.

        Accumulates numerators over the running denominator
        S^((kp-1)n+1) (Dp b)^n n!, one big-integer pass per component; the
        shared denominator is returned alongside.  Callers that only need a
        rounded value can skip the (expensive) gcd a rational reduction would
        perform.
        """
        self.extend(order)
        a, b = mpz(dt.numerator), mpz(dt.denominator)
        scale_base = self.S ** (self.kp - 1) * self.Dp * b
        accs = [row[0] for row in self.rows]
        pow_a = mpz(1)
        for n in range(1, order):
            pow_a *= a
            scale = scale_base * n
            for i, row in enumerate(self.rows):
                accs[i] = accs[i] * scale + row[n] * pow_a
            if self.ops is not None:
                self.ops.add(2 * len(accs) + 1)
        denom = (
            self.S ** ((self.kp - 1) * (order - 1) + 1)
            * (self.Dp * b) ** (order - 1)
            * mpz(factorial(order - 1))
        )
        return accs, denom


def series_coefficients(
    p: PolyVec, y0: Sequence[Fraction], order: int, ops: OpCounter | None = None
) -> SeriesTruncation:
    """Exact first ``order`` Taylor coefficients of the solution through y0."""
    if order < 1:
        raise ParameterError(f"series order must be >= 1, got {order}")
    engine = _SeriesEngine(p, tuple(y0), ops)
    return SeriesTruncation(
        dimension=p.dimension,
        order=order,
        coefficients=tuple(engine.rational_coefficients(order)),
    )


def evaluate_truncated(truncation: SeriesTruncation, dt) -> RVector:
    """Exact Horner evaluation of the truncation at time offset dt."""
    dt = as_rational(dt)
    values = []
    for coeffs in truncation.coefficients:
        acc = Fraction(0)
        for c in reversed(coeffs):
            acc = acc * dt + c
        values.append(acc)
    return tuple(values)


def _round_ratio(num, den, q: int) -> Fraction:
    """round_to on an unreduced integer ratio num/den (den > 0), ties to even.

    Works on the raw integers so no gcd is ever taken on the huge unreduced
    pair; the divmod dominates and stays in the big-integer backend.
    """
    m, rem = divmod(num << q, den)
    double = 2 * rem
    if double > den or (double == den and m % 2 != 0):
        m += 1
    return Fraction(int(m), 1 << q)


def compute_taylor(
    p: PolyVec,
    y0: Sequence[Fraction],
    order: int,
    mu,
    dt,
    ops: OpCounter | None = None,
) -> RVector:
    """Truncated-series step: within mu of the exact truncation value.

    The truncation is evaluated exactly, then rounded once to the 2^-q grid
    with q = ceil_neg_log2(mu) + 1, so the rounding error is at most
    2^-(q+1) <= mu/4 and the stored result has bounded size.
    """
    mu = as_rational(mu)
    dt = as_rational(dt)
    if mu <= 0:
        raise ParameterError(f"rounding budget must be positive, got {mu}")
    if order < 1:
        raise ParameterError(f"order must be >= 1, got {order}")
    engine = _SeriesEngine(p, tuple(y0), ops)
    accs, denom = engine.evaluate_raw(order, dt)
    q = ceil_neg_log2(mu) + 1
    return tuple(_round_ratio(acc, denom, q) for acc in accs)


def remainder_bound(p: PolyVec, y0: Sequence[Fraction], n: int, t) -> Fraction:
    """Bound on the norm distance between the flow and its n-term truncation.

    With k = max(2, deg p), a = max(1, ||y0||) and M = (k-1) * mass * a^(k-1)
    (mass the coefficient mass of p), the tail after n terms is at most
    a * |Mt|^n / (1 - |Mt|) whenever |t| < 1/M.
    """
    t = as_rational(t)
    if n < 1:
        raise ParameterError(f"truncation length must be >= 1, got {n}")
    if len(y0) != p.dimension:
        raise DimensionError(
            f"initial state has dimension {len(y0)}, system expects {p.dimension}"
        )
    k = max(2, p.degree())
    alpha = max(Fraction(1), infnorm(tuple(y0)))
    scale = (k - 1) * p.coefficient_mass() * alpha ** (k - 1)
    x = abs(scale * t)
    if x >= 1:
        raise DomainError(
            f"time offset {t} is outside the contraction region (|Mt| = {x} >= 1)"
        )
    return alpha * x**n / (1 - x)
