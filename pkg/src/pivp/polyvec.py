"""Sparse multivariate polynomial vectors over the rationals.

A ``Poly`` maps exponent multi-indices to nonzero rational coefficients. A
``PolyVec`` is a square system (component count equals variable count), the
right-hand side of an autonomous ODE. The module also provides the two size
measures that drive the solver (total degree, coefficient mass), the
effective Lipschitz bound they induce, and autonomization of time-dependent
systems.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import DimensionError
from .scalar import RVector, RationalLike, as_rational

MultiIndex = tuple[int, ...]


def _validate_index(alpha: Sequence[int], dimension: int) -> MultiIndex:
    alpha = tuple(alpha)
    if len(alpha) != dimension:
        raise DimensionError(
            f"exponent list {alpha} has length {len(alpha)}, expected {dimension}"
        )
    if any(not isinstance(e, int) or e < 0 for e in alpha):
        raise DimensionError(f"exponents must be naturals, got {alpha}")
    return alpha


@dataclass(frozen=True)
class Poly:
    """One sparse polynomial in ``dimension`` variables.

    ``terms`` maps multi-indices to coefficients; zero coefficients are
    dropped at construction so the stored form is canonical. Instances are
    immutable.
    """

    dimension: int
    terms: dict[MultiIndex, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        clean: dict[MultiIndex, Fraction] = {}
        for alpha, coeff in self.terms.items():
            alpha = _validate_index(alpha, self.dimension)
            coeff = as_rational(coeff)
            if coeff != 0:
                clean[alpha] = coeff
        object.__setattr__(self, "terms", dict(sorted(clean.items())))

    @staticmethod
    def zero(dimension: int) -> "Poly":
        return Poly(dimension, {})

    @staticmethod
    def constant(dimension: int, value: RationalLike) -> "Poly":
        return Poly(dimension, {(0,) * dimension: as_rational(value)})

    @staticmethod
    def variable(dimension: int, index: int) -> "Poly":
        alpha = tuple(1 if j == index else 0 for j in range(dimension))
        return Poly(dimension, {alpha: Fraction(1)})

    def degree(self) -> int:
        """Max total degree of a stored monomial; 0 for the zero polynomial."""
        return max((sum(alpha) for alpha in self.terms), default=0)

    def coefficient_mass(self) -> Fraction:
        """Sum of absolute values of the coefficients."""
        return sum((abs(c) for c in self.terms.values()), Fraction(0))

    def eval(self, x: Sequence[Fraction]) -> Fraction:
        if len(x) != self.dimension:
            raise DimensionError(
                f"point has dimension {len(x)}, polynomial expects {self.dimension}"
            )
        powers = _power_tables(self.terms, x)
        return _eval_terms(self.terms, powers)


def _power_tables(
    terms: Mapping[MultiIndex, Fraction], x: Sequence[Fraction]
) -> list[list[Fraction]]:
    """Per-variable power tables up to the largest exponent used."""
    needed = [0] * len(x)
    for alpha in terms:
        for v, e in enumerate(alpha):
            if e > needed[v]:
                needed[v] = e
    tables = []
    for v, top in enumerate(needed):
        row = [Fraction(1)]
        for _ in range(top):
            row.append(row[-1] * x[v])
        tables.append(row)
    return tables


def _eval_terms(
    terms: Mapping[MultiIndex, Fraction], powers: list[list[Fraction]]
) -> Fraction:
    total = Fraction(0)
    for alpha, coeff in terms.items():
        monomial = coeff
        for v, e in enumerate(alpha):
            if e:
                monomial *= powers[v][e]
        total += monomial
    return total


@dataclass(frozen=True)
class PolyVec:
    """A square polynomial system, one component per variable."""

    components: tuple[Poly, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        d = len(self.components)
        if d == 0:
            raise DimensionError("empty polynomial system")
        for i, poly in enumerate(self.components):
            if poly.dimension != d:
                raise DimensionError(
                    f"component {i} has dimension {poly.dimension}, expected {d}"
                )

    @property
    def dimension(self) -> int:
        return len(self.components)

    def degree(self) -> int:
        return max(poly.degree() for poly in self.components)

    def coefficient_mass(self) -> Fraction:
        """Max over components of the sum of absolute coefficients."""
        return max(poly.coefficient_mass() for poly in self.components)

    def eval(self, x: Sequence[Fraction]) -> RVector:
        if len(x) != self.dimension:
            raise DimensionError(
                f"point has dimension {len(x)}, system expects {self.dimension}"
            )
        merged: dict[MultiIndex, Fraction] = {}
        for poly in self.components:
            merged.update(poly.terms)
        powers = _power_tables(merged, x)
        return tuple(_eval_terms(poly.terms, powers) for poly in self.components)

    def lipschitz_bound(self, bound: RationalLike) -> Fraction:
        """k * M^(k-1) * sigma with k the degree and M the state bound.

        On the box ||a||, ||b|| <= M this dominates ||p(b)-p(a)|| / ||b-a||.
        Degree 0 gives 0 (constant map); M^0 is 1 even at M = 0.
        """
        bound = as_rational(bound)
        k = self.degree()
        if k == 0:
            return Fraction(0)
        return k * bound ** (k - 1) * self.coefficient_mass()


def autonomize(timed_components: Iterable[Poly]) -> PolyVec:
    """Append a unit clock variable to a time-dependent right-hand side.

    Input: d polynomials in d+1 variables, the last variable being time.
    Output: the (d+1)-dimensional autonomous system whose last component is
    the constant 1.
    """
    inputs = tuple(timed_components)
    d = len(inputs)
    for i, poly in enumerate(inputs):
        if poly.dimension != d + 1:
            raise DimensionError(
                f"component {i} has dimension {poly.dimension}, expected {d + 1}"
            )
    clock = Poly.constant(d + 1, 1)
    return PolyVec(inputs + (clock,))
