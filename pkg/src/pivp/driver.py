"""Hint-doubling outer loop.

The stepper needs a bound on the trajectory's error-growth integral, which a
caller normally cannot know.  This driver searches for one: starting from a
small seed it multiplies the hint by a fixed factor after every abort, and
stops at the first Success (whose value is then certified).  Existence of the
solution up to t is only semi-decidable, so a configurable cap converts the
would-be infinite search under finite-time blow-up into a typed failure.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

from .adaptive import (
    Diagnostics,
    SolverParams,
    StepRecord,
    Success,
    solve_pivp_variable,
)
from .errors import ParameterError
from .polyvec import PolyVec
from .scalar import RVector, as_rational


@dataclass(frozen=True)
class HintPolicy:
    """Geometric hint schedule: initial_hint * growth_factor^attempt."""

    initial_hint: Fraction = Fraction(1, 2)
    growth_factor: Fraction = Fraction(2)
    max_hint: Fraction = Fraction(2**64)

    def __post_init__(self):
        object.__setattr__(self, "initial_hint", as_rational(self.initial_hint))
        object.__setattr__(self, "growth_factor", as_rational(self.growth_factor))
        object.__setattr__(self, "max_hint", as_rational(self.max_hint))
        if self.initial_hint <= 0:
            raise ParameterError(f"initial hint must be positive, got {self.initial_hint}")
        if self.growth_factor < 2:
            raise ParameterError(f"growth factor must be >= 2, got {self.growth_factor}")
        if self.max_hint < self.initial_hint:
            raise ParameterError("max_hint must be at least the initial hint")


@dataclass(frozen=True)
class DriverSuccess:
    value: RVector
    trace: tuple[StepRecord, ...]
    diagnostics: Diagnostics
    final_hint: Fraction
    attempts: int
    hints_tried: tuple[Fraction, ...]
    params: SolverParams


@dataclass(frozen=True)
class HintExhausted:
    attempts: int
    last_diagnostics: Diagnostics | None
    hints_tried: tuple[Fraction, ...]


DriverOutcome = Union[DriverSuccess, HintExhausted]


def solve_pivp_ex(
    t0,
    y0: Sequence[Fraction],
    p: PolyVec,
    t,
    eps,
    policy: HintPolicy = HintPolicy(),
) -> DriverOutcome:
    """Certified solve without a caller-supplied hint.

    On DriverSuccess, ||value - y(t)|| <= eps.  HintExhausted means every
    hint up to policy.max_hint aborted, which is what finite-time blow-up
    before t looks like (indistinguishable from a cap that is merely too
    small).  Each attempt runs from scratch; the run constants all depend on
    the hint, so nothing can be reused across attempts.
    """
    hints: list[Fraction] = []
    last_diag: Diagnostics | None = None
    attempt = 0
    hint = Fraction(policy.initial_hint)
    while True:
        hint = hint * policy.growth_factor
        if hint > policy.max_hint:
            return HintExhausted(
                attempts=attempt, last_diagnostics=last_diag, hints_tried=tuple(hints)
            )
        attempt += 1
        hints.append(hint)
        outcome = solve_pivp_variable(t0, y0, p, t, eps, hint)
        last_diag = outcome.diagnostics
        if isinstance(outcome, Success):
            return DriverSuccess(
                value=outcome.value,
                trace=outcome.trace,
                diagnostics=outcome.diagnostics,
                final_hint=hint,
                attempts=attempt,
                hints_tried=tuple(hints),
                params=outcome.params,
            )
