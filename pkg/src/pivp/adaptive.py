"""Certified adaptive stepper with a work hint.

One call integrates y' = p(y) from t0 to t with guaranteed accuracy eps,
provided the caller's hint I is a large enough bound on the error-growth
integral of the trajectory.  The hint fixes every derived constant (step
fraction, step budget, per-step rounding); two runtime tests turn an
insufficient hint into a typed abort instead of a wrong answer:

* TooManySteps: the step counter reached the budget N before reaching t;
* UnsafeResult: the accumulated normalized step mass exceeded I/3.

On Success the returned value is within eps of y(t) whenever the solution
exists up to t.  Every run is deterministic and fully traced.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

from .errors import DimensionError, ParameterError
from .polyvec import PolyVec
from .scalar import RVector, as_rational, ceil_neg_log2, exp_upper, infnorm, rsize
from .taylor import OpCounter, compute_taylor

EXP_GUARD_BITS = 32  # relative slack of the rational stand-in for e^-I


@dataclass(frozen=True)
class SolverParams:
    """Constants derived from (p, eps, hint) before stepping starts.

    ``lam`` is the per-step fraction of the contraction budget,
    chosen so 1/lam = 1 + k/(1 - 2k*eps_eff); ``big_n`` = 1 + 2*hint/lam
    bounds the number of steps; ``eta_hat`` is a rational lower bound on
    eps_eff * e^-hint, and ``mu`` = eta_hat/(3*big_n) is the per-step
    rounding budget.
    """

    k: int
    eps_eff: Fraction
    lam: Fraction
    big_n: Fraction
    eta_hat: Fraction
    mu: Fraction
    hint: Fraction

    @property
    def rounding_precision(self) -> int:
        """Grid exponent q used when storing a step result."""
        return ceil_neg_log2(self.mu) + 1


@dataclass(frozen=True)
class StepRecord:
    index: int
    t_start: Fraction
    delta_t: Fraction
    beta: Fraction
    omega: int
    y_after: RVector


@dataclass(frozen=True)
class Diagnostics:
    steps: int
    sum_beta: Fraction
    max_rsize: int
    taylor_calls: int
    arith_ops: int


class AbortReason(enum.Enum):
    TOO_MANY_STEPS = "too many steps"
    UNSAFE_RESULT = "unsafe result"


@dataclass(frozen=True)
class Success:
    value: RVector
    trace: tuple[StepRecord, ...]
    diagnostics: Diagnostics
    params: SolverParams


@dataclass(frozen=True)
class Abort:
    reason: AbortReason
    trace: tuple[StepRecord, ...]
    diagnostics: Diagnostics
    params: SolverParams


SolveOutcome = Union[Success, Abort]


def derive_params(p: PolyVec, eps, hint) -> SolverParams:
    """Fix the run constants for a given accuracy and hint."""
    eps = as_rational(eps)
    hint = as_rational(hint)
    if eps <= 0:
        raise ParameterError(f"accuracy must be positive, got {eps}")
    if hint <= 0:
        raise ParameterError(f"hint must be positive, got {hint}")
    k = max(2, p.degree())
    eps_eff = min(eps, Fraction(1, 4 * k))
    lam = 1 - Fraction(k, 1 - 2 * k * eps_eff + k)
    big_n = 1 + 2 * hint / lam
    eta_hat = eps_eff / exp_upper(hint, EXP_GUARD_BITS)
    mu = eta_hat / (3 * big_n)
    return SolverParams(
        k=k, eps_eff=eps_eff, lam=lam, big_n=big_n, eta_hat=eta_hat, mu=mu, hint=hint
    )


def step_size(
    params: SolverParams, mass: Fraction, y_norm: Fraction, remaining: Fraction
) -> Fraction:
    """min(remaining, lam / (k * mass * max(1, ||y||)^(k-1))), exactly."""
    if remaining <= 0:
        raise ParameterError(f"remaining time must be positive, got {remaining}")
    rate = params.k * mass * max(Fraction(1), y_norm) ** (params.k - 1)
    if rate == 0:
        return remaining
    return min(remaining, params.lam / rate)


def order_choice(params: SolverParams, y_norm: Fraction) -> int:
    """Series length for the current state, at least 1."""
    argument = params.eta_hat / (6 * params.big_n * max(Fraction(1), y_norm))
    return max(1, ceil_neg_log2(argument))


def solve_pivp_variable(
    t0, y0: Sequence[Fraction], p: PolyVec, t, eps, hint
) -> SolveOutcome:
    """Integrate y' = p(y), y(t0) = y0 up to time t with accuracy eps.

    Returns Success(x, ...) with ||x - y(t)|| <= eps when it returns a value
    at all, and some Abort when the hint was too small.  A hint of at least
    six times the trajectory's error-growth integral guarantees Success.
    t must be >= t0; failure to reach t is reported via Abort, never raised.
    """
    t0 = as_rational(t0)
    t = as_rational(t)
    y0 = tuple(as_rational(v) for v in y0)
    if len(y0) != p.dimension:
        raise DimensionError(
            f"initial state has dimension {len(y0)}, system expects {p.dimension}"
        )
    if t < t0:
        raise ParameterError(f"target time {t} precedes initial time {t0}")

    params = derive_params(p, eps, hint)
    mass = p.coefficient_mass()
    ops = OpCounter()
    trace: list[StepRecord] = []
    max_size = max(rsize(v) for v in y0)

    if mass == 0:
        # identically-zero right-hand side: the solution is constant and is
        # reproduced exactly (no rounding grid involved)
        if t > t0:
            trace.append(
                StepRecord(
                    index=0,
                    t_start=t0,
                    delta_t=t - t0,
                    beta=Fraction(0),
                    omega=1,
                    y_after=y0,
                )
            )
        diagnostics = Diagnostics(
            steps=len(trace),
            sum_beta=Fraction(0),
            max_rsize=max_size,
            taylor_calls=0,
            arith_ops=ops.count,
        )
        return Success(value=y0, trace=tuple(trace), diagnostics=diagnostics, params=params)

    u = t0
    y = y0
    i = 0
    sum_beta = Fraction(0)
    taylor_calls = 0
    result: SolveOutcome | None = None

    while u < t:
        if i >= params.big_n:
            result = AbortReason.TOO_MANY_STEPS
            break
        y_norm = infnorm(y)
        delta = step_size(params, mass, y_norm, t - u)
        beta = params.k * mass * max(Fraction(1), y_norm) ** (params.k - 1) * delta
        omega = order_choice(params, y_norm)
        y = compute_taylor(p, y, omega, params.mu, delta, ops=ops)
        taylor_calls += 1
        trace.append(
            StepRecord(
                index=i, t_start=u, delta_t=delta, beta=beta, omega=omega, y_after=y
            )
        )
        sum_beta += beta
        max_size = max(max_size, max(rsize(v) for v in y))
        u += delta
        i += 1
        ops.add(12)  # step bookkeeping, order of magnitude
        if params.hint < 3 * ((i - 1) * params.lam + beta):
            result = AbortReason.UNSAFE_RESULT
            break

    diagnostics = Diagnostics(
        steps=i,
        sum_beta=sum_beta,
        max_rsize=max_size,
        taylor_calls=taylor_calls,
        arith_ops=ops.count,
    )
    if result is not None:
        return Abort(reason=result, trace=tuple(trace), diagnostics=diagnostics, params=params)
    return Success(value=y, trace=tuple(trace), diagnostics=diagnostics, params=params)
