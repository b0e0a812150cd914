"""Certified solver for polynomial initial-value problems y' = p(y).

Given a target time, an accuracy, and a polynomial right-hand side with
rational coefficients, the solver returns a rational vector guaranteed to be
within the requested accuracy of the true solution, over arbitrarily long
horizons.  All arithmetic is exact; accuracy claims are enforced by
construction (per-step series remainders, a single audited rounding site per
step, and runtime safety tests that abort rather than return an uncertified
value).
"""

from .adaptive import (
    Abort,
    AbortReason,
    Diagnostics,
    SolveOutcome,
    SolverParams,
    StepRecord,
    Success,
    derive_params,
    order_choice,
    solve_pivp_variable,
    step_size,
)
from .driver import (
    DriverOutcome,
    DriverSuccess,
    HintExhausted,
    HintPolicy,
    solve_pivp_ex,
)
from .errors import (
    DimensionError,
    DomainError,
    ParameterError,
    PivpError,
    ProblemFormatError,
)
from .iolayer import (
    ProblemSpec,
    parse_accuracy,
    parse_problem,
    problem_to_system,
    read_trace,
    run_cli,
    serialize_problem,
    write_trace,
)
from .polyvec import MultiIndex, Poly, PolyVec, autonomize
from .scalar import (
    RVector,
    Rational,
    ceil_neg_log2,
    decimal_str,
    exp_upper,
    format_rational,
    infnorm,
    parse_rational,
    round_to,
    rsize,
    rvector,
)
from .taylor import (
    OpCounter,
    SeriesTruncation,
    compute_taylor,
    evaluate_truncated,
    remainder_bound,
    series_coefficients,
)
from .validation import (
    ClosedForm,
    DependencyCheck,
    Estimate,
    adaptive_simpson,
    arithgeo_closed_form,
    benchmark_names,
    decay_benchmark,
    dependency_bound_check,
    estimate_int,
    estimate_len,
    exp_benchmark,
    get_benchmark,
    oracle_value,
    spiking_benchmark,
    tan_benchmark,
    tower2_benchmark,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
