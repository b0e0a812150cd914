"""Problem files, trace serialization, and the command-line entry point.

Problem files are JSON with every number written as a rational string, so
ingestion is lossless.  Traces serialize to CSV in the same canonical rational
format and round-trip bit-exactly.  Exit codes: 0 solved, 2 the hint search
was exhausted (or a fixed-hint run aborted), 3 bad input.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import IO, Sequence

from .adaptive import Diagnostics, StepRecord, Success, solve_pivp_variable
from .driver import DriverSuccess, HintPolicy, solve_pivp_ex
from .errors import ParameterError, PivpError, ProblemFormatError
from .polyvec import MultiIndex, Poly, PolyVec
from .scalar import (
    RVector,
    decimal_str,
    format_rational,
    infnorm,
    parse_rational,
)

# exact rationals can exceed the interpreter's int<->str guard
if hasattr(sys, "set_int_max_str_digits"):
    sys.set_int_max_str_digits(50_000_000)

Term = tuple[Fraction, MultiIndex]

TRACE_HEADER = "i,t_start,delta_t,beta,omega,y_norm_after"


@dataclass(frozen=True)
class ProblemSpec:
    """A validated problem file: system, initial data, optional oracle tag."""

    name: str
    dim: int
    t0: Fraction
    y0: RVector
    polys: tuple[tuple[Term, ...], ...]
    closed_form: str | None = None


def _expect(condition: bool, message: str, location: str) -> None:
    if not condition:
        raise ProblemFormatError(message, location)


def _rational_field(value, location: str) -> Fraction:
    if not isinstance(value, str):
        raise ProblemFormatError(
            f"numbers must be rational strings, got {value!r}", location
        )
    try:
        return parse_rational(value)
    except ParameterError as exc:
        raise ProblemFormatError(str(exc), location) from exc


def parse_problem(text: str) -> ProblemSpec:
    """Parse and validate a problem file; errors carry the offending location."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(
            f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}",
            "<document>",
        ) from exc
    _expect(isinstance(raw, dict), "top level must be an object", "<document>")
    for key in ("name", "dim", "t0", "y0", "polys"):
        _expect(key in raw, f"missing required field {key!r}", "<document>")

    name = raw["name"]
    _expect(isinstance(name, str), "must be a string", "name")
    dim = raw["dim"]
    _expect(isinstance(dim, int) and dim >= 1, "must be a positive integer", "dim")
    t0 = _rational_field(raw["t0"], "t0")

    y0_raw = raw["y0"]
    _expect(isinstance(y0_raw, list), "must be an array", "y0")
    _expect(
        len(y0_raw) == dim, f"expected {dim} entries, found {len(y0_raw)}", "y0"
    )
    y0 = tuple(
        _rational_field(v, f"y0[{i}]") for i, v in enumerate(y0_raw)
    )

    polys_raw = raw["polys"]
    _expect(isinstance(polys_raw, list), "must be an array", "polys")
    _expect(
        len(polys_raw) == dim,
        f"expected {dim} components, found {len(polys_raw)}",
        "polys",
    )
    polys: list[tuple[Term, ...]] = []
    for i, comp in enumerate(polys_raw):
        _expect(isinstance(comp, list), "must be an array of terms", f"polys[{i}]")
        seen: set[MultiIndex] = set()
        terms: list[Term] = []
        for j, term in enumerate(comp):
            loc = f"polys[{i}][{j}]"
            _expect(isinstance(term, dict), "must be an object", loc)
            _expect("coeff" in term, "missing field 'coeff'", loc)
            _expect("exponents" in term, "missing field 'exponents'", loc)
            coeff = _rational_field(term["coeff"], f"{loc}.coeff")
            exps = term["exponents"]
            _expect(isinstance(exps, list), "must be an array", f"{loc}.exponents")
            _expect(
                len(exps) == dim,
                f"expected {dim} exponents, found {len(exps)}",
                f"{loc}.exponents",
            )
            _expect(
                all(isinstance(e, int) and e >= 0 for e in exps),
                "exponents must be nonnegative integers",
                f"{loc}.exponents",
            )
            alpha = tuple(exps)
            _expect(
                alpha not in seen,
                f"duplicate multi-index {alpha} within one component",
                loc,
            )
            seen.add(alpha)
            terms.append((coeff, alpha))
        polys.append(tuple(terms))

    closed_form = raw.get("closed_form")
    if closed_form is not None:
        _expect(isinstance(closed_form, str), "must be a string", "closed_form")

    return ProblemSpec(
        name=name,
        dim=dim,
        t0=t0,
        y0=y0,
        polys=tuple(polys),
        closed_form=closed_form,
    )


def serialize_problem(spec: ProblemSpec) -> str:
    """Inverse of parse_problem; round-trips bit-exactly."""
    doc = {
        "name": spec.name,
        "dim": spec.dim,
        "t0": format_rational(spec.t0),
        "y0": [format_rational(v) for v in spec.y0],
        "polys": [
            [
                {"coeff": format_rational(c), "exponents": list(alpha)}
                for c, alpha in comp
            ]
            for comp in spec.polys
        ],
    }
    if spec.closed_form is not None:
        doc["closed_form"] = spec.closed_form
    return json.dumps(doc, indent=2)


def problem_to_system(spec: ProblemSpec) -> PolyVec:
    """Build the polynomial system described by a problem file."""
    components = []
    for comp in spec.polys:
        terms = {alpha: coeff for coeff, alpha in comp}
        components.append(Poly(spec.dim, terms))
    return PolyVec(tuple(components))


def write_trace(
    trace: Sequence[StepRecord],
    diagnostics: Diagnostics,
    sink: IO[str],
    final_hint: Fraction | None = None,
) -> None:
    """CSV step log plus a summary comment line; rationals are canonical text."""
    sink.write(TRACE_HEADER + "\n")
    for record in trace:
        sink.write(
            ",".join(
                (
                    str(record.index),
                    format_rational(record.t_start),
                    format_rational(record.delta_t),
                    format_rational(record.beta),
                    str(record.omega),
                    format_rational(infnorm(record.y_after)),
                )
            )
            + "\n"
        )
    hint_text = "-" if final_hint is None else format_rational(final_hint)
    sink.write(
        f"# steps={diagnostics.steps}, sum_beta={format_rational(diagnostics.sum_beta)}, "
        f"max_rsize={diagnostics.max_rsize}, final_hint={hint_text}\n"
    )


def read_trace(text: str) -> tuple[list[dict], dict]:
    """Parse a trace CSV back into rows and the summary; bit-exact inverse."""
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or lines[0] != TRACE_HEADER:
        raise ProblemFormatError("missing or wrong header", "<trace>")
    rows = []
    summary: dict = {}
    for line in lines[1:]:
        if line.startswith("#"):
            for item in line[1:].split(","):
                key, _, value = item.strip().partition("=")
                if key in ("steps", "max_rsize"):
                    summary[key] = int(value)
                elif value == "-":
                    summary[key] = None
                else:
                    summary[key] = parse_rational(value)
            continue
        i_text, t_text, dt_text, beta_text, omega_text, norm_text = line.split(",")
        rows.append(
            {
                "i": int(i_text),
                "t_start": parse_rational(t_text),
                "delta_t": parse_rational(dt_text),
                "beta": parse_rational(beta_text),
                "omega": int(omega_text),
                "y_norm_after": parse_rational(norm_text),
            }
        )
    return rows, summary


def parse_accuracy(text: str) -> Fraction:
    """Accept either a rational or the shorthand 2^-k."""
    body = text.strip()
    if body.startswith("2^-"):
        exponent = body[3:]
        if not exponent.isdigit():
            raise ParameterError(f"malformed accuracy {text!r}")
        return Fraction(1, 2 ** int(exponent))
    return parse_rational(body)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); 2 means something else here
        raise ParameterError(message)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="pivp-solve",
        description="Certified solver for polynomial initial-value problems.",
    )
    parser.add_argument("problem", nargs="?", help="problem file (JSON)")
    parser.add_argument(
        "--builtin",
        help="named benchmark instead of a file: exp|decay|spiking:M|tower2|tan",
    )
    parser.add_argument("--time", required=True, help="target time (rational)")
    parser.add_argument(
        "--eps", default="2^-10", help="accuracy, rational or 2^-k (default 2^-10)"
    )
    parser.add_argument(
        "--hint", help="run the fixed-hint stepper once instead of the hint search"
    )
    parser.add_argument("--max-hint", help="cap for the hint search (rational)")
    parser.add_argument("--trace", help="write the step trace CSV to this path")
    parser.add_argument(
        "--quiet", action="store_true", help="print only the solution components"
    )
    return parser


def _print_value(y: RVector, quiet: bool, out: IO[str]) -> None:
    for i, v in enumerate(y):
        if quiet:
            out.write(f"{format_rational(v)}\n")
        else:
            out.write(f"y[{i}] = {format_rational(v)} ~= {decimal_str(v)}\n")


def run_cli(argv: Sequence[str], out: IO[str] = sys.stdout, err: IO[str] = sys.stderr) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(list(argv))
        if (args.problem is None) == (args.builtin is None):
            raise ParameterError("exactly one of a problem file or --builtin is required")
        if args.builtin is not None:
            from .validation import get_benchmark

            spec = get_benchmark(args.builtin).problem
        else:
            with open(args.problem, "r", encoding="utf-8") as handle:
                spec = parse_problem(handle.read())
        system = problem_to_system(spec)
        t = parse_rational(args.time)
        eps = parse_accuracy(args.eps)

        trace = None
        diagnostics = None
        final_hint = None
        if args.hint is not None:
            hint = parse_rational(args.hint)
            outcome = solve_pivp_variable(spec.t0, spec.y0, system, t, eps, hint)
            trace, diagnostics, final_hint = outcome.trace, outcome.diagnostics, hint
            if isinstance(outcome, Success):
                _print_value(outcome.value, args.quiet, out)
                status, code = "success", 0
            else:
                err.write(f"aborted ({outcome.reason.value}) at fixed hint {hint}\n")
                status, code = f"abort:{outcome.reason.name.lower()}", 2
        else:
            policy = (
                HintPolicy(max_hint=parse_rational(args.max_hint))
                if args.max_hint is not None
                else HintPolicy()
            )
            outcome = solve_pivp_ex(spec.t0, spec.y0, system, t, eps, policy)
            if isinstance(outcome, DriverSuccess):
                trace, diagnostics = outcome.trace, outcome.diagnostics
                final_hint = outcome.final_hint
                _print_value(outcome.value, args.quiet, out)
                if not args.quiet:
                    out.write(
                        f"final_hint={format_rational(outcome.final_hint)} "
                        f"attempts={outcome.attempts}\n"
                    )
                status, code = "success", 0
            else:
                last = outcome.hints_tried[-1] if outcome.hints_tried else None
                err.write(
                    "hint search exhausted after "
                    f"{outcome.attempts} attempts (last hint tried: "
                    f"{'-' if last is None else format_rational(last)}); "
                    "the solution may blow up before the target time\n"
                )
                diagnostics = outcome.last_diagnostics
                final_hint = last
                status, code = "hint-exhausted", 2

        if diagnostics is not None and not args.quiet:
            out.write(
                f"steps={diagnostics.steps} sum_beta={format_rational(diagnostics.sum_beta)} "
                f"max_rsize={diagnostics.max_rsize} taylor_calls={diagnostics.taylor_calls} "
                f"arith_ops={diagnostics.arith_ops} status={status}\n"
            )
        if args.trace is not None and trace is not None and diagnostics is not None:
            with open(args.trace, "w", encoding="utf-8") as sink:
                write_trace(trace, diagnostics, sink, final_hint=final_hint)
        return code
    except PivpError as exc:
        err.write(f"error: {exc}\n")
        return 3
    except OSError as exc:
        err.write(f"error: {exc}\n")
        return 3


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))
