"""Ground truth the solver can be checked against.

Three layers live here:

* certified rational enclosures of the transcendental values the benchmark
  solutions need (exp, sin/cos/tan, pi/2), built from truncated series with
  explicit remainder bounds, no floating point;
* a registry of benchmark systems whose solutions are known in closed form,
  each carrying a problem description and an evaluator with a proven error
  bound;
* exact-arithmetic adaptive Simpson quadrature with a reported error bound,
  used to estimate the error-growth integral and the pseudo-length of a
  trajectory, plus testable forms of the auxiliary identities (the
  arithmetico-geometric closed form and the neighbouring-trajectory bound).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .errors import DimensionError, DomainError, ParameterError
from .iolayer import ProblemSpec, problem_to_system
from .polyvec import PolyVec
from .scalar import (
    RVector,
    RationalLike,
    as_rational,
    exp_upper,
    infnorm,
    round_to,
)

ORACLE_QUAD_PREC = 60  # oracle bits used inside quadrature integrands


# ---------------------------------------------------------------------------
# certified scalar enclosures


def _floor_to(x: Fraction, q: int) -> Fraction:
    return Fraction((x.numerator << q) // x.denominator, 1 << q)


def _ceil_to(x: Fraction, q: int) -> Fraction:
    return -_floor_to(-x, q)


def _outward(lo: Fraction, hi: Fraction, q: int) -> tuple[Fraction, Fraction]:
    """Round an enclosure outward to the 2^-q grid (keeps rationals small)."""
    return _floor_to(lo, q), _ceil_to(hi, q)


def _exp_series_enclosure(x: Fraction, bits: int) -> tuple[Fraction, Fraction]:
    """[lo, hi] containing exp(x) for x >= 0, width <= 2^-bits before rounding."""
    term = Fraction(1)
    total = Fraction(1)
    target = Fraction(1, 1 << bits)
    j = 0
    while True:
        j += 1
        term *= x / j
        total += term
        if x < j + 2:
            head = term * x / (j + 1)
            tail = head / (1 - x / (j + 2))
            if tail <= target:
                return _outward(total, total + tail, bits + 4)


def exp_enclosure(x: RationalLike, prec: int) -> tuple[Fraction, Fraction]:
    """lo <= exp(x) <= hi with hi - lo <= 2^-prec, any rational x."""
    x = as_rational(x)
    if x >= 0:
        return _exp_series_enclosure(x, prec + 1)
    lo_pos, hi_pos = _exp_series_enclosure(-x, prec + 1)
    # reciprocal of an enclosure of exp(-x) >= 1; width can only shrink
    return _outward(1 / hi_pos, 1 / lo_pos, prec + 4)


def sin_cos_enclosure(
    x: RationalLike, prec: int
) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    """(sin_lo, sin_hi, cos_lo, cos_hi); every derivative of sin/cos is
    bounded by 1, so the first omitted series order bounds both remainders."""
    x = as_rational(x)
    target = Fraction(1, 1 << (prec + 1))
    sin_sum = Fraction(0)
    cos_sum = Fraction(1)
    term = Fraction(1)  # |x|^j / j!
    j = 0
    sign = 1
    while True:
        j += 1
        term *= abs(x) / j
        if j % 2 == 1:
            sin_sum += sign * term * (1 if x >= 0 else -1)
        else:
            sign = -sign
            cos_sum += sign * term
        bound = term * abs(x) / (j + 1)
        if bound <= target and j >= 2:
            slo, shi = _outward(sin_sum - bound, sin_sum + bound, prec + 4)
            clo, chi = _outward(cos_sum - bound, cos_sum + bound, prec + 4)
            return slo, shi, clo, chi


def tan_enclosure(x: RationalLike, prec: int) -> tuple[Fraction, Fraction]:
    """lo <= tan(x) <= hi with hi - lo <= 2^-prec, for |x| below pi/2."""
    x = as_rational(x)
    bits = prec + 8
    while True:
        slo, shi, clo, chi = sin_cos_enclosure(x, bits)
        if clo > 0:
            lo, hi = slo / chi, shi / clo
            if hi - lo <= Fraction(1, 1 << prec):
                return _outward(lo, hi, prec + 4)
        bits += max(8, bits // 2)


def _arctan_recip_enclosure(q: int, bits: int) -> tuple[Fraction, Fraction]:
    """Enclosure of arctan(1/q) via the alternating series, q >= 2."""
    x = Fraction(1, q)
    power = x
    total = x
    j = 1
    target = Fraction(1, 1 << bits)
    while True:
        power *= x * x
        j += 2
        term = power / j
        total += term if (j % 4 == 1) else -term
        nxt = power * x * x / (j + 2)
        if nxt <= target:
            return total - nxt, total + nxt


def pi_half_bounds(prec: int = 64) -> tuple[Fraction, Fraction]:
    """Rational enclosure of pi/2 (Machin: pi = 16 atan(1/5) - 4 atan(1/239))."""
    lo5, hi5 = _arctan_recip_enclosure(5, prec + 8)
    lo239, hi239 = _arctan_recip_enclosure(239, prec + 8)
    return _outward((16 * lo5 - 4 * hi239) / 2, (16 * hi5 - 4 * lo239) / 2, prec + 4)


# ---------------------------------------------------------------------------
# closed-form benchmark registry

Enclosure = tuple[Fraction, Fraction]
EnclosureBuilder = Callable[[Fraction, int], Sequence[Enclosure]]


@dataclass(frozen=True)
class ClosedForm:
    """A benchmark system whose exact solution is known.

    ``blow_up`` is a rational lower bound on the escape time (None when the
    solution is entire); evaluation is refused from there on.  The evaluator
    returns a rational vector within 2^-prec of the true solution.
    """

    name: str
    dimension: int
    blow_up: Fraction | None
    problem: ProblemSpec
    _builder: EnclosureBuilder

    def value(self, t: RationalLike, prec: int) -> RVector:
        t = as_rational(t)
        if self.blow_up is not None and abs(t) >= self.blow_up:
            raise DomainError(
                f"{self.name}: time {t} is at or past the blow-up bound {self.blow_up}"
            )
        bits = prec + 8
        target = Fraction(1, 1 << (prec + 1))
        while True:
            pairs = self._builder(t, bits)
            if all(hi - lo <= target for lo, hi in pairs):
                return tuple(round_to((lo + hi) / 2, prec + 4) for lo, hi in pairs)
            bits += max(8, bits // 2)

    def system(self) -> PolyVec:
        return problem_to_system(self.problem)


def oracle_value(cf: ClosedForm, t: RationalLike, prec: int) -> RVector:
    """Solution of the benchmark at time t, max-norm error at most 2^-prec."""
    return cf.value(t, prec)


def _scaled(c: Fraction, pair: Enclosure) -> Enclosure:
    lo, hi = c * pair[0], c * pair[1]
    return (lo, hi) if lo <= hi else (hi, lo)


def _spec(name, dim, y0, polys, closed_form):
    return ProblemSpec(
        name=name,
        dim=dim,
        t0=Fraction(0),
        y0=tuple(as_rational(v) for v in y0),
        polys=polys,
        closed_form=closed_form,
    )


def exp_benchmark(y0: RationalLike = 1) -> ClosedForm:
    """y' = y: the solution is y0 * e^t."""
    y0 = as_rational(y0)
    problem = _spec(
        "exp", 1, (y0,), (((Fraction(1), (1,)),),), "exp" if y0 == 1 else None
    )

    def build(t, bits):
        return [_scaled(y0, exp_enclosure(t, bits))]

    return ClosedForm("exp", 1, None, problem, build)


def decay_benchmark(y0: RationalLike = 1) -> ClosedForm:
    """y' = -y: the solution is y0 * e^-t."""
    y0 = as_rational(y0)
    problem = _spec(
        "decay", 1, (y0,), (((Fraction(-1), (1,)),),), "decay" if y0 == 1 else None
    )

    def build(t, bits):
        return [_scaled(y0, exp_enclosure(-t, bits))]

    return ClosedForm("decay", 1, None, problem, build)


def spiking_benchmark(pulse: RationalLike = 4) -> ClosedForm:
    """y' = M z - y, z' = -z from (0, 1): y = M t e^-t rises and dies away."""
    M = as_rational(pulse)
    if M < 0:
        raise ParameterError(f"pulse height must be nonnegative, got {M}")
    problem = _spec(
        "spiking",
        2,
        (Fraction(0), Fraction(1)),
        (
            ((M, (0, 1)), (Fraction(-1), (1, 0))),
            ((Fraction(-1), (0, 1)),),
        ),
        f"spiking:{M}",
    )

    def build(t, bits):
        decay_pair = exp_enclosure(-t, bits)
        return [_scaled(M * t, decay_pair), decay_pair]

    return ClosedForm(f"spiking:{M}", 2, None, problem, build)


def tower2_benchmark() -> ClosedForm:
    """y1' = y1, y2' = y1 y2 from (1, 1): y1 = e^t, y2 = e^(e^t - 1)."""
    problem = _spec(
        "tower2",
        2,
        (Fraction(1), Fraction(1)),
        (
            ((Fraction(1), (1, 0)),),
            ((Fraction(1), (1, 1)),),
        ),
        "tower2",
    )

    def build(t, bits):
        inner_lo, inner_hi = exp_enclosure(t, bits)
        outer_lo = exp_enclosure(inner_lo - 1, bits)[0]
        outer_hi = exp_enclosure(inner_hi - 1, bits)[1]
        return [(inner_lo, inner_hi), (outer_lo, outer_hi)]

    return ClosedForm("tower2", 2, None, problem, build)


def tan_benchmark() -> ClosedForm:
    """y' = 1 + y^2 from 0: the solution is tan(t), escaping at pi/2."""
    problem = _spec(
        "tan",
        1,
        (Fraction(0),),
        (((Fraction(1), (0,)), (Fraction(1), (2,))),),
        "tan",
    )

    def build(t, bits):
        return [tan_enclosure(t, bits)]

    return ClosedForm("tan", 1, pi_half_bounds(64)[0], problem, build)


def benchmark_names() -> tuple[str, ...]:
    return ("exp", "decay", "spiking:M", "tower2", "tan")


def get_benchmark(tag: str) -> ClosedForm:
    """Look up a benchmark by name; spiking takes its pulse height after a colon."""
    body = tag.strip()
    if body == "exp":
        return exp_benchmark()
    if body == "decay":
        return decay_benchmark()
    if body == "tower2":
        return tower2_benchmark()
    if body == "tan":
        return tan_benchmark()
    if body == "spiking" or body.startswith("spiking:"):
        _, _, arg = body.partition(":")
        return spiking_benchmark(as_rational(arg) if arg else 4)
    raise ParameterError(
        f"unknown benchmark {tag!r}; available: {', '.join(benchmark_names())}"
    )


# ---------------------------------------------------------------------------
# quadrature with a reported error bound


@dataclass(frozen=True)
class Estimate:
    """A value plus a certified-style half-width from the estimator."""

    value: Fraction
    error: Fraction


def _simpson(fa, fm, fb, width):
    return width / 6 * (fa + 4 * fm + fb)


def adaptive_simpson(
    f: Callable[[Fraction], Fraction],
    a: RationalLike,
    b: RationalLike,
    abs_tol: RationalLike,
    max_depth: int = 48,
) -> Estimate:
    """Adaptive Simpson on exact rationals.

    The reported error is the accumulated Richardson estimate of the accepted
    panels (|S_fine - S_coarse| / 15 each); panels at the depth cap contribute
    their full discrepancy instead.
    """
    a, b, abs_tol = as_rational(a), as_rational(b), as_rational(abs_tol)
    if abs_tol <= 0:
        raise ParameterError(f"tolerance must be positive, got {abs_tol}")
    if a == b:
        return Estimate(Fraction(0), Fraction(0))
    if a > b:
        inner = adaptive_simpson(f, b, a, abs_tol, max_depth)
        return Estimate(-inner.value, inner.error)

    def recurse(lo, hi, flo, fmid, fhi, whole, tol, depth):
        mid = (lo + hi) / 2
        lmid = (lo + mid) / 2
        rmid = (mid + hi) / 2
        fl = f(lmid)
        fr = f(rmid)
        left = _simpson(flo, fl, fmid, mid - lo)
        right = _simpson(fmid, fr, fhi, hi - mid)
        delta = left + right - whole
        if abs(delta) <= 15 * tol or depth >= max_depth:
            slack = abs(delta) if depth >= max_depth else abs(delta) / 15
            return left + right + delta / 15, slack
        lv, le = recurse(lo, mid, flo, fl, fmid, left, tol / 2, depth + 1)
        rv, re = recurse(mid, hi, fmid, fr, fhi, right, tol / 2, depth + 1)
        return lv + rv, le + re

    mid = (a + b) / 2
    fa, fm, fb = f(a), f(mid), f(b)
    value, error = recurse(a, b, fa, fm, fb, _simpson(fa, fm, fb, b - a), abs_tol, 0)
    # keep downstream rationals small; the grid shift is folded into the bound
    return Estimate(round_to(value, 96), error + Fraction(1, 1 << 95))


def _bisect_root(
    g: Callable[[Fraction], Fraction], lo: Fraction, hi: Fraction, width: Fraction
) -> Fraction:
    """One sign change of g inside [lo, hi], located to the given width."""
    glo = g(lo)
    while hi - lo > width:
        mid = (lo + hi) / 2
        gmid = g(mid)
        if gmid == 0:
            return mid
        if (glo < 0) == (gmid < 0):
            lo, glo = mid, gmid
        else:
            hi = mid
    return (lo + hi) / 2


def locate_kinks(
    cf: ClosedForm,
    a: RationalLike,
    b: RationalLike,
    shift: RationalLike = 0,
    scan_points: int = 128,
) -> list[Fraction]:
    """Places where max(1, shift + ||y(u)||) or the norm itself loses
    smoothness: clamp crossings, component swaps, component sign changes.

    Sign changes are found on a uniform scan and bisected to width 2^-40;
    tangential touches without a sign change are left to the quadrature's own
    refinement.
    """
    a, b, shift = as_rational(a), as_rational(b), as_rational(shift)
    if b <= a:
        return []
    prec = 50
    d = cf.dimension

    functions: list[Callable[[Fraction], Fraction]] = [
        lambda u: shift + infnorm(cf.value(u, prec)) - 1
    ]
    for i in range(d):
        functions.append(lambda u, i=i: cf.value(u, prec)[i])
        for j in range(i + 1, d):
            functions.append(
                lambda u, i=i, j=j: abs(cf.value(u, prec)[i])
                - abs(cf.value(u, prec)[j])
            )

    width = Fraction(1, 1 << 40)
    found: list[Fraction] = []
    step = (b - a) / scan_points
    for g in functions:
        previous_u = a
        previous_sign = g(a) < 0
        for idx in range(1, scan_points + 1):
            u = a + idx * step
            sign = g(u) < 0
            if sign != previous_sign:
                found.append(_bisect_root(g, previous_u, u, width))
            previous_u, previous_sign = u, sign
    return sorted({p for p in found if a < p < b})


def _integrate_pieces(
    f: Callable[[Fraction], Fraction],
    points: list[Fraction],
    rel_tol: Fraction,
) -> Estimate:
    """Relative-tolerance integration over consecutive [points] pieces."""
    coarse = Fraction(0)
    for lo, hi in zip(points, points[1:]):
        mid = (lo + hi) / 2
        coarse += _simpson(f(lo), f(mid), f(hi), hi - lo)
    scale = max(abs(coarse), Fraction(1, 1 << 20))
    total_len = points[-1] - points[0]
    value = Fraction(0)
    error = Fraction(0)
    for lo, hi in zip(points, points[1:]):
        piece_tol = rel_tol * scale * (hi - lo) / total_len
        piece = adaptive_simpson(f, lo, hi, piece_tol)
        value += piece.value
        error += piece.error
    return Estimate(value, error)


def estimate_int(
    p: PolyVec,
    cf: ClosedForm,
    t0: RationalLike,
    t: RationalLike,
    eps: RationalLike,
    tol: RationalLike,
    scan_points: int = 128,
) -> Estimate:
    """Error-growth integral of the trajectory:
    integral of k * mass * max(1, eps + ||y(u)||)^(k-1) du, k = max(2, deg p).

    Returns the quadrature value and a bound combining the Richardson
    estimate with the oracle's evaluation error.
    """
    t0, t, eps, tol = map(as_rational, (t0, t, eps, tol))
    if tol <= 0:
        raise ParameterError(f"tolerance must be positive, got {tol}")
    if t == t0:
        return Estimate(Fraction(0), Fraction(0))
    k = max(2, p.degree())
    mass = p.coefficient_mass()
    peak = [Fraction(1)]

    def integrand(u: Fraction) -> Fraction:
        norm = infnorm(cf.value(u, ORACLE_QUAD_PREC))
        if norm > peak[0]:
            peak[0] = norm
        return k * mass * max(Fraction(1), eps + norm) ** (k - 1)

    points = [t0, *locate_kinks(cf, t0, t, shift=eps, scan_points=scan_points), t]
    base = _integrate_pieces(integrand, points, tol)
    # the oracle is off by at most 2^-ORACLE_QUAD_PREC per evaluation
    derivative = k * mass * (k - 1) * (1 + eps + peak[0]) ** max(0, k - 2)
    oracle_term = abs(t - t0) * derivative * Fraction(1, 1 << ORACLE_QUAD_PREC)
    return Estimate(base.value, base.error + oracle_term)


def estimate_len(
    p: PolyVec,
    cf: ClosedForm,
    t0: RationalLike,
    t: RationalLike,
    tol: RationalLike,
    scan_points: int = 128,
) -> Estimate:
    """Pseudo-length of the trajectory:
    integral of mass * max(1, ||y(u)||)^k du, k = max(2, deg p)."""
    t0, t, tol = map(as_rational, (t0, t, tol))
    if tol <= 0:
        raise ParameterError(f"tolerance must be positive, got {tol}")
    if t == t0:
        return Estimate(Fraction(0), Fraction(0))
    k = max(2, p.degree())
    mass = p.coefficient_mass()
    peak = [Fraction(1)]

    def integrand(u: Fraction) -> Fraction:
        norm = infnorm(cf.value(u, ORACLE_QUAD_PREC))
        if norm > peak[0]:
            peak[0] = norm
        return mass * max(Fraction(1), norm) ** k

    points = [t0, *locate_kinks(cf, t0, t, shift=0, scan_points=scan_points), t]
    base = _integrate_pieces(integrand, points, tol)
    derivative = mass * k * (1 + peak[0]) ** (k - 1)
    oracle_term = abs(t - t0) * derivative * Fraction(1, 1 << ORACLE_QUAD_PREC)
    return Estimate(base.value, base.error + oracle_term)


# ---------------------------------------------------------------------------
# auxiliary identities in testable form


def arithgeo_closed_form(
    u0: RationalLike, a: Sequence[RationalLike], b: Sequence[RationalLike]
) -> Fraction:
    """Closed form of u_{n+1} = a_n u_n + b_n:
    u_n = u0 * prod(a) + sum_i b_i * prod_{j>i} a_j."""
    if len(a) != len(b):
        raise DimensionError(f"length mismatch: {len(a)} factors vs {len(b)} offsets")
    a = [as_rational(v) for v in a]
    b = [as_rational(v) for v in b]
    suffix = Fraction(1)
    total = Fraction(0)
    for factor, offset in zip(reversed(a), reversed(b)):
        total += offset * suffix
        suffix *= factor
    return as_rational(u0) * suffix + total


@dataclass(frozen=True)
class DependencyCheck:
    """Outcome of one neighbouring-trajectory comparison."""

    hypothesis_met: bool
    holds: bool | None
    envelope: Fraction
    distance: Fraction


def dependency_bound_check(
    p: PolyVec,
    cf_y: ClosedForm,
    cf_z: ClosedForm,
    t: RationalLike,
    eps: RationalLike,
    prec: int = 40,
) -> DependencyCheck:
    """Does ||z(t) - y(t)|| stay below the growth envelope
    ||z0 - y0|| * exp(k * mass * integral of (eps + ||y(u)||)^(k-1))?

    The envelope is computed as a slight upper bound (quadrature error and
    exp rounding both pushed upward), so hypothesis_met (envelope < eps) is
    conservative.  holds is None when the hypothesis fails, since the bound
    is then not asserted by the theory.  The envelope is increasing in t, so
    checking it at the endpoint covers the whole interval.
    """
    t, eps = as_rational(t), as_rational(eps)
    y0 = cf_y.problem.y0
    z0 = cf_z.problem.y0
    if len(y0) != len(z0):
        raise DimensionError("trajectories have different dimensions")
    start_gap = infnorm(tuple(b - a for a, b in zip(y0, z0)))
    k = max(2, p.degree())
    mass = p.coefficient_mass()

    def integrand(u: Fraction) -> Fraction:
        return (eps + infnorm(cf_y.value(u, ORACLE_QUAD_PREC))) ** (k - 1)

    grown = adaptive_simpson(integrand, cf_y.problem.t0, t, Fraction(1, 1 << 30))
    exponent_hi = k * mass * (grown.value + grown.error)
    envelope = start_gap * exp_upper(exponent_hi, prec + 8)
    hypothesis_met = envelope < eps
    y_t = cf_y.value(t, prec + 4)
    z_t = cf_z.value(t, prec + 4)
    distance = infnorm(tuple(b - a for a, b in zip(y_t, z_t)))
    holds = None
    if hypothesis_met:
        holds = distance <= envelope + Fraction(1, 1 << (prec - 2))
    return DependencyCheck(
        hypothesis_met=hypothesis_met, holds=holds, envelope=envelope, distance=distance
    )
