from fractions import Fraction as F
from math import factorial

import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from pivp import (
    Poly,
    PolyVec,
    ceil_neg_log2,
    compute_taylor,
    evaluate_truncated,
    remainder_bound,
    round_to,
    series_coefficients,
)
from pivp.errors import DimensionError, DomainError, ParameterError
from tests.conftest import rationals
from tests.oracles import bell_numbers, exp_interval
from tests.test_polyvec import small_polyvecs, spiking_system

EXP_SYS = PolyVec((Poly(1, {(1,): 1}),))  # y' = y
GEO_SYS = PolyVec((Poly(1, {(2,): 1}),))  # y' = y^2, solution 1/(1-t)
SC_SYS = PolyVec((Poly(2, {(0, 1): 1}), Poly(2, {(1, 0): -1})))  # sine/cosine
TAN_SYS = PolyVec((Poly(1, {(0,): 1, (2,): 1}),))  # y' = 1 + y^2
TOWER_SYS = PolyVec((Poly(2, {(1, 0): 1}), Poly(2, {(1, 1): 1})))


class TestSeriesCoefficients:
    def test_exponential(self):
        s = series_coefficients(EXP_SYS, (F(1),), 4)
        assert s.coefficients == ((F(1), F(1), F(1, 2), F(1, 6)),)

    def test_geometric(self):
        s = series_coefficients(GEO_SYS, (F(1),), 4)
        assert s.coefficients == ((F(1), F(1), F(1), F(1)),)

    def test_sine_cosine(self):
        s = series_coefficients(SC_SYS, (F(0), F(1)), 4)
        assert s.coefficients[0] == (F(0), F(1), F(0), F(-1, 6))
        assert s.coefficients[1] == (F(1), F(0), F(-1, 2), F(0))

    def test_exponential_long(self):
        s = series_coefficients(EXP_SYS, (F(1),), 12)
        assert s.coefficients[0] == tuple(F(1, factorial(n)) for n in range(12))

    def test_spiking_closed_form(self):
        # y = M t e^-t and z = e^-t around 0
        s = series_coefficients(spiking_system(4), (F(0), F(1)), 8)
        expected_y = (F(0),) + tuple(
            4 * F((-1) ** (n - 1), factorial(n - 1)) for n in range(1, 8)
        )
        expected_z = tuple(F((-1) ** n, factorial(n)) for n in range(8))
        assert s.coefficients == (expected_y, expected_z)

    def test_tower_gives_bell_numbers(self):
        s = series_coefficients(TOWER_SYS, (F(1), F(1)), 7)
        bells = bell_numbers(7)
        assert s.coefficients[1] == tuple(
            F(bells[n], factorial(n)) for n in range(7)
        )

    def test_tangent_series(self):
        # classical expansion x + x^3/3 + 2x^5/15 + 17x^7/315
        s = series_coefficients(TAN_SYS, (F(0),), 8)
        assert s.coefficients[0] == (
            F(0), F(1), F(0), F(1, 3), F(0), F(2, 15), F(0), F(17, 315),
        )

    def test_rejects_bad_arguments(self):
        with pytest.raises(ParameterError):
            series_coefficients(EXP_SYS, (F(1),), 0)
        with pytest.raises(DimensionError):
            series_coefficients(EXP_SYS, (F(1), F(2)), 3)


def _poly_of_series(
    poly: Poly, series: list[list[F]], order: int
) -> list[F]:
    """Coefficients of poly(series) mod t^order, by direct term expansion."""
    result = [F(0)] * order
    for alpha, coeff in poly.terms.items():
        prod = [F(0)] * order
        prod[0] = F(1)
        for var, exponent in enumerate(alpha):
            for _ in range(exponent):
                nxt = [F(0)] * order
                for i in range(order):
                    if prod[i] == 0:
                        continue
                    for j in range(order - i):
                        nxt[i + j] += prod[i] * series[var][j]
                prod = nxt
        for i in range(order):
            result[i] += coeff * prod[i]
    return result


class TestDefiningEquation:
    @settings(max_examples=40)
    @given(small_polyvecs(max_dim=2, max_degree=3), st.data())
    def test_series_satisfies_the_ode(self, p, data):
        """The truncation is characterized by Y(0) = y0 and Y' = p(Y) mod t^(w-1)."""
        d = p.dimension
        order = data.draw(st.integers(min_value=2, max_value=7))
        y0 = tuple(
            data.draw(rationals(min_value=-2, max_value=2, max_denominator=6))
            for _ in range(d)
        )
        s = series_coefficients(p, y0, order)
        series = [list(comp) for comp in s.coefficients]
        for i, comp in enumerate(s.coefficients):
            assert comp[0] == y0[i]
        for i, poly in enumerate(p.components):
            rhs = _poly_of_series(poly, series, order - 1)
            derivative = [
                (n + 1) * series[i][n + 1] for n in range(order - 1)
            ]
            assert derivative == rhs


class TestEvaluateTruncated:
    def test_exponential_at_half(self):
        s = series_coefficients(EXP_SYS, (F(1),), 3)
        assert evaluate_truncated(s, F(1, 2)) == (F(13, 8),)

    def test_zero_offset_returns_initial_state(self):
        s = series_coefficients(spiking_system(), (F(0), F(1)), 6)
        assert evaluate_truncated(s, F(0)) == (F(0), F(1))

    def test_geometric_partial_sum(self):
        s = series_coefficients(GEO_SYS, (F(1),), 4)
        assert evaluate_truncated(s, F(1, 3)) == (F(40, 27),)


class TestComputeTaylor:
    def test_exponential_within_budget(self):
        mu = F(1, 2**10)
        value = compute_taylor(EXP_SYS, (F(1),), 3, mu, F(1, 2))
        assert abs(value[0] - F(13, 8)) <= mu

    def test_huge_budget_still_rounds_exact_value(self):
        value = compute_taylor(EXP_SYS, (F(1),), 3, F(1), F(1, 2))
        assert abs(value[0] - F(13, 8)) <= 1

    def test_geometric_partial_sum_order_8(self):
        # frozen oracle: sum_{k<8} (1/4)^k = (1 - 4^-8) / (3/4), exactly
        expected = (1 - F(1, 4**8)) / F(3, 4)
        assert expected == F(21845, 16384)
        value = compute_taylor(GEO_SYS, (F(1),), 8, F(1, 2**20), F(1, 4))
        assert abs(value[0] - expected) <= F(1, 2**20)

    @settings(max_examples=30)
    @given(small_polyvecs(max_dim=2, max_degree=3), st.data())
    def test_matches_rounded_exact_truncation(self, p, data):
        d = p.dimension
        order = data.draw(st.integers(min_value=1, max_value=6))
        y0 = tuple(
            data.draw(rationals(min_value=-2, max_value=2, max_denominator=6))
            for _ in range(d)
        )
        dt = data.draw(rationals(min_value=F(-1, 2), max_value=F(1, 2), max_denominator=32))
        mu = data.draw(st.sampled_from([F(1, 2**5), F(1, 2**12), F(3, 1000)]))
        fused = compute_taylor(p, y0, order, mu, dt)
        exact = evaluate_truncated(series_coefficients(p, y0, order), dt)
        q = ceil_neg_log2(mu) + 1
        assert fused == tuple(round_to(v, q) for v in exact)
        assert all(abs(a - b) <= mu for a, b in zip(fused, exact))
        assert all((v * 2**q).denominator == 1 for v in fused)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ParameterError):
            compute_taylor(EXP_SYS, (F(1),), 3, F(0), F(1, 2))
        with pytest.raises(ParameterError):
            compute_taylor(EXP_SYS, (F(1),), 0, F(1, 4), F(1, 2))


class TestRemainderBound:
    def test_zero_time(self):
        assert remainder_bound(GEO_SYS, (F(1),), 3, F(0)) == 0

    def test_geometric_tail_is_tight(self):
        bound = remainder_bound(GEO_SYS, (F(1),), 3, F(1, 2))
        assert bound == F(1, 4)
        # true remainder of 1/(1-t) after 3 terms at t=1/2 is exactly 1/4
        truncated = evaluate_truncated(series_coefficients(GEO_SYS, (F(1),), 3), F(1, 2))
        assert F(2) - truncated[0] == F(1, 4)

    def test_degree_one_system_uses_clamped_degree(self):
        bound = remainder_bound(EXP_SYS, (F(1),), 2, F(1, 4))
        assert bound == F(1, 12)
        lo, hi = exp_interval(F(1, 4), bits=30)
        truncated = F(1) + F(1, 4)
        assert hi - truncated <= bound

    def test_domain_error_outside_contraction(self):
        with pytest.raises(DomainError):
            remainder_bound(GEO_SYS, (F(1),), 3, F(1))

    @settings(max_examples=40)
    @given(st.integers(min_value=1, max_value=10), st.integers(min_value=1, max_value=200))
    def test_dominates_true_exponential_tail(self, n, numerator):
        t = F(numerator, 512)  # within (0, 1/2] and |Mt| < 1 for this system
        bound = remainder_bound(EXP_SYS, (F(1),), n, t)
        truncated = evaluate_truncated(series_coefficients(EXP_SYS, (F(1),), n), t)
        lo, hi = exp_interval(t, bits=60)
        assert hi - truncated[0] <= bound + F(1, 2**55)
