from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings
import hypothesis.strategies as st

settings.register_profile(
    "exact-arith",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("exact-arith")


def rationals(min_value=None, max_value=None, max_denominator=64):
    return st.fractions(
        min_value=min_value, max_value=max_value, max_denominator=max_denominator
    )


@pytest.fixture(scope="session")
def eps10():
    return Fraction(1, 2**10)


@pytest.fixture(scope="session")
def eps30():
    return Fraction(1, 2**30)
