import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from delaydock import DomainError, MassPair, PlantParams, Verdict, equivalent_mass
from delaydock.model import neutral_band, verdict_from_margin


def test_valid_params_are_coerced_to_float():
    p = PlantParams(60, 1000, 50, 0)
    assert isinstance(p.m, float) and p.b == 50.0


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(m=0, k=1000),
        dict(m=-1, k=1000),
        dict(m=60, k=0),
        dict(m=60, k=1000, b=-1),
        dict(m=60, k=1000, h=-1e-3),
        dict(m=math.nan, k=1000),
        dict(m=60, k=math.inf),
    ],
)
def test_invalid_params_raise(kwargs):
    with pytest.raises(DomainError):
        PlantParams(**kwargs)


def test_params_are_immutable():
    p = PlantParams(60, 1000)
    with pytest.raises(AttributeError):
        p.m = 1.0
    assert p.with_(b=5).b == 5.0 and p.b == 0.0


def test_damping_ratio():
    assert PlantParams(1, 1, 2).damping_ratio == pytest.approx(1.0)


def test_equivalent_mass_examples():
    assert equivalent_mass(MassPair(100, 100)) == pytest.approx(50.0)
    # a very heavy target leaves the chaser mass unchanged
    assert equivalent_mass(MassPair(63.2, 1e12)) == pytest.approx(63.2, rel=1e-9)


@given(st.floats(1e-3, 1e6), st.floats(1e-3, 1e6))
def test_equivalent_mass_symmetric_and_bounded(a, b):
    m = equivalent_mass(MassPair(a, b))
    assert m == pytest.approx(equivalent_mass(MassPair(b, a)), rel=1e-12)
    assert m <= min(a, b) * (1 + 1e-12)
    assert m == pytest.approx(a * b / (a + b), rel=1e-12)


def test_mass_pair_rejects_nonpositive():
    with pytest.raises(DomainError):
        MassPair(0, 1)


def test_verdict_band():
    assert neutral_band(0.05) == 1e-6
    assert neutral_band(1e4) == pytest.approx(1e-5)
    assert verdict_from_margin(5e-7, 0.05).verdict is Verdict.NEUTRALLY_STABLE
    assert verdict_from_margin(2e-6, 0.05).verdict is Verdict.STABLE
    assert verdict_from_margin(-2e-6, 0.05).verdict is Verdict.UNSTABLE


def test_verdict_letters():
    assert [v.letter for v in Verdict] == ["S", "N", "U"]
