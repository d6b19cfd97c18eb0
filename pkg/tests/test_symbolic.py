import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cosrays.symbolic import (
    AddressSyntaxError,
    ExternalAddress,
    Itinerary,
    NotExponentiallyBounded,
    PeriodicTail,
    Symbol,
    format_address,
    growth_inverse,
    growth_iterate,
    is_exponentially_bounded,
    minimal_potential,
    parse_address,
    shift,
    shift_n,
    sym,
)

symbols = st.builds(Symbol, st.integers(-50, 50), st.sampled_from(["L", "R"]))
addresses = st.builds(
    lambda pre, blk: ExternalAddress(tuple(pre), PeriodicTail(tuple(blk))),
    st.lists(symbols, max_size=4),
    st.lists(symbols, min_size=1, max_size=4),
)


def x0_generator(x0):
    """|s_k| = round(F^(k-1)(x0)); entries past double range raise OverflowError."""
    def rule(k):
        v = growth_iterate(x0, k - 1)
        if v.saturated:
            raise OverflowError("entry beyond double range")
        return Symbol(round(v.value), "R")
    return ExternalAddress.generated(rule, growth=x0)


def test_growth_iterate_values():
    assert growth_iterate(0.0, 5).value == 0.0
    assert growth_iterate(1.0, 1).value == pytest.approx(math.e - 1, rel=1e-15)
    # oracle: 50-digit evaluation of F(F(F(1)))
    mpmath.mp.dps = 50
    x = mpmath.mpf(1)
    for _ in range(3):
        x = mpmath.expm1(x)
    assert growth_iterate(1.0, 3).value == pytest.approx(float(x), rel=1e-13)


def test_growth_iterate_saturates():
    v = growth_iterate(5.0, 4)
    assert v.saturated and v.value == math.inf
    assert not growth_iterate(2.0, 2).saturated


@given(st.floats(0.0, 5.0), st.floats(1e-6, 1.0), st.integers(1, 3))
def test_growth_strictly_increasing(t, dt, k):
    a, b = growth_iterate(t, k), growth_iterate(t + dt, k)
    if not b.saturated:
        assert b.value > a.value


@given(st.floats(0.01, 20.0), st.integers(0, 3))
def test_growth_inverse_roundtrip(t, k):
    y = growth_iterate(t, k)
    if not y.saturated:
        assert growth_inverse(y.value, k) == pytest.approx(t, rel=1e-9)


def test_shift_examples():
    assert shift(parse_address("(0R)*")).same_sequence(parse_address("(0R)*"))
    s = ExternalAddress((sym(3, "L"), sym(1, "R")), PeriodicTail((sym(0, "R"),)))
    assert shift(s) == ExternalAddress((sym(1, "R"),), PeriodicTail((sym(0, "R"),)))
    assert shift(parse_address("(1R 2L)*")) == parse_address("(2L 1R)*")


@given(st.lists(symbols, min_size=1, max_size=5))
def test_shift_period_returns_to_start(block):
    s = ExternalAddress((), PeriodicTail(tuple(block)))
    assert shift_n(s, len(block)).entries(64) == s.entries(64)


@given(addresses, st.integers(1, 20))
def test_shift_entry_relation(s, k):
    assert shift(s).entry(k) == s.entry(k + 1)


@given(addresses)
def test_literal_roundtrip(s):
    text = format_address(s)
    assert parse_address(text) == s
    assert format_address(parse_address(text)) == text


@given(addresses)
def test_canonical_same_sequence(s):
    assert s.canonical().entries(40) == s.entries(40)


@pytest.mark.parametrize("text", ["", "0R", "(0X)*", "(1R", "()*"])
def test_parse_rejects(text):
    with pytest.raises(AddressSyntaxError):
        parse_address(text)


def test_exponentially_bounded_examples():
    assert is_exponentially_bounded(parse_address("(0R)*"))
    assert is_exponentially_bounded(ExternalAddress((sym(10**6, "R"),), PeriodicTail((sym(0, "L"),))))
    s = x0_generator(2.0)
    assert is_exponentially_bounded(s, probe_depth=12)
    # direct check of the defining inequality at x = 2
    for k in range(1, 4):
        assert abs(s.entry(k).index) <= growth_iterate(2.0, k - 1).value + 0.5


def test_minimal_potential_bounded_is_zero():
    assert minimal_potential(parse_address("(0R)*")) == 0.0
    assert minimal_potential(parse_address("5R 5R (0R)*")) == 0.0
    assert minimal_potential(parse_address("(3L -2R 1R)*")) == 0.0


def test_minimal_potential_x0_generator():
    t_s = minimal_potential(x0_generator(3.0))
    assert t_s == pytest.approx(math.log(4.0), abs=1e-8)
    # brute-force oracle: the ratio |s_k| / F^k(t) shrinks above ln 4 and not below
    mpmath.mp.dps = 60

    def ratio(t, k):
        num, den = mpmath.mpf(3), mpmath.expm1(mpmath.mpf(t))
        for _ in range(k - 1):
            num, den = mpmath.expm1(num), mpmath.expm1(den)
        return num / den

    assert ratio(math.log(4) + 0.01, 4) < ratio(math.log(4) + 0.01, 3) < 1
    assert ratio(math.log(4) - 0.01, 4) > ratio(math.log(4) - 0.01, 3) > 1


def test_minimal_potential_shift_relation():
    s = x0_generator(3.0)
    t0 = minimal_potential(s)
    t1 = minimal_potential(shift(s))
    assert math.expm1(t0) == pytest.approx(t1, abs=1e-7)


def _ratios(s, t, n):
    bound = max(abs(x.index) for x in s.entries(12)) + 1
    out = []
    for k in range(1, n + 1):
        f = growth_iterate(t, k)
        out.append(0.0 if f.saturated else bound / f.value)
    return out


@given(addresses, st.floats(1.0, 5.0))
@settings(max_examples=50)
def test_bounded_ratio_vanishes_within_20(s, t):
    assert min(_ratios(s, t, 20)) < 1e-6


@given(addresses, st.floats(0.1, 1.0))
@settings(max_examples=50)
def test_bounded_ratio_decreases_for_small_t(s, t):
    # slow start: F(t) ~ t + t^2/2 needs about 2/t steps to reach order one
    r = _ratios(s, t, 80)
    assert all(b <= a for a, b in zip(r, r[1:]))
    assert r[-1] < 1e-6


def test_not_exponentially_bounded_error():
    def rule(k):
        # tower growth far beyond any F^(k-1)(x)
        return Symbol(10 ** (10 * k * k), "R")
    s = ExternalAddress.generated(rule)
    with pytest.raises(NotExponentiallyBounded):
        minimal_potential(s, probe_depth=3)


def test_itinerary_half_integers():
    it = Itinerary.from_labels([0, 0.5, -1.5])
    assert it.twice == (0, 1, -3)
    assert str(it) == "0 1/2 -3/2"
    with pytest.raises(ValueError):
        Itinerary.from_labels([0.25])
