import cmath
import json
import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from cosrays.cosine_map import (
    DEFAULT_FIXED_VALUE_SEEDS,
    AmbiguousSide,
    CriticalValueHit,
    MapParams,
    NotPreperiodic,
    OverflowRange,
    compute_postsingular,
    critical_points,
    derivative,
    evaluate,
    fixed_value_relation,
    inverse_branch,
    inverse_branch_array,
    sinh_family_params,
    sinh_relation_residual,
    solve_fixed_value_family,
)

PI = math.pi
coef = st.complex_numbers(min_magnitude=0.2, max_magnitude=5.0, allow_nan=False, allow_infinity=False)
points = st.builds(complex, st.floats(-5, 5), st.floats(-10, 10))


def test_params_invariants(sinh1):
    p = sinh1
    assert cmath.exp(p.alpha) == pytest.approx(p.a, abs=1e-12)
    # beta is the log of -b: E(-t + beta) ~ -e^t on the left
    assert cmath.exp(p.beta) == pytest.approx(-p.b, abs=1e-12)
    assert p.v == -p.v_prime
    assert p.v * p.v == pytest.approx(4 * p.a * p.b, abs=1e-12)
    assert p.beta.imag == pytest.approx(0.0)


@given(coef, coef)
def test_params_invariants_random(a, b):
    p = MapParams(a, b)
    assert abs(cmath.exp(p.alpha) - p.a) < 1e-12 * max(1, abs(a))
    assert abs(cmath.exp(p.beta) + p.b) < 1e-12 * max(1, abs(b))
    assert abs(p.v * p.v - 4 * a * b) < 1e-12 * max(1, abs(a * b))


def test_params_json_roundtrip(sinh1):
    p = MapParams.from_json(json.dumps(sinh1.to_json()))
    assert p == sinh1 and p.v == sinh1.v


def test_params_reject_zero():
    with pytest.raises(ValueError):
        MapParams(0, 1)


def test_evaluate_examples(sinh1):
    assert evaluate(MapParams(2 + 1j, 3), 0) == 5 + 1j
    # oracle: pi sinh(i pi/2) = i pi sin(pi/2)
    assert evaluate(sinh1, 1j * PI / 2) == pytest.approx(1j * PI, abs=1e-14)
    assert abs(evaluate(sinh1, 1j * PI)) < 1e-14
    with pytest.raises(OverflowRange):
        evaluate(sinh1, 701)


def test_derivative_examples(sinh1):
    assert derivative(sinh1, 0) == pytest.approx(PI)
    assert derivative(MapParams(2, 3j), 0) == 2 - 3j
    assert derivative(MapParams(1, 1), 1j * PI / 2) == pytest.approx(2j, abs=1e-15)


def test_critical_points(sinh1):
    cps = critical_points(sinh1, (-4, 4))
    assert sorted(round(c.imag / (PI / 2)) for c in cps) == [-1, 1]
    for c in cps:
        assert abs(derivative(sinh1, c)) < 1e-10
        assert min(abs(evaluate(sinh1, c) - v) for v in (sinh1.v, sinh1.v_prime)) < 1e-10
    assert [c.imag / PI for c in critical_points(MapParams(1, 1), (-1, 7))] == [0, 1, 2]
    with pytest.raises(ValueError):
        critical_points(sinh1, (-math.inf, 0))


@given(coef, coef)
def test_critical_points_random(a, b):
    p = MapParams(a, b)
    for c in critical_points(p, (-7, 7)):
        assert abs(derivative(p, c)) < 1e-10 * max(1, abs(a) + abs(b))


def test_inverse_examples(sinh1):
    with pytest.raises(AmbiguousSide):
        inverse_branch(sinh1, 0, "R", 0)
    with pytest.raises(CriticalValueHit):
        inverse_branch(sinh1, sinh1.v, "R", 0)
    z = inverse_branch(sinh1, 10, "R", 0)
    assert z == pytest.approx(math.asinh(10 / PI), abs=1e-12)


@given(coef, coef, points)
def test_inverse_roundtrip(a, b, z):
    p = MapParams(a, b)
    assume(abs(z.real - p.x_split) > 0.5)
    w = evaluate(p, z)
    side = "R" if z.real > p.x_split else "L"
    back = inverse_branch(p, w, side, z.imag)
    assert abs(back - z) < 1e-9 * max(1, abs(z))
    assert abs(evaluate(p, back) - w) <= 1e-9 * (1 + abs(w))


def test_inverse_array_matches_scalar(sinh1):
    rng = np.random.Generator(np.random.PCG64(3))
    z = rng.uniform(1, 5, 200) * rng.choice([-1, 1], 200) + 1j * rng.uniform(-8, 8, 200)
    w = evaluate(sinh1, 0) + sinh1.a * np.exp(z) + sinh1.b * np.exp(-z)
    for side in ("R", "L"):
        arr = inverse_branch_array(sinh1, w, side, z.imag)
        ref = [inverse_branch(sinh1, x, side, y) for x, y in zip(w, z.imag)]
        assert np.allclose(arr, ref, atol=1e-12)
    assert np.isnan(inverse_branch_array(sinh1, np.array([1e-13 + 0j]), "L", 0.0)[0])


@given(coef, coef, points)
def test_periodicity(a, b, z):
    p = MapParams(a, b)
    assert abs(evaluate(p, z + 2j * PI) - evaluate(p, z)) < 1e-12 * max(1, abs(evaluate(p, z)))


@given(points)
def test_sinh_odd(z):
    p = sinh_family_params(1)
    assert abs(evaluate(p, -z) + evaluate(p, z)) < 1e-12 * max(1, abs(evaluate(p, z)))


@pytest.mark.parametrize("k", [1, 2, 3, -1])
def test_sinh_family(k):
    p = sinh_family_params(k)
    assert p.a == k * PI / 2 and p.b == -k * PI / 2
    assert abs(p.v) == pytest.approx(abs(k) * PI)
    for v in (1j * k * PI, -1j * k * PI):
        assert abs(evaluate(p, v)) < 1e-12
    assert abs(derivative(p, 0)) == pytest.approx(abs(k) * PI, abs=1e-12)


def test_fixed_value_family_k1():
    p = solve_fixed_value_family(1)
    assert abs(fixed_value_relation(p.a, 1)) < 1e-12
    assert p.b == -p.a
    for v in (p.v, p.v_prime):
        w = evaluate(p, v)
        assert abs(evaluate(p, w) - w) < 1e-10
        assert abs(derivative(p, w)) > 1


def test_literal_relation_does_not_give_fixed_values():
    # roots of a(1 - sinh 2a) = i pi k do not send both critical values to fixed points
    from cosrays.cosine_map import newton
    a = newton(lambda x: sinh_relation_residual(x, 1),
               lambda x: 1 - cmath.sinh(2 * x) - 2 * x * cmath.cosh(2 * x), 0.3 + 1.2j)
    assert abs(sinh_relation_residual(a, 1)) < 1e-10
    p = MapParams(a, -a)
    w = evaluate(p, p.v)
    assert abs(evaluate(p, w) - w) > 1e-3


@pytest.mark.parametrize("k", sorted(DEFAULT_FIXED_VALUE_SEEDS))
def test_fixed_value_family_seeds(k):
    p = solve_fixed_value_family(k)
    assert abs(fixed_value_relation(p.a, k)) < 1e-12 * max(1, abs(p.a))


def test_conjugate_root_is_not_minus_k():
    p = solve_fixed_value_family(1)
    assert abs(fixed_value_relation(p.a.conjugate(), -1)) > 1
    # the relation has real coefficients: conjugation maps k to k
    assert abs(fixed_value_relation(p.a.conjugate(), 1)) < 1e-12


@pytest.mark.parametrize("k", [1, 2])
def test_postsingular_sinh(k):
    post = compute_postsingular(sinh_family_params(k))
    assert len(post.points) == 3
    for z in (1j * k * PI, -1j * k * PI, 0):
        assert post.contains(z)
    assert (post.preperiod_v, post.period_v) == (1, 1)
    assert len(post.multipliers) == 1
    assert post.multipliers[0] == pytest.approx(k * PI)


def test_postsingular_fixed_value_family():
    p = solve_fixed_value_family(1)
    post = compute_postsingular(p)
    assert len(post.points) == 4
    for z in post.points:
        assert post.contains(evaluate(p, z))
    assert all(abs(m) > 1 for m in post.multipliers)


def test_postsingular_rejects_escaping():
    with pytest.raises(NotPreperiodic):
        compute_postsingular(MapParams(3, 0.1))
