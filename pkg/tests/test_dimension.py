import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cosrays.dimension import (
    TooFewPoints,
    box_count,
    escape_fraction,
    escaping_set_dimension,
    periodic_addresses,
    ray_family_dimension,
)
from cosrays.escape import escape_grid, escape_steps

UNIT = (0j, 1 + 1j)


def cantor_points(level: int) -> np.ndarray:
    """Left endpoints of the level-n middle-thirds intervals."""
    x = np.zeros(1)
    for _ in range(level):
        x = np.concatenate([x / 3, x / 3 + 2 / 3])
    return x


def test_line_segment():
    t = np.linspace(0.05, 0.95, 10_000)
    rep = box_count(t + 0.3j + 0.2j * t, UNIT)
    assert 0.95 <= rep.slope <= 1.05


def test_uniform_square():
    rng = np.random.Generator(np.random.PCG64(1))
    z = rng.uniform(0, 1, 100_000) + 1j * rng.uniform(0, 1, 100_000)
    assert 1.9 <= box_count(z, UNIT).slope <= 2.05


def test_cantor_set():
    # 2^14 points; the window spans the set so dyadic boxes see its full extent
    x = cantor_points(14)
    rep = box_count(x + 0.5j, (0j, 1 + 1j), n_scales=12, min_points=1000)
    assert 0.58 <= rep.slope <= 0.68
    assert rep.slope == pytest.approx(math.log(2) / math.log(3), abs=0.05)


def test_report_invariants():
    rng = np.random.Generator(np.random.PCG64(2))
    rep = box_count(rng.uniform(0, 1, 5000) + 0.5j, UNIT)
    assert all(a > b for a, b in zip(rep.scales, rep.scales[1:]))
    assert all(a <= b for a, b in zip(rep.counts, rep.counts[1:]))
    assert set(rep.to_json()) >= {"scales", "counts", "slope", "fit_quality", "config"}


@given(st.integers(1, 4), st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_union_of_curves(n_curves, seed):
    # finite unions of C^1 arcs count as one-dimensional: graphs of smooth
    # functions, one per horizontal band so the arcs stay separated
    rng = np.random.Generator(np.random.PCG64(seed))
    x = np.linspace(0.02, 0.98, 20_000)
    parts = []
    for i in range(n_curves):
        amp = rng.uniform(0.05, 0.3) / n_curves
        freq = rng.uniform(1, 12)
        phase = rng.uniform(0, 2 * np.pi)
        y = (i + 0.5) / n_curves + amp * np.sin(freq * x + phase)
        parts.append(x + 1j * y)
    rep = box_count(np.concatenate(parts), UNIT)
    assert 0.9 <= rep.slope <= 1.15


def test_too_few_points():
    with pytest.raises(TooFewPoints):
        box_count(np.zeros(10, dtype=complex) + 0.5 + 0.5j, UNIT)
    with pytest.raises(ValueError):
        box_count(np.zeros(2000, dtype=complex), UNIT, n_scales=3)


def test_periodic_addresses_count():
    # primitive words of length <= 2 over {0R, 0L}; rotations are distinct rays
    assert [str(s) for s in periodic_addresses(0, 2)] == ["(0R)*", "(0L)*", "(0R 0L)*", "(0L 0R)*"]


def test_ray_family_single_pair(sinh1):
    rep = ray_family_dimension(sinh1, M=0, tail_depth=1)
    assert 0.95 <= rep.slope <= 1.1


def test_ray_family_trend(sinh1):
    slopes = [ray_family_dimension(sinh1, M=1, tail_depth=3, t_floor=t).slope for t in (0.5, 1.0, 2.0)]
    assert 0.9 <= slopes[1] <= 1.4
    assert slopes[1] <= slopes[0] + 0.05 and slopes[2] <= slopes[1] + 0.05


def test_escape_fraction_deterministic(sinh1):
    a = escape_fraction(sinh1, n_samples=2000, seed=7)
    b = escape_fraction(sinh1, n_samples=2000, seed=7)
    assert a == b and 0 <= a.fraction <= 1 and a.fraction == a.escaped / a.n_samples


def test_escape_fraction_near_fixed_point(sinh1):
    st_ = escape_fraction(sinh1, (-1e-3 - 1e-3j, 1e-3 + 1e-3j), 2000, 500, seed=3)
    assert st_.fraction > 0.5


def test_escape_monotone_in_budget(sinh1):
    rng = np.random.Generator(np.random.PCG64(4))
    z = rng.uniform(-3, 3, 5000) + 1j * rng.uniform(-3, 3, 5000)
    prev = -1
    for budget in (1, 2, 3, 5, 10, 50):
        steps, _ = escape_steps(sinh1, z, budget)
        n = int(np.count_nonzero(steps > 0))
        assert n >= prev
        prev = n


def test_escape_grid_thread_invariant(sinh1):
    win = (-4 - 4j, 4 + 4j)
    a = escape_grid(sinh1, win, 64, 48, 20, threads=1)
    b = escape_grid(sinh1, win, 64, 48, 20, threads=4)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_escaping_set_small(sinh1):
    rep, frac = escaping_set_dimension(sinh1, resolution=256, budget=50)
    assert frac >= 0.9 and rep.slope >= 1.9


def test_escaping_set_degenerate(sinh1):
    with pytest.raises(TooFewPoints):
        escaping_set_dimension(sinh1, resolution=1)
