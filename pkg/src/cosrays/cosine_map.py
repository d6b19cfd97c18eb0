"""The cosine family E(z) = a e^z + b e^-z.

Evaluation, critical data, the two-sheeted inverse, parameter solving for
postsingularly preperiodic members, and postsingular orbits.
"""
from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

RE_LIMIT = 700.0
TWO_PI = 2.0 * math.pi


class OverflowRange(ValueError):
    """|Re z| too large for double-precision exponentials."""


class CriticalValueHit(ValueError):
    """Inverse requested at a critical value (branch point)."""


class AmbiguousSide(ValueError):
    """Both preimages have the same modulus of e^z, so L/R is undefined."""


class NewtonDivergence(RuntimeError):
    pass


class WrongBasin(RuntimeError):
    pass


class NotPreperiodic(RuntimeError):
    pass


@dataclass(frozen=True)
class MapParams:
    """Coefficients (a, b) with derived constants.

    ``alpha = Log a`` and ``beta = Log(-b)`` are the asymptotic offsets of
    right- and left-going rays: E(t - alpha) ~ e^t and E(-t + beta) ~ -e^t.
    ``c0 = Log(b/a)/2`` is the base critical point, ``v = E(c0)``, ``v' = -v``.
    """

    a: complex
    b: complex
    alpha: complex = field(init=False, compare=False)
    beta: complex = field(init=False, compare=False)
    c0: complex = field(init=False, compare=False)
    v: complex = field(init=False, compare=False)
    v_prime: complex = field(init=False, compare=False)
    x_split: float = field(init=False, compare=False)

    def __post_init__(self):
        a, b = _unsigned_zero(self.a), _unsigned_zero(self.b)
        if a == 0 or b == 0:
            raise ValueError("a and b must be nonzero")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        # principal logs taken on the upper side of the negative axis
        object.__setattr__(self, "alpha", cmath.log(a))
        object.__setattr__(self, "beta", cmath.log(_unsigned_zero(-b)))
        c0 = 0.5 * cmath.log(_unsigned_zero(b / a))
        object.__setattr__(self, "c0", c0)
        v = a * cmath.exp(c0) + b * cmath.exp(-c0)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "v_prime", -v)
        # Re z > x_split  <=>  |e^z| > sqrt|b/a|
        object.__setattr__(self, "x_split", 0.5 * math.log(abs(b / a)))

    def to_json(self) -> dict:
        return {"a": [self.a.real, self.a.imag], "b": [self.b.real, self.b.imag]}

    @classmethod
    def from_json(cls, obj) -> "MapParams":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(complex(*obj["a"]), complex(*obj["b"]))


def _unsigned_zero(z) -> complex:
    z = complex(z)
    return complex(z.real + 0.0, z.imag + 0.0)


def _check_range(z: complex) -> None:
    if abs(z.real) > RE_LIMIT:
        raise OverflowRange(f"|Re z| = {abs(z.real):.6g} exceeds {RE_LIMIT}")


def evaluate(params: MapParams, z: complex) -> complex:
    z = complex(z)
    _check_range(z)
    return params.a * cmath.exp(z) + params.b * cmath.exp(-z)


def derivative(params: MapParams, z: complex) -> complex:
    z = complex(z)
    _check_range(z)
    return params.a * cmath.exp(z) - params.b * cmath.exp(-z)


def evaluate_array(params: MapParams, z: np.ndarray) -> np.ndarray:
    """Vectorised E; callers keep |Re z| <= 700."""
    ez = np.exp(z)
    return params.a * ez + params.b / ez


def critical_points(params: MapParams, im_range: tuple[float, float]) -> list[complex]:
    lo, hi = im_range
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("im_range must be finite")
    c0 = params.c0
    n_lo = math.ceil((lo - c0.imag) / math.pi)
    n_hi = math.floor((hi - c0.imag) / math.pi)
    return [c0 + 1j * math.pi * n for n in range(n_lo, n_hi + 1)]


def critical_point(params: MapParams, n: int) -> complex:
    """c_n = c0 + i pi n; E(c_n) = (-1)^n v."""
    return params.c0 + 1j * math.pi * n


# ---------------------------------------------------------------------------
# inverse branches
# ---------------------------------------------------------------------------

def _roots(params: MapParams, w: complex) -> tuple[complex, complex]:
    """Roots of a u^2 - w u + b = 0 as (larger modulus, smaller modulus)."""
    a, b = params.a, params.b
    if abs(w) > 1e150:
        d = w * cmath.sqrt(1.0 - 4.0 * a * b / w / w)
    else:
        d = cmath.sqrt(w * w - 4.0 * a * b)
    # pick the sign avoiding cancellation
    if abs(w + d) < abs(w - d):
        d = -d
    big = (w + d) / (2.0 * a)
    small = (b / a) / big
    return big, small


def discriminant_small(params: MapParams, w: complex) -> bool:
    if abs(w) > 1e150:
        return False
    return abs(w * w - 4.0 * params.a * params.b) < 1e-14 * (1.0 + abs(w) ** 2)


def _log_near(u: complex, target_im: float) -> complex:
    z = cmath.log(u)
    m = round((target_im - z.imag) / TWO_PI)
    return complex(z.real, z.imag + TWO_PI * m)


def inverse_branch(
    params: MapParams,
    w: complex,
    side: str,
    target_im: float,
    *,
    strict: bool = True,
) -> complex:
    """Solve E(z) = w on the given side with |Im z - target_im| <= pi.

    Side ``R`` takes the root u = e^z with |u| > sqrt|b/a|, side ``L`` the
    other one. With ``strict=False`` a branch point returns the critical
    point and equal moduli fall back to the side label instead of raising.
    """
    w = complex(w)
    if discriminant_small(params, w):
        if strict:
            raise CriticalValueHit(f"w={w!r} is a critical value")
        u = w / (2.0 * params.a)
        return _log_near(u, target_im)
    big, small = _roots(params, w)
    if strict and abs(math.log(abs(big)) - math.log(abs(small))) < 1e-12:
        raise AmbiguousSide(f"w={w!r}: preimages on the critical circle")
    u = big if side == "R" else small
    return _log_near(u, target_im)


def inverse_branch_array(params: MapParams, w: np.ndarray, side: str, target_im) -> np.ndarray:
    """Vectorised ``inverse_branch``.

    Where ``inverse_branch`` would raise (a critical value, or both roots on
    the critical circle) the result is nan.
    """
    a, b = params.a, params.b
    w = np.asarray(w, dtype=complex)
    with np.errstate(over="ignore", invalid="ignore"):
        big_w = np.abs(w) > 1e150
        d = np.where(
            big_w,
            w * np.sqrt(1.0 - 4.0 * a * b / np.where(big_w, w, 1.0) ** 2),
            np.sqrt(np.where(big_w, 0.0, w) ** 2 - 4.0 * a * b),
        )
    flip = np.abs(w + d) < np.abs(w - d)
    d = np.where(flip, -d, d)
    big = (w + d) / (2.0 * a)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = big if side == "R" else (b / a) / big
        z = np.log(u)
        m = np.round((np.asarray(target_im) - z.imag) / TWO_PI)
        z = z + 1j * TWO_PI * m
        # |big| / |small| = |big|^2 / |b/a|
        gap = np.abs(2.0 * np.log(np.abs(big)) - np.log(abs(b / a)))
    return np.where(~big_w & (gap < 1e-12), np.nan + 0j, z)


def side_of(params: MapParams, z: complex) -> str:
    return "R" if z.real > params.x_split else "L"


# ---------------------------------------------------------------------------
# parameter families
# ---------------------------------------------------------------------------

def sinh_family_params(k: int) -> MapParams:
    """E(z) = k pi sinh z: critical values +-k pi i both map to the fixed point 0."""
    if k == 0:
        raise ValueError("k must be nonzero")
    return MapParams(k * math.pi / 2.0, -k * math.pi / 2.0)


def fixed_value_relation(a: complex, k: int) -> complex:
    """a (1 - sin 2a) - pi k.

    For b = -a the critical values are +-2ai, and this vanishes exactly when
    E(2ai) = 2ai - 2 pi i k, a 2 pi i-translate of the critical value, so
    E(E(v)) = E(v).
    """
    a = complex(a)
    return a * (1.0 - cmath.sin(2.0 * a)) - math.pi * k


def _fixed_value_relation_prime(a: complex) -> complex:
    return 1.0 - cmath.sin(2.0 * a) - 2.0 * a * cmath.cos(2.0 * a)


def sinh_relation_residual(a: complex, k: int) -> complex:
    """a (1 - sinh 2a) - i pi k, the sinh-form variant of the relation above."""
    a = complex(a)
    return a * (1.0 - cmath.sinh(2.0 * a)) - 1j * math.pi * k


# real roots where available; the others were located by a coarse grid scan
DEFAULT_FIXED_VALUE_SEEDS = {
    1: 1.9 + 0j,
    -1: -1.2 + 0.56j,
    2: 4.86 + 0j,
    -2: -4.0 + 0j,
    3: 10.9 + 0j,
}


def newton(f, fprime, z0: complex, *, tol: float = 1e-12, max_iter: int = 200) -> complex:
    """Damped Newton: halve the step while the residual grows."""
    z = complex(z0)
    r = abs(f(z))
    for _ in range(max_iter):
        if r < tol:
            return z
        d = fprime(z)
        if d == 0:
            raise NewtonDivergence("zero derivative")
        step = f(z) / d
        lam = 1.0
        while True:
            zn = z - lam * step
            try:
                rn = abs(f(zn))
            except OverflowError:
                rn = math.inf
            if rn < r or lam < 1e-6:
                break
            lam *= 0.5
        z, r = zn, rn
    if r < tol:
        return z
    raise NewtonDivergence(f"no convergence after {max_iter} iterations (residual {r:.3g})")


def solve_fixed_value_family(k: int, seed: Optional[complex] = None) -> MapParams:
    """Params with b = -a whose critical values both map to repelling fixed points."""
    if k == 0:
        raise ValueError("k must be nonzero")
    if seed is None:
        seed = DEFAULT_FIXED_VALUE_SEEDS.get(k, complex(abs(k) * 1.9, 0.5))
    a = newton(lambda x: fixed_value_relation(x, k), _fixed_value_relation_prime, seed,
               tol=1e-13)
    # polish: one more step for the last bits
    for _ in range(3):
        d = _fixed_value_relation_prime(a)
        a = a - fixed_value_relation(a, k) / d
    params = MapParams(a, -a)
    for v in (params.v, params.v_prime):
        p = evaluate(params, v)
        if abs(evaluate(params, p) - p) > 1e-10 * max(1.0, abs(p)):
            raise WrongBasin(f"critical value {v} does not map to a fixed point")
        if abs(derivative(params, p)) <= 1.0:
            raise WrongBasin(f"fixed point {p} is not repelling")
    return params


# ---------------------------------------------------------------------------
# postsingular set
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PostsingularData:
    points: tuple[complex, ...]
    preperiod_v: int
    period_v: int
    preperiod_vprime: int
    period_vprime: int
    multipliers: tuple[complex, ...]

    def contains(self, z: complex, tol: float = 1e-9) -> bool:
        return any(abs(z - p) < tol for p in self.points)


def _refine_cycle(params: MapParams, z: complex, period: int) -> complex:
    def g(x):
        w = x
        for _ in range(period):
            w = evaluate(params, w)
        return w - x

    def gp(x):
        w, d = x, 1.0 + 0j
        for _ in range(period):
            d *= derivative(params, w)
            w = evaluate(params, w)
        return d - 1.0

    try:
        return newton(g, gp, z, tol=1e-14 * max(1.0, abs(z)), max_iter=50)
    except NewtonDivergence:
        return z


def _orbit_structure(params, start, max_pre, max_period):
    orbit = [complex(start)]
    for _ in range(max_pre + max_period):
        z = orbit[-1]
        if abs(z) > 1e12 or abs(z.real) > RE_LIMIT:
            raise NotPreperiodic("critical orbit escapes")
        nxt = evaluate(params, z)
        for j, w in enumerate(orbit):
            if abs(nxt - w) < 1e-9 * max(1.0, abs(w)):
                period = len(orbit) - j
                if j > max_pre or period > max_period:
                    raise NotPreperiodic("cycle outside the requested bounds")
                return orbit, j, period
        orbit.append(nxt)
    raise NotPreperiodic("no cycle detected")


def compute_postsingular(params: MapParams, max_pre: int = 8, max_period: int = 8) -> PostsingularData:
    pts: list[complex] = []
    mults: list[complex] = []
    info = []
    for v in (params.v, params.v_prime):
        orbit, pre, per = _orbit_structure(params, v, max_pre, max_period)
        c = _refine_cycle(params, orbit[pre], per)
        cycle = [c]
        for _ in range(per - 1):
            cycle.append(evaluate(params, cycle[-1]))
        mult = 1.0 + 0j
        for w in cycle:
            mult *= derivative(params, w)
        if pre == 0:
            raise NotPreperiodic("critical value is periodic, not strictly preperiodic")
        for z in orbit[:pre] + cycle:
            if not any(abs(z - p) < 1e-9 * max(1.0, abs(p)) for p in pts):
                pts.append(z)
        if not any(abs(mult - m) < 1e-6 * abs(m) for m in mults):
            mults.append(mult)
        info.append((pre, per))
    return PostsingularData(tuple(pts), info[0][0], info[0][1], info[1][0], info[1][1], tuple(mults))
