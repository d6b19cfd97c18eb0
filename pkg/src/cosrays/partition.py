"""The itinerary partition cut out by preimages of two rays landing at v and v'.

Pulling back the ray that lands at v gives, through every critical point
c_{2m} = c0 + 2 pi i m, a curve running from Re = -inf to Re = +inf (the two
preimage arms meet at the critical point). Likewise the ray landing at v'
gives curves through the odd critical points c_{2m-1}. Call the curve through
c_n Gamma_n. They are disjoint and stacked vertically, and the component
between Gamma_{n-1} and Gamma_n carries label u = n/2.

Only two curves are stored, Gamma_0 and Gamma_1; every other one is a 2 pi i
translate of these.
"""
from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .cosine_map import MapParams, evaluate
from .rays import (
    TWO_PI,
    DepthExhausted,
    PullbackHitCriticalValue,
    TraceConfig,
    _trace,
    landing_point,
    strip_center,
    trace_point,
)
from .symbolic import (
    ExternalAddress,
    Itinerary,
    Symbol,
    format_address,
    parse_address,
    shift,
)

DEFAULT_WINDOW = 30.0
BOUNDARY_TOL = 1e-9
MAX_SEGMENT = 0.05
SCHEMA_VERSION = 1


class RayDoesNotLandAtCriticalValue(ValueError):
    pass


class OnBoundary(ValueError):
    def __init__(self, z: complex, step: Optional[int] = None):
        msg = f"{z!r} lies on a partition boundary"
        if step is not None:
            msg += f" (orbit step {step})"
        super().__init__(msg)
        self.z = z
        self.step = step


class BoundaryRay(ValueError):
    pass


# ---------------------------------------------------------------------------
# curves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundaryCurve:
    """A bi-infinite curve stored as a polyline ordered by increasing Re.

    Beyond the sampled range the curve relaxes exponentially onto the
    horizontal asymptote Im = tail_left / tail_right.
    """

    points: np.ndarray = field(compare=False)
    tail_left: float
    tail_right: float
    critical_point: complex

    def translated(self, m: int) -> "BoundaryCurve":
        d = TWO_PI * m
        return BoundaryCurve(self.points + 1j * d, self.tail_left + d, self.tail_right + d,
                             self.critical_point + 1j * d)

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.points.real) > 0))

    def im_extent(self) -> tuple[float, float]:
        y = self.points.imag
        return (min(y.min(), self.tail_left, self.tail_right),
                max(y.max(), self.tail_left, self.tail_right))

    def _tail_im(self, x: np.ndarray) -> np.ndarray:
        p = self.points
        xl, yl = p[0].real, p[0].imag
        xr, yr = p[-1].real, p[-1].imag
        left = self.tail_left + (yl - self.tail_left) * np.exp(-np.abs(x - xl))
        right = self.tail_right + (yr - self.tail_right) * np.exp(-np.abs(x - xr))
        return np.where(x < xl, left, right)

    def height_at(self, x: np.ndarray) -> np.ndarray:
        """Im of the curve above x; only meaningful for monotone curves."""
        p = self.points
        x = np.asarray(x, dtype=float)
        inside = (x >= p[0].real) & (x <= p[-1].real)
        y = np.interp(x, p.real, p.imag)
        return np.where(inside, y, self._tail_im(x))

    def below(self, z: np.ndarray) -> np.ndarray:
        """True where z lies strictly below the curve."""
        z = np.asarray(z, dtype=complex)
        if self.monotone:
            return z.imag < self.height_at(z.real)
        return np.array([self._below_parity(w) for w in z.ravel()]).reshape(z.shape)

    def _below_parity(self, z: complex) -> bool:
        # count crossings of the upward vertical ray from z
        p = self.points
        x, y = z.real, z.imag
        if x < p[0].real or x > p[-1].real:
            return bool(y < self._tail_im(np.array([x]))[0])
        x0, x1 = p.real[:-1], p.real[1:]
        y0, y1 = p.imag[:-1], p.imag[1:]
        hit = (np.minimum(x0, x1) <= x) & (x < np.maximum(x0, x1))
        lam = (x - x0[hit]) / (x1[hit] - x0[hit])
        yc = y0[hit] + lam * (y1[hit] - y0[hit])
        return bool(np.count_nonzero(yc > y) % 2 == 1)

    def distance(self, z: complex) -> float:
        p = self.points
        a, b = p[:-1], p[1:]
        ab = b - a
        denom = np.abs(ab) ** 2
        lam = np.clip(((z - a) * np.conj(ab)).real / np.where(denom > 0, denom, 1.0), 0.0, 1.0)
        d = float(np.min(np.abs(a + lam * ab - z)))
        if z.real < p[0].real or z.real > p[-1].real:
            d = min(d, abs(z.imag - float(self._tail_im(np.array([z.real]))[0])))
        return d

    def to_json(self) -> dict:
        return {
            "re": self.points.real.tolist(),
            "im": self.points.imag.tolist(),
            "tail_left": self.tail_left,
            "tail_right": self.tail_right,
            "critical_point": [self.critical_point.real, self.critical_point.imag],
        }

    @classmethod
    def from_json(cls, obj) -> "BoundaryCurve":
        pts = np.array(obj["re"]) + 1j * np.array(obj["im"])
        return cls(pts, obj["tail_left"], obj["tail_right"], complex(*obj["critical_point"]))


# ---------------------------------------------------------------------------
# base rays
# ---------------------------------------------------------------------------

def symbol_for_point(params: MapParams, z: complex, next_side: str) -> Symbol:
    """The address entry of a point far out on a ray, given the side of its image."""
    side = "R" if z.real > params.x_split else "L"
    center0 = strip_center(params, Symbol(0, side), next_side)
    return Symbol(round((z.imag - center0) / TWO_PI), side)


def real_axis_addresses(params: MapParams) -> tuple[ExternalAddress, ExternalAddress]:
    """Addresses of R+ and R- for real odd maps (b = -a real)."""
    if not (params.a.imag == 0 and params.b == -params.a):
        raise ValueError("real-axis addresses need b = -a real")
    if params.a.real > 0:
        return ExternalAddress.periodic([Symbol(0, "R")]), ExternalAddress.periodic([Symbol(0, "L")])
    r = symbol_for_point(params, 10.0, "L")
    l_ = symbol_for_point(params, -10.0, "R")
    return ExternalAddress.periodic([r, l_]), ExternalAddress.periodic([l_, r])


def sinh_default_addresses(params: MapParams, policy: str = "right") -> tuple[ExternalAddress, ExternalAddress]:
    """Horizontal rays at the critical values of k pi sinh.

    The line through +-k pi i maps onto the real axis, so the half-line
    pointing in the ``policy`` direction is a ray landing there.
    """
    if policy not in ("right", "left"):
        raise ValueError("policy must be 'right' or 'left'")
    r_plus, r_minus = real_axis_addresses(params)
    x = 10.0 if policy == "right" else -10.0
    out = []
    for v in (params.v, params.v_prime):
        z = complex(x, v.imag)
        w = evaluate(params, z)
        if abs(w.imag) > 1e-9 * abs(w):
            raise ValueError("horizontal line through the critical value is not a ray")
        image = r_plus if w.real > 0 else r_minus
        out.append(image.prepend(symbol_for_point(params, z, image.entry(1).side)))
    return out[0], out[1]


def _trace_base_ray(params, s, landing, cfg, t_lo, t_hi, n) -> np.ndarray:
    ts = np.exp(np.linspace(math.log(t_hi), math.log(t_lo), n))
    deep = TraceConfig(cfg.T_cap, cfg.tol, max(cfg.max_depth, 400), cfg.land_tol, cfg.retries)
    pts = []
    for t in ts:
        try:
            pts.append(_trace(params, s, float(t), deep)[0])
        except (PullbackHitCriticalValue, DepthExhausted):
            # only the lowest potentials, already within rounding of the landing point
            if t > 1.0:
                raise
    if not pts or abs(pts[-1] - landing) > MAX_SEGMENT:
        raise PullbackHitCriticalValue("base ray could not be traced close to its landing point")
    pts.append(landing)
    # ordered from the landing point outwards
    return np.array(pts[::-1], dtype=complex)


def _preimage_arms(params: MapParams, ray: np.ndarray, crit: complex) -> tuple[np.ndarray, np.ndarray]:
    """Continue the two roots u of a u^2 - w u + b = 0 along the ray polyline.

    ``ray[0]`` is the critical value E(crit); returns the (R, L) arms as
    point arrays starting at ``crit``. Segments whose image step exceeds
    MAX_SEGMENT are bisected (linearly in w).
    """
    a, b = params.a, params.b
    v = ray[0]
    arm_r, arm_l = [crit], [crit]
    state = {"prev": None}

    def roots(w):
        d = cmath.sqrt(w * w - 4 * a * b)
        if abs(w + d) < abs(w - d):
            d = -d
        big = (w + d) / (2 * a)
        return big, (b / a) / big

    def to_z(u, ref):
        z = cmath.log(u)
        m = round((ref.imag - z.imag) / TWO_PI)
        return complex(z.real, z.imag + TWO_PI * m)

    def candidate(w):
        r1, r2 = roots(w)
        prev = state["prev"]
        if prev is not None:
            pb, ps = prev
            if abs(r2 - pb) + abs(r1 - ps) < abs(r1 - pb) + abs(r2 - ps):
                r1, r2 = r2, r1
        return r1, r2, to_z(r1, arm_r[-1]), to_z(r2, arm_l[-1])

    def advance(w0, w1, depth):
        if abs(w1 - v) < 1e-8 * max(1.0, abs(v)):
            return
        r1, r2, zr, zl = candidate(w1)
        step = max(abs(zr - arm_r[-1]), abs(zl - arm_l[-1]))
        if step > MAX_SEGMENT and depth < 30:
            mid = 0.5 * (w0 + w1)
            advance(w0, mid, depth + 1)
            advance(mid, w1, depth + 1)
            return
        arm_r.append(zr)
        arm_l.append(zl)
        state["prev"] = (r1, r2)

    for w0, w1 in zip(ray[:-1], ray[1:]):
        advance(complex(w0), complex(w1), 0)
    return np.array(arm_r), np.array(arm_l)


def _asymptote(params: MapParams, arm: np.ndarray, side: str, ray_far: complex) -> float:
    direction = 1.0 if ray_far.real > 0 else -1.0
    u = direction / params.a if side == "R" else params.b / direction
    c = cmath.log(u).imag
    end = arm[-1].imag
    return c + TWO_PI * round((end - c) / TWO_PI)


def _assemble(params, ray, crit) -> BoundaryCurve:
    right, left = _preimage_arms(params, ray, crit)
    pts = np.concatenate([left[::-1], right[1:]])
    return BoundaryCurve(
        pts,
        _asymptote(params, left, "L", ray[-1]),
        _asymptote(params, right, "R", ray[-1]),
        crit,
    )


# ---------------------------------------------------------------------------
# the model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PartitionModel:
    params: MapParams
    base_addresses: tuple[ExternalAddress, ExternalAddress]
    gamma0: BoundaryCurve
    gamma1: BoundaryCurve
    height_bound: float
    base_rays: tuple[np.ndarray, np.ndarray] = field(compare=False, default=(None, None))

    def curve(self, n: int) -> BoundaryCurve:
        """Gamma_n, the boundary curve through c0 + i pi n."""
        m, j = divmod(n, 2)
        return (self.gamma0 if j == 0 else self.gamma1).translated(m)

    def boundary_curves(self, n_lo: int, n_hi: int) -> list[tuple[tuple[float, float], BoundaryCurve]]:
        """[((u, u + 1/2), Gamma_n)] for n in [n_lo, n_hi]."""
        return [((n / 2, (n + 1) / 2), self.curve(n)) for n in range(n_lo, n_hi + 1)]

    def to_json(self) -> dict:
        return {
            "version": SCHEMA_VERSION,
            "params": self.params.to_json(),
            "base_addresses": [format_address(s) for s in self.base_addresses],
            "gamma0": self.gamma0.to_json(),
            "gamma1": self.gamma1.to_json(),
            "height_bound": self.height_bound,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, obj) -> "PartitionModel":
        if isinstance(obj, str):
            obj = json.loads(obj)
        if obj.get("version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported partition schema {obj.get('version')!r}")
        return cls(
            MapParams.from_json(obj["params"]),
            tuple(parse_address(a) for a in obj["base_addresses"]),
            BoundaryCurve.from_json(obj["gamma0"]),
            BoundaryCurve.from_json(obj["gamma1"]),
            float(obj["height_bound"]),
        )


def _height(g0: BoundaryCurve, g1: BoundaryCurve) -> float:
    # components lie between Gamma_{n} and Gamma_{n+1}
    lo0, hi0 = g0.im_extent()
    lo1, hi1 = g1.im_extent()
    return max(hi1 - lo0, hi0 + TWO_PI - lo1)


def build_partition(
    params: MapParams,
    choice="right",
    cfg: TraceConfig = TraceConfig(),
    window: float = DEFAULT_WINDOW,
    t_lo: float = 0.1,
    n_base: int = 800,
) -> PartitionModel:
    """Partition from rays landing at v and v'.

    ``choice`` is ``"right"``/``"left"`` (sinh family only) or an explicit
    pair of addresses for the rays at (v, v').
    """
    if isinstance(choice, str):
        base = sinh_default_addresses(params, choice)
    else:
        base = tuple(choice)
    targets = (params.v, params.v_prime)
    rays = []
    for s, v in zip(base, targets):
        land = landing_point(params, s, cfg)
        if abs(land.z - v) > 1e-6:
            raise RayDoesNotLandAtCriticalValue(f"{format_address(s)} lands at {land.z}, not {v}")
        # the preimage arms reach |Re| ~ log|w/a|, so trace out to |w| ~ |a| e^(W+1)
        t_hi = max(abs(params.a), abs(params.b)) * math.exp(window + 1.0)
        try:
            rays.append(_trace_base_ray(params, s, v, cfg, t_lo, t_hi, n_base))
        except (DepthExhausted, PullbackHitCriticalValue) as err:
            raise RayDoesNotLandAtCriticalValue(str(err)) from err
    c0 = params.c0
    g0 = _assemble(params, rays[0], c0)
    # E(c0 - i pi) = v'; shift up by 2 pi i to get the curve through c0 + i pi
    g1 = _assemble(params, rays[1], c0 - 1j * math.pi).translated(1)
    return PartitionModel(params, (base[0], base[1]), g0, g1, _height(g0, g1), (rays[0], rays[1]))


# ---------------------------------------------------------------------------
# point location
# ---------------------------------------------------------------------------

_SEARCH = 4


def _reduce(part: PartitionModel, z: complex) -> tuple[complex, int]:
    m = math.floor((z.imag - part.params.c0.imag + math.pi) / TWO_PI)
    return z - 1j * TWO_PI * m, m


def _local_gap(part: PartitionModel, z: complex, n: int) -> float:
    lo = part.curve(n).height_at(np.array([z.real]))[0] if part.curve(n).monotone else -math.inf
    hi = part.curve(n + 1).height_at(np.array([z.real]))[0] if part.curve(n + 1).monotone else math.inf
    return float(hi - lo)


def itinerary_entry_twice(part: PartitionModel, z: complex) -> int:
    """2u for the component U_u containing z."""
    z = complex(z)
    zr, m = _reduce(part, z)
    n_max = None
    for n in range(-_SEARCH, _SEARCH + 1):
        if not part.curve(n).below(np.array([zr]))[0]:
            n_max = n
    if n_max is None:
        raise RuntimeError("point location failed: below every curve in the search range")
    # the nearer of the two bracketing curves decides OnBoundary
    gap = min(1.0, _local_gap(part, zr, n_max))
    tol = BOUNDARY_TOL * gap
    for n in (n_max, n_max + 1):
        if part.curve(n).distance(zr) < tol:
            raise OnBoundary(z)
    return n_max + 1 + 2 * m


def itinerary_entry(part: PartitionModel, z: complex) -> float:
    return itinerary_entry_twice(part, z) / 2


def itinerary_entries_array(part: PartitionModel, z: np.ndarray) -> np.ndarray:
    """Vectorised 2u without boundary checks; nan where z is not finite."""
    z = np.asarray(z, dtype=complex)
    finite = np.isfinite(z)
    zz = np.where(finite, z, 0.0)
    m = np.floor((zz.imag - part.params.c0.imag + math.pi) / TWO_PI)
    zr = zz - 1j * TWO_PI * m
    n_max = np.full(z.shape, -_SEARCH - 1, dtype=float)
    for n in range(-_SEARCH, _SEARCH + 1):
        above = ~part.curve(n).below(zr)
        n_max = np.where(above, n, n_max)
    out = n_max + 1 + 2 * m
    return np.where(finite, out, np.nan)


def itinerary_of_point(part: PartitionModel, params: MapParams, z: complex, length: int) -> Itinerary:
    out = []
    w = complex(z)
    for k in range(length):
        if abs(w.real) > 700:
            return Itinerary(tuple(out), escaped_beyond_range=True)
        try:
            out.append(itinerary_entry_twice(part, w))
        except OnBoundary:
            raise OnBoundary(z, k + 1) from None
        if k + 1 < length:
            if abs(w.real) > 700:
                return Itinerary(tuple(out), escaped_beyond_range=True)
            w = evaluate(params, w)
    return Itinerary(tuple(out))


def is_boundary_address(part: PartitionModel, s: ExternalAddress, depth: int = 64) -> bool:
    """True if some shift of s is one of the base addresses."""
    if not s.is_periodic_tail:
        return False
    pre, per = s.preperiod_and_period()
    x = s
    for _ in range(pre + per + 1):
        for b in part.base_addresses:
            if x.same_sequence(b, depth):
                return True
        x = shift(x)
    return False


def itinerary_of_address(part: PartitionModel, params: MapParams, s: ExternalAddress,
                         length: int, cfg: TraceConfig = TraceConfig()) -> Itinerary:
    """Labels of the components containing g_s, g_{sigma s}, ...

    Each ray lies in a single component, so one traced point per shift
    suffices; t = 1 is tried first and t = 2, 4 if it sits on a boundary.
    """
    if is_boundary_address(part, s):
        raise BoundaryRay(format_address(s))
    out = []
    x = s
    for _ in range(length):
        for t in (1.0, 2.0, 4.0):
            try:
                z, _ = _trace(params, x, t, cfg)
                out.append(itinerary_entry_twice(part, z))
                break
            except OnBoundary:
                continue
        else:
            raise BoundaryRay(f"{format_address(x)} runs along a boundary")
        x = shift(x)
    return Itinerary(tuple(out))
