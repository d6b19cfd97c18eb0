"""Dynamic rays g_s(t) by asymptotic seeding and inverse-branch pullback.

A point g_s(t) is computed by pushing the potential forward until it is huge,
placing the seed with the far-end asymptotics, and pulling back along the
address. Each inverse branch is picked by the side of the current entry and
its imaginary window is centred on the strip of that entry; when the next
entry sits on the other side the window moves by pi, since e^z must then
point the other way.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .cosine_map import (
    AmbiguousSide,
    CriticalValueHit,
    MapParams,
    evaluate,
    inverse_branch,
    inverse_branch_array,
)
from .symbolic import ExternalAddress, Symbol, growth_iterate, minimal_potential, shift

TWO_PI = 2.0 * math.pi


class PullbackHitCriticalValue(RuntimeError):
    pass


class DepthExhausted(RuntimeError):
    pass


class RayTraceError(RuntimeError):
    """A trace failure at a particular potential."""

    def __init__(self, t: float, cause: Exception):
        super().__init__(f"t={t!r}: {cause}")
        self.t = t
        self.cause = cause


@dataclass(frozen=True)
class TraceConfig:
    T_cap: float = 500.0
    tol: float = 1e-9
    max_depth: int = 60
    land_tol: float = 1e-10
    retries: int = 3

    def __post_init__(self):
        if not (0 < self.tol < 1):
            raise ValueError("tol must lie in (0, 1)")
        if not (0 < self.T_cap <= 700):
            raise ValueError("T_cap must lie in (0, 700]")


@dataclass(frozen=True)
class RaySample:
    t: float
    z: complex
    residual: float


@dataclass(frozen=True)
class RayPath:
    address: ExternalAddress
    samples: tuple[RaySample, ...]
    config_used: TraceConfig = field(default_factory=TraceConfig)

    @property
    def points(self) -> np.ndarray:
        return np.array([s.z for s in self.samples], dtype=complex)

    @property
    def potentials(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "re", "im", "residual"])
        for s in self.samples:
            w.writerow(["%.17g" % s.t, "%.17g" % s.z.real, "%.17g" % s.z.imag, "%.17g" % s.residual])
        return buf.getvalue()


@dataclass(frozen=True)
class TracedPoint:
    z: complex
    depth: int
    residual: float


# ---------------------------------------------------------------------------
# branch geometry
# ---------------------------------------------------------------------------

def strip_center(params: MapParams, entry: Symbol, next_side: str) -> float:
    """Centre of the imaginary window used when pulling back through ``entry``."""
    flip = math.pi if next_side != entry.side else 0.0
    if entry.side == "R":
        return TWO_PI * entry.index - params.alpha.imag + flip
    return TWO_PI * entry.index + params.beta.imag + flip


def seed_point(params: MapParams, s: ExternalAddress, T: float) -> complex:
    """Leading-order position of g_s(T) for large T."""
    e1, e2 = s.entry(1), s.entry(2)
    im = strip_center(params, e1, e2.side)
    if e1.side == "R":
        return complex(T - params.alpha.real, im)
    return complex(-T + params.beta.real, im)


def pull_back(
    params: MapParams,
    s: ExternalAddress,
    n: int,
    z: complex,
    *,
    strict: bool = True,
) -> complex:
    """Apply the branches of s_n, ..., s_1 to a point z near g_{sigma^n s}."""
    entries = s.entries(n + 1)
    for k in range(n, 0, -1):
        e = entries[k - 1]
        z = inverse_branch(params, z, e.side, strip_center(params, e, entries[k].side), strict=strict)
    return z


def seed_depth(t: float, cfg: TraceConfig) -> tuple[int, float]:
    """Smallest N with F^N(t) >= T_cap, and that potential."""
    x = float(t)
    for n in range(cfg.max_depth + 1):
        if x >= cfg.T_cap:
            return n, x
        x = math.expm1(x)
    raise DepthExhausted(f"F^{cfg.max_depth}({t}) < T_cap={cfg.T_cap}")


def _trace_raw(params, s, t, cfg, extra_depth=0) -> tuple[complex, int]:
    n, T = seed_depth(t, cfg)
    n += extra_depth
    for _ in range(extra_depth):
        T = math.expm1(T) if T < 709 else math.inf
    if not math.isfinite(T) or n > cfg.max_depth + cfg.retries:
        raise DepthExhausted("seed potential overflows")
    sn = s
    for _ in range(n):
        sn = shift(sn)
    z = seed_point(params, sn, T)
    return pull_back(params, s, n, z), n


def _trace(params, s, t, cfg) -> tuple[complex, int]:
    last = None
    for extra in range(cfg.retries + 1):
        try:
            return _trace_raw(params, s, t, cfg, extra)
        except (CriticalValueHit, AmbiguousSide) as err:
            last = err
        except DepthExhausted:
            if last is None:
                raise
            break
    raise PullbackHitCriticalValue(str(last))


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def asymptotic_seed_defect(params: MapParams, s: ExternalAddress, t: float) -> float:
    """|seed(s, t) - B_{s_1}(seed(sigma s, F(t)))|: raw error of the leading-order seed."""
    z0 = seed_point(params, s, t)
    z1 = pull_back(params, s, 1, seed_point(params, shift(s), math.expm1(t)))
    return abs(z0 - z1)


def verify_functional_equation(params: MapParams, s: ExternalAddress, t: float,
                               cfg: TraceConfig = TraceConfig()) -> float:
    """Defect |E(g_s(t)) - g_{sigma s}(F(t))|.

    Once F(t) exceeds the working cap the image is far outside double range
    for a meaningful absolute comparison, so the defect is measured in the
    preimage: |g_s(t) - B_{s_1}(g_{sigma s}(F(t)))|.
    """
    z, _ = _trace(params, s, t, cfg)
    if t >= 709:
        return 0.0
    Ft = math.expm1(t)
    w, _ = _trace(params, shift(s), Ft, cfg)
    if Ft <= cfg.T_cap:
        return abs(evaluate(params, z) - w)
    return abs(z - pull_back(params, s, 1, w))


def trace_point(params: MapParams, s: ExternalAddress, t: float,
                cfg: TraceConfig = TraceConfig()) -> TracedPoint:
    if t <= 0:
        raise ValueError("potential must be positive")
    z, n = _trace(params, s, t, cfg)
    res = verify_functional_equation(params, s, t, cfg)
    return TracedPoint(z, n, res)


def trace_points_array(params: MapParams, s: ExternalAddress, ts: Sequence[float],
                       cfg: TraceConfig = TraceConfig()) -> np.ndarray:
    """Vectorised g_s on many potentials, without residuals or retries.

    Points whose pullback lands on a branch cut come back as nan.
    """
    ts = np.asarray(ts, dtype=float)
    out = np.full(ts.shape, np.nan + 0j, dtype=complex)
    depths = np.empty(ts.shape, dtype=int)
    Ts = np.empty(ts.shape)
    for i, t in enumerate(ts):
        try:
            depths[i], Ts[i] = seed_depth(t, cfg)
        except DepthExhausted:
            depths[i] = -1
    if (depths >= 0).sum() == 0:
        return out
    nmax = depths.max()
    entries = s.entries(nmax + 2)
    centers = [strip_center(params, entries[k], entries[k + 1].side) for k in range(nmax + 1)]
    for n in np.unique(depths[depths >= 0]):
        idx = np.nonzero(depths == n)[0]
        e1 = entries[n]
        if e1.side == "R":
            z = Ts[idx] - params.alpha.real + 1j * centers[n]
        else:
            z = -Ts[idx] + params.beta.real + 1j * centers[n]
        z = z.astype(complex)
        for k in range(n, 0, -1):
            z = inverse_branch_array(params, z, entries[k - 1].side, centers[k - 1])
        out[idx] = z
    return out


def geometric_grid(t_min: float, t_max: float, n: int) -> np.ndarray:
    """Decreasing geometric grid from t_max to t_min."""
    if t_max == t_min:
        return np.array([t_max])
    return np.exp(np.linspace(math.log(t_max), math.log(t_min), n))


def trace_ray(params: MapParams, s: ExternalAddress, t_min: float, t_max: float,
              n_samples: int = 64, cfg: TraceConfig = TraceConfig(),
              max_step: float = 0.25) -> RayPath:
    if t_max < t_min:
        raise ValueError("t_max must be >= t_min")
    if n_samples < 2 and t_max != t_min:
        raise ValueError("n_samples must be >= 2")
    t_s = minimal_potential(s)
    if t_min <= t_s:
        raise ValueError(f"t_min={t_min} must exceed the minimal potential {t_s}")

    def sample(t):
        try:
            p = trace_point(params, s, t, cfg)
        except (PullbackHitCriticalValue, DepthExhausted) as err:
            raise RayTraceError(t, err) from err
        return RaySample(float(t), p.z, p.residual)

    samples = [sample(t) for t in geometric_grid(t_min, t_max, n_samples)]
    budget = 8 * n_samples
    i = 0
    while i < len(samples) - 1 and len(samples) < budget:
        a, b = samples[i], samples[i + 1]
        if abs(a.z - b.z) > max_step:
            tm = math.sqrt(a.t * b.t)
            if not (b.t < tm < a.t):
                i += 1
                continue
            samples.insert(i + 1, sample(tm))
        else:
            i += 1
    return RayPath(s, tuple(samples), cfg)


# ---------------------------------------------------------------------------
# landing points
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LandingResult:
    z: complex
    converged: bool
    estimate_gap: float
    depth: int


def _landing_iterate(params, s, n, cfg) -> complex:
    sn = s
    for _ in range(n):
        sn = shift(sn)
    z = seed_point(params, sn, cfg.T_cap)
    return pull_back(params, s, n, z, strict=False)


def landing_point(params: MapParams, s: ExternalAddress,
                  cfg: TraceConfig = TraceConfig()) -> LandingResult:
    """Limit of the ray as t -> 0 via pullbacks of increasing depth.

    Branch points met along the way are resolved to the critical point and
    ties on the critical circle are broken by the entry's side label.
    """
    if not s.is_bounded:
        raise ValueError("landing is only computed for bounded addresses")
    prev = _landing_iterate(params, s, 1, cfg)
    gap = math.inf
    for n in range(2, cfg.max_depth + 1):
        z = _landing_iterate(params, s, n, cfg)
        gap = abs(z - prev)
        prev = z
        if gap < cfg.land_tol:
            return LandingResult(z, True, gap, n)
    return LandingResult(prev, False, gap, cfg.max_depth)


def orbit(params: MapParams, z: complex, n: int) -> list[complex]:
    """z, E(z), ..., stopping early when |Re| would leave double range."""
    out = [complex(z)]
    for _ in range(n):
        if abs(out[-1].real) > 700:
            break
        out.append(evaluate(params, out[-1]))
    return out
