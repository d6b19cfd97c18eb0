"""Desk-scale dimension experiments: box counts of ray families and of the escaping set."""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .cosine_map import MapParams
from .escape import ESCAPE_RE, escape_grid, escape_steps
from .rays import (
    DepthExhausted,
    PullbackHitCriticalValue,
    TraceConfig,
    trace_points_array,
)
from .symbolic import ExternalAddress, PeriodicTail, Symbol, format_address

Window = tuple[complex, complex]
DEFAULT_WINDOW: Window = (-10 - 10j, 10 + 10j)


class TooFewPoints(ValueError):
    pass


@dataclass(frozen=True)
class BoxCountReport:
    window: Window
    scales: tuple[float, ...]
    counts: tuple[int, ...]
    slope: float
    fit_quality: float
    config: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        lo, hi = self.window
        return {
            "window": [[lo.real, lo.imag], [hi.real, hi.imag]],
            "scales": list(self.scales),
            "counts": list(self.counts),
            "slope": self.slope,
            "fit_quality": self.fit_quality,
            "config": self.config,
        }


@dataclass(frozen=True)
class EscapeStats:
    n_samples: int
    budget: int
    escape_radius_log: float
    escaped: int
    fraction: float
    seed: int = 0

    def to_json(self) -> dict:
        return asdict(self)


def _window(window) -> Window:
    lo, hi = complex(window[0]), complex(window[1])
    if not (hi.real > lo.real and hi.imag > lo.imag):
        raise ValueError("window must have positive width and height")
    return lo, hi


def box_count(points, window: Window = DEFAULT_WINDOW, n_scales: int = 8,
              min_points: int = 1000) -> BoxCountReport:
    """Occupied dyadic boxes at eps_j = diam / 2^j, j = 2 .. n_scales + 1.

    diam is the longer window side. The slope is fitted by least squares of
    log N against log(1/eps), leaving out the coarsest and the finest scale.
    """
    if n_scales < 4:
        raise ValueError("n_scales must be >= 4")
    lo, hi = _window(window)
    z = np.asarray(points, dtype=complex).ravel()
    z = z[np.isfinite(z)]
    inside = (z.real >= lo.real) & (z.real < hi.real) & (z.imag >= lo.imag) & (z.imag < hi.imag)
    z = z[inside]
    if z.size < min_points:
        raise TooFewPoints(f"{z.size} points inside the window, need {min_points}")
    diam = max(hi.real - lo.real, hi.imag - lo.imag)
    x = z.real - lo.real
    y = z.imag - lo.imag
    scales, counts = [], []
    for j in range(2, n_scales + 2):
        eps = diam / 2**j
        ix = np.floor(x / eps).astype(np.int64)
        iy = np.floor(y / eps).astype(np.int64)
        counts.append(int(np.unique(ix * (2**j + 1) + iy).size))
        scales.append(eps)
    lx = np.log(1.0 / np.array(scales[1:-1]))
    ly = np.log(np.array(counts[1:-1], dtype=float))
    slope, icpt = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + icpt)
    ss = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss if ss > 0 else 1.0
    return BoxCountReport((lo, hi), tuple(scales), tuple(counts), float(slope), r2,
                          {"n_scales": n_scales, "n_points": int(z.size)})


# ---------------------------------------------------------------------------
# ray families
# ---------------------------------------------------------------------------

def periodic_addresses(M: int, max_period: int) -> list[ExternalAddress]:
    """All purely periodic addresses with |s_k| <= M and primitive period <= max_period."""
    symbols = [Symbol(i, side) for i in range(-M, M + 1) for side in ("R", "L")]
    seen, out = set(), []
    for p in range(1, max_period + 1):
        for block in itertools.product(symbols, repeat=p):
            s = ExternalAddress((), PeriodicTail(block)).canonical()
            blk = s.tail.block
            if len(blk) != p:
                continue
            # identify cyclic rotations: they are shifts of one another, not equal
            key = format_address(s)
            if key not in seen:
                seen.add(key)
                out.append(s)
    return out


def densify(z: np.ndarray, spacing: float) -> np.ndarray:
    """Insert linearly interpolated points so consecutive gaps are <= spacing."""
    z = z[np.isfinite(z)]
    if z.size < 2:
        return z
    seg = np.abs(np.diff(z))
    reps = np.maximum(1, np.ceil(seg / spacing).astype(int))
    parts = [z[i] + (z[i + 1] - z[i]) * np.arange(reps[i]) / reps[i] for i in range(z.size - 1)]
    parts.append(z[-1:])
    return np.concatenate(parts)


def _t_max_for(params: MapParams, window: Window) -> float:
    lo, hi = window
    reach = max(abs(lo.real), abs(hi.real))
    return reach + abs(params.alpha.real) + abs(params.beta.real) + 2.0


def ray_family_dimension(params: MapParams, M: int = 1, tail_depth: int = 3, t_floor: float = 1.0,
                         window: Window = DEFAULT_WINDOW, cfg: TraceConfig = TraceConfig(),
                         n_scales: int = 8, samples_per_ray: int = 400) -> BoxCountReport:
    """Box count of the union of rays g_s([t_floor, t_max]) over periodic s.

    Rays are sampled on a geometric grid in t and the polylines densified
    below the finest box size, so the count sees curves rather than dust.
    """
    if t_floor <= 0:
        raise ValueError("t_floor must be positive")
    window = _window(window)
    t_max = _t_max_for(params, window)
    ts = np.exp(np.linspace(math.log(t_max), math.log(t_floor), samples_per_ray))
    diam = max(window[1].real - window[0].real, window[1].imag - window[0].imag)
    spacing = diam / 2 ** (n_scales + 1) / 4
    chunks, skipped = [], []
    for s in periodic_addresses(M, tail_depth):
        try:
            z = trace_points_array(params, s, ts, cfg)
        except (DepthExhausted, PullbackHitCriticalValue) as err:
            skipped.append((format_address(s), str(err)))
            continue
        chunks.append(densify(z, spacing))
    pts = np.concatenate(chunks) if chunks else np.empty(0, dtype=complex)
    rep = box_count(pts, window, n_scales)
    cfg_echo = dict(rep.config, M=M, tail_depth=tail_depth, t_floor=t_floor, t_max=t_max,
                    n_rays=len(chunks), skipped=skipped)
    return BoxCountReport(rep.window, rep.scales, rep.counts, rep.slope, rep.fit_quality, cfg_echo)


# ---------------------------------------------------------------------------
# escaping set
# ---------------------------------------------------------------------------

def escape_fraction(params: MapParams, window: Window = DEFAULT_WINDOW, n_samples: int = 100_000,
                    budget: int = 50, seed: int = 0) -> EscapeStats:
    """Monte-Carlo escape fraction with a PCG64 stream seeded by ``seed``."""
    lo, hi = _window(window)
    rng = np.random.Generator(np.random.PCG64(seed))
    x = rng.uniform(lo.real, hi.real, n_samples)
    y = rng.uniform(lo.imag, hi.imag, n_samples)
    steps, _ = escape_steps(params, x + 1j * y, budget)
    esc = int(np.count_nonzero(steps > 0))
    return EscapeStats(n_samples, budget, math.log(ESCAPE_RE), esc, esc / n_samples, seed)


def escaping_set_dimension(params: MapParams, window: Window = (-5 - 5j, 5 + 5j),
                           resolution: int = 512, budget: int = 100) -> tuple[BoxCountReport, float]:
    """Box count of escaping pixel centres; also returns the escaped fraction."""
    lo, hi = _window(window)
    steps, _ = escape_grid(params, (lo, hi), resolution, resolution, budget)
    ys = hi.imag - (np.arange(resolution) + 0.5) * (hi.imag - lo.imag) / resolution
    xs = lo.real + (np.arange(resolution) + 0.5) * (hi.real - lo.real) / resolution
    grid = xs[None, :] + 1j * ys[:, None]
    esc = grid[steps > 0]
    n_scales = max(4, int(math.log2(max(resolution, 1))) - 1)
    rep = box_count(esc, (lo, hi), n_scales)
    frac = float(esc.size) / (resolution * resolution)
    return BoxCountReport(rep.window, rep.scales, rep.counts, rep.slope, rep.fit_quality,
                          dict(rep.config, resolution=resolution, budget=budget,
                               escaped_fraction=frac)), frac
