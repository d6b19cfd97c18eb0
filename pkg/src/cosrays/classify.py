"""Numerical trichotomy: on a ray, landing point of rays, or undecided.

Escaping orbits are read off symbolically: far out, z_k sits in the strip of
the address entry s_{k+1}, and |Re z_k| ~ F^k(t) gives the potential. In
double precision the absolute error of z_k grows like prod |E'(z_j)|, so
only the first few entries of a starting point are determined; extraction
stops at the first entry whose strip cannot be resolved.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .cosine_map import (
    MapParams,
    NotPreperiodic,
    PostsingularData,
    compute_postsingular,
    derivative,
    evaluate,
)
from .partition import (
    BoundaryRay,
    OnBoundary,
    PartitionModel,
    itinerary_of_address,
    itinerary_of_point,
)
from .rays import TWO_PI, TraceConfig, landing_point, strip_center
from .symbolic import (
    ExternalAddress,
    Itinerary,
    PeriodicTail,
    Symbol,
    format_address,
    growth_inverse,
)

ESCAPE_RE = 50.0
GROWTH_FACTOR = 4.0
STRIP_MARGIN = 0.05
# absolute error in Im z above which a strip index is not trusted
RELIABLE_ERR = 0.25
EPS = 1e-16


class NotEscaping(ValueError):
    pass


class AmbiguousStrip(ValueError):
    def __init__(self, k: int, frac: float):
        super().__init__(f"entry {k} is {frac:.3f} strip widths from a strip edge")
        self.k = k
        self.frac = frac


class SearchExhausted(RuntimeError):
    def __init__(self, msg: str, partial: Sequence[ExternalAddress] = ()):
        super().__init__(msg)
        self.partial = list(partial)


@dataclass(frozen=True)
class Budget:
    iter: int = 60
    itin: int = 8
    search_M: int = 3
    depth: int = 8
    landing_tol: float = 1e-6
    potential_margin: float = 0.01
    max_candidates: int = 20000


@dataclass(frozen=True)
class Classification:
    kind: str  # OnRay | LandingPoint | PostsingularOrPreimage | Undecided
    addresses: tuple = ()
    potential: Optional[float] = None
    reason: str = ""
    budget_spent: int = 0

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "OnRay":
            out["address_prefix"] = " ".join(str(x) for x in self.addresses)
            out["potential"] = self.potential
        elif self.kind == "LandingPoint":
            out["addresses"] = [format_address(s) for s in self.addresses]
        elif self.kind == "Undecided":
            out["reason"] = self.reason
        out["iterations"] = self.budget_spent
        return out


# ---------------------------------------------------------------------------
# escaping orbits
# ---------------------------------------------------------------------------

def _next_side_asymptotic(params: MapParams, z: complex) -> str:
    """Side of E(z) read from the dominant exponential term, overflow-free."""
    if z.real > params.x_split:
        ang = math.atan2(params.a.imag, params.a.real) + z.imag
    else:
        ang = math.atan2(params.b.imag, params.b.real) - z.imag
    return "R" if math.cos(ang) > 0 else "L"


def forward_orbit(params: MapParams, z: complex, n: int) -> tuple[list[complex], list[float]]:
    """Orbit z_0..z_m (m <= n) with a first-order bound on the absolute error.

    Stops once |Re z| > 700 (the next iterate is not representable).
    """
    z = complex(z)
    orbit, err = [z], [EPS * max(1.0, abs(z))]
    for _ in range(n):
        if abs(z.real) > 700:
            break
        d = abs(derivative(params, z))
        z = evaluate(params, z)
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            break
        orbit.append(z)
        err.append(d * err[-1] + EPS * abs(z))
    return orbit, err


def _entry(params: MapParams, z: complex, next_side: str) -> tuple[Symbol, float]:
    side = "R" if z.real > params.x_split else "L"
    c = strip_center(params, Symbol(0, side), next_side)
    x = (z.imag - c) / TWO_PI
    idx = round(x)
    return Symbol(idx, side), abs(x - idx)


def _extract(params, orbit, err, strict: bool):
    entries = []
    for k, z in enumerate(orbit):
        if err[k] > RELIABLE_ERR:
            break
        nxt = orbit[k + 1] if k + 1 < len(orbit) else None
        if nxt is not None and err[k + 1] <= RELIABLE_ERR:
            ns = "R" if nxt.real > params.x_split else "L"
        else:
            ns = _next_side_asymptotic(params, z)
        sym, off = _entry(params, z, ns)
        if off > 0.5 - STRIP_MARGIN:
            if strict:
                raise AmbiguousStrip(k + 1, off)
            break
        entries.append(sym)
    return entries


def _has_escape_signature(orbit: Sequence[complex]) -> bool:
    if len(orbit) < 3:
        return False
    x = [abs(z.real) for z in orbit[-3:]]
    return x[-1] > ESCAPE_RE and x[0] < x[1] < x[2]


def address_from_escaping_orbit(params: MapParams, orbit: Sequence[complex],
                                errors: Optional[Sequence[float]] = None) -> tuple[Symbol, ...]:
    """Address prefix s_1 s_2 ... of an escaping orbit z_0, z_1, ...

    Entry k+1 comes from z_k: its side from Re z_k, its index from the strip
    containing Im z_k (shifted by pi when z_{k+1} lies on the other side).
    Entries past the point where the propagated rounding error exceeds a
    quarter of a unit are dropped rather than guessed.
    """
    orbit = [complex(z) for z in orbit]
    if not _has_escape_signature(orbit):
        raise NotEscaping("orbit does not show the escape growth signature")
    if errors is None:
        errors = [EPS * max(1.0, abs(orbit[0]))]
        for k in range(1, len(orbit)):
            prev = orbit[k - 1]
            d = abs(derivative(params, prev)) if abs(prev.real) <= 700 else math.inf
            errors.append(d * errors[-1] + EPS * abs(orbit[k]))
    return tuple(_extract(params, orbit, list(errors), strict=True))


def estimate_potential(params: MapParams, orbit: Sequence[complex]) -> float:
    """Invert |Re z_k| ~ F^k(t) at the deepest point of the orbit."""
    k = len(orbit) - 1
    z = orbit[k]
    if z.real > params.x_split:
        y = z.real + params.alpha.real
    else:
        y = -z.real + params.beta.real
    return growth_inverse(max(y, 0.0), k)


def escapes(params: MapParams, orbit: Sequence[complex]) -> bool:
    """Escape certificate: |Re| past the threshold and still at least quadrupling.

    A jump straight past the double range (|Re| > 700) counts when the jump
    itself was at least a quadrupling.
    """
    for k in range(len(orbit) - 1):
        x0, x1 = abs(orbit[k].real), abs(orbit[k + 1].real)
        if x1 >= GROWTH_FACTOR * x0 and (x0 > ESCAPE_RE or x1 > 700):
            return True
    return False


# ---------------------------------------------------------------------------
# itinerary matching
# ---------------------------------------------------------------------------

def _eventual_period(twice: Sequence[int], max_len: int) -> tuple[int, int]:
    n = len(twice)
    for total in range(1, max_len + 1):
        for per in range(1, total + 1):
            pre = total - per
            if all(twice[k] == twice[k + per] for k in range(pre, n - per)):
                return pre, per
    return max(0, max_len - 1), 1


def _symbol_options(u2: int, M: int) -> list[Symbol]:
    base = math.floor(u2 / 2)
    out = []
    for idx in (base - 1, base, base + 1):
        if abs(idx) <= M:
            for side in ("R", "L"):
                out.append(Symbol(idx, side))
    return out


def match_itinerary_to_address(part: PartitionModel, params: MapParams, itin: Itinerary,
                               M: int = 3, depth: int = 8,
                               cfg: TraceConfig = TraceConfig(),
                               max_candidates: int = 20000) -> list[ExternalAddress]:
    """Bounded preperiodic addresses whose rays have the itinerary ``itin``.

    Candidates follow the eventual period of the itinerary (and twice it when
    affordable); entry k ranges over indices floor(u_k) - 1 .. floor(u_k) + 1
    on both sides, capped by |s_k| <= M.
    """
    twice = tuple(itin.twice)
    if len(twice) < depth:
        raise ValueError("itinerary shorter than the requested depth")
    pre, per = _eventual_period(twice, depth)
    shapes = [(pre, per)]
    if pre + 2 * per <= depth:
        shapes.append((pre, 2 * per))
    found: list[ExternalAddress] = []
    seen = set()
    tried = 0
    for pre_, per_ in shapes:
        opts = [_symbol_options(twice[k], M) for k in range(pre_ + per_)]
        if any(not o for o in opts):
            continue
        for combo in itertools.product(*opts):
            tried += 1
            if tried > max_candidates:
                raise SearchExhausted(f"more than {max_candidates} candidates", found)
            s = ExternalAddress(tuple(combo[:pre_]), PeriodicTail(tuple(combo[pre_:]))).canonical()
            key = format_address(s)
            if key in seen:
                continue
            seen.add(key)
            try:
                got = itinerary_of_address(part, params, s, len(twice), cfg)
            except (BoundaryRay, OnBoundary):
                continue
            except Exception:
                continue
            if got.twice == twice:
                found.append(s)
    if not found:
        raise SearchExhausted("no bounded address matches the itinerary", found)
    return found


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

def _hits(post: Optional[PostsingularData], z: complex, err: float) -> bool:
    if post is None:
        return False
    return any(abs(z - p) <= max(1e-9, 10 * err) for p in post.points)


def classify_point(params: MapParams, part: PartitionModel, z: complex,
                   budget: Budget = Budget(), cfg: TraceConfig = TraceConfig(),
                   post: Optional[PostsingularData] = None) -> Classification:
    z = complex(z)
    orbit, err = forward_orbit(params, z, budget.iter)
    spent = len(orbit) - 1

    # (i) escaping
    if escapes(params, orbit):
        prefix = tuple(_extract(params, orbit, err, strict=False))
        t = estimate_potential(params, orbit)
        # a finite prefix carries no growth information: t_s = 0 is assumed
        if t <= budget.potential_margin:
            return Classification("Undecided", prefix, t,
                                  "escaping with potential at the minimal potential", spent)
        if not prefix:
            return Classification("Undecided", (), t, "no reliable address entry", spent)
        return Classification("OnRay", prefix, t, "", spent)

    if post is None:
        try:
            post = compute_postsingular(params)
        except NotPreperiodic:
            post = None

    # (ii) precritical or on a partition ray
    try:
        itin = itinerary_of_point(part, params, z, budget.itin)
    except OnBoundary as e:
        return Classification("PostsingularOrPreimage", (), None,
                              f"orbit meets a partition boundary at step {e.step}", spent)

    # (iii) landing point of a ray with the same itinerary
    if len(itin) >= budget.itin and not itin.escaped_beyond_range:
        try:
            cands = match_itinerary_to_address(part, params, itin, budget.search_M, budget.depth,
                                               cfg, budget.max_candidates)
        except SearchExhausted as e:
            cands = e.partial
        landing = []
        for s in cands:
            res = landing_point(params, s, cfg)
            if res.converged and abs(res.z - z) < budget.landing_tol:
                landing.append(s)
        if landing:
            return Classification("LandingPoint", tuple(landing), None, "", spent)

    # (iv) orbit meets the postsingular set
    for k, w in enumerate(orbit):
        if _hits(post, w, err[k]):
            return Classification("PostsingularOrPreimage", (), None,
                                  f"orbit meets the postsingular set at step {k}", spent)
    return Classification("Undecided", (), None, "budget exhausted", spent)
