"""External addresses over Z_L u Z_R, the shift map, and potentials.

An address is a sequence s_1 s_2 ... of integer entries, each tagged with a
side (``L`` or ``R``). Only finitely describable addresses are supported: a
finite prefix followed either by a periodic block or by a deterministic
generator rule.

The growth function ``F(t) = exp(t) - 1`` governs how potentials grow along
orbits; its inverse ``log1p`` is used whenever a comparison can be pulled back
instead of pushed forward, which avoids overflow.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Iterator, NamedTuple, Optional, Sequence, Union

OVERFLOW_CAP = 1e300
DEFAULT_PROBE_DEPTH = 40
DEFAULT_POTENTIAL_TOL = 1e-9

# x grid searched when certifying exponential boundedness
_BOUND_GRID = tuple(2.0**j for j in range(21))


class NotExponentiallyBounded(ValueError):
    """The address grows faster than any iterate of F (minimal potential is infinite)."""


class AddressSyntaxError(ValueError):
    pass


class Symbol(NamedTuple):
    """One address entry ``index_side``; arithmetic only ever uses ``index``."""

    index: int
    side: str

    def __str__(self) -> str:
        return f"{self.index}{self.side}"

    @property
    def is_right(self) -> bool:
        return self.side == "R"


def sym(index: int, side: str) -> Symbol:
    side = side.upper()
    if side not in ("L", "R"):
        raise ValueError(f"side must be 'L' or 'R', got {side!r}")
    return Symbol(int(index), side)


@dataclass(frozen=True)
class PeriodicTail:
    block: tuple[Symbol, ...]

    def __post_init__(self):
        if not self.block:
            raise ValueError("periodic block must be non-empty")


@dataclass(frozen=True)
class GeneratedTail:
    """Tail produced by ``rule(k)`` for k = 1, 2, ... (counted from the tail start).

    ``bound`` declares |index| <= bound for every generated entry. ``growth``
    declares |index_k| <= F^(k-1)(growth) instead. Without either declaration
    only finite probing is possible.
    """

    rule: Callable[[int], Symbol] = field(compare=False)
    bound: Optional[int] = None
    growth: Optional[float] = None
    offset: int = 0

    def entry(self, k: int) -> Symbol:
        return self.rule(k + self.offset)


Tail = Union[PeriodicTail, GeneratedTail]


@dataclass(frozen=True)
class ExternalAddress:
    prefix: tuple[Symbol, ...]
    tail: Tail

    @classmethod
    def periodic(cls, block: Sequence[Symbol], prefix: Sequence[Symbol] = ()) -> "ExternalAddress":
        return cls(tuple(prefix), PeriodicTail(tuple(block)))

    @classmethod
    def generated(cls, rule, *, bound=None, growth=None, prefix=()) -> "ExternalAddress":
        return cls(tuple(prefix), GeneratedTail(rule, bound=bound, growth=growth))

    def entry(self, k: int) -> Symbol:
        """The k-th entry, 1-based."""
        if k < 1:
            raise IndexError("address entries are numbered from 1")
        if k <= len(self.prefix):
            return self.prefix[k - 1]
        j = k - len(self.prefix)
        if isinstance(self.tail, PeriodicTail):
            block = self.tail.block
            return block[(j - 1) % len(block)]
        return self.tail.entry(j)

    def entries(self, n: int) -> list[Symbol]:
        return [self.entry(k) for k in range(1, n + 1)]

    def __iter__(self) -> Iterator[Symbol]:
        k = 1
        while True:
            yield self.entry(k)
            k += 1

    @property
    def is_periodic_tail(self) -> bool:
        return isinstance(self.tail, PeriodicTail)

    @property
    def is_bounded(self) -> bool:
        if isinstance(self.tail, PeriodicTail):
            return True
        return self.tail.bound is not None

    def canonical(self) -> "ExternalAddress":
        """Shortest prefix and primitive period describing the same sequence."""
        if not isinstance(self.tail, PeriodicTail):
            return self
        block = self.tail.block
        n = len(block)
        for p in range(1, n + 1):
            if n % p == 0 and block == block[:p] * (n // p):
                block = block[:p]
                break
        prefix = list(self.prefix)
        while prefix and prefix[-1] == block[-1]:
            prefix.pop()
            block = (block[-1],) + block[:-1]
        return ExternalAddress(tuple(prefix), PeriodicTail(block))

    def same_sequence(self, other: "ExternalAddress", depth: int = 64) -> bool:
        if self.is_periodic_tail and other.is_periodic_tail:
            return self.canonical() == other.canonical()
        return self.entries(depth) == other.entries(depth)

    def preperiod_and_period(self) -> tuple[int, int]:
        c = self.canonical()
        if not isinstance(c.tail, PeriodicTail):
            raise ValueError("address has no periodic tail")
        return len(c.prefix), len(c.tail.block)

    def prepend(self, *symbols: Symbol) -> "ExternalAddress":
        return ExternalAddress(tuple(symbols) + self.prefix, self.tail)

    def __str__(self) -> str:
        return format_address(self)


def shift(s: ExternalAddress) -> ExternalAddress:
    """sigma(s): drop the first entry, keeping the tail representation."""
    if s.prefix:
        return ExternalAddress(s.prefix[1:], s.tail)
    tail = s.tail
    if isinstance(tail, PeriodicTail):
        return ExternalAddress((), PeriodicTail(tail.block[1:] + tail.block[:1]))
    growth = tail.growth
    if growth is not None:
        # |s_{k+1}| <= F^k(x) = F^(k-1)(F(x))
        growth = growth_iterate(growth, 1).value
    return ExternalAddress((), GeneratedTail(tail.rule, tail.bound, growth, tail.offset + 1))


def shift_n(s: ExternalAddress, n: int) -> ExternalAddress:
    for _ in range(n):
        s = shift(s)
    return s


# ---------------------------------------------------------------------------
# growth function F(t) = e^t - 1
# ---------------------------------------------------------------------------

class GrowthValue(NamedTuple):
    value: float
    saturated: bool


def growth_iterate(t: float, k: int, cap: float = OVERFLOW_CAP) -> GrowthValue:
    """F^k(t); saturates to +inf (flagged) once an iterate exceeds ``cap``."""
    if t < 0 or k < 0:
        raise ValueError("need t >= 0 and k >= 0")
    x = float(t)
    if x > cap:
        return GrowthValue(math.inf, True)
    for _ in range(k):
        if x > 709.0:
            return GrowthValue(math.inf, True)
        x = math.expm1(x)
        if x > cap:
            return GrowthValue(math.inf, True)
    return GrowthValue(x, False)


def growth_inverse(y: float, k: int) -> float:
    """F^-k(y) by iterated log1p; exact where F^k would overflow."""
    x = float(y)
    for _ in range(k):
        x = math.log1p(x)
    return x


# ---------------------------------------------------------------------------
# boundedness and minimal potential
# ---------------------------------------------------------------------------

def _tail_certified(s: ExternalAddress) -> bool:
    if isinstance(s.tail, PeriodicTail):
        return True
    return s.tail.bound is not None or s.tail.growth is not None


def _dominated_at(s: ExternalAddress, x: float, probe_depth: int) -> bool:
    for k in range(1, probe_depth + 1):
        bound = growth_iterate(x, k - 1)
        if bound.saturated:
            # entries beyond double range are dominated by any saturated bound
            return True
        if abs(s.entry(k).index) > bound.value:
            return False
    return True


def is_exponentially_bounded(s: ExternalAddress, probe_depth: int = DEFAULT_PROBE_DEPTH) -> bool:
    """True iff some x on the grid {1, 2, 4, ..., 2^20} satisfies
    |s_k| <= F^(k-1)(x) for k <= probe_depth, and the tail is certified.

    Periodic and bounded tails are always exponentially bounded.
    """
    if probe_depth < 1:
        raise ValueError("probe_depth must be >= 1")
    if s.is_bounded:
        return True
    if not _tail_certified(s):
        # probing alone: trust the finite window
        pass
    return any(_dominated_at(s, x, probe_depth) for x in _BOUND_GRID)


def _pulled_back_entries(s: ExternalAddress, probe_depth: int) -> list[float]:
    """tau_k = F^-k(|s_k|) for every k <= probe_depth whose entry is computable."""
    taus = []
    for k in range(1, probe_depth + 1):
        try:
            idx = abs(s.entry(k).index)
        except (OverflowError, ValueError):
            break
        taus.append(growth_inverse(float(idx), k) if idx < 1e308 else growth_inverse(math.log(idx), k - 1))
    return taus


def minimal_potential(
    s: ExternalAddress,
    tol: float = DEFAULT_POTENTIAL_TOL,
    probe_depth: int = DEFAULT_PROBE_DEPTH,
) -> float:
    """Numerical t_s = inf{t > 0 : |s_k| / F^k(t) -> 0}.

    Bounded tails give exactly 0. Otherwise the ratio test is evaluated in
    pulled-back form, |s_k| < F^k(t)  <=>  F^-k(|s_k|) < t, over the deepest
    half of the probed entries, and t is bisected to ``tol``.
    """
    if not is_exponentially_bounded(s, probe_depth):
        raise NotExponentiallyBounded(str(s) if s.is_periodic_tail else "generated address")
    if s.is_bounded:
        return 0.0
    taus = _pulled_back_entries(s, probe_depth)
    if not taus:
        return 0.0
    window = taus[len(taus) // 2:]

    def vanishes(t: float) -> bool:
        return all(tau < t for tau in window)

    lo, hi = 0.0, max(1.0, max(window) + 1.0)
    while not vanishes(hi):
        hi *= 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if vanishes(mid):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# literal syntax:  3R 1L (0R 2R)*
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"^([+-]?\d+)([LRlr])$")


def _parse_symbol(tok: str) -> Symbol:
    m = _TOKEN.match(tok)
    if not m:
        raise AddressSyntaxError(f"bad address entry {tok!r}")
    return Symbol(int(m.group(1)), m.group(2).upper())


def parse_address(text: str) -> ExternalAddress:
    """Parse ``"3R 1L (0R 2R)*"``: prefix entries, then a starred periodic block."""
    text = text.strip()
    m = re.match(r"^(.*?)\(([^()]*)\)\*$", text)
    if not m:
        raise AddressSyntaxError(f"address {text!r} needs a periodic block '( ... )*'")
    prefix = tuple(_parse_symbol(t) for t in m.group(1).split())
    block = tuple(_parse_symbol(t) for t in m.group(2).split())
    if not block:
        raise AddressSyntaxError("empty periodic block")
    return ExternalAddress(prefix, PeriodicTail(block))


def format_address(s: ExternalAddress) -> str:
    if not isinstance(s.tail, PeriodicTail):
        head = " ".join(str(x) for x in s.prefix)
        return (head + " " if head else "") + "<generated>"
    parts = [str(x) for x in s.prefix]
    parts.append("(" + " ".join(str(x) for x in s.tail.block) + ")*")
    return " ".join(parts)


# ---------------------------------------------------------------------------
# itineraries: half-integer labels stored doubled
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Itinerary:
    twice: tuple[int, ...]
    escaped_beyond_range: bool = False

    @classmethod
    def from_labels(cls, labels: Sequence[float]) -> "Itinerary":
        out = []
        for u in labels:
            d = 2 * u
            if d != int(d):
                raise ValueError(f"{u} is not a half-integer")
            out.append(int(d))
        return cls(tuple(out))

    @property
    def labels(self) -> tuple[float, ...]:
        return tuple(d / 2 for d in self.twice)

    def __len__(self) -> int:
        return len(self.twice)

    def __getitem__(self, k):
        return self.twice[k]

    def __str__(self) -> str:
        def fmt(d):
            return str(d // 2) if d % 2 == 0 else f"{d}/2"
        return " ".join(fmt(d) for d in self.twice)
