"""Vectorised escape-time kernel shared by the dimension experiments and renders."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .cosine_map import MapParams

ESCAPE_RE = 50.0
GROWTH_FACTOR = 4.0
RE_LIMIT = 700.0
THREADS_ENV = "COSRAYS_THREADS"


def escape_steps(params: MapParams, z: np.ndarray, budget: int) -> tuple[np.ndarray, np.ndarray]:
    """First certified escape step per point (-1 if none) and sign of Re there.

    A point is certified at step k+1 when |Re z_{k+1}| >= 4 |Re z_k| and
    either |Re z_k| > 50 or |Re z_{k+1}| > 700. Points that leave the double
    range without that signature are frozen as non-escaping.
    """
    z = np.array(z, dtype=complex).ravel()
    steps = np.full(z.shape, -1, dtype=np.int32)
    sign = np.zeros(z.shape, dtype=np.int8)
    active = np.arange(z.size)
    a, b = params.a, params.b
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, budget + 1):
            if active.size == 0:
                break
            w = z[active]
            ew = np.exp(w)
            nw = a * ew + b / ew
            x0 = np.abs(w.real)
            x1 = np.abs(nw.real)
            x1 = np.where(np.isfinite(x1), x1, np.inf)
            done = (x1 >= GROWTH_FACTOR * x0) & ((x0 > ESCAPE_RE) | (x1 > RE_LIMIT))
            idx = active[done]
            steps[idx] = k
            sign[idx] = np.where(np.nan_to_num(nw.real[done], posinf=1.0, neginf=-1.0) >= 0, 1, -1)
            stuck = ~done & ~(x1 <= RE_LIMIT)
            keep = ~done & ~stuck
            z[active[keep]] = nw[keep]
            active = active[keep]
    return steps, sign


def thread_count() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return min(8, os.cpu_count() or 1)


def escape_grid(params: MapParams, window: tuple[complex, complex], width: int, height: int,
                budget: int, threads: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Escape steps on pixel centres, rows top (max Im) to bottom.

    Rows are split into chunks processed in parallel; results are written
    into fixed slices, so the output does not depend on scheduling.
    """
    lo, hi = complex(window[0]), complex(window[1])
    xs = lo.real + (np.arange(width) + 0.5) * (hi.real - lo.real) / width
    ys = hi.imag - (np.arange(height) + 0.5) * (hi.imag - lo.imag) / height
    steps = np.empty((height, width), dtype=np.int32)
    sign = np.empty((height, width), dtype=np.int8)
    n = threads or thread_count()
    chunk = max(1, -(-height // (4 * n)))

    def work(r0):
        r1 = min(height, r0 + chunk)
        zz = xs[None, :] + 1j * ys[r0:r1, None]
        s, g = escape_steps(params, zz, budget)
        steps[r0:r1] = s.reshape(r1 - r0, width)
        sign[r0:r1] = g.reshape(r1 - r0, width)

    starts = list(range(0, height, chunk))
    if n == 1:
        for r0 in starts:
            work(r0)
    else:
        with ThreadPoolExecutor(n) as ex:
            list(ex.map(work, starts))
    return steps, sign
