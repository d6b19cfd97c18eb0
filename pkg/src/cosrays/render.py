"""Escape-time images with ray, partition and postsingular overlays, written as binary PPM."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Sequence

import numpy as np

from .cosine_map import MapParams, NotPreperiodic, compute_postsingular
from .escape import escape_grid
from .partition import PartitionModel, build_partition
from .rays import TraceConfig, landing_point, trace_points_array
from .symbolic import ExternalAddress, parse_address

WARM_BASE = 1
COOL_BASE = 128
RAMP = 127

PARTITION_RGB = (255, 255, 255)
BASE_RAY_RGB = (255, 255, 0)
RAY_RGB = (0, 255, 160)
POST_RGB = (255, 0, 255)


def load_palette(name: str = "classic") -> np.ndarray:
    text = resources.files("cosrays").joinpath(f"data/palette_{name}.txt").read_text()
    rows = [ln.split() for ln in text.splitlines() if ln and not ln.startswith("#")]
    pal = np.array(rows, dtype=np.uint8)
    if pal.shape != (256, 3):
        raise ValueError(f"palette {name!r} must have 256 RGB entries")
    return pal


@dataclass(frozen=True)
class RenderJob:
    params: MapParams
    window: tuple[complex, complex] = (-5 - 5j, 5 + 5j)
    resolution: tuple[int, int] = (512, 512)
    budget: int = 50
    overlays: tuple[str, ...] = ()  # "partition", "postsingular", "ray:<address>"
    palette: str = "classic"
    threads: int | None = None

    def __post_init__(self):
        w, h = self.resolution
        if not (16 <= w <= 16384 and 16 <= h <= 16384):
            raise ValueError("width and height must lie in [16, 16384]")
        lo, hi = complex(self.window[0]), complex(self.window[1])
        if not (hi.real > lo.real and hi.imag > lo.imag):
            raise ValueError("degenerate window")
        for ov in self.overlays:
            if ov not in ("partition", "postsingular") and not ov.startswith("ray:"):
                raise ValueError(f"unknown overlay {ov!r}")


class _Canvas:
    def __init__(self, img: np.ndarray, window):
        self.img = img
        self.h, self.w = img.shape[:2]
        self.lo, self.hi = complex(window[0]), complex(window[1])

    def pixel(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        cx = np.floor((z.real - self.lo.real) / (self.hi.real - self.lo.real) * self.w).astype(np.int64)
        cy = np.floor((self.hi.imag - z.imag) / (self.hi.imag - self.lo.imag) * self.h).astype(np.int64)
        return cx, cy

    def polyline(self, z: np.ndarray, rgb) -> None:
        z = np.asarray(z, dtype=complex)
        z = z[np.isfinite(z)]
        if z.size == 0:
            return
        px = (self.hi.real - self.lo.real) / self.w
        py = (self.hi.imag - self.lo.imag) / self.h
        step = 0.5 * min(px, py)
        # clip far-away vertices before subdividing
        margin = 4 * max(self.hi.real - self.lo.real, self.hi.imag - self.lo.imag)
        z = np.clip(z.real, self.lo.real - margin, self.hi.real + margin) + 1j * np.clip(
            z.imag, self.lo.imag - margin, self.hi.imag + margin)
        pts = [z[:1]]
        for a, b in zip(z[:-1], z[1:]):
            n = max(1, int(math.ceil(abs(b - a) / step)))
            pts.append(a + (b - a) * np.arange(1, n + 1) / n)
        self.points(np.concatenate(pts), rgb)

    def points(self, z: np.ndarray, rgb) -> None:
        cx, cy = self.pixel(np.asarray(z, dtype=complex))
        ok = (cx >= 0) & (cx < self.w) & (cy >= 0) & (cy < self.h)
        self.img[cy[ok], cx[ok]] = rgb

    def cross(self, z: complex, rgb, r: int = 2) -> None:
        cx, cy = self.pixel(np.array([z]))
        for d in range(-r, r + 1):
            for x, y in ((cx[0] + d, cy[0]), (cx[0], cy[0] + d)):
                if 0 <= x < self.w and 0 <= y < self.h:
                    self.img[y, x] = rgb


def colorize(steps: np.ndarray, sign: np.ndarray, palette: np.ndarray) -> np.ndarray:
    idx = np.zeros(steps.shape, dtype=np.int64)
    ramp = np.clip(steps - 1, 0, RAMP - 1)
    idx = np.where((steps > 0) & (sign >= 0), WARM_BASE + ramp, idx)
    idx = np.where((steps > 0) & (sign < 0), COOL_BASE + ramp, idx)
    return palette[idx]


def _draw_partition(canvas: _Canvas, part: PartitionModel) -> None:
    lo, hi = canvas.lo, canvas.hi
    h = part.height_bound
    m_lo = int(math.floor((lo.imag - h) / (2 * math.pi))) - 1
    m_hi = int(math.ceil((hi.imag + h) / (2 * math.pi))) + 1
    for n in range(2 * m_lo, 2 * m_hi + 2):
        canvas.polyline(part.curve(n).points, PARTITION_RGB)
    for ray in part.base_rays:
        if ray is not None:
            canvas.polyline(ray, BASE_RAY_RGB)


def _draw_ray(canvas: _Canvas, params: MapParams, s: ExternalAddress) -> None:
    reach = max(abs(canvas.lo.real), abs(canvas.hi.real)) + abs(params.alpha.real) + 4.0
    ts = np.exp(np.linspace(math.log(reach), math.log(0.05), 600))
    deep = TraceConfig(max_depth=400)
    z = trace_points_array(params, s, ts, deep)
    if s.is_bounded:
        land = landing_point(params, s)
        if land.converged:
            z = np.append(z, land.z)
    canvas.polyline(z, RAY_RGB)


def render_escape(job: RenderJob) -> np.ndarray:
    """RGB image (height, width, 3) of escape steps with overlays on top."""
    w, h = job.resolution
    steps, sign = escape_grid(job.params, job.window, w, h, job.budget, job.threads)
    img = colorize(steps, sign, load_palette(job.palette))
    canvas = _Canvas(img, job.window)
    for ov in job.overlays:
        if ov == "partition":
            _draw_partition(canvas, build_partition(job.params))
        elif ov == "postsingular":
            try:
                post = compute_postsingular(job.params)
            except NotPreperiodic:
                continue
            for p in post.points:
                canvas.cross(p, POST_RGB)
        else:
            _draw_ray(canvas, job.params, parse_address(ov[4:]))
    return img


def ppm_bytes(img: np.ndarray) -> bytes:
    img = np.ascontiguousarray(img, dtype=np.uint8)
    h, w = img.shape[:2]
    return f"P6\n{w} {h}\n255\n".encode("ascii") + img.tobytes()


def write_ppm(path, img: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(ppm_bytes(img))


def read_ppm(path) -> np.ndarray:
    data = open(path, "rb").read()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P6" or parts[2] != b"255":
        raise ValueError("not a binary 8-bit PPM")
    w, h = map(int, parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w, 3)
