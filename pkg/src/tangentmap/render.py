"""Basin pictures: classify every pixel of a window and write PPM images."""
from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from . import kernels
from .orbit import OrbitClass, OrbitOutcome, OrbitParams, classify_many
from .poly import PolyMap2, as_point

__all__ = [
    "Window",
    "BasinGrid",
    "PALETTE",
    "OVERLAY_COLOR",
    "render_grid",
    "probe",
    "grid_to_ppm",
    "grid_stats",
    "stats_csv",
]

PALETTE: dict[OrbitClass, tuple[int, int, int]] = {
    OrbitClass.ConvergesToOrigin: (255, 215, 0),
    OrbitClass.ConvergesToLineNotOrigin: (0, 0, 255),
    OrbitClass.Escapes: (220, 40, 40),
    OrbitClass.Indeterminate: (245, 200, 200),
}
OVERLAY_COLOR = (40, 40, 40)
OVERLAY_TOL = 1e-3

_CODES = {
    OrbitClass.ConvergesToOrigin: kernels.CLS_ORIGIN,
    OrbitClass.ConvergesToLineNotOrigin: kernels.CLS_LINE,
    OrbitClass.Escapes: kernels.CLS_ESCAPE,
    OrbitClass.Indeterminate: kernels.CLS_INDETERMINATE,
}


@dataclass(frozen=True)
class Window:
    """Rectangle of starts: real parts centred at ``(cx, cy)`` with full widths
    ``ex`` (along Re z) and ``ey`` (along Re w); ``imz``/``imw`` fix the
    imaginary parts of the slice.  Pixel ``(i, j)`` sits at its cell centre,
    ``i`` counting columns left to right and ``j`` rows from the top (largest w).
    """

    cx: float
    cy: float
    ex: float
    ey: float
    width: int
    height: int
    imz: float = 0.0
    imw: float = 0.0

    def __post_init__(self) -> None:
        if not (self.ex > 0 and self.ey > 0):
            raise ValueError("window extents must be positive")
        if int(self.width) != self.width or int(self.height) != self.height:
            raise ValueError("pixel counts must be integers")
        if self.width < 1 or self.height < 1:
            raise ValueError("window needs at least one pixel")

    @classmethod
    def from_bounds(cls, x0: float, x1: float, y0: float, y1: float, width: int, height: int,
                    imz: float = 0.0, imw: float = 0.0) -> Window:
        return cls((x0 + x1) / 2, (y0 + y1) / 2, x1 - x0, y1 - y0, width, height, imz, imw)

    def column_re(self) -> np.ndarray:
        i = np.arange(self.width)
        return self.cx - self.ex / 2 + (i + 0.5) * self.ex / self.width

    def row_re(self) -> np.ndarray:
        j = np.arange(self.height)
        return self.cy + self.ey / 2 - (j + 0.5) * self.ey / self.height

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        """Row-major ``(z, w)`` arrays of pixel centres."""
        zr, wr = np.meshgrid(self.column_re(), self.row_re())
        return (zr.ravel() + 1j * self.imz), (wr.ravel() + 1j * self.imw)

    def pixel_of(self, z: float, w: float) -> tuple[int, int]:
        """Column and row of the cell containing the real point ``(z, w)``."""
        i = int(np.floor((z - (self.cx - self.ex / 2)) / self.ex * self.width))
        j = int(np.floor(((self.cy + self.ey / 2) - w) / self.ey * self.height))
        if not (0 <= i < self.width and 0 <= j < self.height):
            raise ValueError(f"({z}, {w}) lies outside the window")
        return i, j


@dataclass(frozen=True)
class BasinGrid:
    window: Window
    cls: np.ndarray  # (height, width) int8 class codes
    iterations: np.ndarray  # (height, width) int64
    max_iter: int
    overlay: Optional[np.ndarray] = None  # (height, width) bool

    def __post_init__(self) -> None:
        shape = (self.window.height, self.window.width)
        if self.cls.shape != shape or self.iterations.shape != shape:
            raise ValueError("grid arrays do not match the window")

    def class_at(self, i: int, j: int) -> OrbitClass:
        return OrbitClass.from_code(self.cls[j, i])


def render_grid(m: PolyMap2, window: Window, params: OrbitParams = OrbitParams(),
                threads: int = 0, overlay_preimages: bool = False,
                backend: str | None = None) -> BasinGrid:
    """Classify each pixel centre; rows are distributed over ``threads`` workers."""
    z, w = window.points()
    res = classify_many(m, z, w, params, threads=threads, backend=backend,
                        chunk=window.width * max(1, window.height // 64))
    shape = (window.height, window.width)
    overlay = None
    if overlay_preimages:
        d = z - w
        e = d * (1 - z - w)
        resid = np.minimum.reduce([np.abs(d - 1), np.abs(d + 1), np.abs(e - 1), np.abs(e + 1)])
        overlay = (resid < OVERLAY_TOL).reshape(shape)
    return BasinGrid(window, res.cls.reshape(shape), res.iterations.reshape(shape),
                     params.max_iter, overlay)


def probe(m: PolyMap2, points: Iterable, params: OrbitParams = OrbitParams(),
          backend: str | None = None) -> list[OrbitOutcome]:
    """Classify exact probe points (not the centres of their pixels)."""
    pts = [as_point(p) for p in points]
    res = classify_many(m, [p.z for p in pts], [p.w for p in pts], params, backend=backend)
    return [res.outcome(k) for k in range(len(pts))]


def grid_to_ppm(grid: BasinGrid, palette: dict[OrbitClass, tuple[int, int, int]] = PALETTE) -> bytes:
    """Binary PPM.  Colours are shaded by ``0.3 + 0.7 (1 - min(1, it/max_iter))``
    and floored; overlay pixels are drawn unshaded."""
    h, w = grid.cls.shape
    base = np.zeros((h, w, 3), dtype=np.float64)
    for cls, code in _CODES.items():
        base[grid.cls == code] = palette[cls]
    frac = np.minimum(1.0, grid.iterations.astype(np.float64) / float(grid.max_iter))
    shade = 0.3 + 0.7 * (1.0 - frac)
    rgb = np.floor(base * shade[:, :, None]).astype(np.uint8)
    if grid.overlay is not None:
        rgb[grid.overlay] = OVERLAY_COLOR
    return f"P6\n{w} {h}\n255\n".encode("ascii") + rgb.tobytes()


def grid_stats(grid: BasinGrid) -> dict[OrbitClass, tuple[int, float]]:
    total = grid.cls.size
    out = {}
    for cls, code in _CODES.items():
        cnt = int(np.count_nonzero(grid.cls == code))
        out[cls] = (cnt, cnt / total)
    return out


def stats_csv(grid: BasinGrid) -> str:
    buf = io.StringIO()
    buf.write("class,count,fraction\n")
    for cls, (cnt, frac) in grid_stats(grid).items():
        buf.write(f"{cls.tag},{cnt},{format(frac, '.17g')}\n")
    return buf.getvalue()
