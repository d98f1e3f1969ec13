"""Orbit iteration, fate classification, chart diagnostics and rate fits."""
from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional, TextIO

import numpy as np

from . import kernels
from .chardir import ProjDirection, approach_data
from .poly import Complex2, PolyMap2, as_point

__all__ = [
    "OrbitParams",
    "OrbitClass",
    "OrbitOutcome",
    "BatchResult",
    "OrbitEscapeError",
    "Trajectory",
    "DiagnosticTrace",
    "iterate",
    "trajectory",
    "classify",
    "classify_many",
    "diagnostics",
    "product_form_of",
    "preimage_residuals",
    "rate_fit_power",
    "rate_fit_stretched",
    "write_trace_csv",
    "write_diagnostics_csv",
]

ABORT_MAGNITUDE = 1e100
RECIP_FLOOR = 1e-300


@dataclass(frozen=True)
class OrbitParams:
    """Budget and tolerances for :func:`classify`.

    ``line = (l0, l1)`` defines the gap ``|l0 z + l1 w|`` of the line test;
    the default measures ``|z - w|``.  ``approach_radius`` and ``fatou_tol``
    control the parabolic approach test that recognises orbits creeping into
    the origin along a characteristic direction (rate ``n^(-1/m)``), long
    before they could reach ``origin_eps``.
    """

    max_iter: int = 10_000
    escape_radius: float = 5.0
    origin_eps: float = 1e-10
    line_eps: float = 1e-10
    direction_window: int = 64
    line: tuple[complex, complex] = (1 + 0j, -1 + 0j)
    approach_radius: float = 0.05
    fatou_tol: float = 0.1
    fatou: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "line", (complex(self.line[0]), complex(self.line[1])))
        if int(self.direction_window) != self.direction_window or self.direction_window < 2:
            raise ValueError("direction_window must be an integer >= 2")
        if int(self.max_iter) != self.max_iter or self.max_iter < self.direction_window:
            raise ValueError("max_iter must be an integer >= direction_window")
        if not (self.escape_radius > 1 and math.isfinite(self.escape_radius)):
            raise ValueError("escape_radius must be > 1")
        for name in ("origin_eps", "line_eps"):
            v = getattr(self, name)
            if not (0 < v < 1):
                raise ValueError(f"{name} must lie in (0, 1)")
        if not (0 < self.approach_radius < self.escape_radius):
            raise ValueError("approach_radius must lie in (0, escape_radius)")
        if not (0 < self.fatou_tol < 1):
            raise ValueError("fatou_tol must lie in (0, 1)")
        if self.line == (0j, 0j):
            raise ValueError("line functional must be nonzero")

    def kernel_tuple(self) -> tuple:
        (l0, l1) = self.line
        return (int(self.max_iter), float(self.escape_radius), float(self.origin_eps),
                float(self.line_eps), int(self.direction_window), l0.real, l0.imag,
                l1.real, l1.imag, float(self.approach_radius), float(self.fatou_tol),
                bool(self.fatou))

    def in_sum_diff_chart(self) -> OrbitParams:
        """Equivalent parameters after ``(x, y) = (z + w, z - w)``.

        That change scales norms by sqrt(2) and sends ``{z = w}`` to ``{y = 0}``
        with ``|y| = |z - w|``.
        """
        s = math.sqrt(2.0)
        return replace(self, escape_radius=self.escape_radius * s,
                       origin_eps=self.origin_eps * s, approach_radius=self.approach_radius * s,
                       line=(0j, 1 + 0j))


class OrbitClass(enum.Enum):
    ConvergesToOrigin = "origin"
    ConvergesToLineNotOrigin = "line"
    Escapes = "escape"
    Indeterminate = "indeterminate"

    @property
    def tag(self) -> str:
        return self.value

    @classmethod
    def from_code(cls, code: int) -> OrbitClass:
        return _BY_CODE[int(code)]


_BY_CODE = {
    kernels.CLS_ORIGIN: OrbitClass.ConvergesToOrigin,
    kernels.CLS_LINE: OrbitClass.ConvergesToLineNotOrigin,
    kernels.CLS_ESCAPE: OrbitClass.Escapes,
    kernels.CLS_INDETERMINATE: OrbitClass.Indeterminate,
}


@dataclass(frozen=True)
class OrbitOutcome:
    """Fate of one orbit.  ``along`` is None for "no stable direction"."""

    cls: OrbitClass
    iterations_used: int
    final_point: tuple[complex, complex]
    sup_n_times_gap: float
    monotone_coordinate_ok: bool
    along: Optional[ProjDirection] = None

    def to_dict(self) -> dict:
        z, w = self.final_point
        d = {
            "class": self.cls.name,
            "iterations_used": self.iterations_used,
            "final_point": [z.real, z.imag, w.real, w.imag],
            "sup_n_times_gap": self.sup_n_times_gap,
            "monotone_coordinate_ok": self.monotone_coordinate_ok,
        }
        if self.cls is OrbitClass.ConvergesToOrigin:
            if self.along is None:
                d["along"] = "no stable direction"
            else:
                v = self.along
                d["along"] = [v.alpha.real, v.alpha.imag, v.beta.real, v.beta.imag]
        return d


@lru_cache(maxsize=128)
def _direction_table(m: PolyMap2) -> tuple[tuple[ProjDirection, ...], tuple[np.ndarray, ...]]:
    data = approach_data(m)
    dirs = tuple(d for d, _, _ in data)
    arrays = (
        np.array([d.alpha.real for d in dirs], dtype=np.float64),
        np.array([d.alpha.imag for d in dirs], dtype=np.float64),
        np.array([d.beta.real for d in dirs], dtype=np.float64),
        np.array([d.beta.imag for d in dirs], dtype=np.float64),
        np.array([mm for _, mm, _ in data], dtype=np.int64),
        np.array([lam.real for _, _, lam in data], dtype=np.float64),
        np.array([lam.imag for _, _, lam in data], dtype=np.float64),
    )
    return dirs, arrays


@dataclass
class BatchResult:
    """Column arrays from :func:`classify_many`, index-aligned with the starts."""

    cls: np.ndarray
    iterations: np.ndarray
    final_z: np.ndarray
    final_w: np.ndarray
    direction: np.ndarray
    sup_ngap: np.ndarray
    monotone: np.ndarray
    directions: tuple[ProjDirection, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.cls)

    def outcome(self, i: int) -> OrbitOutcome:
        k = int(self.direction[i])
        return OrbitOutcome(
            OrbitClass.from_code(self.cls[i]),
            int(self.iterations[i]),
            (complex(self.final_z[i]), complex(self.final_w[i])),
            float(self.sup_ngap[i]),
            bool(self.monotone[i]),
            self.directions[k] if k >= 0 else None,
        )

    def counts(self) -> dict[OrbitClass, int]:
        return {c: int(np.count_nonzero(self.cls == code)) for code, c in _BY_CODE.items()}


def _resolve_threads(threads: int) -> int:
    if threads < 0:
        raise ValueError("threads must be >= 0")
    return threads or (os.cpu_count() or 1)


def classify_many(m: PolyMap2, z0, w0, params: OrbitParams = OrbitParams(),
                  threads: int = 1, backend: str | None = None,
                  chunk: int | None = None) -> BatchResult:
    """Classify many starts; results do not depend on ``threads``.

    Work is split into index ranges of ``chunk`` starts (default: about eight
    per thread), each written to its own slice of the output arrays.
    """
    impl = kernels.get_backend(backend) if backend else kernels.impl
    z0 = np.ascontiguousarray(np.asarray(z0, dtype=np.complex128).ravel())
    w0 = np.ascontiguousarray(np.asarray(w0, dtype=np.complex128).ravel())
    if z0.shape != w0.shape:
        raise ValueError("z0 and w0 must have the same length")
    n = len(z0)
    dirs, darr = _direction_table(m)
    zr, zi = np.ascontiguousarray(z0.real), np.ascontiguousarray(z0.imag)
    wr, wi = np.ascontiguousarray(w0.real), np.ascontiguousarray(w0.imag)
    out_cls = np.zeros(n, dtype=np.int8)
    out_iter = np.zeros(n, dtype=np.int64)
    out_zr, out_zi = np.zeros(n), np.zeros(n)
    out_wr, out_wi = np.zeros(n), np.zeros(n)
    out_dir = np.zeros(n, dtype=np.int32)
    out_ngap = np.zeros(n)
    out_mono = np.zeros(n, dtype=np.uint8)
    args = (m.packed, darr, zr, zi, wr, wi, params.kernel_tuple(), out_cls, out_iter,
            out_zr, out_zi, out_wr, out_wi, out_dir, out_ngap, out_mono)
    nthreads = min(_resolve_threads(threads), max(n, 1))
    if nthreads <= 1 or n < 2:
        impl.classify_points(*args, 0, n)
    else:
        if chunk is None:
            chunk = max(1, -(-n // (nthreads * 8)))
        bounds = [(lo, min(n, lo + chunk)) for lo in range(0, n, chunk)]
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            for fut in [pool.submit(impl.classify_points, *args, lo, hi) for lo, hi in bounds]:
                fut.result()
    return BatchResult(out_cls, out_iter, out_zr + 1j * out_zi, out_wr + 1j * out_wi,
                       out_dir, out_ngap, out_mono.astype(bool), dirs)


def classify(m: PolyMap2, start, params: OrbitParams = OrbitParams(),
             backend: str | None = None) -> OrbitOutcome:
    """Classify one orbit.

    Checked each step, in order: escape (norm > ``escape_radius``), origin
    (norm < ``origin_eps``, or the parabolic approach test), line (gap below
    ``line_eps`` for ``direction_window`` consecutive steps with norm at least
    ``10 * origin_eps`` and step length at most ``10 * line_eps`` times the
    norm), then budget exhaustion.  The step-length condition keeps orbits
    that still slide along an invariant line from counting as settled on it.
    """
    p = as_point(start)
    res = classify_many(m, [p.z], [p.w], params, threads=1, backend=backend)
    return res.outcome(0)


class OrbitEscapeError(OverflowError):
    def __init__(self, step: int):
        super().__init__(f"orbit magnitude exceeded {ABORT_MAGNITUDE:g} at step {step}")
        self.step = step


@dataclass(frozen=True)
class Trajectory:
    """Points at steps ``0, stride, 2*stride, ...``; ``aborted_at`` is -1 if none."""

    z: np.ndarray
    w: np.ndarray
    stride: int
    aborted_at: int

    @property
    def steps(self) -> np.ndarray:
        return np.arange(len(self.z)) * self.stride


def trajectory(m: PolyMap2, start, n: int, stride: int = 1,
               abort_magnitude: float = ABORT_MAGNITUDE, backend: str | None = None) -> Trajectory:
    if n < 0 or stride < 1:
        raise ValueError("need n >= 0 and stride >= 1")
    impl = kernels.get_backend(backend) if backend else kernels.impl
    p = as_point(start)
    zs, ws, ab = impl.iterate_record(m.packed, p.z.real, p.z.imag, p.w.real, p.w.imag,
                                     int(n), int(stride), float(abort_magnitude) ** 2)
    return Trajectory(np.asarray(zs), np.asarray(ws), stride, int(ab))


def iterate(m: PolyMap2, start, n: int, backend: str | None = None) -> Complex2:
    """``f^n(start)``; raises :class:`OrbitEscapeError` past magnitude 1e100."""
    if n < 0:
        raise ValueError("n must be >= 0")
    tr = trajectory(m, start, n, stride=max(n, 1), backend=backend)
    if tr.aborted_at >= 0:
        raise OrbitEscapeError(tr.aborted_at)
    return Complex2(complex(tr.z[-1]), complex(tr.w[-1]))


@dataclass(frozen=True)
class DiagnosticTrace:
    """Chart quantities along an orbit of a map in (x, y) coordinates.

    ``u = y/x``, ``v = y/x^2``, ``t = 1/x`` and the running sum of ``Re x_j``
    over ``j < n``.  ``product_defect`` compares ``x_n`` with
    ``x_0 * prod (1 + x_j (a x_j^(r-1) - u_j^2))`` (NaN when no ``(a, r)`` given).
    ``truncated`` is set when ``|x|`` fell to 1e-300 or the orbit blew up.
    """

    n: np.ndarray
    x: np.ndarray
    y: np.ndarray
    u: np.ndarray
    v: np.ndarray
    t: np.ndarray
    sum_re_x: np.ndarray
    product_defect: np.ndarray
    truncated: bool

    @property
    def inv_y(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return 1.0 / self.y

    def __len__(self) -> int:
        return len(self.n)


def diagnostics(m_xy: PolyMap2, start, n: int, stride: int = 1,
                product_form: tuple[complex, int] | None = None,
                backend: str | None = None) -> DiagnosticTrace:
    """Record chart diagnostics over ``n`` steps at the given stride."""
    p = as_point(start)
    if p.z == 0:
        raise ValueError("diagnostics need x != 0 at the start")
    tr = trajectory(m_xy, p, n, stride=1, backend=backend)
    x, y = tr.z, tr.w
    truncated = tr.aborted_at >= 0
    tiny = np.nonzero(np.abs(x) <= RECIP_FLOOR)[0]
    if len(tiny):
        x, y = x[: tiny[0]], y[: tiny[0]]
        truncated = True
    u = y / x
    v = u / x
    t = 1.0 / x
    sre = np.concatenate(([0.0], np.cumsum(x.real)[:-1])) if len(x) else np.zeros(0)
    if product_form is not None and len(x):
        a, r = complex(product_form[0]), int(product_form[1])
        fac = 1 + x * (a * x ** (r - 1) - u * u)
        prod = x[0] * np.concatenate(([1 + 0j], np.cumprod(fac)[:-1]))
        with np.errstate(divide="ignore", invalid="ignore"):
            defect = np.abs(prod - x) / np.abs(x)
    else:
        defect = np.full(len(x), np.nan)
    idx = np.arange(0, len(x), stride)
    return DiagnosticTrace(idx, x[idx], y[idx], u[idx], v[idx], t[idx], sre[idx], defect[idx],
                           truncated)


def product_form_of(m_xy: PolyMap2) -> tuple[complex, int] | None:
    """``(a, r)`` when ``m_xy`` is ``(x - y^2 + a x^(r+1), y - xy)``, else None.

    The bare quadratic ``(x - y^2, y - xy)`` reports ``(0, 2)``.
    """
    comps = {j: (p.coeffs, q.coeffs) for j, p, q in m_xy.components}
    if comps.get(2) != ((0, 0, -1), (0, -1, 0)):
        return None
    rest = [j for j in comps if j != 2]
    if not rest:
        return 0j, 2
    if len(rest) > 1:
        return None
    d = rest[0]
    pc, qc = comps[d]
    if any(c != 0 for c in pc[1:]) or any(c != 0 for c in qc):
        return None
    return complex(pc[0]), d - 1


def preimage_residuals(point) -> tuple[float, float, float, float]:
    """Residuals on ``{z-w=1}``, ``{z-w=-1}``, ``{(z-w)(1-z-w)=1}``, ``{(z-w)(1-z-w)=-1}``.

    These are the first and second preimages of the axes under the standard map.
    """
    p = as_point(point)
    d = p.z - p.w
    e = d * (1 - p.z - p.w)
    return abs(d - 1), abs(d + 1), abs(e - 1), abs(e + 1)


def _window(series, n_lo: int, n_hi: int, ns) -> tuple[np.ndarray, np.ndarray]:
    vals = np.asarray(series)
    idx = np.arange(len(vals)) if ns is None else np.asarray(ns)
    if len(idx) != len(vals):
        raise ValueError("ns and series differ in length")
    sel = (idx >= n_lo) & (idx <= n_hi)
    if np.count_nonzero(sel) < 2:
        raise ValueError("fewer than two samples in the fit window")
    return idx[sel].astype(np.float64), vals[sel]


def rate_fit_power(xs, n_lo: int, n_hi: int, ns=None) -> float:
    """Least-squares slope of ``log x_n`` against ``log n`` over ``[n_lo, n_hi]``."""
    n, x = _window(xs, n_lo, n_hi, ns)
    x = np.abs(x) if np.iscomplexobj(x) else x
    if np.any(n <= 0):
        raise ValueError("power fit needs n >= 1")
    if not np.all(x > 0):
        raise ValueError("power fit needs positive entries")
    return float(np.polyfit(np.log(n), np.log(x), 1)[0])


def rate_fit_stretched(ys, r: int, beta: complex, n_lo: int, n_hi: int, ns=None,
                       log_abs: bool = False) -> float:
    """Fitted decay rate of ``-log|y_n|`` in ``n^((r-1)/r)``, over ``Re(beta) r/(r-1)``.

    With ``log_abs`` the series already holds ``log|y_n|``.
    """
    if r < 2:
        raise ValueError("r must be >= 2")
    n, y = _window(ys, n_lo, n_hi, ns)
    if log_abs:
        ly = np.asarray(y, dtype=np.float64)
        if not np.all(np.isfinite(ly)):
            raise ValueError("non-finite log entries in the fit window")
    else:
        ay = np.abs(y)
        if not np.all(ay > 0):
            raise ValueError("stretched fit needs nonzero entries")
        ly = np.log(ay)
    expo = (r - 1) / r
    slope = float(np.polyfit(n ** expo, -ly, 1)[0])
    scale = complex(beta).real * r / (r - 1)
    if scale == 0:
        raise ValueError("Re beta must be nonzero")
    return slope / scale


def _g17(x: float) -> str:
    if x == 0:
        x = 0.0
    return format(x, ".17g")


def write_trace_csv(tr: Trajectory, fh: TextIO, line: tuple[complex, complex] = (1, -1)) -> None:
    """Orbit trace rows ``n,re_z,im_z,re_w,im_w,gap,ngap``."""
    l0, l1 = complex(line[0]), complex(line[1])
    fh.write("n,re_z,im_z,re_w,im_w,gap,ngap\n")
    for n, z, w in zip(tr.steps, tr.z, tr.w):
        gap = abs(l0 * z + l1 * w)
        fh.write(",".join([str(int(n)), _g17(z.real), _g17(z.imag), _g17(w.real), _g17(w.imag),
                           _g17(gap), _g17(int(n) * gap)]) + "\n")


def write_diagnostics_csv(dt: DiagnosticTrace, fh: TextIO) -> None:
    fh.write("n,re_x,im_x,re_y,im_y,re_u,im_u,re_v,im_v,re_t,im_t,sum_re_x,product_defect\n")
    for k in range(len(dt)):
        vals = [dt.x[k], dt.y[k], dt.u[k], dt.v[k], dt.t[k]]
        cols = [str(int(dt.n[k]))]
        for c in vals:
            cols += [_g17(c.real), _g17(c.imag)]
        cols += [_g17(dt.sum_re_x[k]), _g17(dt.product_defect[k])]
        fh.write(",".join(cols) + "\n")
