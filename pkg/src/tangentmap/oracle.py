"""Extended-precision iteration used to cross-check the double-precision kernels.

Arithmetic runs in ``gmpy2.mpc`` at the chosen precision (round to nearest).
Classification follows the same decision sequence as the kernels; the
window statistics (direction diameter, parabolic approach test) are evaluated
on the high-precision iterates rounded to doubles, since they only compare
quantities far above double resolution.
"""
from __future__ import annotations

import gmpy2
from gmpy2 import mpc, mpfr

from . import _pykernels as ref
from .orbit import (ABORT_MAGNITUDE, OrbitClass, OrbitEscapeError, OrbitOutcome, OrbitParams,
                    _direction_table)
from .poly import Complex2, PolyMap2, as_point

__all__ = ["PrecisionOracle"]


class PrecisionOracle:
    """Iterate and classify orbits at ``precision`` bits (default 256)."""

    def __init__(self, precision: int = 256):
        if precision < 53:
            raise ValueError("precision must be at least 53 bits")
        self.precision = int(precision)

    def _ctx(self):
        return gmpy2.context(gmpy2.get_context(), precision=self.precision,
                                   real_prec=self.precision, imag_prec=self.precision)

    @staticmethod
    def _comps(m: PolyMap2):
        return [(j, [mpc(c) for c in p.coeffs], [mpc(c) for c in q.coeffs])
                for j, p, q in m.components]

    @staticmethod
    def _step(comps, top, z, w):
        wpow = [mpc(1)] * (top + 1)
        for i in range(1, top + 1):
            wpow[i] = wpow[i - 1] * w
        sp = mpc(0)
        sq = mpc(0)
        for d, pc, qc in comps:
            accp = pc[0]
            accq = qc[0]
            for i in range(1, d + 1):
                accp = accp * z + pc[i] * wpow[i]
                accq = accq * z + qc[i] * wpow[i]
            sp += accp
            sq += accq
        return z + sp, w + sq

    @staticmethod
    def _norm2(z, w):
        return z.real * z.real + z.imag * z.imag + w.real * w.real + w.imag * w.imag

    def iterate(self, m: PolyMap2, start, n: int) -> Complex2:
        """``f^n(start)`` rounded to doubles."""
        if n < 0:
            raise ValueError("n must be >= 0")
        p = as_point(start)
        with self._ctx():
            comps = self._comps(m)
            top = m.top_degree
            z, w = mpc(p.z), mpc(p.w)
            lim = mpfr(ABORT_MAGNITUDE) ** 2
            for k in range(1, n + 1):
                z, w = self._step(comps, top, z, w)
                if not (self._norm2(z, w) <= lim):
                    raise OrbitEscapeError(k)
            return Complex2(complex(z), complex(w))

    def orbit(self, m: PolyMap2, start, n: int) -> list[tuple[complex, complex]]:
        """All iterates ``0..n`` rounded to doubles (stops early past 1e100)."""
        p = as_point(start)
        out = [(p.z, p.w)]
        with self._ctx():
            comps = self._comps(m)
            top = m.top_degree
            z, w = mpc(p.z), mpc(p.w)
            lim = mpfr(ABORT_MAGNITUDE) ** 2
            for _ in range(n):
                z, w = self._step(comps, top, z, w)
                if not (self._norm2(z, w) <= lim):
                    break
                out.append((complex(z), complex(w)))
        return out

    def classify(self, m: PolyMap2, start, params: OrbitParams = OrbitParams()) -> OrbitOutcome:
        p = as_point(start)
        dirs_proj, darr = _direction_table(m)
        dirs = ref._unpack_dirs(darr)
        W = params.direction_window
        l0, l1 = params.line
        with self._ctx():
            comps = self._comps(m)
            top = m.top_degree
            R2 = mpfr(params.escape_radius) ** 2
            O2 = mpfr(params.origin_eps) ** 2
            O10 = (10 * mpfr(params.origin_eps)) ** 2
            A2 = mpfr(params.approach_radius) ** 2
            L10 = (10 * mpfr(params.line_eps)) ** 2
            L0, L1 = mpc(l0), mpc(l1)
            z, w = mpc(p.z), mpc(p.w)
            bz = [0j] * W
            bw = [0j] * W
            head = count = n = line_run = 0
            sup_ngap = 0.0
            use_z = p.z.real <= p.w.real
            c0 = z if use_z else w
            mono_ref = c0.real * c0.real + c0.imag * c0.imag
            mono = True
            pz, pw = z, w

            def done(cls, k=-1):
                return OrbitOutcome(cls, n, (complex(z), complex(w)), sup_ngap, mono,
                                    dirs_proj[k] if k >= 0 else None)

            while True:
                bz[head] = complex(z)
                bw[head] = complex(w)
                head = (head + 1) % W
                count = min(count + 1, W)
                nrm2 = self._norm2(z, w)
                g = L0 * z + L1 * w
                gap = gmpy2.sqrt(g.real * g.real + g.imag * g.imag)
                if n >= 1:
                    ng = float(n * gap)
                    sup_ngap = max(sup_ngap, ng)
                    c = z if use_z else w
                    if c.real * c.real + c.imag * c.imag < mono_ref * (1 - mpfr(2e-15)):
                        mono = False
                if not (nrm2 <= R2):
                    return done(OrbitClass.Escapes)
                if nrm2 < O2:
                    k = -1
                    if count == W:
                        oz, ow = ref._ordered(bz, bw, head, count, W)
                        if ref._window_diameter(oz, ow, count) < ref.DIAM_TOL:
                            k = ref._nearest_dir(dirs, complex(z), complex(w))
                    return done(OrbitClass.ConvergesToOrigin, k)
                if (params.fatou and count == W and nrm2 < A2
                        and n % ref.CHECK_STRIDE == 0):
                    oz, ow = ref._ordered(bz, bw, head, count, W)
                    k = ref._fatou_check(ref._unpack(m.packed), dirs, oz, ow, params.fatou_tol)
                    if k >= 0:
                        return done(OrbitClass.ConvergesToOrigin, k)
                settled = n >= 1 and self._norm2(z - pz, w - pw) <= L10 * nrm2
                if gap < params.line_eps and nrm2 >= O10 and settled:
                    line_run += 1
                else:
                    line_run = 0
                if line_run >= W:
                    return done(OrbitClass.ConvergesToLineNotOrigin)
                if n >= params.max_iter:
                    return done(OrbitClass.Indeterminate)
                z1, w1 = self._step(comps, top, z, w)
                n += 1
                if z1 == z and w1 == w:
                    sup_ngap = max(sup_ngap, float(n * gap))
                    if gap < params.line_eps and nrm2 >= O10:
                        return done(OrbitClass.ConvergesToLineNotOrigin)
                    return done(OrbitClass.Indeterminate)
                pz, pw = z, w
                z, w = z1, w1
