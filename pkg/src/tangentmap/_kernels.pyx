# cython: language_level=3
"""Compiled iteration kernels.

Operation-for-operation port of ``_pykernels``.  Complex arithmetic is spelled
out on doubles using CPython's formulas (including its division algorithm) so
the two backends agree bit for bit.  The per-point loops release the GIL.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, hypot, log, exp, atan2, cos, sin, M_PI
from libc.stdlib cimport malloc, free

cnp.import_array()

BACKEND = "cython"

DEF CLS_ORIGIN = 0
DEF CLS_LINE = 1
DEF CLS_ESCAPE = 2
DEF CLS_INDETERMINATE = 3

DEF DIR_MATCH_TOL = 1e-3
DEF DIAM_TOL = 1e-6
DEF CHECK_STRIDE = 8
DEF ORIENT_COS = 0.5
DEF TRANSVERSE_STEP = 1e-7
DEF RENORM = 1e-100
DEF MAX_DIRS = 64


ctypedef struct cplx:
    double re
    double im


cdef inline cplx mk(double re, double im) noexcept nogil:
    cdef cplx r
    r.re = re
    r.im = im
    return r


cdef inline cplx cadd(cplx a, cplx b) noexcept nogil:
    return mk(a.re + b.re, a.im + b.im)


cdef inline cplx csub(cplx a, cplx b) noexcept nogil:
    return mk(a.re - b.re, a.im - b.im)


cdef inline cplx cmul(cplx a, cplx b) noexcept nogil:
    return mk(a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re)


cdef inline cplx cdiv(cplx a, cplx b) noexcept nogil:
    # CPython's _Py_c_quot
    cdef double abs_br = -b.re if b.re < 0 else b.re
    cdef double abs_bi = -b.im if b.im < 0 else b.im
    cdef double ratio, denom
    if abs_br >= abs_bi:
        if abs_br == 0.0:
            return mk(0.0, 0.0)
        ratio = b.im / b.re
        denom = b.re + b.im * ratio
        return mk((a.re + a.im * ratio) / denom, (a.im - a.re * ratio) / denom)
    elif abs_bi >= abs_br:
        ratio = b.re / b.im
        denom = b.re * ratio + b.im
        return mk((a.re * ratio + a.im) / denom, (a.im * ratio - a.re) / denom)
    return mk(0.0 / 0.0, 0.0 / 0.0)


cdef inline double cabs(cplx a) noexcept nogil:
    return hypot(a.re, a.im)


cdef inline double cabs2(cplx a) noexcept nogil:
    return a.re * a.re + a.im * a.im


cdef inline bint ceq(cplx a, cplx b) noexcept nogil:
    return a.re == b.re and a.im == b.im


cdef struct MapData:
    int ncomp
    int top
    long *degs
    long *offsets
    double *pr
    double *pi
    double *qr
    double *qi


cdef struct DirData:
    int ndir
    cplx alpha[MAX_DIRS]
    cplx beta[MAX_DIRS]
    long m[MAX_DIRS]
    cplx lam[MAX_DIRS]


cdef struct Params:
    long max_iter
    double escape_radius
    double origin_eps
    double line_eps
    int W
    cplx l0
    cplx l1
    double approach_radius
    double fatou_tol
    bint fatou


cdef inline void step(MapData *md, cplx *wpow, cplx z, cplx w, cplx *zo, cplx *wo) noexcept nogil:
    cdef int i, k, d
    cdef long o
    cdef cplx sp, sq, accp, accq
    wpow[0] = mk(1.0, 0.0)
    for i in range(1, md.top + 1):
        wpow[i] = cmul(wpow[i - 1], w)
    sp = mk(0.0, 0.0)
    sq = mk(0.0, 0.0)
    for k in range(md.ncomp):
        d = md.degs[k]
        o = md.offsets[k]
        accp = mk(md.pr[o], md.pi[o])
        accq = mk(md.qr[o], md.qi[o])
        for i in range(1, d + 1):
            accp = cadd(cmul(accp, z), cmul(mk(md.pr[o + i], md.pi[o + i]), wpow[i]))
            accq = cadd(cmul(accq, z), cmul(mk(md.qr[o + i], md.qi[o + i]), wpow[i]))
        sp = cadd(sp, accp)
        sq = cadd(sq, accq)
    zo[0] = cadd(z, sp)
    wo[0] = cadd(w, sq)


cdef inline double chordal(cplx z1, cplx w1, cplx z2, cplx w2) noexcept nogil:
    cdef double n1 = z1.re * z1.re + z1.im * z1.im + w1.re * w1.re + w1.im * w1.im
    cdef double n2 = z2.re * z2.re + z2.im * z2.im + w2.re * w2.re + w2.im * w2.im
    if n1 == 0.0 or n2 == 0.0:
        return 1.0
    cdef cplx c = csub(cmul(z1, w2), cmul(w1, z2))
    return sqrt((c.re * c.re + c.im * c.im) / (n1 * n2))


cdef int nearest_dir(DirData *dd, cplx z, cplx w) noexcept nogil:
    cdef int best = -1
    cdef double bestd = DIR_MATCH_TOL
    cdef double d
    cdef int k
    for k in range(dd.ndir):
        d = chordal(z, w, dd.alpha[k], dd.beta[k])
        if d < bestd:
            bestd = d
            best = k
    return best


cdef double window_diameter(cplx *oz, cplx *ow, int count) noexcept nogil:
    cdef double diam = 0.0
    cdef double d
    cdef int i, j
    for i in range(count):
        for j in range(i + 1, count):
            d = chordal(oz[i], ow[i], oz[j], ow[j])
            if d > diam:
                diam = d
    return diam


cdef void ordered(cplx *bz, cplx *bw, int head, int count, int W, cplx *oz, cplx *ow) noexcept nogil:
    cdef int start = (head - count) % W
    if start < 0:
        start += W
    cdef int i
    for i in range(count):
        oz[i] = bz[(start + i) % W]
        ow[i] = bw[(start + i) % W]


cdef inline cplx transverse(bint use_a, cplx a, cplx b, cplx z, cplx w) noexcept nogil:
    if use_a:
        return csub(cdiv(w, z), cdiv(b, a))
    return csub(cdiv(z, w), cdiv(a, b))


cdef double transversal_multiplier2(MapData *md, cplx *wpow, cplx a, cplx b, long m,
                                    cplx target, bint use_a, cplx s) noexcept nogil:
    cdef cplx c = cdiv(mk(1.0, 0.0), target)
    cdef double ang = atan2(c.im, c.re)
    cdef double phi = atan2(s.im, s.re)
    cdef double best = 0.0
    cdef double bestcos = -2.0
    cdef double th, cs
    cdef long j
    for j in range(m):
        th = (ang + 2.0 * M_PI * <double>j) / <double>m
        cs = cos(th - phi)
        if cs > bestcos:
            bestcos = cs
            best = th
    cdef double rho = sqrt(s.re * s.re + s.im * s.im)
    cdef cplx sp = mk(rho * cos(best), rho * sin(best))
    cdef cplx zp = cmul(sp, a)
    cdef cplx wp = cmul(sp, b)
    cdef cplx zq, wq
    if use_a:
        zq = zp
        wq = cadd(wp, cmul(mk(TRANSVERSE_STEP, 0.0), zp))
    else:
        zq = cadd(zp, cmul(mk(TRANSVERSE_STEP, 0.0), wp))
        wq = wp
    cdef cplx z1p, w1p, z1q, w1q
    step(md, wpow, zp, wp, &z1p, &w1p)
    step(md, wpow, zq, wq, &z1q, &w1q)
    if use_a:
        if (z1p.re == 0.0 and z1p.im == 0.0) or (z1q.re == 0.0 and z1q.im == 0.0):
            return 2.0
    elif (w1p.re == 0.0 and w1p.im == 0.0) or (w1q.re == 0.0 and w1q.im == 0.0):
        return 2.0
    cdef cplx du = csub(transverse(use_a, a, b, zq, wq), transverse(use_a, a, b, zp, wp))
    cdef cplx du1 = csub(transverse(use_a, a, b, z1q, w1q), transverse(use_a, a, b, z1p, w1p))
    cdef cplx mu = cdiv(du1, du)
    return mu.re * mu.re + mu.im * mu.im


cdef int fatou_check(MapData *md, cplx *wpow, DirData *dd, cplx *oz, cplx *ow, int count,
                     double tol) noexcept nogil:
    cdef cplx z = oz[count - 1]
    cdef cplx w = ow[count - 1]
    cdef int k = nearest_dir(dd, z, w)
    if k < 0:
        return -1
    cdef cplx a = dd.alpha[k]
    cdef cplx b = dd.beta[k]
    cdef long m = dd.m[k]
    if m <= 0:
        return -1
    if chordal(z, w, a, b) > chordal(oz[0], ow[0], a, b):
        return -1
    cdef bint use_a = (a.re * a.re + a.im * a.im) >= (b.re * b.re + b.im * b.im)
    cdef cplx mc = cmul(mk(<double>m, 0.0), dd.lam[k])
    cdef cplx target = mk(-mc.re, -mc.im)
    cdef double tabs = cabs(target)
    cdef cplx prev = mk(0.0, 0.0)
    cdef cplx first = mk(0.0, 0.0)
    cdef cplx s, sm, t, cr
    cdef int i
    cdef long e
    for i in range(count):
        if use_a:
            s = cdiv(oz[i], a)
        else:
            s = cdiv(ow[i], b)
        if s.re == 0.0 and s.im == 0.0:
            return -1
        sm = s
        for e in range(m - 1):
            sm = cmul(sm, s)
        t = cdiv(mk(1.0, 0.0), sm)
        if i == 0:
            first = t
        elif cabs(csub(csub(t, prev), target)) > tol * tabs:
            return -1
        prev = t
    cdef double proj = prev.re * target.re + prev.im * target.im
    if proj < ORIENT_COS * cabs(prev) * tabs:
        return -1
    if cabs(prev) <= cabs(first):
        return -1
    if window_diameter(oz, ow, count) >= DIAM_TOL:
        return -1
    cdef bint on_curve = True
    for i in range(count):
        cr = csub(cmul(oz[i], b), cmul(ow[i], a))
        if not (cr.re == 0.0 and cr.im == 0.0):
            on_curve = False
            break
    if not on_curve:
        if use_a:
            s = cdiv(oz[count - 1], a)
        else:
            s = cdiv(ow[count - 1], b)
        if transversal_multiplier2(md, wpow, a, b, m, target, use_a, s) >= 1.0:
            return -1
    return k


cdef int classify_one(MapData *md, DirData *dd, Params *P, cplx z, cplx w,
                      cplx *bz, cplx *bw, cplx *oz, cplx *ow, cplx *wpow,
                      long *n_out, cplx *zf, cplx *wf, int *dir_out,
                      double *ngap_out, bint *mono_out) noexcept nogil:
    cdef double R2 = P.escape_radius * P.escape_radius
    cdef double O2 = P.origin_eps * P.origin_eps
    cdef double O10 = (10.0 * P.origin_eps) * (10.0 * P.origin_eps)
    cdef double L10 = (10.0 * P.line_eps) * (10.0 * P.line_eps)
    cdef double A2 = P.approach_radius * P.approach_radius
    cdef int W = P.W
    cdef int head = 0
    cdef int count = 0
    cdef long n = 0
    cdef long line_run = 0
    cdef double sup_ngap = 0.0
    cdef bint use_z = z.re <= w.re
    cdef cplx c0 = z if use_z else w
    cdef double mono_ref = c0.re * c0.re + c0.im * c0.im
    cdef bint mono = True
    cdef cplx pz = z
    cdef cplx pw = w
    cdef cplx dz, dw
    cdef bint settled
    cdef double nrm2, gap, ng
    cdef cplx g, c, z1, w1
    cdef int k, cls
    while True:
        bz[head] = z
        bw[head] = w
        head = (head + 1) % W
        if count < W:
            count += 1
        nrm2 = z.re * z.re + z.im * z.im + w.re * w.re + w.im * w.im
        g = cadd(cmul(P.l0, z), cmul(P.l1, w))
        gap = sqrt(g.re * g.re + g.im * g.im)
        if n >= 1:
            ng = <double>n * gap
            if ng > sup_ngap:
                sup_ngap = ng
            c = z if use_z else w
            if c.re * c.re + c.im * c.im < mono_ref * (1.0 - 2e-15):
                mono = False
        k = -1
        if not (nrm2 <= R2):
            cls = CLS_ESCAPE
            break
        if nrm2 < O2:
            if count == W:
                ordered(bz, bw, head, count, W, oz, ow)
                if window_diameter(oz, ow, count) < DIAM_TOL:
                    k = nearest_dir(dd, z, w)
            cls = CLS_ORIGIN
            break
        if P.fatou and count == W and nrm2 < A2 and n % CHECK_STRIDE == 0:
            ordered(bz, bw, head, count, W, oz, ow)
            k = fatou_check(md, wpow, dd, oz, ow, count, P.fatou_tol)
            if k >= 0:
                cls = CLS_ORIGIN
                break
        settled = False
        if n >= 1:
            dz = csub(z, pz)
            dw = csub(w, pw)
            settled = (dz.re * dz.re + dz.im * dz.im
                       + dw.re * dw.re + dw.im * dw.im) <= L10 * nrm2
        if gap < P.line_eps and nrm2 >= O10 and settled:
            line_run += 1
        else:
            line_run = 0
        if line_run >= W:
            cls = CLS_LINE
            break
        if n >= P.max_iter:
            cls = CLS_INDETERMINATE
            break
        step(md, wpow, z, w, &z1, &w1)
        n += 1
        if ceq(z1, z) and ceq(w1, w):
            if <double>n * gap > sup_ngap:
                sup_ngap = <double>n * gap
            if gap < P.line_eps and nrm2 >= O10:
                cls = CLS_LINE
            else:
                cls = CLS_INDETERMINATE
            break
        pz = z
        pw = w
        z = z1
        w = w1
    n_out[0] = n
    zf[0] = z
    wf[0] = w
    dir_out[0] = k
    ngap_out[0] = sup_ngap
    mono_out[0] = mono
    return cls


cdef void fill_map(MapData *md, long[::1] degs, long[::1] offsets,
                   double[::1] pr, double[::1] pi, double[::1] qr, double[::1] qi):
    md.ncomp = degs.shape[0]
    md.degs = &degs[0]
    md.offsets = &offsets[0]
    md.pr = &pr[0]
    md.pi = &pi[0]
    md.qr = &qr[0]
    md.qi = &qi[0]
    md.top = 0
    cdef int k
    for k in range(md.ncomp):
        if degs[k] > md.top:
            md.top = degs[k]


def classify_points(packed, dirs, double[::1] zr, double[::1] zi, double[::1] wr, double[::1] wi,
                    params,
                    signed char[::1] out_cls, long[::1] out_iter,
                    double[::1] out_zr, double[::1] out_zi, double[::1] out_wr, double[::1] out_wi,
                    int[::1] out_dir, double[::1] out_ngap, unsigned char[::1] out_mono,
                    long lo, long hi):
    cdef long[::1] degs = packed[0]
    cdef long[::1] offsets = packed[1]
    cdef double[::1] pr = packed[2]
    cdef double[::1] pi = packed[3]
    cdef double[::1] qr = packed[4]
    cdef double[::1] qi = packed[5]
    cdef MapData md
    fill_map(&md, degs, offsets, pr, pi, qr, qi)

    cdef DirData dd
    ar, ai, br, bi, ms, lr, li = dirs
    dd.ndir = len(ar)
    if dd.ndir > MAX_DIRS:
        raise ValueError("too many characteristic directions")
    cdef int k
    for k in range(dd.ndir):
        dd.alpha[k] = mk(ar[k], ai[k])
        dd.beta[k] = mk(br[k], bi[k])
        dd.m[k] = ms[k]
        dd.lam[k] = mk(lr[k], li[k])

    cdef Params P
    (max_iter, escape_radius, origin_eps, line_eps, W,
     l0r, l0i, l1r, l1i, approach_radius, fatou_tol, fatou) = params
    P.max_iter = max_iter
    P.escape_radius = escape_radius
    P.origin_eps = origin_eps
    P.line_eps = line_eps
    P.W = W
    P.l0 = mk(l0r, l0i)
    P.l1 = mk(l1r, l1i)
    P.approach_radius = approach_radius
    P.fatou_tol = fatou_tol
    P.fatou = fatou

    cdef cplx *bz = <cplx *> malloc(4 * P.W * sizeof(cplx))
    cdef cplx *wpow = <cplx *> malloc((md.top + 1) * sizeof(cplx))
    if bz == NULL or wpow == NULL:
        free(bz)
        free(wpow)
        raise MemoryError()
    cdef cplx *bw = bz + P.W
    cdef cplx *oz = bz + 2 * P.W
    cdef cplx *ow = bz + 3 * P.W
    cdef long idx, n
    cdef cplx zf, wf
    cdef int dir_k, cls
    cdef double ngap
    cdef bint mono
    with nogil:
        for idx in range(lo, hi):
            cls = classify_one(&md, &dd, &P, mk(zr[idx], zi[idx]), mk(wr[idx], wi[idx]),
                               bz, bw, oz, ow, wpow, &n, &zf, &wf, &dir_k, &ngap, &mono)
            out_cls[idx] = cls
            out_iter[idx] = n
            out_zr[idx] = zf.re
            out_zi[idx] = zf.im
            out_wr[idx] = wf.re
            out_wi[idx] = wf.im
            out_dir[idx] = dir_k
            out_ngap[idx] = ngap
            out_mono[idx] = 1 if mono else 0
    free(bz)
    free(wpow)


def iterate_record(packed, double z0r, double z0i, double w0r, double w0i,
                   long n, long stride, double abort_abs2):
    cdef long[::1] degs = packed[0]
    cdef long[::1] offsets = packed[1]
    cdef double[::1] pr = packed[2]
    cdef double[::1] pi = packed[3]
    cdef double[::1] qr = packed[4]
    cdef double[::1] qi = packed[5]
    cdef MapData md
    fill_map(&md, degs, offsets, pr, pi, qr, qi)
    cdef long nrec = n // stride + 1
    zs_arr = np.empty(nrec, dtype=np.complex128)
    ws_arr = np.empty(nrec, dtype=np.complex128)
    cdef double[::1] zs = zs_arr.view(np.float64)
    cdef double[::1] ws = ws_arr.view(np.float64)
    cdef cplx *wpow = <cplx *> malloc((md.top + 1) * sizeof(cplx))
    if wpow == NULL:
        raise MemoryError()
    cdef cplx z = mk(z0r, z0i)
    cdef cplx w = mk(w0r, w0i)
    cdef cplx z1, w1
    cdef long rec = 1
    cdef long s
    cdef long aborted = -1
    cdef double nrm2
    zs[0] = z.re
    zs[1] = z.im
    ws[0] = w.re
    ws[1] = w.im
    with nogil:
        for s in range(1, n + 1):
            step(&md, wpow, z, w, &z1, &w1)
            z = z1
            w = w1
            nrm2 = z.re * z.re + z.im * z.im + w.re * w.re + w.im * w.im
            if not (nrm2 <= abort_abs2):
                aborted = s
                break
            if s % stride == 0:
                zs[2 * rec] = z.re
                zs[2 * rec + 1] = z.im
                ws[2 * rec] = w.re
                ws[2 * rec + 1] = w.im
                rec += 1
    free(wpow)
    return zs_arr[:rec], ws_arr[:rec], aborted


def g_family_logs(double ar, double ai, long r, double x0r, double x0i, double y0r, double y0i,
                  long horizon, long[::1] sample_ns, double escape_radius):
    cdef cplx a = mk(ar, ai)
    cdef cplx x = mk(x0r, x0i)
    cdef cplx ym = mk(y0r, y0i)
    cdef double ly = 0.0
    cdef double R2 = escape_radius * escape_radius
    cdef long ns = sample_ns.shape[0]
    logx_arr = np.full(ns, np.nan)
    logy_arr = np.full(ns, np.nan)
    sre_arr = np.full(ns, np.nan)
    cdef double[::1] logx = logx_arr
    cdef double[::1] logy = logy_arr
    cdef double[::1] sre = sre_arr
    cdef double s = 0.0
    cdef long k = 0
    cdef long n, e
    cdef long escaped = -1
    cdef double my, e2, ey, nrm2
    cdef double ninf = -np.inf
    cdef cplx y2, xp, xn
    with nogil:
        for n in range(horizon + 1):
            while k < ns and sample_ns[k] == n:
                if x.re == 0.0 and x.im == 0.0:
                    logx[k] = ninf
                else:
                    logx[k] = log(cabs(x))
                my = cabs(ym)
                if my != 0.0:
                    logy[k] = log(my) + ly
                else:
                    logy[k] = ninf
                sre[k] = s
                k += 1
            if n == horizon:
                break
            e2 = exp(2.0 * ly)
            y2 = cmul(cmul(ym, ym), mk(e2, 0.0))
            xp = x
            for e in range(r):
                xp = cmul(xp, x)
            s += x.re
            xn = cadd(csub(x, y2), cmul(a, xp))
            ym = cmul(ym, mk(1.0 - x.re, 0.0 - x.im))
            x = xn
            my = cabs(ym)
            if my < RENORM and my != 0.0:
                ly += log(my)
                ym = cdiv(ym, mk(my, 0.0))
            ey = exp(ly)
            nrm2 = x.re * x.re + x.im * x.im + (ym.re * ym.re + ym.im * ym.im) * ey * ey
            if not (nrm2 <= R2):
                escaped = n + 1
                break
    return logx_arr, logy_arr, sre_arr, escaped
