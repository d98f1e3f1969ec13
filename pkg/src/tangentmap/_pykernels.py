"""Pure-Python iteration kernels.

Reference implementation of the hot loops; ``_kernels.pyx`` mirrors it
operation for operation, so both backends produce bit-identical results.
All arguments are plain floats / numpy arrays so the two modules share one
calling convention.
"""
from __future__ import annotations

import math

import numpy as np

CLS_ORIGIN = 0
CLS_LINE = 1
CLS_ESCAPE = 2
CLS_INDETERMINATE = 3

DIR_MATCH_TOL = 1e-3
DIAM_TOL = 1e-6
CHECK_STRIDE = 8
ORIENT_COS = 0.5
TRANSVERSE_STEP = 1e-7

BACKEND = "python"


def _unpack(packed):
    degs, offsets, pr, pi, qr, qi = packed
    comps = []
    for k in range(len(degs)):
        d = int(degs[k])
        o = int(offsets[k])
        pc = [complex(float(pr[o + i]), float(pi[o + i])) for i in range(d + 1)]
        qc = [complex(float(qr[o + i]), float(qi[o + i])) for i in range(d + 1)]
        comps.append((d, pc, qc))
    return comps


def _step(comps, z, w):
    top = comps[-1][0]
    wpow = [1 + 0j] * (top + 1)
    for i in range(1, top + 1):
        wpow[i] = wpow[i - 1] * w
    sp = 0j
    sq = 0j
    for d, pc, qc in comps:
        accp = pc[0]
        accq = qc[0]
        for i in range(1, d + 1):
            accp = accp * z + pc[i] * wpow[i]
            accq = accq * z + qc[i] * wpow[i]
        sp = sp + accp
        sq = sq + accq
    return z + sp, w + sq


def _chordal(z1, w1, z2, w2):
    n1 = z1.real * z1.real + z1.imag * z1.imag + w1.real * w1.real + w1.imag * w1.imag
    n2 = z2.real * z2.real + z2.imag * z2.imag + w2.real * w2.real + w2.imag * w2.imag
    if n1 == 0.0 or n2 == 0.0:
        return 1.0
    c = z1 * w2 - w1 * z2
    return math.sqrt((c.real * c.real + c.imag * c.imag) / (n1 * n2))


def _unpack_dirs(dirs):
    ar, ai, br, bi, ms, lr, li = dirs
    out = []
    for k in range(len(ar)):
        a = complex(float(ar[k]), float(ai[k]))
        b = complex(float(br[k]), float(bi[k]))
        out.append((a, b, int(ms[k]), complex(float(lr[k]), float(li[k]))))
    return out


def _nearest_dir(dirs, z, w):
    best = -1
    bestd = DIR_MATCH_TOL
    for k, (a, b, _, _) in enumerate(dirs):
        d = _chordal(z, w, a, b)
        if d < bestd:
            bestd = d
            best = k
    return best


def _window_diameter(bz, bw, count):
    diam = 0.0
    for i in range(count):
        for j in range(i + 1, count):
            d = _chordal(bz[i], bw[i], bz[j], bw[j])
            if d > diam:
                diam = d
    return diam


def _ordered(bz, bw, head, count, W):
    # oldest -> newest
    start = (head - count) % W
    oz = [bz[(start + i) % W] for i in range(count)]
    ow = [bw[(start + i) % W] for i in range(count)]
    return oz, ow


def _transverse(use_a, a, b, z, w):
    # chart coordinate across the direction [a:b]
    if use_a:
        return w / z - b / a
    return z / w - a / b


def _transversal_multiplier2(comps, a, b, m, target, use_a, s):
    """|mu|^2 for the transversal multiplier at the predicted petal point.

    Approaching orbits satisfy ``s^-m ~ -m lambda n``, so ``s`` lines up with an
    m-th root of ``1 / (-m lambda)``; the one nearest the current ``s`` is used
    at radius ``|s|``.
    """
    c = 1.0 / target
    ang = math.atan2(c.imag, c.real)
    phi = math.atan2(s.imag, s.real)
    best = 0.0
    bestcos = -2.0
    for j in range(m):
        th = (ang + 2.0 * math.pi * j) / m
        cs = math.cos(th - phi)
        if cs > bestcos:
            bestcos = cs
            best = th
    rho = math.sqrt(s.real * s.real + s.imag * s.imag)
    sp = complex(rho * math.cos(best), rho * math.sin(best))
    zp = sp * a
    wp = sp * b
    if use_a:
        zq = zp
        wq = wp + TRANSVERSE_STEP * zp
    else:
        zq = zp + TRANSVERSE_STEP * wp
        wq = wp
    z1p, w1p = _step(comps, zp, wp)
    z1q, w1q = _step(comps, zq, wq)
    if use_a:
        if z1p == 0 or z1q == 0:
            return 2.0
    elif w1p == 0 or w1q == 0:
        return 2.0
    du = _transverse(use_a, a, b, zq, wq) - _transverse(use_a, a, b, zp, wp)
    du1 = _transverse(use_a, a, b, z1q, w1q) - _transverse(use_a, a, b, z1p, w1p)
    mu = du1 / du
    return mu.real * mu.real + mu.imag * mu.imag


def _fatou_check(comps, dirs, oz, ow, tol):
    count = len(oz)
    z, w = oz[-1], ow[-1]
    k = _nearest_dir(dirs, z, w)
    if k < 0:
        return -1
    a, b, m, lam = dirs[k]
    if m <= 0:
        return -1
    if _chordal(z, w, a, b) > _chordal(oz[0], ow[0], a, b):
        return -1
    use_a = (a.real * a.real + a.imag * a.imag) >= (b.real * b.real + b.imag * b.imag)
    target = -(m * lam)
    tabs = abs(target)
    prev = 0j
    first = 0j
    for i in range(count):
        s = oz[i] / a if use_a else ow[i] / b
        if s == 0:
            return -1
        sm = s
        for _ in range(m - 1):
            sm = sm * s
        t = 1.0 / sm
        if i == 0:
            first = t
        elif abs((t - prev) - target) > tol * tabs:
            return -1
        prev = t
    proj = prev.real * target.real + prev.imag * target.imag
    if proj < ORIENT_COS * abs(prev) * tabs:
        return -1
    if abs(prev) <= abs(first):
        return -1
    if _window_diameter(oz, ow, count) >= DIAM_TOL:
        return -1
    # orbits inside an invariant curve through the direction need no transversal pull
    on_curve = True
    for i in range(count):
        if oz[i] * b - ow[i] * a != 0:
            on_curve = False
            break
    if not on_curve:
        s = oz[-1] / a if use_a else ow[-1] / b
        if _transversal_multiplier2(comps, a, b, m, target, use_a, s) >= 1.0:
            return -1
    return k


def _classify_one(comps, dirs, z, w, params):
    (max_iter, escape_radius, origin_eps, line_eps, W,
     l0, l1, approach_radius, fatou_tol, fatou) = params
    R2 = escape_radius * escape_radius
    O2 = origin_eps * origin_eps
    O10 = (10.0 * origin_eps) * (10.0 * origin_eps)
    L10 = (10.0 * line_eps) * (10.0 * line_eps)
    A2 = approach_radius * approach_radius
    bz = [0j] * W
    bw = [0j] * W
    head = 0
    count = 0
    n = 0
    line_run = 0
    sup_ngap = 0.0
    use_z = z.real <= w.real
    c0 = z if use_z else w
    mono_ref = c0.real * c0.real + c0.imag * c0.imag
    mono = True
    pz = z
    pw = w
    while True:
        bz[head] = z
        bw[head] = w
        head = (head + 1) % W
        if count < W:
            count += 1
        nrm2 = z.real * z.real + z.imag * z.imag + w.real * w.real + w.imag * w.imag
        g = l0 * z + l1 * w
        gap = math.sqrt(g.real * g.real + g.imag * g.imag)
        if n >= 1:
            ng = n * gap
            if ng > sup_ngap:
                sup_ngap = ng
            c = z if use_z else w
            if c.real * c.real + c.imag * c.imag < mono_ref * (1.0 - 2e-15):
                mono = False
        if not (nrm2 <= R2):
            return CLS_ESCAPE, n, z, w, -1, sup_ngap, mono
        if nrm2 < O2:
            k = -1
            if count == W:
                oz, ow = _ordered(bz, bw, head, count, W)
                if _window_diameter(oz, ow, count) < DIAM_TOL:
                    k = _nearest_dir(dirs, z, w)
            return CLS_ORIGIN, n, z, w, k, sup_ngap, mono
        if fatou and count == W and nrm2 < A2 and n % CHECK_STRIDE == 0:
            oz, ow = _ordered(bz, bw, head, count, W)
            k = _fatou_check(comps, dirs, oz, ow, fatou_tol)
            if k >= 0:
                return CLS_ORIGIN, n, z, w, k, sup_ngap, mono
        # near the line, not at the origin, and no longer moving along it
        settled = False
        if n >= 1:
            dz = z - pz
            dw = w - pw
            settled = (dz.real * dz.real + dz.imag * dz.imag
                       + dw.real * dw.real + dw.imag * dw.imag) <= L10 * nrm2
        if gap < line_eps and nrm2 >= O10 and settled:
            line_run += 1
        else:
            line_run = 0
        if line_run >= W:
            return CLS_LINE, n, z, w, -1, sup_ngap, mono
        if n >= max_iter:
            return CLS_INDETERMINATE, n, z, w, -1, sup_ngap, mono
        z1, w1 = _step(comps, z, w)
        n += 1
        if z1 == z and w1 == w:
            # stationary orbit: only the line test can still succeed
            if n * gap > sup_ngap:
                sup_ngap = n * gap
            if gap < line_eps and nrm2 >= O10:
                return CLS_LINE, n, z, w, -1, sup_ngap, mono
            return CLS_INDETERMINATE, n, z, w, -1, sup_ngap, mono
        pz, pw = z, w
        z, w = z1, w1


def classify_points(packed, dirs, zr, zi, wr, wi, params,
                    out_cls, out_iter, out_zr, out_zi, out_wr, out_wi,
                    out_dir, out_ngap, out_mono, lo, hi):
    comps = _unpack(packed)
    dlist = _unpack_dirs(dirs)
    (max_iter, escape_radius, origin_eps, line_eps, W,
     l0r, l0i, l1r, l1i, approach_radius, fatou_tol, fatou) = params
    p = (int(max_iter), float(escape_radius), float(origin_eps), float(line_eps), int(W),
         complex(l0r, l0i), complex(l1r, l1i), float(approach_radius), float(fatou_tol),
         bool(fatou))
    for idx in range(lo, hi):
        z = complex(float(zr[idx]), float(zi[idx]))
        w = complex(float(wr[idx]), float(wi[idx]))
        c, n, zf, wf, k, ng, mono = _classify_one(comps, dlist, z, w, p)
        out_cls[idx] = c
        out_iter[idx] = n
        out_zr[idx] = zf.real
        out_zi[idx] = zf.imag
        out_wr[idx] = wf.real
        out_wi[idx] = wf.imag
        out_dir[idx] = k
        out_ngap[idx] = ng
        out_mono[idx] = 1 if mono else 0


def iterate_record(packed, z0r, z0i, w0r, w0i, n, stride, abort_abs2):
    """Iterate ``n`` steps recording every ``stride``-th point (index 0 included).

    Returns ``(zs, ws, aborted_at)``; ``aborted_at`` is the step at which
    ``|z|^2 + |w|^2`` exceeded ``abort_abs2`` (recording stops there) or -1.
    """
    comps = _unpack(packed)
    z = complex(z0r, z0i)
    w = complex(w0r, w0i)
    nrec = n // stride + 1
    zs = np.empty(nrec, dtype=np.complex128)
    ws = np.empty(nrec, dtype=np.complex128)
    zs[0] = z
    ws[0] = w
    rec = 1
    for step in range(1, n + 1):
        z, w = _step(comps, z, w)
        nrm2 = z.real * z.real + z.imag * z.imag + w.real * w.real + w.imag * w.imag
        if not (nrm2 <= abort_abs2):
            return zs[:rec], ws[:rec], step
        if step % stride == 0:
            zs[rec] = z
            ws[rec] = w
            rec += 1
    return zs[:rec], ws[:rec], -1


_RENORM = 1e-100


def g_family_logs(ar, ai, r, x0r, x0i, y0r, y0i, horizon, sample_ns, escape_radius):
    """Iterate ``(x - y^2 + a x^(r+1), y (1 - x))`` keeping ``y`` in scaled form.

    ``y = ym * exp(ly)`` so stretched-exponential decay below the double range
    can still be followed.  Returns ``(log|x|, log|y|, sum Re x_j, escaped_at)``
    at the requested (sorted) sample indices; ``escaped_at`` is -1 if the orbit
    stayed inside ``escape_radius``.
    """
    a = complex(ar, ai)
    x = complex(x0r, x0i)
    ym = complex(y0r, y0i)
    ly = 0.0
    R2 = escape_radius * escape_radius
    ns = len(sample_ns)
    logx = np.full(ns, np.nan)
    logy = np.full(ns, np.nan)
    sre = np.full(ns, np.nan)
    s = 0.0
    k = 0
    for n in range(horizon + 1):
        while k < ns and sample_ns[k] == n:
            logx[k] = math.log(abs(x)) if x != 0 else -math.inf
            my = abs(ym)
            logy[k] = (math.log(my) + ly) if my != 0 else -math.inf
            sre[k] = s
            k += 1
        if n == horizon:
            break
        e2 = math.exp(2.0 * ly)
        y2 = (ym * ym) * e2
        xp = x
        for _ in range(r):
            xp = xp * x
        s += x.real
        xn = x - y2 + a * xp
        ym = ym * (1.0 - x)
        x = xn
        my = abs(ym)
        if my < _RENORM and my != 0:
            ly += math.log(my)
            ym = ym / my
        ey = math.exp(ly)
        nrm2 = x.real * x.real + x.imag * x.imag + (ym.real * ym.real + ym.imag * ym.imag) * ey * ey
        if not (nrm2 <= R2):
            return logx, logy, sre, n + 1
    return logx, logy, sre, -1
