"""Characteristic directions, directors and degree-wise degeneracy.

A direction ``[v]`` is characteristic for a homogeneous ``P = (p, q)`` when
``P(v) = lambda v``; in two variables these are the zeros on P^1 of
``r(z, w) = z q(z, w) - w p(z, w)``.
"""
from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .poly import HomPoly2, PolyMap2, eval_hom

__all__ = [
    "DicriticalError",
    "DirectorError",
    "ProjDirection",
    "CharDirReport",
    "DegreewiseStatus",
    "chordal_distance",
    "r_polynomial",
    "aberth_roots",
    "proj_roots",
    "classify_directions",
    "director",
    "degreewise",
    "beta_branch",
    "approach_data",
    "reports_to_json",
]

ZERO_COEFF_RTOL = 1e-13
DEGENERACY_RTOL = 1e-8
CLUSTER_TOL = 1e-8
COARSE_CLUSTER_TOL = 0.1
MULTIPLICITY_RTOL = 1e-12


class DicriticalError(ValueError):
    """``r`` vanishes identically: every direction is characteristic."""


class DirectorError(ValueError):
    pass


def chordal_distance(a1: complex, b1: complex, a2: complex, b2: complex) -> float:
    """Chordal (Fubini-Study sine) distance between ``[a1:b1]`` and ``[a2:b2]``."""
    n1 = math.hypot(abs(a1), abs(b1))
    n2 = math.hypot(abs(a2), abs(b2))
    if n1 == 0 or n2 == 0:
        return 1.0
    return abs(a1 * b2 - b1 * a2) / (n1 * n2)


def _snap(x: complex) -> complex:
    re = 0.0 if abs(x.real) < 1e-15 else x.real
    im = 0.0 if abs(x.imag) < 1e-15 else x.imag
    return complex(re, im)


@dataclass(frozen=True)
class ProjDirection:
    """Point ``[alpha:beta]`` of P^1 in canonical form.

    The larger coordinate (``alpha`` on ties) equals 1, so
    ``max(|alpha|, |beta|) = 1`` and it is real-positive.
    """

    alpha: complex
    beta: complex

    @classmethod
    def of(cls, alpha: complex, beta: complex) -> ProjDirection:
        alpha, beta = complex(alpha), complex(beta)
        if alpha == 0 and beta == 0:
            raise ValueError("[0:0] is not a point of P^1")
        if abs(beta) <= abs(alpha) * (1 + 1e-12):
            return cls(1 + 0j, _snap(beta / alpha))
        return cls(_snap(alpha / beta), 1 + 0j)

    @property
    def alpha_chart(self) -> bool:
        return self.alpha == 1 and abs(self.beta) <= 1 + 1e-12

    def distance(self, other: ProjDirection) -> float:
        return chordal_distance(self.alpha, self.beta, other.alpha, other.beta)

    def label(self) -> str:
        def fmt(c: complex) -> str:
            if c.imag == 0:
                return f"{c.real:g}"
            return f"{c.real:g}{c.imag:+g}i"

        return f"[{fmt(self.alpha)}:{fmt(self.beta)}]"

    def __str__(self) -> str:
        return self.label()


def r_polynomial(p: HomPoly2, q: HomPoly2) -> HomPoly2:
    """Coefficients of ``z q - w p`` (degree ``d + 1``)."""
    if p.degree != q.degree:
        raise ValueError("p and q must have the same degree")
    d = p.degree
    out = [0j] * (d + 2)
    for i in range(d + 1):
        out[i] += q.coeffs[i]
        out[i + 1] -= p.coeffs[i]
    return HomPoly2(d + 1, tuple(out))


def _peval(c: Sequence[complex], u: complex) -> complex:
    acc = 0j
    for a in reversed(c):
        acc = acc * u + a
    return acc


def _peval_d(c: Sequence[complex], u: complex) -> tuple[complex, complex]:
    p = 0j
    dp = 0j
    for a in reversed(c):
        dp = dp * u + p
        p = p * u + a
    return p, dp


def aberth_roots(coeffs: Sequence[complex], tol: float = 1e-13, max_iter: int = 500) -> np.ndarray:
    """All roots of ``sum coeffs[i] u^i`` by Aberth-Ehrlich simultaneous iteration.

    ``coeffs`` is in ascending powers with a nonzero leading coefficient.
    """
    c = [complex(x) for x in coeffs]
    n = len(c) - 1
    if n < 1:
        return np.zeros(0, dtype=np.complex128)
    if c[-1] == 0:
        raise ValueError("leading coefficient must be nonzero")
    if n == 1:
        return np.array([-c[0] / c[1]])
    lead = abs(c[-1])
    # Fujiwara-type radius for the starting circle
    radius = 2 * max(abs(c[n - k] / c[n]) ** (1.0 / k) for k in range(1, n + 1))
    radius = max(radius, 1e-3)
    z = np.array([radius * cmath.exp(1j * (2 * math.pi * k / n + 0.4)) for k in range(n)])
    absc = [abs(x) for x in c]
    converged = np.zeros(n, dtype=bool)
    for _ in range(max_iter):
        max_step = 0.0
        for k in range(n):
            if converged[k]:
                continue
            p, dp = _peval_d(c, z[k])
            scale = _peval([complex(a) for a in absc], abs(z[k])).real
            if abs(p) <= tol * scale:
                converged[k] = True
                continue
            if dp == 0:
                dp = complex(1e-300, 0)
            ratio = p / dp
            s = 0j
            for j in range(n):
                if j != k:
                    diff = z[k] - z[j]
                    if diff != 0:
                        s += 1.0 / diff
            denom = 1 - ratio * s
            corr = ratio / denom if denom != 0 else ratio
            z[k] -= corr
            max_step = max(max_step, abs(corr) / max(1.0, abs(z[k])))
        if converged.all() or max_step < 1e-16:
            break
    del lead
    return z


def _polish(c: Sequence[complex], u: complex) -> complex:
    """A few guarded Newton steps in the better-conditioned chart."""
    if abs(u) <= 1:
        coeffs, x = list(c), u
    else:
        coeffs, x = list(reversed(c)), 1 / u
    best = x
    bres = abs(_peval(coeffs, x))
    for _ in range(4):
        p, dp = _peval_d(coeffs, x)
        if dp == 0:
            break
        x = x - p / dp
        res = abs(_peval(coeffs, x))
        if res < bres:
            best, bres = x, res
        else:
            break
    return best if abs(u) <= 1 else (1 / best if best != 0 else u)


def _taylor_small(c: Sequence[complex], u: complex, k: int) -> bool:
    """True when ``u`` is (numerically) a root of multiplicity >= ``k``."""
    n = len(c) - 1
    au = abs(u)
    for j in range(k):
        val = 0j
        scale = 0.0
        for i in range(j, n + 1):
            coef = math.comb(i, j)
            val += coef * c[i] * u ** (i - j)
            scale += coef * abs(c[i]) * au ** (i - j)
        if abs(val) > MULTIPLICITY_RTOL * max(scale, 1e-300):
            return False
    return True


def _components(pts: list[tuple[complex, complex]], idx: list[int], tol: float) -> list[list[int]]:
    """Single-linkage groups of ``idx`` under chordal distance ``< tol``."""
    groups: list[list[int]] = []
    seen: set[int] = set()
    for i in idx:
        if i in seen:
            continue
        stack, comp = [i], []
        seen.add(i)
        while stack:
            a = stack.pop()
            comp.append(a)
            for b in idx:
                if b not in seen and chordal_distance(*pts[a], *pts[b]) < tol:
                    seen.add(b)
                    stack.append(b)
        groups.append(sorted(comp))
    return groups


def _derivative(c: Sequence[complex], j: int) -> list[complex]:
    """Coefficients of ``p^(j) / j!``."""
    return [math.comb(i, j) * c[i] for i in range(j, len(c))]


def _kfold_near(cc: Sequence[complex], x: complex, k: int) -> tuple[complex, bool]:
    """Newton on ``p^(k-1)`` from ``x`` and the k-fold root test at the result.

    A k-fold root is a simple root of ``p^(k-1)``, so this recovers it to full
    precision even though the individual roots of the cluster are only
    accurate to about ``eps^(1/k)``.
    """
    dk = _derivative(cc, k - 1)
    for _ in range(20):
        f, df = _peval_d(dk, x)
        if df == 0:
            break
        step = f / df
        x -= step
        if abs(step) <= 1e-16 * max(1.0, abs(x)):
            break
    return x, _taylor_small(cc, x, k)


def _centroid(c: Sequence[complex], roots: np.ndarray, members: list[int],
              found: Sequence[complex] = ()) -> tuple[complex, int, list[int]]:
    """Largest multiple root inside a cluster: ``(u, multiplicity, member indices)``.

    Centres that coincide with an already extracted root (``found``) are skipped.
    """
    us = roots[members]
    flip = np.mean(np.abs(us)) > 1
    cc = list(reversed(c)) if flip else list(c)
    xs = (1 / us) if flip else us
    start = complex(np.mean(xs))
    for k in range(len(members), 1, -1):
        # a k-fold root sits near the mean of some k members; outliers of the
        # cluster would drag the overall mean towards another root of p^(k-1)
        starts = [start]
        for i in range(len(xs)):
            near = np.argsort(np.abs(xs - xs[i]), kind="stable")[:k]
            s = complex(np.mean(xs[near]))
            if all(s != t for t in starts):
                starts.append(s)
        for s in starts:
            x, ok = _kfold_near(cc, s, k)
            xu = (1 / x if x != 0 else complex("inf")) if flip else x
            if ok and any(chordal_distance(1, xu, 1, f) < 1e-6 for f in found if np.isfinite(xu)):
                ok = False
            if ok:
                break
        if ok:
            near = np.argsort(np.abs(xs - x), kind="stable")[:k]
            chosen = [members[i] for i in sorted(near)]
            if flip:
                x = 1 / x if x != 0 else complex("inf")
            return x, k, chosen
    return start, 1, []


def _cluster(c: Sequence[complex], roots: np.ndarray) -> list[tuple[complex, int]]:
    pts = [(1 + 0j, complex(u)) for u in roots]
    out: list[tuple[complex, int]] = []

    def split(members: list[int], tol: float) -> None:
        if len(members) == 1:
            out.append((_polish(c, complex(roots[members[0]])), 1))
            return
        cen, k, chosen = _centroid(c, roots, members, [u for u, _ in out])
        if k > 1:
            out.append((cen, k))
            rest = [i for i in members if i not in chosen]
            for group in _components(pts, rest, tol):
                split(group, tol)
            return
        if tol <= CLUSTER_TOL:
            out.append((complex(np.mean(roots[members])), len(members)))
            return
        for group in _components(pts, members, tol / 10):
            split(group, tol / 10)

    for group in _components(pts, list(range(len(roots))), COARSE_CLUSTER_TOL):
        split(group, COARSE_CLUSTER_TOL)
    return out


def proj_roots(poly: HomPoly2, scale: float | None = None) -> list[tuple[ProjDirection, int]]:
    """Roots of a binary form on P^1 with multiplicities summing to its degree.

    Coefficients below ``1e-13 * scale`` count as zero (``scale`` defaults to the
    largest coefficient).  Raises :class:`DicriticalError` for the zero form.
    """
    c = list(poly.coeffs)
    big = max(abs(x) for x in c)
    if scale is None:
        scale = big
    if big == 0 or big <= ZERO_COEFF_RTOL * scale:
        raise DicriticalError("polynomial vanishes identically (dicritical)")
    zero = ZERO_COEFF_RTOL * max(big, 0.0)
    c = [0j if abs(x) <= zero else x for x in c]
    d = poly.degree
    out: list[tuple[ProjDirection, int]] = []
    # c[i] multiplies z^(d-i) w^i; trailing zeros are powers of z dividing the form
    m_inf = 0
    while c[d - m_inf] == 0:
        m_inf += 1
    if m_inf:
        out.append((ProjDirection.of(0, 1), m_inf))
    uc = c[: d - m_inf + 1]  # ascending powers of u = w/z
    m_zero = 0
    while uc[m_zero] == 0:
        m_zero += 1
    if m_zero:
        out.append((ProjDirection.of(1, 0), m_zero))
    uc = uc[m_zero:]
    if len(uc) > 1:
        roots = aberth_roots(uc)
        for u, mult in _cluster(uc, roots):
            out.append((ProjDirection.of(1, u), mult))
    total = sum(m for _, m in out)
    if total != d:
        raise RuntimeError(f"root multiplicities sum to {total}, expected {d}")
    return out


@dataclass(frozen=True)
class CharDirReport:
    direction: ProjDirection
    multiplicity: int
    lam: complex
    degenerate: bool
    director: Optional[complex]


def _lambda(p: HomPoly2, q: HomPoly2, v: ProjDirection) -> complex:
    if v.alpha_chart:
        return eval_hom(p, (v.alpha, v.beta)) / v.alpha
    return eval_hom(q, (v.alpha, v.beta)) / v.beta


def _coef_scale(p: HomPoly2, q: HomPoly2) -> float:
    return max(p.max_abs(), q.max_abs())


@lru_cache(maxsize=256)
def classify_directions(m: PolyMap2) -> tuple[CharDirReport, ...]:
    """Characteristic directions of the lowest-order component, with directors.

    Raises :class:`DicriticalError` when every direction is characteristic.
    """
    j, p, q = m.components[0]
    scale = _coef_scale(p, q)
    rp = r_polynomial(p, q)
    reports = []
    for v, mult in proj_roots(rp, scale=scale):
        lam = _lambda(p, q, v)
        degen = abs(lam) < DEGENERACY_RTOL * scale
        dirn = director(m, v) if (not degen and j == 2) else None
        reports.append(CharDirReport(v, mult, lam, degen, dirn))
    reports.sort(key=lambda rep: (not rep.direction.alpha_chart, abs(rep.direction.beta),
                                  rep.direction.beta.real, rep.direction.beta.imag,
                                  rep.direction.alpha.real, rep.direction.alpha.imag))
    return tuple(reports)


def director(m: PolyMap2, v: ProjDirection) -> complex:
    """Director of a non-degenerate characteristic direction of an order-2 map.

    ``[1:u0]``: ``(d/du r(1, u))(u0) / p(1, u0)``;
    ``[z0:1]``: ``(d/dz (-r(z, 1)))(z0) / q(z0, 1)``.
    """
    if m.order != 2:
        raise DirectorError("director implemented only for order-2 germs")
    _, p, q = m.components[0]
    lam = _lambda(p, q, v)
    if abs(lam) < DEGENERACY_RTOL * _coef_scale(p, q):
        raise DirectorError("director undefined for degenerate direction")
    r = r_polynomial(p, q).coeffs
    d = len(r) - 1
    if v.alpha_chart:
        u0 = v.beta / v.alpha
        deriv = sum(i * r[i] * u0 ** (i - 1) for i in range(1, d + 1))
        return deriv / eval_hom(p, (1, u0))
    z0 = v.alpha / v.beta
    deriv = -sum((d - i) * r[i] * z0 ** (d - i - 1) for i in range(d))
    return deriv / eval_hom(q, (z0, 1))


@dataclass(frozen=True)
class DegreewiseStatus:
    """Per-degree status of a direction, from the map's order up to its top degree.

    ``entries`` holds ``(degree, is_characteristic, degenerate, lambda)``.
    ``s_truncated`` is the last degree through which the direction stays
    characteristic; ``s_reaches_top`` says that bound is only the truncation.
    ``r_plus_1`` is the first non-degenerate degree, if any.
    """

    entries: tuple[tuple[int, bool, bool, complex], ...]
    s_truncated: int
    s_reaches_top: bool
    r_plus_1: Optional[int]
    lam_r_plus_1: Optional[complex]


def degreewise(m: PolyMap2, v: ProjDirection) -> DegreewiseStatus:
    entries = []
    s_trunc = None
    r1 = None
    lam_r1 = None
    still_char = True
    for j in range(m.order, m.top_degree + 1):
        p, q = m.component(j)
        scale = _coef_scale(p, q)
        if scale == 0:
            is_char, lam, degen = True, 0j, True
        else:
            cross = v.alpha * eval_hom(q, (v.alpha, v.beta)) - v.beta * eval_hom(p, (v.alpha, v.beta))
            is_char = abs(cross) <= DEGENERACY_RTOL * scale
            lam = _lambda(p, q, v) if is_char else complex("nan")
            degen = is_char and abs(lam) < DEGENERACY_RTOL * scale
        entries.append((j, is_char, degen, lam))
        if still_char and is_char:
            s_trunc = j
            if r1 is None and not degen:
                r1, lam_r1 = j, lam
        else:
            still_char = False
    if s_trunc is None:
        raise ValueError(f"{v} is not a characteristic direction of the order-{m.order} part")
    return DegreewiseStatus(tuple(entries), s_trunc, still_char, r1, lam_r1)


def beta_branch(a: complex, r: int) -> Optional[complex]:
    """An ``r``-th root of ``(-a r)^-1`` with positive real part, or None.

    Ties go to the larger real part, then the smaller ``|arg|``, then ``arg >= 0``.
    """
    a = complex(a)
    if a == 0:
        raise ValueError("beta branch needs a != 0")
    if r < 1:
        raise ValueError("r must be positive")
    c = 1 / (-a * r)
    mod = abs(c) ** (1.0 / r)
    th = cmath.phase(c)
    roots = [mod * cmath.exp(1j * (th + 2 * math.pi * k) / r) for k in range(r)]
    eps = 1e-12 * mod
    good = [b for b in roots if b.real > eps]
    if not good:
        return None
    best = max(b.real for b in good)
    good = [b for b in good if b.real >= best - eps]
    best_arg = min(abs(cmath.phase(b)) for b in good)
    good = [b for b in good if abs(cmath.phase(b)) <= best_arg + 1e-12]
    good.sort(key=lambda b: (b.imag < -eps,))
    return good[0]


def approach_data(m: PolyMap2) -> tuple[tuple[ProjDirection, int, complex], ...]:
    """``(direction, m, lambda)`` per characteristic direction for the origin test.

    Along a direction first non-degenerate in degree ``m + 1`` with eigenvalue
    ``lambda``, the chart coordinate obeys ``s -> s + lambda s^(m+1) + ...`` so
    ``s^-m`` advances by ``-m lambda`` per step.  ``m = 0`` marks directions
    degenerate in every stored degree.
    """
    try:
        reports = classify_directions(m)
    except DicriticalError:
        return ()
    out = []
    for rep in reports:
        st = degreewise(m, rep.direction)
        if st.r_plus_1 is None:
            out.append((rep.direction, 0, 0j))
        else:
            out.append((rep.direction, st.r_plus_1 - 1, st.lam_r_plus_1))
    return tuple(out)


def _num17(x: float) -> str:
    if x == 0:
        x = 0.0
    return format(x, ".17g")


def _pair(c: complex) -> str:
    return f"[{_num17(c.real)}, {_num17(c.imag)}]"


def _json17(val) -> str:
    if val is None or isinstance(val, bool):
        return json.dumps(val)
    if isinstance(val, int):
        return str(val)
    if isinstance(val, float):
        return _num17(val) if math.isfinite(val) else "null"
    if isinstance(val, complex):
        return _pair(val)
    if isinstance(val, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json17(v)}" for k, v in val.items()) + "}"
    if isinstance(val, (list, tuple)):
        return "[" + ", ".join(_json17(v) for v in val) + "]"
    return json.dumps(val)


def reports_to_json(reports: Sequence[CharDirReport], extra: Sequence[dict] | None = None) -> str:
    """Serialise reports with fixed field order and 17 significant digits."""
    items = []
    for k, rep in enumerate(reports):
        v = rep.direction
        fields = [
            f'"direction": [{_num17(v.alpha.real)}, {_num17(v.alpha.imag)}, '
            f"{_num17(v.beta.real)}, {_num17(v.beta.imag)}]",
            f'"multiplicity": {rep.multiplicity}',
            f'"lambda": {_pair(rep.lam)}',
            f'"degenerate": {"true" if rep.degenerate else "false"}',
            f'"director": {_pair(rep.director) if rep.director is not None else "null"}',
        ]
        if extra is not None:
            for key, val in extra[k].items():
                fields.append(f"{json.dumps(key)}: {_json17(val)}")
        items.append("  {" + ", ".join(fields) + "}")
    return "[\n" + ",\n".join(items) + "\n]\n"
