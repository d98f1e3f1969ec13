"""Polynomial self-maps of C^2 tangent to the identity.

A map is stored as the identity plus a finite set of homogeneous components
``P_j = (p_j, q_j)`` of degree ``j >= 2``.  A homogeneous polynomial of degree
``d`` keeps ``d + 1`` dense coefficients, ``coeffs[i]`` multiplying
``z**(d - i) * w**i``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

__all__ = [
    "MapError",
    "Complex2",
    "HomPoly2",
    "PolyMap2",
    "LinearChange",
    "SUM_DIFF",
    "as_point",
    "eval_hom",
    "eval_map",
    "eval_map_arrays",
    "conjugate_linear",
    "order",
    "max_coefficient_difference",
    "random_linear_change",
]


class MapError(ValueError):
    """Raised for maps outside the supported class (not tangent to the identity, etc.)."""


def _finite(c: complex) -> bool:
    return math.isfinite(c.real) and math.isfinite(c.imag)


@dataclass(frozen=True)
class Complex2:
    """A point (z, w) of C^2 with finite coordinates."""

    z: complex
    w: complex

    def __post_init__(self) -> None:
        z, w = complex(self.z), complex(self.w)
        if not (_finite(z) and _finite(w)):
            raise ValueError(f"non-finite point ({z}, {w})")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "w", w)

    def __iter__(self) -> Iterator[complex]:
        yield self.z
        yield self.w

    def norm(self) -> float:
        return math.sqrt(abs(self.z) ** 2 + abs(self.w) ** 2)


def as_point(pt) -> Complex2:
    if isinstance(pt, Complex2):
        return pt
    z, w = pt
    return Complex2(complex(z), complex(w))


@dataclass(frozen=True)
class HomPoly2:
    """Homogeneous polynomial in two variables with dense coefficients."""

    degree: int
    coeffs: tuple[complex, ...]

    def __post_init__(self) -> None:
        if self.degree < 1:
            raise MapError(f"homogeneous degree must be >= 1, got {self.degree}")
        coeffs = tuple(complex(c) for c in self.coeffs)
        if len(coeffs) != self.degree + 1:
            raise MapError(
                f"degree {self.degree} needs {self.degree + 1} coefficients, got {len(coeffs)}"
            )
        if not all(_finite(c) for c in coeffs):
            raise MapError("non-finite coefficient")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zero(cls, degree: int) -> HomPoly2:
        return cls(degree, (0j,) * (degree + 1))

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def max_abs(self) -> float:
        return max(abs(c) for c in self.coeffs)

    def __call__(self, z, w):
        return eval_hom(self, (z, w))


def _horner(coeffs: Sequence[complex], z, w):
    # Horner in z, powers of w built incrementally; the compiled kernels
    # evaluate in exactly this order so both backends round identically.
    acc = coeffs[0]
    wp = 1 + 0j
    for c in coeffs[1:]:
        wp = wp * w
        acc = acc * z + c * wp
    return acc


def eval_hom(poly: HomPoly2, pt):
    """Evaluate ``sum_i coeffs[i] z^(d-i) w^i``.

    ``pt`` may be a :class:`Complex2`, a pair of scalars, or a pair of numpy
    arrays (evaluated elementwise).
    """
    z, w = pt
    return _horner(poly.coeffs, z, w)


@dataclass(frozen=True)
class PolyMap2:
    """``(z, w) -> (z, w) + sum_j P_j(z, w)`` with every stored ``P_j`` of degree >= 2.

    ``variables`` only affects printing; it does not take part in equality.
    """

    components: tuple[tuple[int, HomPoly2, HomPoly2], ...]
    variables: tuple[str, str] = field(default=("z", "w"), compare=False)

    def __post_init__(self) -> None:
        comps = []
        seen = set()
        for j, p, q in self.components:
            if j < 2:
                raise MapError(
                    f"degree-{j} component not allowed: the map must be tangent to the identity"
                )
            if j in seen:
                raise MapError(f"duplicate component of degree {j}")
            seen.add(j)
            if p.degree != j or q.degree != j:
                raise MapError(f"component of degree {j} has mismatched polynomial degrees")
            if p.is_zero() and q.is_zero():
                continue
            comps.append((j, p, q))
        if not comps:
            raise MapError("map is the identity: no nonzero component")
        comps.sort(key=lambda t: t[0])
        object.__setattr__(self, "components", tuple(comps))

    @classmethod
    def from_coeffs(
        cls,
        components: Mapping[int, tuple[Sequence[complex], Sequence[complex]]],
        variables: tuple[str, str] = ("z", "w"),
    ) -> PolyMap2:
        return cls(
            tuple(
                (j, HomPoly2(j, tuple(p)), HomPoly2(j, tuple(q)))
                for j, (p, q) in components.items()
            ),
            variables,
        )

    @property
    def order(self) -> int:
        return self.components[0][0]

    @property
    def top_degree(self) -> int:
        return self.components[-1][0]

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(j for j, _, _ in self.components)

    def component(self, j: int) -> tuple[HomPoly2, HomPoly2]:
        for d, p, q in self.components:
            if d == j:
                return p, q
        return HomPoly2.zero(j), HomPoly2.zero(j)

    def with_variables(self, variables: tuple[str, str]) -> PolyMap2:
        return PolyMap2(self.components, tuple(variables))

    def coefficient_table(self) -> dict[int, tuple[tuple[complex, ...], tuple[complex, ...]]]:
        return {j: (p.coeffs, q.coeffs) for j, p, q in self.components}

    @cached_property
    def packed(self) -> tuple[np.ndarray, ...]:
        """Flat float64 arrays consumed by the iteration kernels.

        Returns ``(degs, offsets, p_re, p_im, q_re, q_im)``; the coefficients of
        degree ``degs[k]`` live at ``offsets[k]:offsets[k] + degs[k] + 1``.
        """
        degs = np.array(self.degrees, dtype=np.int64)
        offsets = np.zeros(len(degs), dtype=np.int64)
        pc, qc = [], []
        pos = 0
        for k, (j, p, q) in enumerate(self.components):
            offsets[k] = pos
            pc.extend(p.coeffs)
            qc.extend(q.coeffs)
            pos += j + 1
        pc = np.array(pc, dtype=np.complex128)
        qc = np.array(qc, dtype=np.complex128)
        return (
            degs,
            offsets,
            np.ascontiguousarray(pc.real),
            np.ascontiguousarray(pc.imag),
            np.ascontiguousarray(qc.real),
            np.ascontiguousarray(qc.imag),
        )

    def __call__(self, pt) -> Complex2:
        return eval_map(self, pt)


def order(m: PolyMap2) -> int:
    """Degree of the lowest nonzero homogeneous component (``k + 1``)."""
    return m.order


def _step(m: PolyMap2, z, w):
    sp = 0j
    sq = 0j
    for _, p, q in m.components:
        sp = sp + _horner(p.coeffs, z, w)
        sq = sq + _horner(q.coeffs, z, w)
    return z + sp, w + sq


def eval_map(m: PolyMap2, pt) -> Complex2:
    z, w = as_point(pt)
    z1, w1 = _step(m, z, w)
    if not (_finite(z1) and _finite(w1)):
        raise OverflowError(f"map value at ({z}, {w}) is not finite; the orbit escaped")
    return Complex2(z1, w1)


def eval_map_arrays(m: PolyMap2, z: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`eval_map` over complex arrays (no finiteness check).

    numpy's complex product may round differently in the last bit, so use the
    kernels when results must match the scalar path exactly.
    """
    z = np.asarray(z, dtype=np.complex128)
    w = np.asarray(w, dtype=np.complex128)
    return _step(m, z, w)


@dataclass(frozen=True)
class LinearChange:
    """Invertible 2x2 complex matrix acting on column vectors (z, w)."""

    matrix: tuple[tuple[complex, complex], tuple[complex, complex]]

    def __post_init__(self) -> None:
        (a, b), (c, d) = self.matrix
        mat = ((complex(a), complex(b)), (complex(c), complex(d)))
        object.__setattr__(self, "matrix", mat)
        if not all(_finite(x) for row in mat for x in row):
            raise MapError("non-finite matrix entry")
        opnorm = float(np.linalg.norm(np.array(mat), 2))
        if abs(self.det) <= 1e-14 * opnorm**2:
            raise MapError(f"linear change is not invertible (det={self.det})")

    @classmethod
    def identity(cls) -> LinearChange:
        return cls(((1, 0), (0, 1)))

    @property
    def det(self) -> complex:
        (a, b), (c, d) = self.matrix
        return a * d - b * c

    def inverse(self) -> LinearChange:
        (a, b), (c, d) = self.matrix
        det = self.det
        return LinearChange(((d / det, -b / det), (-c / det, a / det)))

    def apply(self, pt) -> Complex2:
        z, w = as_point(pt)
        (a, b), (c, d) = self.matrix
        return Complex2(a * z + b * w, c * z + d * w)

    def apply_direction(self, alpha: complex, beta: complex) -> tuple[complex, complex]:
        (a, b), (c, d) = self.matrix
        return a * alpha + b * beta, c * alpha + d * beta


#: ``l(z, w) = (z + w, z - w)``, the change of chart sending {z = w} to {y = 0}.
SUM_DIFF = LinearChange(((1, 1), (1, -1)))


def _linear_power(a: complex, b: complex, k: int) -> np.ndarray:
    """Coefficients of ``(a x + b y)^k`` in the dense ``x^(k-t) y^t`` layout."""
    out = np.zeros(k + 1, dtype=np.complex128)
    for t in range(k + 1):
        out[t] = math.comb(k, t) * a ** (k - t) * b**t
    return out


def _substitute(coeffs: Sequence[complex], M) -> np.ndarray:
    """Coefficients of ``poly(M00 x + M01 y, M10 x + M11 y)``."""
    d = len(coeffs) - 1
    (m00, m01), (m10, m11) = M
    out = np.zeros(d + 1, dtype=np.complex128)
    zp = [_linear_power(m00, m01, k) for k in range(d + 1)]
    wp = [_linear_power(m10, m11, k) for k in range(d + 1)]
    for i, c in enumerate(coeffs):
        if c == 0:
            continue
        out += c * np.convolve(zp[d - i], wp[i])
    return out


def conjugate_linear(m: PolyMap2, L: LinearChange) -> PolyMap2:
    """Return ``L o m o L^-1`` expanded back into homogeneous components.

    With ``M = L^-1`` the result is ``X + L P(M X)``, so each component is
    obtained by substituting linear forms and mixing with ``L``.
    """
    if not isinstance(L, LinearChange):
        L = LinearChange(L)
    M = L.inverse().matrix
    (l00, l01), (l10, l11) = L.matrix
    comps = []
    for j, p, q in m.components:
        ps = _substitute(p.coeffs, M)
        qs = _substitute(q.coeffs, M)
        newp = l00 * ps + l01 * qs
        newq = l10 * ps + l11 * qs
        comps.append((j, HomPoly2(j, tuple(newp)), HomPoly2(j, tuple(newq))))
    return PolyMap2(tuple(comps), m.variables)


def max_coefficient_difference(a: PolyMap2, b: PolyMap2) -> float:
    """Largest absolute coefficient difference, missing components counting as zero."""
    degs = set(a.degrees) | set(b.degrees)
    worst = 0.0
    for j in degs:
        pa, qa = a.component(j)
        pb, qb = b.component(j)
        for x, y in zip(pa.coeffs + qa.coeffs, pb.coeffs + qb.coeffs):
            worst = max(worst, abs(x - y))
    return worst


def random_linear_change(rng: np.random.Generator, min_det: float = 0.2) -> LinearChange:
    while True:
        mat = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        if abs(np.linalg.det(mat)) > min_det * np.linalg.norm(mat, 2) ** 2:
            return LinearChange(tuple(tuple(complex(x) for x in row) for row in mat))


def iter_monomials(d: int) -> Iterable[tuple[int, int]]:
    """Exponent pairs ``(d - i, i)`` in storage order."""
    for i in range(d + 1):
        yield d - i, i

