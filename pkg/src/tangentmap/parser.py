"""Expression language for polynomial maps of C^2 and the built-in families.

The grammar (see ``docs/GRAMMAR.md``)::

    map     = "(" expr "," expr ")" ;
    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;       (* "/" only by constants *)
    unary   = ("+" | "-") unary | power ;
    power   = atom [ "^" integer ] ;
    atom    = number | imag | variable | "(" expr ")" ;

Variables are either ``z, w`` or ``x, y`` (never mixed).  A number directly
followed by ``i`` is imaginary; ``i`` alone is the imaginary unit.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Optional

from .poly import HomPoly2, MapError, PolyMap2

__all__ = [
    "ParseError",
    "MAX_DEGREE",
    "FAMILIES",
    "MapSource",
    "parse_map",
    "format_map",
    "builtin",
    "parse_complex",
]

MAX_DEGREE = 64
FAMILIES = ("f", "ftilde", "g", "h", "gtilde")

_VAR_PAIRS = {"z": ("z", "w"), "w": ("z", "w"), "x": ("x", "y"), "y": ("x", "y")}


class ParseError(ValueError):
    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")

# A polynomial during parsing: {(exp_first, exp_second): coefficient}
Poly = dict


def _tokenize(text: str) -> list[tuple[str, object, int]]:
    toks = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        m = _NUMBER.match(text, i)
        if m:
            val = float(m.group())
            j = m.end()
            if j < n and text[j] == "i":
                toks.append(("num", complex(0.0, val), i))
                j += 1
            else:
                toks.append(("num", complex(val, 0.0), i))
            if j < n and (text[j].isalpha() or text[j] == "_"):
                raise ParseError(f"unexpected character {text[j]!r} after number", j)
            i = j
            continue
        if ch == "i":
            toks.append(("num", 1j, i))
            i += 1
            continue
        if ch in "zwxy":
            toks.append(("var", ch, i))
            i += 1
            continue
        if ch in "+-*/^(),":
            toks.append((ch, ch, i))
            i += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", i)
    toks.append(("end", None, n))
    return toks


def _degree(p: Poly) -> int:
    return max((a + b for (a, b), c in p.items() if c != 0), default=0)


def _add(p: Poly, q: Poly) -> Poly:
    out = dict(p)
    for k, c in q.items():
        out[k] = out[k] + c if k in out else c
    return out


def _neg(p: Poly) -> Poly:
    return {k: -c for k, c in p.items()}


def _mul(p: Poly, q: Poly, pos: int) -> Poly:
    if _degree(p) + _degree(q) > MAX_DEGREE:
        raise ParseError(f"total degree exceeds {MAX_DEGREE}", pos)
    out: Poly = {}
    for (a1, b1), c1 in p.items():
        for (a2, b2), c2 in q.items():
            k = (a1 + a2, b1 + b2)
            v = c1 * c2
            out[k] = out[k] + v if k in out else v
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.pair: Optional[tuple[str, str]] = None

    def peek(self):
        return self.toks[self.i]

    def take(self, kind: str):
        tok = self.toks[self.i]
        if tok[0] != kind:
            what = "end of input" if tok[0] == "end" else repr(tok[1])
            raise ParseError(f"expected {kind!r}, found {what}", tok[2])
        self.i += 1
        return tok

    def parse_map(self) -> tuple[Poly, Poly]:
        self.take("(")
        first = self.expr()
        self.take(",")
        second = self.expr()
        self.take(")")
        self.take("end")
        return first, second

    def expr(self) -> Poly:
        p = self.term()
        while self.peek()[0] in "+-":
            op = self.take(self.peek()[0])[0]
            q = self.term()
            p = _add(p, q if op == "+" else _neg(q))
        return p

    def term(self) -> Poly:
        p = self.unary()
        while self.peek()[0] in ("*", "/"):
            op, _, pos = self.take(self.peek()[0])
            q = self.unary()
            if op == "*":
                p = _mul(p, q, pos)
            else:
                if _degree(q) != 0 or q.get((0, 0), 0) == 0:
                    raise ParseError("division only by a nonzero constant", pos)
                c = q[(0, 0)]
                p = {k: v / c for k, v in p.items()}
        return p

    def unary(self) -> Poly:
        kind = self.peek()[0]
        if kind == "-":
            self.take("-")
            return _neg(self.unary())
        if kind == "+":
            self.take("+")
            return self.unary()
        return self.power()

    def power(self) -> Poly:
        base = self.atom()
        if self.peek()[0] == "^":
            _, _, pos = self.take("^")
            _, val, epos = self.take("num")
            if val.imag != 0 or val.real != int(val.real) or val.real < 1:
                raise ParseError("exponent must be a positive integer literal", epos)
            e = int(val.real)
            if _degree(base) * e > MAX_DEGREE:
                raise ParseError(f"total degree exceeds {MAX_DEGREE}", pos)
            out = base
            for _ in range(e - 1):
                out = _mul(out, base, pos)
            return out
        return base

    def atom(self) -> Poly:
        kind, val, pos = self.peek()
        if kind == "num":
            self.i += 1
            return {(0, 0): val}
        if kind == "var":
            self.i += 1
            pair = _VAR_PAIRS[val]
            if self.pair is None:
                self.pair = pair
            elif self.pair != pair:
                raise ParseError(
                    f"variable {val!r} mixes the ({self.pair[0]},{self.pair[1]}) "
                    f"and ({pair[0]},{pair[1]}) charts",
                    pos,
                )
            return {(1, 0): 1 + 0j} if val == pair[0] else {(0, 1): 1 + 0j}
        if kind == "(":
            self.i += 1
            p = self.expr()
            self.take(")")
            return p
        what = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"unexpected {what}", pos)


def _check_linear(p: Poly, own: tuple[int, int], label: str, names: tuple[str, str]) -> None:
    const = p.get((0, 0), 0)
    if const != 0:
        raise MapError(f"{label} component has constant term {const}; the map must fix the origin")
    c1 = p.get((1, 0), 0)
    c2 = p.get((0, 1), 0)
    want1 = 1 if own == (1, 0) else 0
    want2 = 1 if own == (0, 1) else 0
    if c1 != want1 or c2 != want2:
        var = names[0] if own == (1, 0) else names[1]
        raise MapError(
            f"linear part must be the identity: {label} component should be {var} + "
            f"higher order, but its linear coefficients are {names[0]}: {c1}, {names[1]}: {c2}"
        )


def parse_map(text: str) -> PolyMap2:
    """Parse ``"(expr, expr)"`` into a :class:`PolyMap2`.

    Raises :class:`ParseError` on syntax errors and :class:`MapError` when the
    linear part is not the identity or nothing beyond it remains.
    """
    parser = _Parser(text)
    first, second = parser.parse_map()
    names = parser.pair or ("z", "w")
    _check_linear(first, (1, 0), "first", names)
    _check_linear(second, (0, 1), "second", names)
    degs = sorted(
        {a + b for (a, b), c in list(first.items()) + list(second.items()) if c != 0 and a + b >= 2}
    )
    comps = []
    for d in degs:
        pc = tuple(first.get((d - i, i), 0j) for i in range(d + 1))
        qc = tuple(second.get((d - i, i), 0j) for i in range(d + 1))
        comps.append((d, HomPoly2(d, pc), HomPoly2(d, qc)))
    return PolyMap2(tuple(comps), names)


def _num(x: float) -> str:
    if x == int(x) and abs(x) < 2**53:
        return str(int(x))
    return repr(x)


def _monomial(a: int, b: int, names: tuple[str, str]) -> str:
    parts = []
    for e, v in ((a, names[0]), (b, names[1])):
        if e == 1:
            parts.append(v)
        elif e > 1:
            parts.append(f"{v}^{e}")
    return "*".join(parts)


def _term(c: complex, mono: str) -> tuple[str, str]:
    if c.imag == 0:
        sign = "-" if c.real < 0 else "+"
        mag = abs(c.real)
        return sign, mono if mag == 1 else f"{_num(mag)}*{mono}"
    im_sign = "-" if c.imag < 0 else "+"
    return "+", f"({_num(c.real)}{im_sign}{_num(abs(c.imag))}i)*{mono}"


def format_map(m: PolyMap2) -> str:
    """Canonical text of ``m``: identity first, then monomials by degree and lex order.

    ``parse_map(format_map(m)) == m`` holds coefficient-exactly.
    """
    names = m.variables
    out = []
    for comp, lead in ((0, names[0]), (1, names[1])):
        text = lead
        for j, p, q in m.components:
            poly = p if comp == 0 else q
            for i, c in enumerate(poly.coeffs):
                if c == 0:
                    continue
                sign, body = _term(c, _monomial(j - i, i, names))
                text += f" {sign} {body}"
        out.append(text)
    return f"({out[0]}, {out[1]})"


def parse_complex(text: str) -> complex:
    """Parse a flag value given as ``re,im`` or as an ``a+bi`` literal."""
    text = text.strip()
    if "," in text:
        re_s, im_s = text.split(",", 1)
        return complex(float(re_s), float(im_s))
    parser = _Parser(text)
    p = parser.expr()
    parser.take("end")
    if parser.pair is not None or _degree(p) != 0:
        raise ParseError(f"not a complex constant: {text!r}")
    return complex(p.get((0, 0), 0j))


def _g_ok(a: complex, r: int) -> bool:
    if r >= 3:
        return a != 0
    if r == 2:
        return not (a.imag == 0 and a.real >= 0)
    return False


def builtin(family: str, a: complex | float | None = None, r: int | None = None) -> PolyMap2:
    """Instantiate one of the named families.

    ``f``       (z(1-(z-w)), w(1+(z-w)))
    ``ftilde``  (x - y^2, y - xy)
    ``g``       (x - y^2 + a x^(r+1), y - xy), needs a != 0, r >= 3 or a not in [0, inf), r = 2
    ``h``       (x - y^2 + a x^3, y - xy), needs real a > 0
    ``gtilde``  f + (a/2)(z+w)^(r+1) in both coordinates, r >= 2
    """
    if family == "f":
        return PolyMap2.from_coeffs({2: ((-1, 1, 0), (0, 1, -1))}, ("z", "w"))
    if family == "ftilde":
        return PolyMap2.from_coeffs({2: ((0, 0, -1), (0, -1, 0))}, ("x", "y"))
    if family in ("g", "h", "gtilde"):
        if a is None:
            raise MapError(f"family {family} needs the parameter a")
        a = complex(a)
        if family == "h":
            if r not in (None, 2):
                raise MapError("family h has fixed r = 2")
            if not (a.imag == 0 and a.real > 0):
                raise MapError(f"family h needs real a > 0, got a={a} (other a belong to family g)")
            r = 2
        if r is None:
            raise MapError(f"family {family} needs the parameter r")
        r = int(r)
        if family == "g" and not _g_ok(a, r):
            raise MapError(
                f"family g needs (a != 0 and r >= 3) or (a not a nonnegative real and r = 2); "
                f"got a={a}, r={r}"
            )
        if family == "gtilde" and r < 2:
            raise MapError(f"family gtilde needs r >= 2, got r={r}")
        d = r + 1
        if family in ("g", "h"):
            top = (a,) + (0j,) * d
            return PolyMap2.from_coeffs(
                {2: ((0, 0, -1), (0, -1, 0)), d: (top, (0j,) * (d + 1))}, ("x", "y")
            )
        half = a / 2
        ring = tuple(half * math.comb(d, i) for i in range(d + 1))
        comps = {2: ((-1, 1, 0), (0, 1, -1))}
        if a != 0:
            comps[d] = (ring, ring)
        return PolyMap2.from_coeffs(comps, ("z", "w"))
    raise MapError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")


@dataclass(frozen=True)
class MapSource:
    """Either an expression or a family with parameters; exactly one is used."""

    text: Optional[str] = None
    family: Optional[str] = None
    a: Optional[complex] = None
    r: Optional[int] = None

    def __post_init__(self) -> None:
        if (self.text is None) == (self.family is None):
            raise MapError("give exactly one of an expression or a family")

    def resolve(self) -> PolyMap2:
        if self.text is not None:
            return parse_map(self.text)
        return builtin(self.family, self.a, self.r)
