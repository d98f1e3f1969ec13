import cmath
import json
import math

import numpy as np
import pytest

from tangentmap.chardir import (DicriticalError, DirectorError, ProjDirection, aberth_roots,
                                approach_data, beta_branch, chordal_distance, classify_directions,
                                degreewise, director, proj_roots, r_polynomial, reports_to_json)
from tangentmap.parser import builtin, parse_map
from tangentmap.poly import HomPoly2, PolyMap2, conjugate_linear, eval_hom, random_linear_change

D10, D01, D11, D1M = (ProjDirection.of(1, 0), ProjDirection.of(0, 1), ProjDirection.of(1, 1),
                      ProjDirection.of(1, -1))


def as_dict(pairs):
    return {v: m for v, m in pairs}


def numpy_proj_roots(coeffs):
    """Projective roots via numpy.roots on the w/z chart plus the point at infinity."""
    c = np.array(coeffs, dtype=complex)  # c[i] * z^(d-i) w^i
    d = len(c) - 1
    inf = 0
    while inf <= d and c[d - inf] == 0:
        inf += 1
    u = np.roots(c[: d - inf + 1][::-1])
    return inf, u


def by_direction(reports):
    return {rep.direction: rep for rep in reports}


class TestProjDirection:
    def test_canonical(self):
        v = ProjDirection.of(2j, -2j)
        assert (v.alpha, v.beta) == (1, -1)
        v = ProjDirection.of(0.5, 2)
        assert (v.alpha, v.beta) == (0.25, 1)

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            ProjDirection.of(0, 0)

    def test_chordal(self):
        assert chordal_distance(1, 0, 0, 1) == pytest.approx(1)
        assert chordal_distance(1, 1, 2, 2) == pytest.approx(0, abs=1e-16)

    def test_labels(self):
        assert [D10.label(), D01.label(), D1M.label()] == ["[1:0]", "[0:1]", "[1:-1]"]


class TestRPolynomial:
    def test_f(self):
        _, p, q = builtin("f").components[0]
        assert r_polynomial(p, q).coeffs == (0, 2, -2, 0)  # 2 z^2 w - 2 z w^2

    def test_ftilde(self):
        _, p, q = builtin("ftilde").components[0]
        assert r_polynomial(p, q).coeffs == (0, -1, 0, 1)  # -x^2 y + y^3

    def test_dicritical(self):
        r = r_polynomial(HomPoly2(2, (1, 0, 0)), HomPoly2(2, (0, 1, 0)))
        assert r.is_zero()

    def test_vanishes_exactly_on_parallel_directions(self):
        rng = np.random.default_rng(0)
        p = HomPoly2(3, tuple(rng.normal(size=4) + 1j * rng.normal(size=4)))
        q = HomPoly2(3, tuple(rng.normal(size=4) + 1j * rng.normal(size=4)))
        r = r_polynomial(p, q)
        for _ in range(10_000):
            z, w = rng.normal(size=2) + 1j * rng.normal(size=2)
            pv, qv = eval_hom(p, (z, w)), eval_hom(q, (z, w))
            det = np.linalg.det(np.array([[pv, qv], [z, w]]))
            assert abs(eval_hom(r, (z, w)) - (-det)) <= 1e-12 * max(1.0, abs(det))


class TestAberth:
    @pytest.mark.parametrize("seed", range(6))
    def test_against_numpy_roots(self, seed):
        rng = np.random.default_rng(seed)
        deg = int(rng.integers(2, 12))
        c = rng.normal(size=deg + 1) + 1j * rng.normal(size=deg + 1)
        ours = np.sort_complex(aberth_roots(c))
        ref = np.sort_complex(np.roots(c[::-1]))
        # match each numpy root to its nearest partner
        for x in ref:
            assert np.min(np.abs(ours - x)) <= 1e-9 * max(1, abs(x))

    def test_residual(self):
        c = [1, -3, 0, 2, 5j]
        for x in aberth_roots(c):
            val = sum(ci * x**i for i, ci in enumerate(c))
            assert abs(val) <= 1e-12 * sum(abs(ci) * abs(x) ** i for i, ci in enumerate(c))


class TestProjRoots:
    def test_f(self):
        assert as_dict(proj_roots(HomPoly2(3, (0, 2, -2, 0)))) == {D10: 1, D01: 1, D11: 1}

    def test_ftilde(self):
        assert as_dict(proj_roots(HomPoly2(3, (0, -1, 0, 1)))) == {D10: 1, D11: 1, D1M: 1}

    def test_monomial_triple(self):
        assert as_dict(proj_roots(HomPoly2(3, (1, 0, 0, 0)))) == {D01: 3}

    def test_dicritical(self):
        with pytest.raises(DicriticalError):
            proj_roots(HomPoly2(3, (0, 0, 0, 0)))

    @pytest.mark.parametrize("roots", [
        [0.3, 0.3, -1j, 2],
        [1 + 1j, 1 + 1j, 1 + 1j, -0.5],
        [0.7, 0.7, 0.7, 0.7, 0.7, -2j],
        [2, 2, -3, -3, 1j, 1j],
    ])
    def test_constructed_multiplicities(self, roots):
        # product of (w - u_k z) over the listed roots
        u_poly = np.poly(roots)[::-1]  # ascending powers of u
        c = tuple(complex(x) for x in u_poly)
        found = proj_roots(HomPoly2(len(c) - 1, c))
        want = {}
        for u in roots:
            v = ProjDirection.of(1, u)
            want[v] = want.get(v, 0) + 1
        got = {}
        for v, m in found:
            match = min(want, key=lambda k: k.distance(v))
            assert match.distance(v) <= 1e-6
            got[match] = got.get(match, 0) + m
        assert got == want

    @pytest.mark.parametrize("seed", range(8))
    def test_random_simple_roots_match_numpy(self, seed):
        rng = np.random.default_rng(100 + seed)
        d = int(rng.integers(2, 9))
        c = tuple(rng.normal(size=d + 1) + 1j * rng.normal(size=d + 1))
        got = proj_roots(HomPoly2(d, c))
        assert sum(m for _, m in got) == d
        inf, u = numpy_proj_roots(c)
        assert inf == 0
        for x in u:
            v = ProjDirection.of(1, x)
            assert min(v.distance(g) for g, _ in got) <= 1e-9
        scale = max(abs(x) for x in c)
        for v, _ in got:
            assert abs(eval_hom(HomPoly2(d, c), (v.alpha, v.beta))) <= 1e-9 * scale


class TestClassifyDirections:
    def test_f(self):
        reps = by_direction(classify_directions(builtin("f")))
        assert set(reps) == {D10, D01, D11}
        assert all(r.multiplicity == 1 for r in reps.values())
        assert reps[D10].lam == -1 and not reps[D10].degenerate
        assert reps[D01].lam == -1 and not reps[D01].degenerate
        assert reps[D11].degenerate and reps[D11].director is None
        assert reps[D10].director == pytest.approx(-2, abs=1e-12)
        assert reps[D01].director == pytest.approx(-2, abs=1e-12)

    def test_ftilde(self):
        reps = by_direction(classify_directions(builtin("ftilde")))
        assert set(reps) == {D10, D11, D1M}
        assert reps[D10].degenerate
        assert not reps[D11].degenerate and not reps[D1M].degenerate

    def test_cubic_second_coordinate(self):
        # r = z^2 w: [0:1] is the double root, [1:0] the simple one
        reps = by_direction(classify_directions(parse_map("(z - z^2, w - w^3)")))
        assert reps[D01].multiplicity == 2 and reps[D01].degenerate
        assert reps[D10].multiplicity == 1 and reps[D10].lam == -1 and not reps[D10].degenerate

    def test_dicritical(self):
        with pytest.raises(DicriticalError):
            classify_directions(parse_map("(z + z^2, w + z*w)"))

    def test_multiplicities_sum(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            d = int(rng.integers(2, 6))
            m = PolyMap2.from_coeffs({d: (tuple(rng.normal(size=d + 1)), tuple(rng.normal(size=d + 1)))})
            assert sum(r.multiplicity for r in classify_directions(m)) == d + 1

    def test_directors_invariant_under_conjugation(self):
        rng = np.random.default_rng(11)
        base = builtin("ftilde")
        ref = {r.direction: r.director for r in classify_directions(base) if not r.degenerate}
        for _ in range(10):
            L = random_linear_change(rng)
            reps = classify_directions(conjugate_linear(base, L))
            for v, dv in ref.items():
                image = ProjDirection.of(*L.apply_direction(v.alpha, v.beta))
                rep = min(reps, key=lambda r: r.direction.distance(image))
                assert rep.direction.distance(image) <= 1e-8
                assert abs(rep.director - dv) <= 1e-8

    def test_json_schema(self):
        doc = json.loads(reports_to_json(classify_directions(builtin("f"))))
        assert [list(d) for d in doc] == [["direction", "multiplicity", "lambda", "degenerate",
                                           "director"]] * 3
        assert doc[0]["direction"] == [1, 0, 0, 0]
        assert doc[1]["director"] is None

    def test_json_seventeen_digits(self):
        # lambda of [1:0] is p(1, 0) = -1/3
        text = reports_to_json(classify_directions(parse_map("(z - z^2/3, w - w^2/3)")))
        assert '"lambda": [-0.33333333333333331, 0]' in text


class TestDirector:
    def test_f(self):
        f = builtin("f")
        assert director(f, D10) == pytest.approx(-2, abs=1e-12)
        assert director(f, D01) == pytest.approx(-2, abs=1e-12)

    def test_ftilde(self):
        assert director(builtin("ftilde"), D11) == pytest.approx(-2, abs=1e-12)
        assert director(builtin("ftilde"), D1M) == pytest.approx(-2, abs=1e-12)

    def test_degenerate(self):
        with pytest.raises(DirectorError, match="degenerate"):
            director(builtin("f"), D11)

    def test_order_three(self):
        m = parse_map("(z - z^3, w + w^3)")
        with pytest.raises(DirectorError, match="order-2"):
            director(m, D10)


class TestDegreewise:
    def test_g(self):
        st = degreewise(builtin("g", 1, 3), D10)
        assert [e[0] for e in st.entries] == [2, 3, 4]
        assert all(e[1] for e in st.entries)
        assert [e[2] for e in st.entries] == [True, True, False]
        assert st.r_plus_1 == 4 and st.lam_r_plus_1 == 1
        assert st.s_truncated == 4 and st.s_reaches_top

    def test_ftilde(self):
        st = degreewise(builtin("ftilde"), D10)
        assert st.r_plus_1 is None and st.s_truncated == 2

    def test_h(self):
        st = degreewise(builtin("h", 0.1), D10)
        assert st.entries[0][2] and not st.entries[1][2]
        assert st.lam_r_plus_1 == pytest.approx(0.1)

    def test_not_characteristic(self):
        with pytest.raises(ValueError):
            degreewise(builtin("f"), ProjDirection.of(1, 0.5))

    def test_stops_being_characteristic(self):
        st = degreewise(parse_map("(x - y^2 + x^2*y, y - x*y + x^3)"), D10)
        assert st.s_truncated == 2 and not st.s_reaches_top

    def test_approach_data(self):
        data = {v: (m, lam) for v, m, lam in approach_data(builtin("h", 0.1))}
        assert data[D10] == (2, pytest.approx(0.1))
        assert data[D11][0] == 1 and data[D1M][0] == 1


class TestBetaBranch:
    def test_minus_one_two(self):
        assert beta_branch(-1, 2) == pytest.approx(2**-0.5, abs=1e-15)

    def test_one_two_absent(self):
        assert beta_branch(1, 2) is None

    def test_one_three(self):
        b = beta_branch(1, 3)
        assert b.real == pytest.approx(3 ** (-1 / 3) * math.cos(math.pi / 3), abs=1e-14)
        assert b**3 == pytest.approx(-1 / 3, abs=1e-14)

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            beta_branch(0, 3)

    def test_presence_pattern(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            a = complex(*rng.normal(size=2))
            if a.imag == 0 and a.real >= 0:
                continue
            assert beta_branch(a, 2) is not None
        for r in range(3, 9):
            for _ in range(20):
                a = complex(*rng.normal(size=2))
                b = beta_branch(a, r)
                assert b is not None and b.real > 0
                assert abs(b**r * (-a * r) - 1) <= 1e-12
        for a in np.linspace(0.01, 10, 50):
            assert beta_branch(a, 2) is None

    def test_choice_is_the_largest_real_part(self):
        for a, r in [(1 + 1j, 5), (-2, 4), (0.3j, 7)]:
            b = beta_branch(a, r)
            c = 1 / (-complex(a) * r)
            roots = [abs(c) ** (1 / r) * cmath.exp(1j * (cmath.phase(c) + 2 * math.pi * k) / r)
                     for k in range(r)]
            assert b.real == pytest.approx(max(x.real for x in roots), abs=1e-14)

    def test_tie_prefers_positive_argument(self):
        # a = 1/4, r = 4: c = -1 has fourth roots at +-45 and +-135 degrees
        b = beta_branch(0.25, 4)
        assert b.imag > 0 and b.real > 0
