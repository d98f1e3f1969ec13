import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from tangentmap.chardir import ProjDirection, classify_directions, proj_roots
from tangentmap.orbit import OrbitParams, classify
from tangentmap.parser import builtin, format_map, parse_map
from tangentmap.poly import HomPoly2, LinearChange, PolyMap2, conjugate_linear, eval_map
from tangentmap.render import Window

F = builtin("f")

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)
cplx = st.builds(complex, finite, finite)
small = st.floats(-3, 3, allow_nan=False)
unit = st.floats(1e-6, 1 - 1e-6)


@st.composite
def poly_maps(draw, max_degree=6):
    degs = draw(st.lists(st.integers(2, max_degree), min_size=1, max_size=3, unique=True))
    comps = {}
    for d in degs:
        p = tuple(draw(st.lists(cplx, min_size=d + 1, max_size=d + 1)))
        q = tuple(draw(st.lists(cplx, min_size=d + 1, max_size=d + 1)))
        comps[d] = (p, q)
    assume(any(c != 0 for p, q in comps.values() for c in p + q))
    variables = draw(st.sampled_from([("z", "w"), ("x", "y")]))
    return PolyMap2.from_coeffs(comps, variables)


@settings(max_examples=200, deadline=None)
@given(poly_maps())
def test_format_parse_round_trip(m):
    back = parse_map(format_map(m))
    assert back.variables == m.variables
    assert back.degrees == m.degrees
    for j in m.degrees:
        assert back.component(j)[0].coeffs == m.component(j)[0].coeffs
        assert back.component(j)[1].coeffs == m.component(j)[1].coeffs


@settings(max_examples=300, deadline=None)
@given(unit, unit)
def test_triangle_is_invariant(a, b):
    assume(a + b < 1 - 1e-9)
    p = eval_map(F, (a, b))
    assert p.z.real > 0 and p.w.real > 0
    assert p.z.real + p.w.real <= (a + b) * (1 + 4 * np.finfo(float).eps)


@settings(max_examples=300, deadline=None)
@given(unit, unit)
def test_triangle_gap_shrinks_like_one_over_n(a, b):
    # keep the gap well above rounding so that 1/|z - w| resolves +n
    assume(a + b < 1 - 1e-9 and abs(a - b) > 1e-4)
    z, w = complex(a), complex(b)
    inv0 = 1 / abs(z - w)
    for n in range(1, 40):
        z, w = eval_map(F, (z, w))
        if z == w:
            break
        assert 1 / abs(z - w) > inv0 + n * (1 - 1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(small, small), min_size=1, max_size=4),
       st.lists(st.integers(1, 3), min_size=4, max_size=4))
def test_planted_roots_recovered(roots, mults):
    # well separated roots planted with multiplicity; a k-fold root is only
    # determined to about eps^(1/k), so roots also keep clear of [1:0] unless exactly there
    roots = [complex(*r) for r in roots]
    assume(all(u == 0 or abs(u) > 0.3 for u in roots))
    for i, u in enumerate(roots):
        for v in roots[:i]:
            assume(abs(u - v) > 0.3)
    poly = np.array([1 + 0j])
    for u, k in zip(roots, mults):
        for _ in range(k):
            poly = np.convolve(poly, [1, -u])
    # coefficient i multiplies alpha^(d-i) beta^i, so u = beta/alpha and the root is [1:u]
    d = len(poly) - 1
    hp = HomPoly2(d, tuple(complex(c) for c in poly[::-1]))
    found = proj_roots(hp)
    assert sum(k for _, k in found) == d
    for u, k in zip(roots, mults):
        target = ProjDirection.of(1, u)
        match = [kk for dr, kk in found if dr.distance(target) < 1e-6]
        assert match == [k]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-2, 2, allow_nan=False), min_size=4, max_size=4))
def test_directions_follow_conjugation(entries):
    mat = ((complex(entries[0]), complex(entries[1])), (complex(entries[2]), complex(entries[3])))
    det = mat[0][0] * mat[1][1] - mat[0][1] * mat[1][0]
    assume(abs(det) > 0.3)
    L = LinearChange(mat)
    base = classify_directions(F)
    moved = classify_directions(conjugate_linear(F, L))
    assert len(moved) == len(base)
    for rep in base:
        img = ProjDirection.of(*L.apply_direction(rep.direction.alpha, rep.direction.beta))
        near = [r for r in moved if r.direction.distance(img) < 1e-8]
        assert len(near) == 1
        assert near[0].multiplicity == rep.multiplicity
        assert near[0].degenerate == rep.degenerate


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 300), st.integers(1, 300), st.data())
def test_pixel_centres_round_trip(width, height, data):
    win = Window.from_bounds(-0.8, 1.6, -0.8, 1.6, width, height)
    i = data.draw(st.integers(0, width - 1))
    j = data.draw(st.integers(0, height - 1))
    assert win.pixel_of(win.column_re()[i], win.row_re()[j]) == (i, j)


@settings(max_examples=100, deadline=None)
@given(st.floats(-0.8, 1.6), st.floats(-0.8, 1.6))
def test_swap_symmetry(a, b):
    # f commutes with (z, w) -> (w, z); rounding differs between the two
    # components, so only the class is compared
    p = classify(F, (a, b), OrbitParams(max_iter=500))
    q = classify(F, (b, a), OrbitParams(max_iter=500))
    assert p.cls is q.cls


@settings(max_examples=100, deadline=None)
@given(st.builds(complex, st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)))
def test_diagonal_points_are_fixed(c):
    assert tuple(eval_map(F, (c, c))) == (c, c)
