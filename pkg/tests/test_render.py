import numpy as np
import pytest

from tangentmap.oracle import PrecisionOracle
from tangentmap.orbit import OrbitClass, OrbitParams, classify, classify_many
from tangentmap.parser import builtin
from tangentmap.poly import SUM_DIFF, conjugate_linear
from tangentmap.render import (_CODES, OVERLAY_COLOR, PALETTE, BasinGrid, Window, grid_stats, grid_to_ppm,
                               probe, render_grid, stats_csv)

F = builtin("f")
FIG = Window.from_bounds(-0.8, 1.6, -0.8, 1.6, 120, 120)


def one_pixel(cls: OrbitClass, iterations: int, max_iter: int = 100) -> BasinGrid:
    win = Window(0, 0, 1, 1, 1, 1)
    return BasinGrid(win, np.array([[_CODES[cls]]], dtype=np.int8),
                     np.array([[iterations]], dtype=np.int64), max_iter)


class TestWindow:
    def test_cell_centres(self):
        win = Window.from_bounds(0, 2, 0, 1, 4, 2)
        assert list(win.column_re()) == [0.25, 0.75, 1.25, 1.75]
        assert list(win.row_re()) == [0.75, 0.25]
        z, w = win.points()
        assert z[1] == 0.75 and w[1] == 0.75 and w[4] == 0.25

    def test_slice(self):
        z, w = Window(0, 0, 1, 1, 2, 2, imz=0.1, imw=-0.2).points()
        assert np.all(z.imag == 0.1) and np.all(w.imag == -0.2)

    def test_pixel_of(self):
        win = Window.from_bounds(-0.8, 1.6, -0.8, 1.6, 600, 600)
        i, j = win.pixel_of(0.301, 0.201)
        assert (i, j) == (275, 349)
        assert abs(win.column_re()[i] - 0.301) <= 0.002 and abs(win.row_re()[j] - 0.201) <= 0.002
        with pytest.raises(ValueError):
            win.pixel_of(2, 0)

    @pytest.mark.parametrize("kw", [dict(ex=0), dict(ey=-1), dict(width=0), dict(height=1.5)])
    def test_invalid(self, kw):
        args = dict(cx=0, cy=0, ex=1, ey=1, width=2, height=2)
        args.update(kw)
        with pytest.raises(ValueError):
            Window(**args)


class TestPpm:
    def test_unshaded_line(self):
        data = grid_to_ppm(one_pixel(OrbitClass.ConvergesToLineNotOrigin, 0))
        assert data == b"P6\n1 1\n255\n" + bytes([0, 0, 255])

    def test_fully_shaded_escape(self):
        data = grid_to_ppm(one_pixel(OrbitClass.Escapes, 100))
        assert data[-3:] == bytes([66, 12, 12])

    def test_shade_floor(self):
        # s = 0.3 + 0.7 * 0.5 = 0.65; 255*0.65 = 165.75, 215*0.65 = 139.75
        data = grid_to_ppm(one_pixel(OrbitClass.ConvergesToOrigin, 50))
        assert data[-3:] == bytes([165, 139, 0])

    def test_header(self):
        win = Window(0, 0, 1, 1, 600, 600)
        grid = BasinGrid(win, np.zeros((600, 600), np.int8), np.zeros((600, 600), np.int64), 10)
        data = grid_to_ppm(grid)
        assert data.startswith(b"P6\n600 600\n255\n")
        assert len(data) == len(b"P6\n600 600\n255\n") + 3 * 600 * 600

    def test_palette(self):
        assert PALETTE[OrbitClass.ConvergesToOrigin] == (255, 215, 0)
        assert PALETTE[OrbitClass.Indeterminate] == (245, 200, 200)


class TestStats:
    def test_all_escape(self):
        win = Window(5, 5, 1, 1, 3, 2)
        grid = render_grid(F, win)
        st = grid_stats(grid)
        assert st[OrbitClass.Escapes] == (6, 1.0)
        assert stats_csv(grid).splitlines() == ["class,count,fraction", "origin,0,0", "line,0,0",
                                                "escape,6,1", "indeterminate,0,0"]

    def test_fractions_sum_to_one(self):
        st = grid_stats(render_grid(F, FIG))
        assert sum(c for c, _ in st.values()) == FIG.width * FIG.height
        assert sum(f for _, f in st.values()) == pytest.approx(1, abs=1e-15)


class TestRender:
    def test_one_by_one(self):
        grid = render_grid(F, Window(0.3, 0.2, 0.01, 0.01, 1, 1))
        assert grid.class_at(0, 0) is OrbitClass.ConvergesToLineNotOrigin

    def test_matches_pointwise_classify(self):
        grid = render_grid(F, Window.from_bounds(-0.8, 1.6, -0.8, 1.6, 12, 12))
        z, w = grid.window.points()
        for k in range(0, 144, 7):
            assert grid.cls.ravel()[k] == _CODES[classify(F, (z[k], w[k])).cls]

    def test_thread_independent(self):
        ref = grid_to_ppm(render_grid(F, FIG, threads=1))
        for t in (2, 3, 8):
            assert grid_to_ppm(render_grid(F, FIG, threads=t)) == ref

    def test_backends_agree(self):
        win = Window.from_bounds(-0.8, 1.6, -0.8, 1.6, 24, 24)
        a = render_grid(F, win, backend="python")
        b = render_grid(F, win)
        assert np.array_equal(a.cls, b.cls) and np.array_equal(a.iterations, b.iterations)

    def test_diagonal_pixels_settle_at_once(self):
        grid = render_grid(F, Window.from_bounds(-0.8, 1.6, -0.8, 1.6, 600, 600),
                           OrbitParams(max_iter=64))
        z, w = grid.window.points()
        on = (z == w).reshape(grid.cls.shape)
        assert np.count_nonzero(on) > 100
        assert np.all(grid.iterations[on] <= 1)

    def test_basin_structure(self):
        # the origin basin meets the real slice only in the segment (0, 1) x {0},
        # which no pixel centre of this grid lies on
        win = Window.from_bounds(-0.8, 1.6, -0.8, 1.6, 600, 600)
        grid = render_grid(F, win)
        assert grid.class_at(*win.pixel_of(0.3, 0.2)) is OrbitClass.ConvergesToLineNotOrigin
        assert grid.class_at(*win.pixel_of(1.5, -0.5)) is OrbitClass.Escapes
        st = grid_stats(grid)
        assert min(st[OrbitClass.ConvergesToLineNotOrigin][0], st[OrbitClass.Escapes][0]) > 100_000
        assert st[OrbitClass.ConvergesToOrigin][0] < 1000

    def test_gtilde_has_origin_region(self):
        m = builtin("gtilde", -0.1, 2)
        grid = render_grid(m, Window.from_bounds(-0.8, 1.6, -0.8, 1.6, 60, 60),
                           OrbitParams(max_iter=20_000))
        st = grid_stats(grid)
        assert st[OrbitClass.ConvergesToOrigin][0] >= 10
        assert probe(m, [(0.3, 0.1)], OrbitParams(max_iter=20_000))[0].cls is OrbitClass.ConvergesToOrigin

    def test_overlay(self):
        win = Window.from_bounds(-0.8, 1.6, -0.8, 1.6, 60, 60)
        grid = render_grid(F, win, overlay_preimages=True)
        assert grid.overlay.any()
        data = grid_to_ppm(grid)[len(b"P6\n60 60\n255\n"):]
        rgb = np.frombuffer(data, np.uint8).reshape(60, 60, 3)
        assert np.all(rgb[grid.overlay] == OVERLAY_COLOR)
        assert grid_to_ppm(render_grid(F, win)) != grid_to_ppm(grid)

    def test_probe_uses_exact_points(self):
        out = probe(F, [(0.3, 0.2), (0.5, 0), (2, -1), (0.25, 0.25)])
        assert [o.cls.tag for o in out] == ["line", "origin", "escape", "line"]


def test_chart_consistency():
    rng = np.random.default_rng(99)
    ft = conjugate_linear(F, SUM_DIFF)
    p, q = OrbitParams(), OrbitParams().in_sum_diff_chart()
    z = rng.uniform(-0.8, 1.6, 1000) + 1j * rng.uniform(-0.2, 0.2, 1000)
    w = rng.uniform(-0.8, 1.6, 1000) + 1j * rng.uniform(-0.2, 0.2, 1000)
    a = classify_many(F, z, w, p, threads=0).cls
    b = classify_many(ft, z + w, z - w, q, threads=0).cls
    undecided = _CODES[OrbitClass.Indeterminate]
    decided = (a != undecided) & (b != undecided)
    assert np.count_nonzero(decided) > 900
    assert np.count_nonzero(a[decided] != b[decided]) == 0


@pytest.mark.slow
def test_line_fraction_against_finer_sweep():
    win = Window.from_bounds(-0.8, 1.6, -0.8, 1.6, 600, 600)
    base = OrbitParams()
    fine = OrbitParams(max_iter=4 * base.max_iter, origin_eps=base.origin_eps / 100,
                       line_eps=base.line_eps / 100)
    a = grid_stats(render_grid(F, win, base))[OrbitClass.ConvergesToLineNotOrigin][1]
    b = grid_stats(render_grid(F, win, fine))[OrbitClass.ConvergesToLineNotOrigin][1]
    assert abs(a - b) <= 0.01


def test_probe_pixels_match_oracle():
    win = Window.from_bounds(-0.8, 1.6, -0.8, 1.6, 600, 600)
    oracle = PrecisionOracle(256)
    z, w = win.points()
    rng = np.random.default_rng(5)
    for k in rng.choice(len(z), 6, replace=False):
        fast = classify(F, (z[k], w[k]))
        slow = oracle.classify(F, (z[k], w[k]))
        assert fast.cls is slow.cls
