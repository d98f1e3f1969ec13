import math

import numpy as np
import pytest

from tangentmap import kernels
from tangentmap.orbit import OrbitParams, classify_many, trajectory
from tangentmap.parser import builtin

try:
    kernels.get_backend("cython")
    HAVE_COMPILED = True
except ImportError:
    HAVE_COMPILED = False

needs_compiled = pytest.mark.skipif(not HAVE_COMPILED, reason="compiled kernels not built")


def same(a, b):
    """Bitwise equality of float arrays, NaNs included."""
    a, b = np.asarray(a), np.asarray(b)
    return a.shape == b.shape and a.tobytes() == b.tobytes()


def batch(m, z, w, params, backend):
    return classify_many(m, z, w, params, backend=backend)


CASES = [
    ("f", builtin("f"), OrbitParams(max_iter=3000), (-0.8, 1.6), 0.3),
    ("g", builtin("g", 1, 3), OrbitParams(max_iter=3000, line=(0, 1)), (-0.3, 0.3), 0.3),
    ("h", builtin("h", 0.1), OrbitParams(max_iter=3000, line=(0, 1)), (-0.2, 0.2), 0.2),
    ("gtilde", builtin("gtilde", -0.1, 2), OrbitParams(max_iter=3000), (-0.8, 1.6), 0.1),
    ("f-no-fatou", builtin("f"), OrbitParams(max_iter=3000, fatou=False), (-0.8, 1.6), 0.0),
]


@needs_compiled
@pytest.mark.parametrize("name,m,params,span,im", CASES, ids=[c[0] for c in CASES])
def test_classification_bit_identical(name, m, params, span, im):
    rng = np.random.default_rng(hash(name) % 2**32)
    n = 60
    z = rng.uniform(*span, n) + 1j * rng.uniform(-im, im, n)
    w = rng.uniform(*span, n) + 1j * rng.uniform(-im, im, n)
    a = batch(m, z, w, params, "python")
    b = batch(m, z, w, params, "cython")
    assert same(a.cls, b.cls)
    assert same(a.iterations, b.iterations)
    assert same(a.final_z, b.final_z) and same(a.final_w, b.final_w)
    assert same(a.direction, b.direction)
    assert same(a.sup_ngap, b.sup_ngap)
    assert same(a.monotone, b.monotone)


@needs_compiled
def test_fatou_decisions_identical():
    # the axis petal of h and the axis of f exercise the approach test
    h = builtin("h", 0.1)
    params = OrbitParams(max_iter=20_000, line=(0, 1))
    z = np.array([0.15j, 0.1j, -0.12j, 0.05 + 0.1j])
    w = np.zeros(4, complex)
    a = batch(h, z, w, params, "python")
    b = batch(h, z, w, params, "cython")
    assert same(a.cls, b.cls) and same(a.iterations, b.iterations)
    assert a.cls[0] == kernels.CLS_ORIGIN


@needs_compiled
@pytest.mark.parametrize("m,start", [(builtin("f"), (0.3 + 0.1j, 0.2)),
                                     (builtin("g", 1 + 1j, 4), (0.1, 0.01j)),
                                     (builtin("f"), (3, -3))])
def test_trajectories_bit_identical(m, start):
    a = trajectory(m, start, 500, stride=7, backend="python")
    b = trajectory(m, start, 500, stride=7, backend="cython")
    assert same(a.z, b.z) and same(a.w, b.w) and a.aborted_at == b.aborted_at


@needs_compiled
def test_g_family_logs_identical():
    ns = np.array([0, 10, 100, 1000, 5000], dtype=np.int64)
    beta = complex(3 ** (-1 / 3) * math.cos(math.pi / 3), 3 ** (-1 / 3) * math.sin(math.pi / 3))
    x0 = 0.1 * beta / abs(beta)
    args = (1.0, 0.0, 3, x0.real, x0.imag, 0.005, 0.0, 5000, ns, 5.0)
    pa = kernels.get_backend("python").g_family_logs(*args)
    pb = kernels.get_backend("cython").g_family_logs(*args)
    for u, v in zip(pa, pb):
        if isinstance(u, np.ndarray):
            assert same(u, v)
        else:
            assert u == v


def test_backend_selection():
    assert kernels.get_backend("python").BACKEND == "python"
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")
    assert kernels.BACKEND in ("python", "cython")
