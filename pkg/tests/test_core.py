"""Jets, grid fields, kernels and curvature-line geometry against independent oracles."""
import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from liesphere import _accel
from liesphere import fields as F
from liesphere.catalog import curvature_chart
from liesphere.errors import InsufficientDerivativeOrder, PeriodicityError, UnknownCatalogId
from liesphere.fields import Grid, GridField
from liesphere.geometry import chart_from_immersion, principal_curvatures_fd
from liesphere.jet import Jet

x, y = sp.symbols("x y")
finite = st.floats(-1.5, 1.5, allow_nan=False)


def _sympy_derivs(expr, x0, y0, order):
    out = {}
    for i in range(order + 1):
        for j in range(order + 1 - i):
            out[(i, j)] = float(sp.diff(expr, x, i, y, j).subs({x: x0, y: y0}))
    return out


@settings(max_examples=25, deadline=None)
@given(finite, finite)
def test_jet_composite_matches_sympy(x0, y0):
    expr = sp.exp(x * y) * sp.sin(x + 2 * y) / (2 + sp.cos(x - y))
    X, Y = Jet.variables([np.array([x0]), np.array([y0])], 4)
    j = F.exp(X * Y) * F.sin(X + 2 * Y) / (2 + F.cos(X - Y))
    for (i, k), ref in _sympy_derivs(expr, x0, y0, 4).items():
        assert j.d(i, k)[0] == pytest.approx(ref, rel=1e-10, abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-2, 2, allow_nan=False), min_size=6, max_size=6), finite, finite)
def test_jet_polynomial_is_exact(c, x0, y0):
    expr = c[0] + c[1] * x + c[2] * y + c[3] * x * y + c[4] * x ** 3 + c[5] * y ** 2 * x
    X, Y = Jet.variables([np.array([x0]), np.array([y0])], 3)
    j = c[0] + c[1] * X + c[2] * Y + c[3] * X * Y + c[4] * X ** 3 + c[5] * Y ** 2 * X
    for (i, k), ref in _sympy_derivs(expr, x0, y0, 3).items():
        assert j.d(i, k)[0] == pytest.approx(ref, rel=1e-12, abs=1e-12)


def test_jet_order_budget():
    X, _ = Jet.variables([np.zeros(2), np.zeros(2)], 1)
    with pytest.raises(InsufficientDerivativeOrder):
        X.diff(0).diff(0)
    with pytest.raises(InsufficientDerivativeOrder):
        X.d(2, 0)


def test_gridfield_fourth_order_convergence():
    errs = []
    for n in (17, 33, 65):
        g = Grid((0.0, 0.0), (1.0, 1.0), (n, n))
        X, Y = g.mesh()
        f = GridField(np.sin(2 * X) * np.exp(Y), g)
        errs.append(np.max(np.abs(f.diff(0).data - 2 * np.cos(2 * X) * np.exp(Y))))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 3.7)


def test_gridfield_periodic_spectral_like_accuracy():
    g = Grid((0.0, 0.0), (2 * np.pi, 1.0), (64, 9), (True, False))
    X, Y = g.mesh()
    f = GridField(np.cos(X) * (1 + Y), g)
    assert np.max(np.abs(f.diff(0).data + np.sin(X) * (1 + Y))) < 1e-5
    with pytest.raises(InsufficientDerivativeOrder):
        GridField(X, g, order=0).diff(0)


def test_check_periodic():
    g = Grid((0.0, 0.0), (2 * np.pi, 2 * np.pi), (16, 16), (True, True))
    F.check_periodic(lambda a, b: np.cos(a + b), g)
    with pytest.raises(PeriodicityError):
        F.check_periodic(lambda a, b: a * np.sin(b), g)


@pytest.mark.skipif(not _accel._HAVE_NUMBA, reason="numba not installed")
@pytest.mark.parametrize("periodic", [True, False])
def test_fd1_numba_matches_numpy(periodic):
    rng = np.random.default_rng(0)
    f = rng.standard_normal((7, 40))
    for axis in (0, 1):
        a = _accel.fd1(f, 0.1, axis, periodic, use_numba=True)
        b = _accel.fd1(f, 0.1, axis, periodic, use_numba=False)
        assert np.allclose(a, b, rtol=1e-14, atol=1e-12)


@pytest.mark.skipif(not _accel._HAVE_NUMBA, reason="numba not installed")
def test_jet_mul_numba_matches_numpy():
    rng = np.random.default_rng(1)
    a, b = rng.standard_normal((2, 10, 50))
    ia, ib = rng.integers(0, 10, (2, 30))
    ic = rng.integers(0, 6, 30)
    r1 = _accel.jet_mul(a, b, ia, ib, ic, 6, use_numba=True)
    r2 = _accel.jet_mul(a, b, ia, ib, ic, 6, use_numba=False)
    assert np.allclose(r1, r2, rtol=1e-13, atol=1e-13)


def test_torus_curvatures_match_sympy():
    R, r = 2.0, 1.0
    t, p = sp.symbols("t p")
    X = sp.Matrix([(R + r * sp.cos(t)) * sp.cos(p), (R + r * sp.cos(t)) * sp.sin(p), r * sp.sin(t)])
    Xt, Xp = X.diff(t), X.diff(p)
    n = Xt.cross(Xp)
    n = n / sp.sqrt(n.dot(n))
    E, G = Xt.dot(Xt), Xp.dot(Xp)
    L, N = X.diff(t, 2).dot(n), X.diff(p, 2).dot(n)
    ch = curvature_chart("torus", {"R": R, "r": r, "shape": (8, 8)})
    v = ch.values()
    T, P = ch.grid.mesh()
    k_t = sp.lambdify((t, p), sp.simplify(L / E))(T, P)
    k_p = sp.lambdify((t, p), sp.simplify(N / G))(T, P)
    # orientation of the normal is a convention: compare up to one global sign
    s = np.sign(v["k1"].flat[0] / k_t.flat[0])
    assert np.allclose(v["k1"], s * k_t, atol=1e-12)
    assert np.allclose(v["k2"], s * k_p, atol=1e-12)


def test_chart_from_immersion_matches_finite_differences():
    ch = curvature_chart("ellipsoid_confocal")
    v = ch.values()
    pts = ch.grid.mesh()
    i, j = ch.grid.shape[0] // 2, ch.grid.shape[1] // 3
    k_fd = principal_curvatures_fd(ch.immersion, (pts[0][i, j], pts[1][i, j]))
    assert sorted(np.abs(k_fd)) == pytest.approx(sorted([abs(v["k1"][i, j]), abs(v["k2"][i, j])]),
                                                 rel=1e-6)
    rebuilt = chart_from_immersion(ch.immersion, ch.grid).values()
    assert np.allclose(np.sort(np.abs([rebuilt["k1"], rebuilt["k2"]]), 0),
                       np.sort(np.abs([v["k1"], v["k2"]]), 0), rtol=1e-9)


def test_unknown_catalog_id():
    with pytest.raises(UnknownCatalogId):
        curvature_chart("klein_bottle")


def test_grid_spacing_and_refinement():
    g = Grid((0.0, 0.0), (1.0, 2 * math.pi), (5, 8), (False, True))
    assert g.h == pytest.approx((0.25, 2 * math.pi / 8))
    assert g.refined().shape == (9, 16)
