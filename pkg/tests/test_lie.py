"""Lie sphere transformations, invariants and the cyclidic equations."""
import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from liesphere import cyclidic as C
from liesphere import fields as F
from liesphere import invariants as inv
from liesphere import transform as T
from liesphere.catalog import curvature_chart
from liesphere.errors import (FocalSingularity, InsufficientDerivativeOrder, MissingField,
                              UmbilicInDomain, ValidationError)
from liesphere.fields import AnalyticField, Grid
from liesphere.jet import Jet


@settings(max_examples=20, deadline=None)
@given(st.floats(-0.3, 0.3), st.floats(-0.3, 0.3))
def test_normal_shift_composes_additively(a, b):
    tor = curvature_chart("torus", {"shape": (8, 8)})
    two = T.normal_shift(T.normal_shift(tor, a), b).values()
    one = T.normal_shift(tor, a + b).values()
    for key in ("k1", "k2", "g11", "g22"):
        assert np.allclose(two[key], one[key], rtol=1e-12, atol=1e-12)


def test_normal_shift_focal_singularity():
    tor = curvature_chart("torus", {"R": 2.0, "r": 1.0})
    with pytest.raises(FocalSingularity):
        T.normal_shift(tor, 1.0)


def test_sphere_requires_explicit_umbilic_flag():
    with pytest.raises(UmbilicInDomain):
        curvature_chart("sphere")


def test_element_validation():
    with pytest.raises(ValidationError):
        T.LieSphereElement("inversion", {"radius": -1.0})
    with pytest.raises(ValidationError):
        T.LieSphereElement("rotation", {"matrix": [[1, 1, 0], [0, 1, 0], [0, 0, 1]]})
    with pytest.raises(ValidationError):
        T.LieSphereElement("shear")


def test_random_elements_respect_preconditions():
    ch = curvature_chart("ellipsoid_confocal")
    rng = np.random.default_rng(3)
    bary, diam = T.surface_extent(ch)
    for e in T.random_elements(ch, 10, rng, "inversion"):
        dist = np.linalg.norm(e.params["center"] - bary)
        assert 2.0 * diam <= dist <= 5.0 * diam
    dmin = T.min_focal_distance(ch)
    for e in T.random_elements(ch, 10, rng, "normal_shift"):
        assert abs(e.params["a"]) <= 0.5 * dmin


def test_euclidean_motions_leave_invariants_fixed():
    ch = curvature_chart("minimal_weierstrass")
    rng = np.random.default_rng(4)
    elems = [e for kind in ("rotation", "translation", "dilation")
             for e in T.random_elements(ch, 2, rng, kind)]
    rep = T.invariance_report(ch, elems, ["eq1.1", "eq1.2-class", "eq4.3-curv"])
    assert all(rep["passed"].values())


def test_weight_two_omega_is_invariant_printed_weight_is_not():
    ch = curvature_chart("minimal_weierstrass")
    elems = T.random_elements(ch, 3, np.random.default_rng(1), "normal_shift")
    dev = T.invariance_report(ch, elems, ["eq4.3-dOmega", "eq4.3-dOmega-printed"])["max_deviation"]
    assert dev["eq4.3-dOmega"] < 1e-10
    assert dev["eq4.3-dOmega-printed"] > 1e-2


def test_web_curvature_equals_one_third_domega():
    fm = inv.lie_forms(curvature_chart("minimal_weierstrass"))
    scale = np.max(np.abs(fm.dOmega))
    assert np.max(np.abs(fm.dOmega - 3.0 * fm.curv)) < 1e-10 * max(scale, 1.0)


def test_willmore_is_conformal_but_not_laguerre_invariant():
    ch = curvature_chart("ellipsoid_confocal")
    rng = np.random.default_rng(1)
    inversions = T.random_elements(ch, 3, rng, "inversion")
    shifts = T.random_elements(ch, 3, rng, "normal_shift")
    assert T.invariance_report(ch, inversions, ["willmore"])["max_deviation"]["willmore"] < 1e-10
    assert T.invariance_report(ch, shifts, ["willmore"])["max_deviation"]["willmore"] > 1e-3


def test_unknown_invariance_target():
    with pytest.raises(ValidationError):
        T.invariance_report(curvature_chart("torus"), [], ["eq9.9"])


@pytest.mark.parametrize("cid,label", [("torus", "dupin"), ("minimal_weierstrass", "generic")])
def test_classify_catalog(cid, label):
    assert C.classify(curvature_chart(cid))[0] == label


def test_enneper_chart_is_cyclidic_and_solves_the_system():
    ch = C.enneper_cyclidic_chart()
    assert C.classify(ch)[0] == "diagonally_cyclidic"
    fl = ch.fields(4)
    rho = C.cyclidic_rho(ch, 4)
    rep = C.residual("eq4.4", {"k1": fl["k1"], "k2": fl["k2"], "rho": rho})
    assert rep.max < 1e-10


def _analytic(fn, grid, order):
    return AnalyticField(fn).jet(grid.mesh(), order)


GRID = Grid((0.1, 0.2), (0.6, 0.9), (7, 7))


def test_exact_solutions_with_jets():
    w = lambda x, y: 1 + x * x + y * y
    u = _analytic(lambda x, y: 4.0 / w(x, y), GRID, 4)
    assert C.residual("calapso", {"u": u}).max < 1e-12
    v = _analytic(lambda x, y: 4.0 / (1 + 2 * x * x + 2 * y * y), GRID, 4)
    assert C.residual("ds2", {"u": v}).max < 1e-12
    p = _analytic(lambda x, y: F.exp((x + y) / 2) / (F.exp(x) + F.exp(y)), GRID, 2)
    assert C.residual("liouville", {"p": p}).max < 1e-12
    k = _analytic(lambda x, y: 2.0 / w(x, y) ** 2, GRID, 2)
    rho = _analytic(lambda x, y: F.log(w(x, y)), GRID, 2)
    assert C.residual("eq4.5", {"k1": k, "k2": -k, "rho": rho}).max < 1e-12


def test_liouville_oracle_sympy():
    x, y = sp.symbols("x y")
    p = sp.exp((x + y) / 2) / (sp.exp(x) + sp.exp(y))
    assert sp.simplify(sp.diff(sp.log(p), x, y) - p ** 2) == 0


def test_residual_errors():
    u = _analytic(lambda x, y: 1.0 + x, GRID, 1)
    with pytest.raises(InsufficientDerivativeOrder):
        C.residual("calapso", {"u": u})
    with pytest.raises(MissingField):
        C.residual("eq4.5", {"k1": u})


def test_constant_tzitzeica_solution_depends_on_c():
    one = _analytic(lambda x, y: 1.0 + 0 * x, GRID, 2)
    assert C.residual("tzitzeica", {"U": one}, c=1.0).max == 0.0
    assert C.residual("tzitzeica", {"U": one}, c=2.0).max == pytest.approx(1.0)


def test_wave_solves_tzitzeica_and_mvn():
    wave, grid = C.travelling_wave(1.0, (1.2, 0.0), (0.0, 0.5), 17)
    assert C.residual("tzitzeica", {"U": wave.jet(grid.mesh(), 2)}).max < 1e-8
    assert C.MvnFieldSet(wave).residual(grid).max < 1e-8


def test_calapso_ds2_factor():
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1, 1, (2, 20))
    rc, rd = C.calapso_ds2_equivalence(lambda a, b: 2 + F.sin(a) * F.cos(2 * b), pts)
    assert np.max(np.abs(rc)) > 1e-3
    assert np.allclose(rc, rd, rtol=1e-12, atol=1e-12)


def test_jet_variables_drive_tag_orders():
    for tag, order in C.TAG_ORDER.items():
        assert order >= 2, tag
    X, _ = Jet.variables([np.zeros(1), np.zeros(1)], 3)
    assert F.order_of(X) == 3
