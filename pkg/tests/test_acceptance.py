"""Acceptance suite: one test and one summary line per criterion."""
import math
import time

import numpy as np
import pytest
import sympy as sp
from scipy import integrate

from liesphere import cyclidic as C
from liesphere import ds_flow as DS
from liesphere import fields as F
from liesphere import hydro as H
from liesphere import invariants as inv
from liesphere import transform as T
from liesphere.catalog import curvature_chart
from liesphere.errors import IncompatibleData
from liesphere.fields import Grid, GridField

from convergence_cases import RESIDUAL_CASES, convergence_orders


def test_c01_lie_sphere_invariance(criterion):
    targets = ["eq1.1", "eq1.2-class", "eq4.3-curv"]
    t0 = time.perf_counter()
    worst = {}
    for cid in ("ellipsoid_confocal", "minimal_weierstrass"):
        chart = curvature_chart(cid)
        rng = np.random.default_rng(2024)
        elems = (T.random_elements(chart, 20, rng, "inversion")
                 + T.random_elements(chart, 20, rng, "normal_shift"))
        assert len(elems) == 40
        rep = T.invariance_report(chart, elems, targets, tol=1e-6)
        worst[cid] = max(rep["max_deviation"].values())
    elapsed = time.perf_counter() - t0
    ok = worst["ellipsoid_confocal"] < 1e-6 and worst["minimal_weierstrass"] < 1e-6 and elapsed < 60
    criterion(1, ok, f"ellipsoid max rel dev {worst['ellipsoid_confocal']:.2e}, "
                     f"minimal_weierstrass {worst['minimal_weierstrass']:.2e} (< 1e-6), "
                     f"{elapsed:.1f} s (< 60 s)")
    assert ok


def test_c02_dupin_torus(criterion):
    chart = curvature_chart("torus")
    fm = inv.lie_forms(chart)
    cub = max(np.max(np.abs(fm.cubic1)), np.max(np.abs(fm.cubic3)))
    shifted = T.normal_shift(chart, 0.25)
    fs = inv.lie_forms(shifted)
    cub_s = max(np.max(np.abs(fs.cubic1)), np.max(np.abs(fs.cubic3)))
    labels = (C.classify(chart)[0], C.classify(shifted)[0])
    ok = cub < 1e-10 and cub_s < 1e-10 and labels == ("dupin", "dupin")
    criterion(2, ok, f"max|cubic| {cub:.1e}, after shift {cub_s:.1e} (< 1e-10), labels {labels}")
    assert ok


def test_c03_willmore_torus(criterion):
    R, r = math.sqrt(2.0), 1.0
    chart = curvature_chart("torus", {"R": R, "r": r, "shape": (64, 64)})
    val = inv.functionals(chart, "willmore")
    # quadrature oracle: (k1 - k2)^2 dA on the parametrized torus
    def dens(t, p):
        k2 = math.cos(t) / (R + r * math.cos(t))
        return (1.0 / r - k2) ** 2 * r * (R + r * math.cos(t))
    exact, _ = integrate.dblquad(dens, 0.0, 2 * math.pi, 0.0, 2 * math.pi, epsabs=1e-12, epsrel=1e-12)
    rel = abs(val - 8 * math.pi ** 2) / (8 * math.pi ** 2)
    ok = rel < 1e-6 and abs(exact - 8 * math.pi ** 2) < 1e-9
    criterion(3, ok, f"W = {val:.12f}, 8 pi^2 = {8 * math.pi ** 2:.12f}, rel {rel:.1e} (< 1e-6); "
                     f"quadrature {exact:.12f}")
    assert ok


def test_c04_normal_shift_law(criterion):
    chart = curvature_chart("sphere", {"allow_umbilic": True})
    sh = T.normal_shift(chart, 0.5)
    k = sh.values()
    exact = bool(np.all(k["k1"] == 2.0) and np.all(k["k2"] == 2.0))
    # additivity: symbolic identity, then numerically on a generic chart
    kk, a, b = sp.symbols("k a b")
    once = kk / (1 - a * kk)
    twice = once / (1 - b * once)
    sym_ok = sp.simplify(twice - kk / (1 - (a + b) * kk)) == 0
    sym_g = sp.simplify((1 - a * kk) ** 2 * (1 - b * once) ** 2 - (1 - (a + b) * kk) ** 2) == 0
    tor = curvature_chart("torus")
    v2 = T.normal_shift(T.normal_shift(tor, 0.1), 0.15).values()
    v1 = T.normal_shift(tor, 0.25).values()
    num = max(float(np.max(np.abs(v2[f] - v1[f]) / np.maximum(np.abs(v1[f]), 1.0))) for f in v1)
    ok = exact and sym_ok and sym_g and num < 1e-14
    criterion(4, ok, f"k' == 2 exactly: {exact}; additivity symbolic: {sym_ok and sym_g}, "
                     f"numeric {num:.1e}")
    assert ok


def test_c05_stationary_mvn(criterion):
    const = C.MvnFieldSet(1.0).residual(Grid((0, 0), (1, 1), (9, 9)))
    const_res = max([const.max] + [float(np.max(np.abs(v))) for v in const.constraints.values()])
    wave, grid = C.travelling_wave(1.0, (1.2, 0.0), (0.0, 1.0), 256)
    wrep = C.MvnFieldSet(wave).residual(grid)
    g = Grid((0.0, 0.0), (0.5, 0.5), (65, 65))
    fs = C.MvnFieldSet(1.0, reduction="projective")
    imm, net, rep = C.reconstruct_projective_surface(
        fs, g, {"a": 0.0, "b": 0.0, "f": 0.0, "r": C.exponential_seeds()})
    net_res = max(C.asymptotic_net_residual(rep["state"], net, g).values())
    span = C.exponential_span_residual(imm.samples, g)
    X, Y = g.mesh()
    exact = float(np.max(np.abs(imm.samples[0] - np.exp(X + Y))))
    ok = (const_res == 0.0 and wrep.max < 1e-6 and net_res < 1e-8 and span < 1e-8
          and exact < 1e-8)
    criterion(5, ok, f"const residual {const_res:.1e} (== 0); wave 256^2 mvn {wrep.max:.1e} (< 1e-6); "
                     f"p=1 asymptotic net {net_res:.1e} (< 1e-8), exp-span {span:.1e}, "
                     f"e^(x+y) match {exact:.1e}")
    assert ok


def test_c06_auxiliary_chain(criterion):
    wave, grid = C.travelling_wave(1.0, (1.2, 0.0), (0.0, 0.5), 65)
    seeds = {"k": 0.1, "A": 0.2, "B": -0.1, "F": 0.3}
    st, rep = C.auxiliary_chain(C.MvnFieldSet(wave), grid, seeds)
    rel = rep["relations"]
    need = ("eq10.3", "eq10.4", "eq10.5", "eq10.6", "eq10.13")
    worst = max(rel[k] for k in need)
    detected = False
    try:
        C.auxiliary_chain(C.MvnFieldSet(wave, perturb_W=1e-3), grid, seeds)
    except IncompatibleData:
        detected = True
    ok = worst < 1e-6 and detected
    criterion(6, ok, f"max relation residual {worst:.1e} (< 1e-6) over {need}; "
                     f"W + 1e-3 detected: {detected}")
    assert ok


def _trig_poly(rng, terms=4):
    c = rng.uniform(-0.3, 0.3, terms)
    m = rng.integers(-2, 3, (terms, 2))
    ph = rng.uniform(0, 2 * np.pi, terms)

    def fn(R1, R2):
        out = 2.0 + 0.0 * R1
        for ci, (a, b), p in zip(c, m, ph):
            out = out + ci * F.cos(a * R1 + b * R2 + p)
        return out

    return fn


def test_c07_calapso_ds2(criterion):
    rng = np.random.default_rng(11)
    x, y = np.meshgrid(np.linspace(-1.0, 1.0, 9), np.linspace(-1.0, 1.0, 9), indexing="ij")
    worst = 0.0
    for _ in range(10):
        rc, rd = C.calapso_ds2_equivalence(_trig_poly(rng), (x, y))
        worst = max(worst, float(np.max(np.abs(rc - rd)) / max(np.max(np.abs(rc)), 1.0)))
    ok = worst < 1e-10
    criterion(7, ok, f"10 random trigonometric polynomials, max rel disagreement {worst:.1e} (< 1e-10)")
    assert ok


def test_c08_reciprocal_invariance(criterion):
    parts = []
    ok = True
    for name in ("decoupled", "gas_dynamics"):
        system = H.HYDRO_CATALOG[name]()
        pairs = H.random_law_pairs(system, 25, np.random.default_rng(5))
        rep = H.invariance_report(system, pairs, tol=1e-8)
        flip = H.reciprocal_transform(system, H.TRIVIAL_DT, H.TRIVIAL_DX)
        lam = [F.value(v) for v in system.velocity_jets(0)]
        Lam = [F.value(v) for v in flip.velocity_jets(0)]
        exact = all(np.array_equal(L, 1.0 / l) for L, l in zip(Lam, lam))
        ok = ok and rep["passed"] and exact and rep["pairs"] == 25
        parts.append(f"{name}: max dev {rep['max_deviation']:.1e}, flip exact {exact}")
    criterion(8, ok, "; ".join(parts) + " (tol 1e-8)")
    assert ok


def test_c09_correspondence(criterion):
    h = H.HamiltonianDensity(lambda a, b: (a ** 3 + b ** 3) / 6.0, "cubic")
    grid = Grid((0.2, -1.0), (1.0, -0.2), (64, 64))
    _, _, rep = H.surface_from_hamiltonian(h, grid)
    eq = H.correspondence_equivariance(h, grid)
    ok = (rep["norm_deviation"] < 1e-12 and rep["weingarten_residual"] < 1e-8
          and rep["eigen_deviation"] < 1e-10 and eq["max_deviation"] < 1e-6)
    criterion(9, ok, f"|n|-1 {rep['norm_deviation']:.1e}, Weingarten {rep['weingarten_residual']:.1e}, "
                     f"eigen {rep['eigen_deviation']:.1e}, equivariance {eq['max_deviation']:.1e}")
    assert ok


def test_c10_ds_flow(criterion):
    grid = Grid((0.0, 0.0), (2 * np.pi, 2 * np.pi), (64, 64), (True, True))
    state = DS.state_from_functions(lambda x, y: 0.1 * np.cos(x + y),
                                    lambda x, y: 0.1 * np.cos(x + y), grid, 1.0, 1.0)
    t0 = time.perf_counter()
    study = DS.convergence_study(state, 1.0, 1e-3)
    elapsed = time.perf_counter() - t0
    drift = study["drift"][0]
    # orders are only defined above the rounding floor; None means both errors sit below it
    d_ord, c_ord = study["drift_order"], study["composition_order"]
    drift_ok = d_ord is None or d_ord >= 4.0 - 0.3
    comp_ok = c_ord is None or c_ord >= 2.0 - 0.3
    # diagnostic on non-stationary data (projected p, q; see ledger)
    amp = 0.02
    side = DS.state_from_functions(
        lambda x, y: amp * (np.cos(x + 2 * y) + np.cos(2 * x + y) + np.sin(x + y)),
        lambda x, y: amp * (np.cos(x + 2 * y) + np.cos(2 * x + y) + np.cos(x + y)), grid)
    side.solvability_tol = 1.0
    e1, e2 = DS.composition_discrepancy(side, 1e-3), DS.composition_discrepancy(side, 5e-4)
    ok = drift < 1e-6 and drift_ok and comp_ok and elapsed < 120
    fmt = (lambda o: "below rounding floor" if o is None else f"{o:.2f}")
    criterion(10, ok, f"drift {drift:.1e} (< 1e-6), drift order {fmt(d_ord)}, composition "
                      f"{study['composition'][0]:.1e} order {fmt(c_ord)}, {elapsed:.0f} s (< 120 s); "
                      f"non-stationary composition order {np.log2(e1 / e2):.2f}")
    assert ok


def test_c11_grid_convergence(criterion):
    worst = math.inf
    parts = []
    for tag in RESIDUAL_CASES:
        errs, orders = convergence_orders(tag)
        worst = min(worst, min(orders))
        parts.append(f"{tag} {min(orders):.1f}")
    ok = worst >= 2.0
    criterion(11, ok, f"min observed order {worst:.2f} (>= 2): " + ", ".join(parts))
    assert ok


@pytest.mark.parametrize("tag", sorted(RESIDUAL_CASES))
def test_residual_operator_convergence(tag):
    errs, orders = convergence_orders(tag)
    assert all(e > 0 for e in errs)
    assert min(orders) >= 2.0, (tag, errs, orders)
