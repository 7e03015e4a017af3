"""Hydrodynamic-type systems, the Hamiltonian correspondence and the DS flow."""
import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from liesphere import ds_flow as DS
from liesphere import fields as F
from liesphere import hydro as H
from liesphere.errors import CFLViolation, PeriodicityError, SingularTransform, ValidationError
from liesphere.fields import Grid

R1, R2 = sp.symbols("R1 R2")


@pytest.mark.parametrize("name", sorted(H.HYDRO_CATALOG))
def test_catalog_laws_are_conserved(name):
    system = H.HYDRO_CATALOG[name]()
    for law in system.laws:
        assert H.conservation_residual(system, law)["max"] < 1e-12, law.label


def test_gas_dynamics_laws_sympy():
    lam = (R1 + R2 / 3, R1 / 3 + R2)
    system = H.gas_dynamics()
    for law in system.laws:
        h, g = law.h(R1, R2), law.g(R1, R2)
        for i, Ri in enumerate((R1, R2)):
            assert sp.expand(sp.diff(g, Ri) - lam[i] * sp.diff(h, Ri)) == 0, law.label


def test_flip_inverts_velocities_and_is_involutive():
    system = H.decoupled()
    flip = H.reciprocal_transform(system, H.TRIVIAL_DT, H.TRIVIAL_DX)
    back = H.reciprocal_transform(flip, H.TRIVIAL_DT, H.TRIVIAL_DX)
    for v0, v2 in zip(system.velocity_jets(0), back.velocity_jets(0)):
        assert np.allclose(F.value(v0), F.value(v2), rtol=1e-14)


def test_singular_transform_detected():
    system = H.decoupled()
    zero = H.ConservationLaw(lambda *x: 0.0, lambda *x: 0.0, "0")
    with pytest.raises(SingularTransform):
        H.reciprocal_transform(system, zero, H.TRIVIAL_DT)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_random_pairs_keep_invariants(seed):
    system = H.decoupled()
    pairs = H.random_law_pairs(system, 2, np.random.default_rng(seed))
    assert H.invariance_report(system, pairs)["max_deviation"] < 1e-8


def test_transformed_laws_stay_conserved():
    system = H.gas_dynamics()
    law1, law2 = H.random_law_pairs(system, 1, np.random.default_rng(2))[0]
    tr = H.reciprocal_transform(system, law1, law2)
    for law in tr.laws:
        assert H.conservation_residual(tr, law)["eq6.4"] < 1e-10


def test_hamiltonian_surface_report():
    h = H.HamiltonianDensity(lambda a, b: (a ** 3 + b ** 3) / 6.0)
    _, _, rep = H.surface_from_hamiltonian(h, Grid((0.2, -1.0), (1.0, -0.2), (9, 9)))
    assert rep["norm_deviation"] < 1e-12
    assert rep["weingarten_residual"] < 1e-8
    assert rep["eigen_deviation"] < 1e-10


# -- DS flow ------------------------------------------------------------------------------

TORUS = Grid((0.0, 0.0), (2 * np.pi, 2 * np.pi), (32, 32), (True, True))


def test_solve_pq_sign():
    state = DS.state_from_functions(lambda x, y: np.cos(x) * np.sin(y),
                                    lambda x, y: 0.0 * x, TORUS)
    p, q = DS.solve_pq(state)
    X, Y = TORUS.mesh()
    # -2 d1 a = 2 sin R1 sin R2 integrates in R2 to -2 sin R1 cos R2
    assert np.allclose(p, -2.0 * np.sin(X) * np.cos(Y), atol=1e-12)
    assert np.max(np.abs(q)) == 0.0


def test_constant_a_gives_zero_p():
    state = DS.state_from_functions(lambda x, y: 0.7 + 0 * x, lambda x, y: 0.0 * x, TORUS)
    p, _ = DS.solve_pq(state)
    assert np.max(np.abs(p)) < 1e-14


def test_nonperiodic_data_rejected():
    with pytest.raises(PeriodicityError):
        DS.state_from_functions(lambda x, y: x * np.sin(y), lambda x, y: 0 * x, TORUS)
    with pytest.raises(ValidationError):
        DS.ConjugateNetState(np.zeros((5, 5)), np.zeros((5, 5)), Grid((0, 0), (1, 1), (5, 5)))


@pytest.mark.parametrize("method", ["spectral", "fd"])
def test_zero_state_is_fixed(method):
    z = lambda x, y: 0.0 * x
    state = DS.state_from_functions(z, z, TORUS, method=method)
    s, rep = DS.evolve(state, 0.01, 1e-3)
    assert np.max(np.abs(s.a)) == 0.0 and np.max(np.abs(s.b)) == 0.0
    assert rep["max_drift"] == 0.0


def test_cfl_violation():
    state = DS.state_from_functions(lambda x, y: np.cos(x + y), lambda x, y: np.cos(x + y), TORUS)
    with pytest.raises(CFLViolation):
        DS.step(state, 1.0)


def test_travelling_profile_is_steady():
    f = lambda x, y: 0.1 * np.cos(x + y)
    state = DS.state_from_functions(f, f, TORUS)
    s, rep = DS.evolve(state, 0.05, 1e-3)
    assert rep["max_drift"] < 1e-12
    assert np.max(np.abs(s.a - state.a)) < 1e-12


def test_conjugate_net_coevolves_with_torus_immersion():
    grid = Grid((0.0, 0.0), (2 * np.pi, 2 * np.pi), (24, 24), (True, True))
    R, r = 2.0, 1.0

    def imm(x, y):
        w = R + r * np.cos(y)
        return [w * np.cos(x), w * np.sin(x), r * np.sin(y)]

    # curvature lines of a torus of revolution: conjugate with a = 0, b = -sin/(2 + cos)
    state = DS.state_from_functions(lambda x, y: -np.sin(y) / (2 + np.cos(y)), lambda x, y: 0 * x,
                                    grid, r_fn=imm)
    assert DS.conjugacy_residual(state) < 1e-10
    _, rep = DS.evolve(state, 0.01, 1e-3)
    assert rep["conjugacy_growth"] < 10.0


def test_order_estimate_rules():
    assert DS.order_estimate(1e-20, 1e-21, 1e-15) is None
    assert DS.order_estimate(4e-6, 1e-6, 1e-15) == pytest.approx(2.0)
