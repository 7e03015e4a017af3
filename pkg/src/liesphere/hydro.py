"""Hydrodynamic-type systems, reciprocal transformations and their invariants.

Systems are given by closed-form characteristic velocities (functions of
the Riemann invariants, or of field variables together with a coframe of
left eigenvectors for n >= 3).  Conservation laws ``h dx + g dt`` act on
them through reciprocal transformations ``dX = B dx + A dt``,
``dT = N dx + M dt``.  The module also covers Hamiltonian structures
(flat diagonal metrics) and the map from a Hamiltonian density to a
surface whose inverse Weingarten operator is the transformed system.
"""
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import fields as F
from . import invariants as inv
from .errors import (DegenerateInvariant, RepeatedEigenvalue, RepeatedVelocity,
                     SingularTransform, ValidationError)
from .fields import Grid
from .geometry import CurvatureLineChart, Immersion, chart_from_immersion, dot, invert_matrix
from .jet import Jet

SINGULAR_EPS = 1e-10


def _jets(fn, grid, order):
    xs = Jet.variables(grid.mesh(), order)
    out = fn(*xs)
    res = []
    for c in out:
        if not isinstance(c, Jet):
            c = Jet.constant(np.broadcast_to(np.asarray(c, dtype=float), xs[0].shape),
                             len(xs), order)
        res.append(c)
    return res


@dataclass
class ConservationLaw:
    """``h dx + g dt``: density ``h`` and flux ``g`` as functions of the variables."""

    h: object
    g: object
    label: str = "law"

    def jets(self, grid, order):
        return _jets(lambda *xs: [self.h(*xs), self.g(*xs)], grid, order)


TRIVIAL_DX = ConservationLaw(lambda *x: 1.0, lambda *x: 0.0, "dx")
TRIVIAL_DT = ConservationLaw(lambda *x: 0.0, lambda *x: 1.0, "dt")


def combine_laws(coeffs, laws, label="combination"):
    """Linear combination of conservation laws (the laws form a vector space)."""
    coeffs = [float(c) for c in coeffs]

    def h(*xs):
        return sum(c * law.h(*xs) for c, law in zip(coeffs, laws))

    def g(*xs):
        return sum(c * law.g(*xs) for c, law in zip(coeffs, laws))

    return ConservationLaw(h, g, label)


@dataclass
class HydroSystem:
    """System of hydrodynamic type.

    ``velocities(*xs)`` returns the characteristic velocities; for n >= 3
    with field variables, ``coframe(*xs)`` returns the rows ``l^i`` of the
    one-forms ``omega^i = l^i_j du^j`` (identity when omitted, i.e. Riemann
    invariants).  ``metric(*xs)`` optionally returns a diagonal metric.
    """

    n: int
    velocities: object
    grid: Grid
    coframe: object = None
    metric: object = None
    label: str = "system"
    laws: list = field(default_factory=list)

    def velocity_jets(self, order):
        return _jets(self.velocities, self.grid, order)

    def metric_jets(self, order):
        if self.metric is None:
            return None
        return _jets(self.metric, self.grid, order)

    def coframe_jets(self, order):
        """``(theta, V)``: coframe rows and the dual frame (as nested jet lists)."""
        n = self.n
        if self.coframe is None:
            shape = self.grid.shape
            one = Jet.constant(np.ones(shape), n, order)
            zero = Jet.constant(np.zeros(shape), n, order)
            theta = [[one if i == j else zero for j in range(n)] for i in range(n)]
            return theta, theta
        xs = Jet.variables(self.grid.mesh(), order)
        rows = self.coframe(*xs)
        theta = []
        for row in rows:
            r = []
            for c in row:
                if not isinstance(c, Jet):
                    c = Jet.constant(np.broadcast_to(np.asarray(c, dtype=float), xs[0].shape),
                                     n, order)
                r.append(c)
            theta.append(r)
        # V[a][j]: components of the dual frame e_j (columns of theta^{-1})
        V, _ = invert_matrix(theta)
        return theta, V

    def check_distinct(self):
        lam = [F.value(v) for v in self.velocity_jets(0)]
        for i, j in combinations(range(self.n), 2):
            scale = np.abs(lam[i]) + np.abs(lam[j]) + 1e-12
            if np.any(np.abs(lam[i] - lam[j]) < 1e-10 * scale):
                raise RepeatedVelocity(f"velocities {i + 1} and {j + 1} coincide on the domain")

    def genuinely_nonlinear(self):
        lam = self.velocity_jets(1)
        _, V = self.coframe_jets(1)
        out = []
        for i in range(self.n):
            lii = _frame_derivative(lam[i], V, i, self.n)
            out.append(bool(np.all(np.abs(F.value(lii)) > 1e-12)))
        return out


def _frame_derivative(f, V, j, n):
    """``f_j`` in ``df = f_j omega^j``."""
    s = None
    for a in range(n):
        t = f.diff(a) * V[a][j].truncate(f.order - 1)
        s = t if s is None else s + t
    return s


# -- conservation laws ----------------------------------------------------------------

def conservation_residual(system, law, order=2):
    """Max of ``|g_i - lambda^i h_i|`` (normalized) and of the second-order density equation.

    For two-component systems in Riemann invariants the second number is
    the residual of ``d1 d2 h = a d1 h + b d2 h`` with
    ``a = d2 l1/(l2 - l1)``, ``b = d1 l2/(l1 - l2)``.
    """
    n = system.n
    lam = system.velocity_jets(order)
    h, g = law.jets(system.grid, order)
    _, V = system.coframe_jets(order)
    worst = 0.0
    for i in range(n):
        gi = F.value(_frame_derivative(g, V, i, n))
        hi = F.value(_frame_derivative(h, V, i, n))
        li = F.value(lam[i])
        scale = float(np.max(np.abs(gi))) + float(np.max(np.abs(li * hi))) + 1e-300
        worst = max(worst, float(np.max(np.abs(gi - li * hi))) / scale)
    out = {"eq6.4": worst}
    if n == 2 and system.coframe is None:
        l1, l2 = lam
        a = l1.diff(1) / (l2 - l1)
        b = l2.diff(0) / (l1 - l2)
        r = _d12(h) - a * h.diff(0).truncate(order - 1) - b * h.diff(1).truncate(order - 1)
        scale = float(np.max(np.abs(F.value(_d12(h))))) + 1.0
        out["eq6.5"] = float(np.max(np.abs(F.value(r)))) / scale
    out["max"] = max(out.values())
    return out


def _d12(f):
    return f.diff(0).diff(1)


# -- reciprocal transformations -------------------------------------------------------------

def reciprocal_transform(system, law1, law2, label=None):
    """``dX = B dx + A dt`` (law1 = (B, A)), ``dT = N dx + M dt`` (law2 = (N, M)).

    New velocities ``(lambda B - A)/(M - lambda N)``; an attached diagonal
    metric becomes ``g_ii (M - lambda^i N)^2/(BM - AN)^2``.
    """
    B, A = law1.h, law1.g
    N, M = law2.h, law2.g
    lam_fn, met_fn = system.velocities, system.metric
    grid = system.grid
    # denominators on the grid
    lam = [F.value(v) for v in system.velocity_jets(0)]
    Bv, Av = (F.value(v) for v in law1.jets(grid, 0))
    Nv, Mv = (F.value(v) for v in law2.jets(grid, 0))
    det = Bv * Mv - Av * Nv
    if np.any(np.abs(det) < SINGULAR_EPS):
        raise SingularTransform("BM - AN vanishes on the domain")
    for li in lam:
        if np.any(np.abs(Mv - li * Nv) < SINGULAR_EPS):
            raise SingularTransform("M - lambda N vanishes on the domain")

    def velocities(*xs):
        b, a, nn, m = B(*xs), A(*xs), N(*xs), M(*xs)
        return [(l * b - a) / (m - l * nn) for l in lam_fn(*xs)]

    metric = None
    if met_fn is not None:
        def metric(*xs):
            b, a, nn, m = B(*xs), A(*xs), N(*xs), M(*xs)
            d = b * m - a * nn
            return [gi * (m - l * nn) * (m - l * nn) / (d * d)
                    for gi, l in zip(met_fn(*xs), lam_fn(*xs))]

    pair = (law1, law2)
    laws = [transform_law(law, pair) for law in system.laws]
    return HydroSystem(system.n, velocities, grid, system.coframe, metric,
                       label or system.label + "-reciprocal", laws)


def transform_law(law, pair):
    """A law ``h dx + g dt`` written in the new variables ``X, T``."""
    (B, A), (N, M) = (pair[0].h, pair[0].g), (pair[1].h, pair[1].g)

    def h(*xs):
        return (law.h(*xs) * M(*xs) - law.g(*xs) * N(*xs)) / (B(*xs) * M(*xs) - A(*xs) * N(*xs))

    def g(*xs):
        return (law.g(*xs) * B(*xs) - law.h(*xs) * A(*xs)) / (B(*xs) * M(*xs) - A(*xs) * N(*xs))

    return ConservationLaw(h, g, law.label + "'")


def compose_laws(first, second):
    """Single law pair equal to applying ``first`` and then ``second``.

    ``second`` is expressed in the variables produced by ``first``.
    """
    (B, A), (N, M) = (first[0].h, first[0].g), (first[1].h, first[1].g)
    (B2, A2), (N2, M2) = (second[0].h, second[0].g), (second[1].h, second[1].g)

    def row(p, q):
        return (ConservationLaw(lambda *x: p(*x) * B(*x) + q(*x) * N(*x),
                                lambda *x: p(*x) * A(*x) + q(*x) * M(*x)))

    return row(B2, A2), row(N2, M2)


# -- reciprocal invariants ----------------------------------------------------------------

@dataclass
class ReciprocalInvariants:
    quad: np.ndarray
    Omega: object
    dOmega: np.ndarray
    Omega_printed: object = None
    dOmega_printed: np.ndarray = None
    cubic: tuple = None
    cubic_rep: tuple = None
    cross_ratios: dict = None
    covectors: dict = None
    quad_coords: np.ndarray = None
    dOmega_coords: np.ndarray = None
    Omega_coords: np.ndarray = None
    structure_c: np.ndarray = None
    flags: dict = field(default_factory=dict)


def reciprocal_invariants(system, order=3):
    """Reciprocal invariants: quadratic form, Omega, dOmega, cubic class.

    Two-component systems in Riemann invariants use the second-derivative
    form of Omega (weight 2 on the velocity term; the weight-1 variant is
    kept as ``Omega_printed``).  Systems with n >= 3 use the coframe
    formulas and also return cross-ratios and the invariant one-forms.
    """
    system.check_distinct()
    if system.n == 2 and system.coframe is None:
        return _invariants_2(system, order)
    return n_component_invariants(system, order)


def _invariants_2(system, order):
    l1, l2 = system.velocity_jets(order)
    l1_1, l2_2 = l1.diff(0), l2.diff(1)
    if np.any(np.abs(F.value(l1_1)) < 1e-14) or np.any(np.abs(F.value(l2_2)) < 1e-14):
        raise DegenerateInvariant("system is not genuinely nonlinear on the domain")
    dl = l1 - l2
    quad = F.value(l1_1 * l2_2 / (dl * dl))

    def omega(weight):
        o1 = l2_2.diff(0) / l2_2 + weight * l1_1 / (l1 - l2)
        o2 = l1_1.diff(1) / l1_1 + weight * l2_2 / (l2 - l1)
        return (F.value(o1), F.value(o2)), F.value(o2.diff(0) - o1.diff(1))

    Om, dOm = omega(2.0)
    Omp, dOmp = omega(1.0)
    out = ReciprocalInvariants(quad, Om, dOm, Omp, dOmp)
    met = system.metric_jets(order)
    if met is not None:
        c1 = F.value(l1_1 * met[0].truncate(order - 1))
        c3 = F.value(l2_2 * met[1].truncate(order - 1))
        out.cubic = (c1, c3)
        out.cubic_rep = inv.cubic_representative(c1, c3)
    return out


def n_component_invariants(system, order=2, rescale=None):
    """Invariants of an n-component system in the coframe ``omega^i``.

    Quadratic form, Omega (first derivatives only for n >= 3), dOmega,
    structure coefficients, cross-ratios and the one-forms.  Coordinate
    components of the quadratic form, Omega and dOmega are returned too,
    for comparison across coframe rescalings ``omega^i -> p^i omega^i``
    (``rescale`` = list of callables ``p^i``).
    """
    n = system.n
    if n < 2:
        raise ValidationError("need at least two components")
    theta, V = system.coframe_jets(order)
    if rescale is not None:
        xs = Jet.variables(system.grid.mesh(), order)
        ps = [p(*xs) for p in rescale]
        theta = [[ps[i] * theta[i][a] for a in range(n)] for i in range(n)]
        V, _ = invert_matrix(theta)
    lam = system.velocity_jets(order)
    ld = [[_frame_derivative(lam[i], V, j, n) for j in range(n)] for i in range(n)]
    lv = np.stack([F.value(l) for l in lam], -1)
    ldv = np.stack([np.stack([F.value(ld[i][j]) for j in range(n)], -1) for i in range(n)], -2)
    shape = lv.shape[:-1]
    quad = np.zeros(shape + (n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                quad[..., i, j] = ldv[..., i, i] * ldv[..., j, j] / (lv[..., i] - lv[..., j]) ** 2
    Om = []
    for i in range(n):
        s = None
        for k in range(n):
            if k == i:
                continue
            t = (ld[k][i] - ld[i][i] * (1.0 / (n - 1))) / (lam[i].truncate(order - 1)
                                                          - lam[k].truncate(order - 1))
            s = t if s is None else s + t
        Om.append(s)
    Om_coord = []
    for a in range(n):
        s = None
        for i in range(n):
            t = Om[i] * theta[i][a].truncate(Om[i].order)
            s = t if s is None else s + t
        Om_coord.append(s)
    dOm_frame = inv._two_form_in_frame(Om_coord, V, n)
    th = np.stack([np.stack([F.value(theta[i][a]) for a in range(n)], -1) for i in range(n)], -2)
    quad_coords = np.einsum("...ij,...ia,...jb->...ab", quad, th, th)
    dOm_coords = np.einsum("...ij,...ia,...jb->...ab", dOm_frame, th, th)
    Om_coords = np.stack([F.value(c) for c in Om_coord], -1)
    crs = {}
    if n >= 4:
        for (i, j, k, l) in combinations(range(n), 4):
            crs[(i, j, k, l)] = inv.cross_ratio([lv[..., q] for q in range(n)], i, j, k, l)
    cov = {}
    if n >= 3:
        for i in range(n):
            for j, l in combinations([q for q in range(n) if q != i], 2):
                cov[(i, j, l)] = (ldv[..., i, i] * (lv[..., j] - lv[..., l])
                                  / ((lv[..., i] - lv[..., j]) * (lv[..., i] - lv[..., l])))
    C = inv._structure(theta, V, n)
    Cv = np.stack([np.stack([np.stack([F.value(C[i][j][q]) for q in range(n)], -1)
                             for j in range(n)], -2) for i in range(n)], -3)
    out = ReciprocalInvariants(quad, tuple(F.value(o) for o in Om), dOm_frame,
                               cross_ratios=crs, covectors=cov, quad_coords=quad_coords,
                               dOmega_coords=dOm_coords, Omega_coords=Om_coords, structure_c=Cv)
    distinct = [Cv[..., i, j, k] for i in range(n) for j in range(n) for k in range(n)
                if len({i, j, k}) == 3]
    scale = float(np.max(np.abs(Cv))) + 1.0
    out.flags["riemann_invariants"] = bool(all(np.max(np.abs(c)) < 1e-10 * scale
                                               for c in distinct)) if distinct else True
    out.flags["genuinely_nonlinear"] = [bool(np.all(np.abs(ldv[..., i, i]) > 1e-12))
                                        for i in range(n)]
    return out


def rescaling_check(system, rescale, order=2):
    """Max change of the coordinate components of quad, Omega, dOmega under a coframe rescaling."""
    a = n_component_invariants(system, order)
    b = n_component_invariants(system, order, rescale)
    out = {}
    for key in ("quad_coords", "Omega_coords", "dOmega_coords"):
        x, y = getattr(a, key), getattr(b, key)
        out[key] = float(np.max(np.abs(x - y))) / max(float(np.max(np.abs(x))), 1.0)
    return out


def invariance_report(system, pairs, tol=1e-8):
    """Reciprocal invariants before and after each law pair.

    Reports relative deviations of quad, dOmega and the cubic class, and
    of dOmega for the weight-1 (printed) Omega for comparison.
    """
    base = reciprocal_invariants(system)
    qs = float(np.max(np.abs(base.quad)))
    rows = []
    for law1, law2 in pairs:
        tr = reciprocal_invariants(reciprocal_transform(system, law1, law2))
        row = {"quad": float(np.max(np.abs(tr.quad - base.quad))) / qs,
               "dOmega": float(np.max(np.abs(tr.dOmega - base.dOmega))) / qs,
               "dOmega_printed": float(np.max(np.abs(tr.dOmega_printed - base.dOmega_printed))) / qs}
        if base.cubic_rep is not None and tr.cubic_rep is not None:
            row["cubic_class"] = float(np.max(np.abs(tr.cubic_rep[1] - base.cubic_rep[1])))
        rows.append(row)
    keys = ("quad", "dOmega", "cubic_class")
    worst = max((r[k] for r in rows for k in keys if k in r), default=0.0)
    return {"system": system.label, "pairs": len(rows), "rows": rows, "max_deviation": worst,
            "tolerance": tol, "passed": worst < tol}


def random_law_pairs(system, count, rng, eps=0.2, margin=0.5):
    """Law pairs ``(dx + eps sum c L, dt + eps sum d L)`` from the system's law basis.

    Basis laws are normalized to unit size on the grid; pairs whose
    denominators ``BM - AN`` or ``M - lambda N`` come closer to zero than
    ``margin`` are redrawn (near-singular transforms only amplify round-off).
    """
    laws = system.laws
    if not laws:
        raise ValidationError("system has no catalog conservation laws")
    grid = system.grid
    sizes = []
    for law in laws:
        hv, gv = (F.value(v) for v in law.jets(grid, 0))
        sizes.append(max(float(np.max(np.abs(hv))), float(np.max(np.abs(gv))), 1e-300))
    lam = [F.value(v) for v in system.velocity_jets(0)]
    pairs = []
    tries = 0
    while len(pairs) < count:
        tries += 1
        if tries > 50 * count:
            raise SingularTransform("could not draw nonsingular law pairs")
        c = rng.uniform(-1, 1, len(laws)) * eps / np.asarray(sizes)
        d = rng.uniform(-1, 1, len(laws)) * eps / np.asarray(sizes)
        l1 = combine_laws([1.0] + list(c), [TRIVIAL_DX] + laws, "X-law")
        l2 = combine_laws([1.0] + list(d), [TRIVIAL_DT] + laws, "T-law")
        Bv, Av = (F.value(v) for v in l1.jets(grid, 0))
        Nv, Mv = (F.value(v) for v in l2.jets(grid, 0))
        low = min([float(np.min(np.abs(Bv * Mv - Av * Nv)))]
                  + [float(np.min(np.abs(Mv - li * Nv))) for li in lam])
        if low < margin:
            continue
        pairs.append((l1, l2))
    return pairs


# -- Hamiltonian structures -------------------------------------------------------------

def hamiltonian_check(system, metric=None, order=3):
    """Residuals of the metric-velocity compatibility and of flatness.

    Compatibility: ``d2 ln sqrt g11 = d2 l1/(l2 - l1)``, ``d1 ln sqrt g22 =
    d1 l2/(l1 - l2)``.  Flatness: ``d1 beta12 + d2 beta21 = 0`` with
    ``beta12 = d1 H2/H1``, ``beta21 = d2 H1/H2``, ``H_i = sqrt g_ii``.
    """
    met = metric if metric is not None else system.metric
    if met is None:
        raise ValidationError("no metric given")
    g11, g22 = _jets(met, system.grid, order)
    if np.any(F.value(g11) <= 0) or np.any(F.value(g22) <= 0):
        raise ValidationError("metric must be positive")
    l1, l2 = system.velocity_jets(order)
    r1 = (0.5 * F.log(g11)).diff(1) - l1.diff(1) / (l2 - l1)
    r2 = (0.5 * F.log(g22)).diff(0) - l2.diff(0) / (l1 - l2)
    H1, H2 = F.sqrt(g11), F.sqrt(g22)
    b12 = H2.diff(0) / H1
    b21 = H1.diff(1) / H2
    flat = b12.diff(0) + b21.diff(1)
    comp = max(float(np.max(np.abs(F.value(r1)))), float(np.max(np.abs(F.value(r2)))))
    fl = float(np.max(np.abs(F.value(flat))))
    return {"eq7.2": comp, "eq7.4": fl,
            "beta12_max": float(np.max(np.abs(F.value(b12)))),
            "beta21_max": float(np.max(np.abs(F.value(b21))))}


@dataclass
class HamiltonianDensity:
    """Density ``h(u1, u2)`` evaluated as jets (derivatives to any order)."""

    fn: object
    label: str = "h"

    def jet(self, points, order):
        xs = Jet.variables(points, order)
        out = self.fn(*xs)
        if not isinstance(out, Jet):
            out = Jet.constant(np.broadcast_to(np.asarray(out, dtype=float), xs[0].shape),
                               2, order)
        return out


def surface_immersion(h):
    """The surface with radius vector ``(h1 - u1 A/B, h2 - u2 A/B, -A/B)``."""

    def fn(u1, u2):
        hj = h.fn(u1, u2)
        h1, h2 = hj.diff(0), hj.diff(1)
        o = h1.order
        U1, U2 = u1.truncate(o), u2.truncate(o)
        B = 0.5 * (U1 * U1 + U2 * U2 + 1.0)
        A = h1 * U1 + h2 * U2 - hj.truncate(o)
        return [h1 - U1 * A / B, h2 - U2 * A / B, -(A / B)]

    return _DropOrderImmersion(fn, label=f"surface({h.label})")


class _DropOrderImmersion(Immersion):
    """Immersion whose formula consumes one derivative (needs jets of order + 1)."""

    def jets(self, points, order):
        if isinstance(points, Grid):
            points = points.mesh()
        xs = Jet.variables(points, order + 1)
        return list(self.fn(*xs))


def surface_from_hamiltonian(h, grid, order=2):
    """Surface and correspondence report for a Hamiltonian density on a u-grid.

    Report: (i) ``max | |n| - 1 |``; (ii) max residual of
    ``dr/du^j = sum_i w^i_j dn/du^i`` with ``w = h'' B - A Id``;
    (iii) eigenvalues of ``w`` against ``lambda^i B - A`` (``lambda^i``:
    Hessian eigenvalues); (iv) principal radii of the immersion against
    the eigenvalues of ``w``.
    """
    X = grid.mesh()
    U1, U2 = Jet.variables(X, order + 1)
    hj = h.fn(U1, U2)
    h1, h2 = hj.diff(0), hj.diff(1)
    o = order
    u1, u2 = U1.truncate(o), U2.truncate(o)
    B = 0.5 * (u1 * u1 + u2 * u2 + 1.0)
    A = h1 * u1 + h2 * u2 - hj.truncate(o)
    r = [h1 - u1 * A / B, h2 - u2 * A / B, -(A / B)]
    n = [u1 / B, u2 / B, 1.0 / B - 1.0]
    nn = F.value(dot(n, n))
    norm_dev = float(np.max(np.abs(np.sqrt(nn) - 1.0)))
    H = [[hj.diff(0).diff(0), hj.diff(0).diff(1)], [hj.diff(1).diff(0), hj.diff(1).diff(1)]]
    Hv = np.stack([np.stack([F.value(H[i][j]) for j in range(2)], -1) for i in range(2)], -2)
    Bv, Av = F.value(B), F.value(A)
    w = Hv * Bv[..., None, None] - Av[..., None, None] * np.eye(2)
    rd = [[F.value(c.diff(j)) for c in r] for j in range(2)]
    nd = [[F.value(c.diff(i)) for c in n] for i in range(2)]
    wres = 0.0
    for j in range(2):
        for comp in range(3):
            rhs = w[..., 0, j] * nd[0][comp] + w[..., 1, j] * nd[1][comp]
            wres = max(wres, float(np.max(np.abs(rd[j][comp] - rhs))))
    lam = np.linalg.eigvalsh(Hv)
    if np.any(np.abs(lam[..., 1] - lam[..., 0]) < 1e-12 * (np.abs(lam).max() + 1.0)):
        raise RepeatedEigenvalue("Hessian eigenvalues coincide on the domain")
    weig = np.linalg.eigvalsh(w)
    pred = np.sort(lam * Bv[..., None] - Av[..., None], axis=-1)
    eig_dev = float(np.max(np.abs(weig - pred)))
    # principal radii: with II = <r_ab, n>, dn = -k dr along principal directions
    r2 = [[[F.value(c.diff(a).diff(b)) for c in r] for b in range(2)] for a in range(2)]
    r1v = [[F.value(c.diff(a)) for c in r] for a in range(2)] if o >= 2 else None
    nv = [F.value(c) for c in n]
    radii_dev = None
    if r1v is not None:
        g = np.stack([np.stack([sum(r1v[a][c] * r1v[b][c] for c in range(3)) for b in range(2)], -1)
                      for a in range(2)], -2)
        II = np.stack([np.stack([sum(r2[a][b][c] * nv[c] for c in range(3)) for b in range(2)], -1)
                       for a in range(2)], -2)
        k = np.linalg.eigvals(np.linalg.solve(g, II)).real
        radii = np.sort(-1.0 / k, axis=-1)
        radii_dev = float(np.max(np.abs(radii - weig)))
    report = {"norm_deviation": norm_dev, "weingarten_residual": wres,
              "eigen_deviation": eig_dev, "radii_deviation": radii_dev,
              "B_min": float(np.min(Bv))}
    imm = surface_immersion(h)
    return imm, [F.value(c) for c in n], report


def hamiltonian_system(h, grid, label=None):
    """Diagonal system and flat metric of a density whose Hessian is diagonal in ``u``.

    The ``u`` are then Riemann invariants, ``lambda^i = h_ii`` and the
    Hamiltonian metric is ``du1^2 + du2^2``.
    """

    def vel(u1, u2):
        hj = h.fn(u1, u2)
        return [hj.diff(0).diff(0), hj.diff(1).diff(1)]

    def metric(u1, u2):
        return [1.0, 1.0]

    return HydroSystem(2, _lift(vel), grid, None, metric, label or f"hamiltonian({h.label})")


def _lift(fn):
    """Evaluate a formula that consumes two derivatives on jets raised by two orders."""

    def out(*xs):
        pts = [x.value for x in xs]
        order = xs[0].order
        ys = Jet.variables(pts, order + 2)
        return fn(*ys)

    return out


def canonical_laws(h):
    """The law ``B dx + A dt`` of the surface correspondence and the trivial ``dt``."""

    def Bf(u1, u2):
        return 0.5 * (u1 * u1 + u2 * u2 + 1.0)

    def Af(u1, u2):
        pts = [u1.value, u2.value]
        o = u1.order
        U1, U2 = Jet.variables(pts, o + 1)
        hj = h.fn(U1, U2)
        return hj.diff(0) * U1.truncate(o) + hj.diff(1) * U2.truncate(o) - hj.truncate(o)

    return ConservationLaw(Bf, Af, "B dx + A dt"), TRIVIAL_DT


def correspondence_equivariance(h, grid, order=3):
    """Reciprocal invariants of the canonically transformed system versus Lie invariants.

    The transformed velocities are the principal radii ``w^i`` and the
    transformed metric is the third fundamental form ``G_ii``; the
    invariants of the system are compared with the quadratic form, the
    web curvature and the cubic class of the surface read off as a
    curvature-line chart.
    """
    system = hamiltonian_system(h, grid)
    law1, law2 = canonical_laws(h)
    tr = reciprocal_transform(system, law1, law2)
    ri = reciprocal_invariants(tr, order)
    imm = surface_immersion(h)
    chart = chart_from_immersion(imm, grid, order, check_tol=1e-6)
    fm = inv.lie_forms(chart, order)
    fl = chart.fields(1)
    G = [F.value(fl["k1"] * fl["k1"] * fl["g11"]), F.value(fl["k2"] * fl["k2"] * fl["g22"])]
    met = [F.value(m) for m in tr.metric_jets(0)]
    w_sys = [F.value(v) for v in tr.velocity_jets(0)]
    w_surf = [1.0 / F.value(fl["k1"]), 1.0 / F.value(fl["k2"])]
    qs = float(np.max(np.abs(fm.quad)))

    def rel(a, b, s):
        return float(np.max(np.abs(a - b))) / s

    # radii as 1/k with inward normal may differ by a global sign
    sgn = np.sign(np.mean(w_sys[0] / w_surf[0]))
    out = {
        "quad": rel(ri.quad, fm.quad, qs),
        "dOmega": rel(ri.dOmega, fm.dOmega, qs),
        "cubic_class": float(np.max(np.abs(ri.cubic_rep[1] - fm.cubic_rep[1]))),
        "radii": max(rel(w_sys[i], sgn * w_surf[i], float(np.max(np.abs(w_surf[i]))))
                     for i in range(2)),
        "metric_vs_III": max(rel(met[i], G[i], float(np.max(np.abs(G[i])))) for i in range(2)),
    }
    out["max_deviation"] = max(out["quad"], out["dOmega"], out["cubic_class"])
    return out


# -- catalog ----------------------------------------------------------------------------

def _grid(params, lo, hi, shape=(17, 17)):
    p = dict(params or {})
    sh = p.get("shape", shape)
    if isinstance(sh, int):
        sh = (sh, sh)
    return Grid(tuple(p.get("lo", lo)), tuple(p.get("hi", hi)), tuple(sh))


def decoupled(params=None):
    """``lambda^i = R^i``; laws ``f1(R1) + f2(R2)`` with polynomial ``f``."""
    grid = _grid(params, (1.0, 0.1), (1.5, 0.6))
    laws = []
    for k in (1, 2, 3):
        laws.append(ConservationLaw(lambda a, b, k=k: a ** k,
                                    lambda a, b, k=k: a ** (k + 1) * (k / (k + 1.0)), f"R1^{k}"))
        laws.append(ConservationLaw(lambda a, b, k=k: b ** k,
                                    lambda a, b, k=k: b ** (k + 1) * (k / (k + 1.0)), f"R2^{k}"))

    def metric(a, b):
        return [1.0, 1.0]

    return HydroSystem(2, lambda a, b: [a, b], grid, None, metric, "decoupled", laws)


def gas_dynamics(params=None):
    """Linear-velocity system ``l1 = R1 + R2/3``, ``l2 = R1/3 + R2`` (polytropic type).

    Densities solve an Euler-Poisson-Darboux equation; the polynomial ones
    up to degree 4 are listed with their fluxes.
    """
    grid = _grid(params, (1.0, 0.1), (1.5, 0.6))
    laws = [
        ConservationLaw(lambda a, b: a + b,
                        lambda a, b: a * a / 2 + a * b / 3 + b * b / 2, "R1+R2"),
        ConservationLaw(lambda a, b: (a - b) * (a - b),
                        lambda a, b: (2 * a ** 3 - 2 * a * a * b - 2 * a * b * b + 2 * b ** 3) / 3,
                        "(R1-R2)^2"),
        ConservationLaw(lambda a, b: (a - b) * (a - b) * (a + b),
                        lambda a, b: (3 * a ** 4 / 4 - a ** 3 * b / 3 - 5 * a * a * b * b / 6
                                      - a * b ** 3 / 3 + 3 * b ** 4 / 4), "(R1-R2)^2(R1+R2)"),
    ]
    # a diagonal metric compatible with the velocities (not flat)
    return HydroSystem(2, lambda a, b: [a + b / 3.0, a / 3.0 + b], grid, None,
                       lambda a, b: [1.0 / (a - b), a - b], "gas_dynamics", laws)


def diagonal_n(n, params=None):
    """``lambda^i = R^i`` with n components (Riemann invariants)."""
    p = dict(params or {})
    lo = p.get("lo", tuple(1.0 + 0.7 * i for i in range(n)))
    hi = p.get("hi", tuple(1.4 + 0.7 * i for i in range(n)))
    sh = p.get("shape", 5)
    grid = Grid(lo, hi, (sh,) * n if isinstance(sh, int) else sh)
    return HydroSystem(n, lambda *xs: list(xs), grid, None, None, f"diagonal_{n}")


def twisted_3(params=None):
    """Three-component system with a non-holonomic coframe (no Riemann invariants)."""
    p = dict(params or {})
    grid = Grid(p.get("lo", (0.1, 0.2, 0.3)), p.get("hi", (0.5, 0.6, 0.7)), (p.get("shape", 5),) * 3)

    def coframe(x, y, z):
        one = 1.0 + 0.0 * x
        zero = 0.0 * x
        return [[one, zero, y], [zero, one, zero], [zero, zero, one]]

    def vel(x, y, z):
        return [1.0 + x * x, 3.0 + y + 0.0 * x, 5.0 + z * z + 0.2 * x]

    return HydroSystem(3, vel, grid, coframe, None, "twisted_3")


HYDRO_CATALOG = {"decoupled": decoupled, "gas_dynamics": gas_dynamics}
