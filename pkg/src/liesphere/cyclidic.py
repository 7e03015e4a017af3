"""Classification, integrable-PDE residuals and exact-solution generators.

Covers the Dupin / diagonally-cyclidic / generic trichotomy, residuals of
the curvature-line systems, the Calapso equation, both real reductions of
the stationary mVN equation and the Tzitzeica and Liouville equations, the
Tzitzeica ansatz for the nonlocal potentials, travelling-wave Tzitzeica
solutions, reconstruction of isothermally-asymptotic surfaces and the
Lie-density chain that turns the curvature-line system into mVN form.

Residual operators take fields with the shared arithmetic interface (jets
for closed-form input, :class:`~liesphere.fields.GridField` for samples),
so the same code serves exact checks and grid-convergence studies.
"""
from dataclasses import dataclass, field
from math import factorial

import numpy as np
from numpy.polynomial import chebyshev as cheb
from scipy.integrate import cumulative_simpson, solve_ivp

from . import fields as F
from ._accel import fd1
from . import invariants as inv
from .errors import (BlowUp, GenericityLoss, IncompatibleData, InsufficientDerivativeOrder,
                     MissingField, NegativeRadicand, NonPositiveDensity, StepFailure,
                     UmbilicPoint, ValidationError, ZeroDivision)
from .fields import Grid, GridField
from .geometry import CurvatureLineChart, GridImmersion, is_umbilic
from .jet import Jet, _basis as _jet_basis, univariate_to_sum

# -- residuals ----------------------------------------------------------------------

TAG_FIELDS = {
    "eq4.4": ("k1", "k2", "rho"),
    "eq4.5": ("k1", "k2", "rho"),
    "calapso": ("u",),
    "ds2": ("u",),
    "mvn_lie": ("U", "V", "W"),
    "mvn_projective": ("p", "V", "W"),
    "tzitzeica": ("U",),
    "liouville": ("p",),
    "eq4.10": ("a", "b", "p"),
}
TAG_ALIASES = {"eq4.6": "calapso", "eq4.13": "mvn_projective"}
TAG_ORDER = {"eq4.4": 3, "eq4.5": 2, "calapso": 4, "ds2": 4, "mvn_lie": 3,
             "mvn_projective": 3, "tzitzeica": 2, "liouville": 2, "eq4.10": 2}


@dataclass
class ResidualReport:
    tag: str
    residual: np.ndarray
    components: dict
    constraints: dict = field(default_factory=dict)

    @property
    def max(self):
        return float(np.max(np.abs(self.residual)))

    def summary(self):
        out = {"tag": self.tag, "max_residual": self.max}
        out["components"] = {k: float(np.max(np.abs(v))) for k, v in self.components.items()}
        if self.constraints:
            out["constraints"] = {k: float(np.max(np.abs(v))) for k, v in self.constraints.items()}
        return out


def canonical_tag(eq):
    eq = TAG_ALIASES.get(eq, eq)
    if eq not in TAG_FIELDS:
        raise ValidationError(f"unknown equation tag {eq!r}")
    return eq


def _d(f, *axes):
    for ax in axes:
        f = f.diff(ax)
    return f


def _abmix(k1, k2):
    a = k1.diff(1) / (k2 - k1)
    b = k2.diff(0) / (k1 - k2)
    return a, b


def residual(eq, fields, c=1.0):
    """Pointwise residual of a tagged equation or system.

    Systems return the pointwise max over their components; equations with
    nonlocal potentials also report the two constraint residuals.
    """
    tag = canonical_tag(eq)
    missing = [n for n in TAG_FIELDS[tag] if n not in fields]
    if missing:
        raise MissingField(f"{tag} needs fields {missing}")
    need = TAG_ORDER[tag]
    for n in TAG_FIELDS[tag]:
        if F.order_of(fields[n]) < need and not (tag.startswith("mvn") and n in ("V", "W")):
            raise InsufficientDerivativeOrder(f"{tag} needs {need} derivatives of {n}")
    comps, cons = {}, {}
    if tag in ("eq4.4", "eq4.5"):
        k1, k2, rho = fields["k1"], fields["k2"], fields["rho"]
        a, b = _abmix(k1, k2)
        e2r = F.exp(2.0 * rho)
        if tag == "eq4.4":
            k1_1, k2_2 = k1.diff(0), k2.diff(1)
            comps["rho_1"] = rho.diff(0) - b - 0.5 * _d(k2_2, 0) / k2_2
            comps["rho_2"] = rho.diff(1) - a - 0.5 * _d(k1_1, 1) / k1_1
            lq = F.log(abs(k1_1 / k2_2))
            comps["gauss"] = (k1_1 * (b.diff(0) + 0.5 * b * lq.diff(0))
                              + k2_2 * (a.diff(1) - 0.5 * a * lq.diff(1)) + k1 * k2 * e2r)
        else:
            comps["rho_1"] = rho.diff(0) - b
            comps["rho_2"] = rho.diff(1) - a
            comps["gauss"] = _d(rho, 0, 0) + _d(rho, 1, 1) + k1 * k2 * e2r
    elif tag == "calapso":
        comps["calapso"] = calapso_residual(fields["u"])
    elif tag == "ds2":
        comps["ds2"] = ds2_residual(fields["u"])
    elif tag in ("mvn_lie", "mvn_projective"):
        u, V, W = (fields[n] for n in TAG_FIELDS[tag])
        if tag == "mvn_lie":
            lhs = _d(u, 0, 0, 0) + 3.0 * u.diff(0) * V + 1.5 * u * F.d(V, 0)
            rhs = _d(u, 1, 1, 1) + 3.0 * u.diff(1) * W + 1.5 * u * F.d(W, 1)
        else:
            lhs = _d(u, 0, 0, 0) - 3.0 * V * u.diff(0) - 1.5 * u * F.d(V, 0)
            rhs = _d(u, 1, 1, 1) - 3.0 * W * u.diff(1) - 1.5 * u * F.d(W, 1)
        comps["mvn"] = lhs - rhs
        u2 = u * u
        cons["W_x"] = F.value(F.d(W, 0) - u2.diff(1))
        cons["V_y"] = F.value(F.d(V, 1) - u2.diff(0))
    elif tag == "tzitzeica":
        u = fields["U"]
        comps["tzitzeica"] = _d(F.log(u), 0, 1) + u * u - c / u
    elif tag == "liouville":
        p = fields["p"]
        comps["liouville"] = _d(F.log(p), 0, 1) - p * p
    elif tag == "eq4.10":
        a, b, p = fields["a"], fields["b"], fields["p"]
        p2 = p * p
        comps["x"] = (p.diff(0) + a * p + 0.5 * b * b - b.diff(1)).diff(0) - 1.5 * p2.diff(1)
        comps["y"] = (p.diff(1) + b * p + 0.5 * a * a - a.diff(0)).diff(1) - 1.5 * p2.diff(0)
        comps["ab"] = a.diff(1) - b.diff(0)
    comps = {k: F.value(v) for k, v in comps.items()}
    res = np.max(np.stack([np.abs(v) for v in comps.values()]), axis=0)
    return ResidualReport(tag, res, comps, cons)


def tzitzeica_residual(U, c=1.0, reduction="lie"):
    """``(ln U)_xy + U^2 - c/U`` (lie) or ``(ln p)_xy - p^2 - c/p`` (projective)."""
    lxy = _d(F.log(U), 0, 1)
    if reduction == "lie":
        return F.value(lxy + U * U - c / U)
    return F.value(lxy - U * U - c / U)


def calapso_residual(u):
    q = _d(u, 0, 1) / u
    return _d(q, 0, 0) + _d(q, 1, 1) + 0.5 * _d(u * u, 0, 1)


def ds2_residual(u):
    """Stationary DS-II fourth-order residual in (x, y) coordinates."""
    q = (_d(u, 0, 0) - _d(u, 1, 1)) / u
    u2 = u * u
    return _d(q, 0, 0) + _d(q, 1, 1) + _d(u2, 0, 0) - _d(u2, 1, 1)


# change of variables R1 = x + y, R2 = x - y
DS2_FACTOR = 8.0


def calapso_ds2_equivalence(fn, points_xy, order=4):
    """Calapso residual in R-coordinates and DS-II residual in (x, y) of one function.

    ``fn(R1, R2)`` is evaluated as jets.  At each (x, y) the DS-II residual of
    ``v(x, y) = fn(x + y, x - y)`` equals ``8 *`` the Calapso residual of
    ``fn`` at ``(x + y, x - y)``; the factor is returned already applied.
    """
    x, y = (np.asarray(p, dtype=float) for p in points_xy)
    R1, R2 = Jet.variables([x + y, x - y], order)
    u = fn(R1, R2)
    if np.any(np.abs(F.value(u)) < 1e-300):
        raise ZeroDivision("u vanishes")
    res_c = F.value(calapso_residual(u))
    X, Y = Jet.variables([x, y], order)
    v = fn(X + Y, X - Y)
    res_d = F.value(ds2_residual(v)) / DS2_FACTOR
    return res_c, res_d


# -- classification -----------------------------------------------------------------

def classify(chart, tol=None, order=3):
    """Dupin / diagonally_cyclidic / generic with the two criteria as max-norms.

    The web-curvature criterion is relative to the size of the quadratic
    form (both are ``dR1 dR2`` coefficients).  Default tolerance: 1e-8 for
    closed-form charts, 1e-6 for sampled ones.
    """
    if tol is None:
        tol = chart.flags.get("classify_tol", 1e-8 if chart.closed_form else 1e-6)
    fm = inv.lie_forms(chart, order)
    cub = max(float(np.max(np.abs(fm.cubic1))), float(np.max(np.abs(fm.cubic3))))
    report = {"cubic_max": cub, "dupin": fm.flags["dupin"], "tolerance": tol}
    if fm.flags["dupin"]:
        return "dupin", report
    if not fm.flags["generic"]:
        report.update({"web": "undefined", "curv_max": None})
        return "generic", report
    qs = float(np.max(np.abs(fm.quad)))
    cv = float(np.max(np.abs(fm.curv)))
    cs = max(float(np.max(np.abs(fm.conn[0]))), float(np.max(np.abs(fm.conn[1]))))
    rel = cv / max(qs, cs * cs, 1e-300)
    report.update({"curv_max": cv, "curv_rel": rel, "dOmega_max": float(np.max(np.abs(fm.dOmega))),
                   "dOmega_printed_max": float(np.max(np.abs(fm.dOmega_printed)))})
    if rel < tol:
        return "diagonally_cyclidic", report
    return "generic", report


# -- mVN field sets ----------------------------------------------------------------------

def _as_source(x):
    """Anything with ``jet(points, order)``; numbers become constant sources."""
    if hasattr(x, "jet"):
        return x
    if callable(x):
        return F.AnalyticField(x, 2)
    val = float(x)
    return F.AnalyticField(lambda a, b: val + 0.0 * a, 2, label=str(val))


@dataclass
class MvnFieldSet:
    """Density and nonlocal potentials of one mVN reduction.

    ``U`` is a source (``jet(points, order)``); ``V`` and ``W`` are sources
    or the string ``"ansatz"``, in which case they are computed from ``U``
    by the Tzitzeica ansatz of the reduction.
    """

    U: object
    V: object = "ansatz"
    W: object = "ansatz"
    reduction: str = "lie"
    gauge: str = "ansatz"
    c: float = 1.0
    perturb_W: float = 0.0

    def __post_init__(self):
        if self.reduction not in ("lie", "projective"):
            raise ValidationError("reduction must be 'lie' or 'projective'")
        self.U = _as_source(self.U)
        if self.V != "ansatz":
            self.V = _as_source(self.V)
        if self.W != "ansatz":
            self.W = _as_source(self.W)

    def jets(self, points, order=3):
        """U, V, W as jets (V, W of order ``order - 2`` when from the ansatz)."""
        U = self.U.jet(points, order)
        if np.any(U.value <= 0):
            raise NonPositiveDensity("the density must be positive")
        if self.V == "ansatz" or self.W == "ansatz":
            Va, Wa = ansatz_potentials(U, self.reduction)
        V = Va if self.V == "ansatz" else self.V.jet(points, order - 2)
        W = Wa if self.W == "ansatz" else self.W.jet(points, order - 2)
        if self.perturb_W:
            W = W + self.perturb_W
        return U, V, W

    def on_grid(self, grid, order=3):
        return self.jets(grid.mesh(), order)

    def residual(self, grid, order=3):
        U, V, W = self.on_grid(grid, order)
        tag = "mvn_lie" if self.reduction == "lie" else "mvn_projective"
        name = "U" if self.reduction == "lie" else "p"
        return residual(tag, {name: U, "V": V, "W": W})


def ansatz_potentials(U, reduction="lie"):
    """V, W of the Tzitzeica ansatz (signs per reduction)."""
    lx = U.diff(0) / U
    ly = U.diff(1) / U
    W = _d(U, 1, 1) / U * (2.0 / 3.0) - ly * ly * (1.0 / 3.0)
    V = _d(U, 0, 0) / U * (2.0 / 3.0) - lx * lx * (1.0 / 3.0)
    if reduction == "lie":
        return -V, -W
    return V, W


def tzitzeica_ansatz(U, reduction="lie", grid=None, order=3):
    """Field set from the ansatz plus its constraint residuals on ``grid``.

    The constraints vanish iff ``U`` solves the Tzitzeica (``c != 0``) or
    Liouville (``c = 0``) equation of the reduction.
    """
    fs = MvnFieldSet(U, "ansatz", "ansatz", reduction)
    out = {"fields": fs}
    if grid is not None:
        rep = fs.residual(grid, order)
        out["constraints"] = {k: float(np.max(np.abs(v))) for k, v in rep.constraints.items()}
        out["mvn_residual"] = rep.max
    return out


# -- travelling waves ------------------------------------------------------------------

class TravellingWave:
    """Tzitzeica solution ``U(x + y)``.

    With ``L = ln U`` and ``s = x + y`` the equation becomes the ODE
    ``L'' = sigma e^{2L} + c e^{-L}`` with ``sigma = -1`` (lie) or ``+1``
    (projective).  The ODE is integrated with an adaptive eighth-order
    stepper; higher derivatives at any ``s`` come from the Taylor recursion
    of the ODE, so jets of ``U(x + y)`` are available to any order.
    """

    def __init__(self, c=1.0, U0=1.0, dU0=0.0, s_range=(0.0, 1.0), reduction="lie",
                 rtol=1e-12, atol=1e-12, bounds=(1e-5, 1e5)):
        self.c = float(c)
        self.reduction = reduction
        self.sigma = -1.0 if reduction == "lie" else 1.0
        self.s_range = (float(s_range[0]), float(s_range[1]))
        self.label = f"travelling_wave(c={c:g}, U0={U0:g}, dU0={dU0:g})"
        lo, hi = bounds
        if not (lo < U0 < hi):
            raise BlowUp(f"initial density {U0:g} outside [{lo:g}, {hi:g}]")
        y0 = [np.log(U0), dU0 / U0]
        sig, cc = self.sigma, self.c

        def rhs(_, y):
            return [y[1], sig * np.exp(2.0 * y[0]) + cc * np.exp(-y[0])]

        def too_small(_, y):
            return y[0] - np.log(lo)

        def too_large(_, y):
            return y[0] - np.log(hi)

        too_small.terminal = too_large.terminal = True
        sol = solve_ivp(rhs, self.s_range, y0, method="DOP853", rtol=rtol, atol=atol,
                        dense_output=True, events=(too_small, too_large))
        if sol.status != 0:
            raise BlowUp(f"density left [{lo:g}, {hi:g}] or the integrator failed "
                         f"at s = {sol.t[-1]:.6g}")
        self.sol = sol

    def series(self, s, order):
        """Taylor coefficients ``U^(m)(s)/m!`` for m = 0..order."""
        s = np.asarray(s, dtype=float)
        y = self.sol.sol(np.ravel(s))
        L0 = y[0].reshape(s.shape)
        L1 = y[1].reshape(s.shape)
        coef = np.zeros((order + 1,) + s.shape)
        coef[0] = L0
        if order >= 1:
            coef[1] = L1
        for _ in range(max(order - 1, 0)):
            L = Jet(coef.copy(), 1, order)
            f = self.sigma * (2.0 * L).exp() + self.c * (-L).exp()
            for k in range(order - 1):
                coef[k + 2] = f.coef[k] / ((k + 1) * (k + 2))
        return Jet(coef, 1, order).exp().coef

    def jet(self, points, order):
        x, y = np.broadcast_arrays(*[np.asarray(p, dtype=float) for p in points])
        return univariate_to_sum(self.series(x + y, order), 2, order)

    def on_grid(self, grid, order):
        return self.jet(grid.mesh(), order)

    def sample(self, grid, order=4):
        return GridField(self.jet(grid.mesh(), 0).value, grid, order)

    def __call__(self, *pts):
        return self.jet(pts, 0).value


def travelling_wave(c, initial, domain=(0.0, 1.0), samples=65, reduction="lie"):
    """Travelling-wave solution on the square ``domain x domain``.

    ``initial = (U0, U0')`` is imposed at the lower-left corner ``s = 2 lo``.
    Returns the wave (a jet source) and the sampling grid.
    """
    lo, hi = float(domain[0]), float(domain[1])
    wave = TravellingWave(c, initial[0], initial[1], (2.0 * lo, 2.0 * hi), reduction)
    grid = Grid((lo, lo), (hi, hi), (samples, samples))
    return wave, grid


# -- sweep integration of total differential systems ---------------------------------------

def _rk4_line(rhs, state, t0, t1, steps):
    h = (t1 - t0) / steps
    t = t0
    for _ in range(steps):
        k1 = rhs(t, state)
        k2 = rhs(t + 0.5 * h, state + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, state + 0.5 * h * k2)
        k4 = rhs(t + h, state + h * k3)
        state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
    return state


def sweep_integrate(d1, d2, seed, grid, substeps=4, order="xy"):
    """Integrate ``dX = d1 dx + d2 dy`` over the grid from its lower-left corner.

    ``order="xy"`` walks the base row in x and then every column in y;
    ``"yx"`` does the opposite.  ``d1(x, y, X)`` and ``d2`` receive point
    arrays and a state of shape ``(nstate, npoints)``.  Fourth-order
    Runge-Kutta with ``substeps`` steps per grid cell.
    """
    xs, ys = grid.axis(0), grid.axis(1)
    seed = np.asarray(seed, dtype=float)
    nst = len(seed)
    out = np.zeros((nst, len(xs), len(ys)))
    first, second = (d1, d2) if order == "xy" else (d2, d1)
    ax1, ax2 = (xs, ys) if order == "xy" else (ys, xs)
    base = np.zeros((nst, len(ax1)))
    base[:, 0] = seed
    st = seed.reshape(nst, 1)
    c2 = np.full(1, ax2[0])
    for i in range(1, len(ax1)):
        if order == "xy":
            f = lambda t, X: first(np.full(1, t), c2, X)
        else:
            f = lambda t, X: first(c2, np.full(1, t), X)
        st = _rk4_line(f, st, ax1[i - 1], ax1[i], substeps)
        base[:, i] = st[:, 0]
    line = base.copy()
    res = np.zeros((nst, len(ax1), len(ax2)))
    res[:, :, 0] = base
    for j in range(1, len(ax2)):
        if order == "xy":
            f = lambda t, X: second(ax1, np.full(len(ax1), t), X)
        else:
            f = lambda t, X: second(np.full(len(ax1), t), ax1, X)
        line = _rk4_line(f, line, ax2[j - 1], ax2[j], substeps)
        res[:, :, j] = line
        if not np.all(np.isfinite(line)):
            raise StepFailure("integration produced non-finite values")
    if order == "xy":
        out[:] = res
    else:
        out[:] = np.transpose(res, (0, 2, 1))
    return out


def _path_report(a, b, names):
    out = {}
    for i, n in enumerate(names):
        scale = max(float(np.max(np.abs(a[i]))), 1.0)
        out[n] = float(np.max(np.abs(a[i] - b[i]))) / scale
    return out


# -- projective reconstruction --------------------------------------------------------------

@dataclass
class ProjectiveNetData:
    a: np.ndarray
    b: np.ndarray
    p: np.ndarray
    q: np.ndarray
    f: np.ndarray


def _projective_point_data(fs, x, y):
    p, V, W = fs.jets((x, y), 2)
    return {"p": p.value, "px": p.d(1, 0), "py": p.d(0, 1), "pxx": p.d(2, 0), "pyy": p.d(0, 2),
            "V": F.value(V), "W": F.value(W)}


def reconstruct_projective_surface(fs, grid, seeds, substeps=4, tol=1e-6):
    """Integrate (a, b, f) and three solutions of the asymptotic-net system.

    ``seeds``: ``a``, ``b``, ``f`` (numbers) and ``r`` as three rows
    ``(r, r_x, r_y, r_xy)``, one per solution, all at the lower-left corner.
    Returns ``(GridImmersion, ProjectiveNetData, report)`` where the report
    holds path-independence residuals of every integrated quantity.
    """
    if fs.reduction != "projective":
        raise ValidationError("reconstruction needs the projective reduction")
    rs = np.asarray(seeds["r"], dtype=float)
    if rs.shape != (3, 4):
        raise ValidationError("r seeds must be three rows (r, r_x, r_y, r_xy)")
    seed = np.concatenate([[seeds.get("a", 0.0), seeds.get("b", 0.0), seeds.get("f", 0.0)],
                           rs[:, 0], rs[:, 1], rs[:, 2], rs[:, 3]])

    def unpack(X):
        return X[0], X[1], X[2], X[3:6], X[6:9], X[9:12], X[12:15]

    def d1(x, y, X):
        a, b, f, r, rx, ry, rxy = unpack(X)
        D = _projective_point_data(fs, x, y)
        p = D["p"]
        ax = D["py"] + b * p + 0.5 * a * a - 1.5 * D["V"]
        fx = (D["pyy"] + a * p * p + 0.5 * p * b * b - 1.5 * p * D["W"] + b * D["py"] + a * f
              - 2.0 * p * D["px"])
        rxx = a * rx + p * ry
        ryy = p * rx + b * ry
        rxxy = f * rx + a * rxy + D["py"] * ry + p * ryy
        return np.concatenate([[ax, f, fx], rx, rxx, rxy, rxxy])

    def d2(x, y, X):
        a, b, f, r, rx, ry, rxy = unpack(X)
        D = _projective_point_data(fs, x, y)
        p = D["p"]
        by = D["px"] + a * p + 0.5 * b * b - 1.5 * D["W"]
        fy = (D["pxx"] + b * p * p + 0.5 * p * a * a - 1.5 * p * D["V"] + a * D["px"] + b * f
              - 2.0 * p * D["py"])
        rxx = a * rx + p * ry
        ryy = p * rx + b * ry
        rxyy = D["px"] * rx + p * rxx + f * ry + b * rxy
        return np.concatenate([[f, by, fy], ry, rxy, ryy, rxyy])

    A = sweep_integrate(d1, d2, seed, grid, substeps, "xy")
    B = sweep_integrate(d1, d2, seed, grid, substeps, "yx")
    names = ["a", "b", "f"] + [f"{q}[{i}]" for q in ("r", "r_x", "r_y", "r_xy") for i in range(3)]
    paths = _path_report(A, B, names)
    worst = max(paths.values())
    report = {"path_independence": paths, "max_path_residual": worst, "tolerance": tol}
    if worst > tol:
        raise IncompatibleData(f"path-independence residual {worst:.3e} exceeds {tol:g}; "
                               "the fields do not solve the projective mVN system")
    p = fs.U.jet(grid.mesh(), 0).value
    net = ProjectiveNetData(A[0], A[1], p, p, A[2])
    imm = GridImmersion(A[3:6], grid, label="projective reconstruction")
    report["state"] = {"r": A[3:6], "r_x": A[6:9], "r_y": A[9:12], "r_xy": A[12:15]}
    return imm, net, report


def asymptotic_net_residual(state, net, grid):
    """Residuals of ``r_xx = a r_x + p r_y``, ``r_yy = q r_x + b r_y`` by differentiating
    the integrated first derivatives once (fourth-order differences)."""
    rx = [GridField(c, grid) for c in state["r_x"]]
    ry = [GridField(c, grid) for c in state["r_y"]]
    out = {"xx": 0.0, "yy": 0.0, "xy": 0.0}
    for i in range(3):
        rxx = F.value(rx[i].diff(0))
        ryy = F.value(ry[i].diff(1))
        rxy = F.value(rx[i].diff(1))
        out["xx"] = max(out["xx"], float(np.max(np.abs(rxx - net.a * state["r_x"][i]
                                                       - net.p * state["r_y"][i]))))
        out["yy"] = max(out["yy"], float(np.max(np.abs(ryy - net.q * state["r_x"][i]
                                                       - net.b * state["r_y"][i]))))
        out["xy"] = max(out["xy"], float(np.max(np.abs(rxy - state["r_xy"][i]))))
    return out


def exponential_span_residual(r, grid):
    """Distance of each component of ``r`` to span{exp(alpha x + alpha^2 y): alpha^3 = 1}."""
    X, Y = grid.mesh()
    w = np.exp(2j * np.pi / 3.0)
    e0 = np.exp(X + Y)
    e1 = np.exp(w * X + w * w * Y)
    basis = np.stack([e0.ravel(), e1.real.ravel(), e1.imag.ravel()], axis=1)
    out = []
    for comp in r:
        coef, *_ = np.linalg.lstsq(basis, comp.ravel(), rcond=None)
        out.append(float(np.max(np.abs(basis @ coef - comp.ravel())))
                   / max(float(np.max(np.abs(comp))), 1e-300))
    return max(out)


def exponential_seeds():
    """Seeds of e^{x+y}, Re and Im of e^{w x + w^2 y} (w = e^{2 pi i/3}) at the origin."""
    w = np.exp(2j * np.pi / 3.0)
    rows = [[1.0, 1.0, 1.0, 1.0]]
    for part in (np.real, np.imag):
        rows.append([part(1.0 + 0j), part(w), part(w * w), part(w ** 3)])
    return np.asarray(rows, dtype=float)


def affine_sphere_seeds(p_source, x0, y0, r0=((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))):
    """Seeds for a proper affine sphere: a = -p_x/p, b = -p_y/p, f = a_y, r_xy = r/p."""
    pj = p_source.jet((np.array([x0]), np.array([y0])), 2)
    p, px, py = pj.value[0], pj.d(1, 0)[0], pj.d(0, 1)[0]
    lnp_xy = _d(F.log(pj), 0, 1).value[0]
    rows = []
    for r, rx, ry in r0:
        rows.append([r, rx, ry, r / p])
    return {"a": -px / p, "b": -py / p, "f": -lnp_xy, "r": rows}


def affine_sphere_residual(state, p, grid):
    """``r_xy - r/p`` for the reconstructed radius vector."""
    return max(float(np.max(np.abs(state["r_xy"][i] - state["r"][i] / p))) for i in range(3))


# -- the Lie-density chain ------------------------------------------------------------------

CHAIN_NAMES = ("k", "m", "n", "A", "B", "F")


@dataclass
class AuxChainState:
    k: np.ndarray
    m: np.ndarray
    n: np.ndarray
    A: np.ndarray
    B: np.ndarray
    F: np.ndarray
    G: np.ndarray
    H: np.ndarray
    rho: np.ndarray = None


def _chain_point_data(fs, x, y):
    U, V, W = fs.jets((x, y), 3)
    u = U.value
    ux, uy = U.d(1, 0), U.d(0, 1)
    uxx, uyy, uxy = U.d(2, 0), U.d(0, 2), U.d(1, 1)
    V, W = F.value(V), F.value(W)
    G = -3.0 * W - 2.0 * uyy / u + (uy / u) ** 2
    H = 3.0 * V + 2.0 * uxx / u - (ux / u) ** 2
    return {"U": u, "Ux": ux, "Uy": uy, "lnUxy": uxy / u - ux * uy / (u * u), "G": G, "H": H}


def _chain_d1(fs):
    def d1(x, y, X):
        k, m, n, A, B, Fv = X
        D = _chain_point_data(fs, x, y)
        U, Ux, lxy = D["U"], D["Ux"], D["lnUxy"]
        ek, emk = np.exp(k), np.exp(-k)
        lx = Ux / U
        return np.stack([
            -lx + emk * n,
            lx * m - emk * (lxy - U * (m - n) + m * n),
            ek * ek * Fv + 0.5 * emk * (3 * n * n + 4 * n * U + U * U) - 2 * n * lx - 3 * Ux
            + 0.5 * ek * D["H"],
            A * B + U * U + U * m,
            -B * (lx - emk * n) - 0.5 * ek * ek * A * A + 0.5 * B * B - ek * Fv,
            -Fv * (lx - emk * n) + ek * ek * U * m * (U + m)
            + 0.5 * U * (D["G"] + 2 * emk * Fv - ek * ek * (3 * m * m + 4 * m * U + U * U)),
        ])

    return d1


def _chain_d2(fs):
    def d2(x, y, X):
        k, m, n, A, B, Fv = X
        D = _chain_point_data(fs, x, y)
        U, Uy, lxy = D["U"], D["Uy"], D["lnUxy"]
        ek, emk = np.exp(k), np.exp(-k)
        ly = Uy / U
        return np.stack([
            ly + ek * m,
            emk * emk * Fv - 0.5 * ek * (3 * m * m + 4 * m * U + U * U) - 2 * m * ly - 3 * Uy
            + 0.5 * emk * D["G"],
            ly * n + ek * (lxy + U * (m - n) + m * n),
            -A * (ly + ek * m) + 0.5 * A * A - 0.5 * emk * emk * B * B + emk * Fv,
            A * B + U * U + U * n,
            -Fv * (ly + ek * m) + emk * emk * U * n * (U + n)
            - 0.5 * U * (D["H"] + 2 * ek * Fv + emk * emk * (3 * n * n + 4 * n * U + U * U)),
        ])

    return d2


def auxiliary_chain(fs, grid, seeds=None, substeps=4, tol=1e-6):
    """Replay the Lie-density chain for a Lie-reduction field set.

    ``G`` and ``H`` come from ``V`` and ``W`` by the closing substitutions;
    ``(k, m, n, A, B, F)`` are integrated from ``seeds`` at the lower-left
    corner along both sweep orders.  Returns the state and a report with
    path-independence residuals and the residual of every numbered relation
    (first derivatives of the integrated fields by fourth-order differences).
    """
    if fs.reduction != "lie":
        raise ValidationError("the chain is written for the Lie reduction")
    seeds = dict(seeds or {})
    seed = [float(seeds.get(n, 0.0)) for n in CHAIN_NAMES]
    d1, d2 = _chain_d1(fs), _chain_d2(fs)
    S1 = sweep_integrate(d1, d2, seed, grid, substeps, "xy")
    S2 = sweep_integrate(d1, d2, seed, grid, substeps, "yx")
    paths = _path_report(S1, S2, CHAIN_NAMES)
    X, Y = grid.mesh()
    D = _chain_point_data(fs, X, Y)
    st = AuxChainState(*S1, G=D["G"], H=D["H"])
    rel = chain_relations(st, fs, grid)
    worst_path = max(paths.values())
    worst_rel = max(rel.values())
    report = {"path_independence": paths, "relations": rel, "max_path_residual": worst_path,
              "max_relation_residual": worst_rel, "tolerance": tol,
              "seeds": dict(zip(CHAIN_NAMES, seed))}
    if worst_path > tol or worst_rel > tol:
        err = IncompatibleData(f"chain residuals exceed {tol:g} (path {worst_path:.3e}, "
                               f"relations {worst_rel:.3e})")
        err.report = report
        raise err
    return st, report


def chain_relations(st, fs, grid):
    """Residuals of the numbered relations on integrated chain fields."""
    g = lambda a: GridField(a, grid, 4)
    k, m, n, A, B, Fv = (g(getattr(st, q)) for q in CHAIN_NAMES)
    U3, V, W = fs.on_grid(grid, 3)
    U = g(U3.value)
    Ux, Uy = U3.d(1, 0), U3.d(0, 1)
    ek, emk = F.exp(k), F.exp(-k)
    out = {}
    out["eq10.3"] = k.diff(0).diff(1) - (A.diff(0) - B.diff(1))
    out["eq10.4"] = (ek * A).diff(1) + (emk * B).diff(0)
    out["eq10.5"] = A.diff(0) - (A * B + U * U - (U * emk).diff(1))
    out["eq10.6"] = B.diff(1) - (A * B + U * U + (U * ek).diff(0))
    out["eq10.7"] = np.maximum(np.abs(F.value(k.diff(0)) + Ux / U3.value - F.value(emk * n)),
                               np.abs(F.value(k.diff(1)) - Uy / U3.value - F.value(ek * m)))
    # eq10.13 involves only the given fields: evaluate with exact jets
    Gj = -3.0 * W - 2.0 * _d(U3, 1, 1) / U3.truncate(1) + (U3.diff(1) / U3) ** 2
    Hj = 3.0 * V + 2.0 * _d(U3, 0, 0) / U3.truncate(1) - (U3.diff(0) / U3) ** 2
    U2 = (U3 * U3).truncate(1)
    out["eq10.13"] = (Gj * U2).diff(1) + (Hj * U2).diff(0)
    return {key: float(np.max(np.abs(F.value(v)))) for key, v in out.items()}


# -- curvature-line system marching -----------------------------------------------------------

def enneper_cyclidic_chart(params=None):
    """Enneper's surface in coordinates where its cubic form is ``e^{2 rho}(dR1^3 + dR2^3)``.

    On the quadrant u < 0 < v the principal coordinates ``(u, v)`` of
    Enneper's surface have cubic-form ratio ``-u/v``; the reparametrization
    ``u = -(-4 R1/3)^{3/4}``, ``v = (4 R2/3)^{3/4}`` makes the coefficients
    equal.  The result is a closed-form diagonally-cyclidic chart with
    ``d1k1, d2k2 > 0`` (an exact solution of the curvature-line system).
    """
    params = dict(params or {})
    lo = params.get("lo", (-0.9, 0.45))
    hi = params.get("hi", (-0.45, 0.9))
    shape = params.get("shape", (17, 17))
    if isinstance(shape, int):
        shape = (shape, shape)
    grid = Grid(lo, hi, shape)
    if grid.hi[0] >= 0.0 or grid.lo[1] <= 0.0:
        raise ValidationError("the cyclidic Enneper chart needs R1 < 0 < R2")

    def source(R1, R2):
        u = -((-4.0 / 3.0) * R1).power(0.75)
        v = ((4.0 / 3.0) * R2).power(0.75)
        du = ((-4.0 / 3.0) * R1).power(-0.25)      # du/dR1
        dv = ((4.0 / 3.0) * R2).power(-0.25)       # dv/dR2
        w = 1.0 + u * u + v * v
        k = 2.0 / (w * w)
        return {"k1": k, "k2": -k, "g11": w * w * du * du, "g22": w * w * dv * dv}

    return CurvatureLineChart(grid, source, None, None, "enneper_cyclidic", params)


def cyclidic_rho(chart, order=3):
    """``rho`` with ``g_ii = e^{2 rho} / d_i k^i`` (needs equal cubic coefficients)."""
    fl = chart.fields(order)
    c1 = fl["k1"].diff(0) * fl["g11"].truncate(order - 1)
    return 0.5 * F.log(c1)


def chebyshev_nodes(n, lo, hi):
    """Ascending Chebyshev-Lobatto nodes on [lo, hi] and the differentiation matrix."""
    t = np.cos(np.pi * np.arange(n + 1) / n)
    c = np.r_[2.0, np.ones(n - 1), 2.0] * (-1.0) ** np.arange(n + 1)
    dT = t[:, None] - t[None, :]
    D = np.outer(c, 1.0 / c) / (dT + np.eye(n + 1))
    D -= np.diag(D.sum(axis=1))
    x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * t[::-1]
    return x, D[::-1, ::-1] * 2.0 / (hi - lo)


class ChebyshevSurrogate:
    """Tensor Chebyshev interpolant with jets of any order at arbitrary points."""

    def __init__(self, values, lo, hi):
        self.lo = tuple(float(v) for v in lo)
        self.hi = tuple(float(v) for v in hi)
        n1, n2 = values.shape
        self.coef = _cheb_fit2(values)
        self.shape = (n1, n2)

    def _scaled(self, p, ax):
        return (2.0 * np.asarray(p, dtype=float) - self.lo[ax] - self.hi[ax]) / (self.hi[ax] - self.lo[ax])

    def jet(self, points, order):
        x, y = np.broadcast_arrays(*[np.asarray(p, dtype=float) for p in points])
        sx, sy = self._scaled(x, 0), self._scaled(y, 1)
        idx, _, _ = _jet_basis(2, order)
        coef = np.zeros((len(idx),) + x.shape)
        w = [2.0 / (self.hi[a] - self.lo[a]) for a in range(2)]
        for k, (p, q) in enumerate(idx):
            c = self.coef
            if p:
                c = cheb.chebder(c, p, scl=w[0], axis=0)
            if q:
                c = cheb.chebder(c, q, scl=w[1], axis=1)
            coef[k] = cheb.chebval2d(sx, sy, c) / (factorial(p) * factorial(q))
        return Jet(coef, 2, order)


def _cheb_fit2(values):
    """Chebyshev coefficients from samples at Lobatto nodes (both axes ascending)."""
    c = values
    for ax in range(2):
        n = c.shape[ax] - 1
        t = np.cos(np.pi * np.arange(n + 1) / n)[::-1]
        V = cheb.chebvander(t, n)
        c = np.moveaxis(np.tensordot(np.linalg.inv(V), np.moveaxis(c, ax, 0), axes=(1, 0)), 0, ax)
    return c


def solve_44(seed, r1_range, r2_range, nodes=14, rtol=1e-13, atol=1e-15, max_steps=10 ** 6,
             grid_shape=(17, 17)):
    """March the diagonally-cyclidic curvature-line system in R2 (method of lines).

    State on each line ``R2 = const``, sampled at Chebyshev nodes in R1:
    ``k1, k2, s, t, alpha`` with ``s = ln sqrt(g11)``, ``t = ln sqrt(g22)``
    and ``alpha = d2 s``.  Evolution:

    * ``d2 k2 = e^{2(s - t)} d1 k1`` (equal cubic coefficients),
    * ``d2 k1 = alpha (k2 - k1)`` and ``d2 s = alpha`` (Codazzi),
    * ``d2 t = tau`` where ``d1 tau = d2 (d1 k2/(k1 - k2))`` integrated from
      the line ``R1 = R1_0`` (Codazzi),
    * ``d2 alpha`` from the Gauss equation.

    The system is elliptic when ``d1k1 d2k2 > 0``, so the marching problem
    is ill-posed: spectral differentiation keeps truncation errors near
    round-off, which makes short strips accurate, but perturbations grow
    with the distance marched and with ``nodes``.

    ``seed`` holds callables of R1 on the base line (``k1, k2, k2_2, rho,
    alpha0``) and ``d2t0`` of R2 on the line ``R1 = R1_0``.  Returns a
    closed-form chart (spectral surrogate), ``rho`` as a jet source and a
    report with the seed consistency and the curvature-line system residuals (tag eq4.4).
    """
    x, D = chebyshev_nodes(nodes, *r1_range)
    y, _ = chebyshev_nodes(nodes, *r2_range)
    k1 = np.asarray(seed["k1"](x), dtype=float)
    k2 = np.asarray(seed["k2"](x), dtype=float)
    k2_2 = np.asarray(seed["k2_2"](x), dtype=float)
    rho = np.asarray(seed["rho"](x), dtype=float)
    k1x = D @ k1
    if np.any(k1x <= 0) or np.any(k2_2 <= 0):
        raise GenericityLoss("seed needs d1k1 > 0 and d2k2 > 0 on the base line")
    s = rho - 0.5 * np.log(k1x)
    t = rho - 0.5 * np.log(k2_2)
    alpha = np.asarray(seed["alpha0"](x), dtype=float)
    # base-line consistency: d1 t = d1k2/(k1 - k2)
    seed_res = float(np.max(np.abs(D @ t - (D @ k2) / (k1 - k2))))
    n = len(x)
    Dm = D.copy()
    Dm[0] = 0.0
    Dm[0, 0] = 1.0
    Dinv = np.linalg.inv(Dm)
    tau_fn = seed["d2t0"]
    steps = [0]

    def cum(v):
        w = v.copy()
        w[0] = 0.0
        return Dinv @ w

    def rhs(r2, Y):
        steps[0] += 1
        if steps[0] > max_steps:
            raise StepFailure("step budget exhausted")
        k1, k2, s, t, al = Y.reshape(5, n)
        k1x = D @ k1
        if np.any(k1x <= 0):
            raise GenericityLoss(f"d1k1 vanishes near R2 = {r2:.6g}")
        k2y = np.exp(2.0 * (s - t)) * k1x
        k1y = al * (k2 - k1)
        k2x = D @ k2
        by = ((D @ k2y) * (k1 - k2) - k2x * (k1y - k2y)) / (k1 - k2) ** 2
        tau = cum(by) + tau_fn(r2)
        inner = D @ (np.exp(t - s) * (D @ t))
        # Gauss: d2(e^{s-t} alpha) = -k1 k2 e^{s+t} - d1(e^{t-s} d1 t)
        aly = (-k1 * k2 * np.exp(s + t) - inner) * np.exp(t - s) - al * (al - tau)
        return np.concatenate([k1y, k2y, al, tau, aly])

    Y0 = np.concatenate([k1, k2, s, t, alpha])
    sol = solve_ivp(rhs, (y[0], y[-1]), Y0, method="DOP853", t_eval=y, rtol=rtol, atol=atol)
    if sol.status != 0:
        raise StepFailure(f"marching failed: {sol.message}")
    K1, K2, S, T, _ = sol.y.reshape(5, n, len(y))
    lo, hi = (r1_range[0], r2_range[0]), (r1_range[1], r2_range[1])
    sur = {"k1": ChebyshevSurrogate(K1, lo, hi), "k2": ChebyshevSurrogate(K2, lo, hi),
           "g11": ChebyshevSurrogate(np.exp(2.0 * S), lo, hi),
           "g22": ChebyshevSurrogate(np.exp(2.0 * T), lo, hi)}

    def source(R1, R2):
        pts = (R1.value, R2.value)
        return {key: v.jet(pts, R1.order) for key, v in sur.items()}

    grid = Grid(lo, hi, grid_shape)
    chart = CurvatureLineChart(grid, source, None, None, "solve_44",
                               {"r1_range": list(r1_range), "r2_range": list(r2_range),
                                "nodes": nodes})
    rho_src = ChebyshevSurrogate(S + 0.5 * np.log(np.maximum(D @ K1, 1e-300)), lo, hi)
    f4 = chart.fields(4)
    if np.any(F.value(f4["k1"].diff(0)) <= 0):
        raise GenericityLoss("d1k1 changed sign inside the domain")
    rep = residual("eq4.4", {"k1": f4["k1"], "k2": f4["k2"], "rho": rho_src.jet(grid.mesh(), 4)})
    report = {"seed_residual": seed_res, "rhs_evaluations": steps[0], "eq4.4": rep.summary()}
    chart.flags["solve_44"] = report
    # third derivatives of an interpolant of marched data: closed-form tolerance is too tight
    chart.flags["classify_tol"] = 1e-5
    return chart, rho_src, report


def seed_from_chart(chart, order=3):
    """Seed dictionary for :func:`solve_44` read off a closed-form cyclidic chart."""
    src = chart.source
    g = chart.grid
    x0 = g.lo[0]
    y0 = g.lo[1]

    def fields_at(xs, ys, order):
        X, Y = Jet.variables([np.asarray(xs, float), np.asarray(ys, float)], order)
        return src(X, Y)

    def line(key, xs):
        f = fields_at(xs, np.full_like(xs, y0), order)
        return f

    def k1(xs):
        return F.value(line("k1", xs)["k1"])

    def k2(xs):
        return F.value(line("k2", xs)["k2"])

    def rho(xs):
        f = line(None, xs)
        return F.value(0.5 * F.log(f["k1"].diff(0) * f["g11"].truncate(order - 1)))

    def k2_2(xs):
        return F.value(line(None, xs)["k2"].diff(1))

    def alpha0(xs):
        f = line(None, xs)
        return F.value(0.5 * F.log(f["g11"]).diff(1))

    def d2t0(r2):
        f = fields_at(np.array([x0]), np.array([r2]), order)
        return float(F.value(0.5 * F.log(f["g22"]).diff(1))[0])

    return {"k1": k1, "k2": k2, "rho": rho, "k2_2": k2_2, "alpha0": alpha0, "d2t0": d2t0}


# -- Lie density ------------------------------------------------------------------------------

def lie_density(chart, order=3):
    """``U = sqrt(d1k1 d2k2) / |k1 - k2|`` as a field; raises on negative radicand."""
    fl = chart.fields(order)
    k1, k2 = fl["k1"], fl["k2"]
    if np.any(is_umbilic(F.value(k1), F.value(k2))):
        raise UmbilicPoint("principal curvatures coincide on the domain")
    prod = k1.diff(0) * k2.diff(1)
    pv = F.value(prod)
    scale = inv.field_scale(pv)
    if np.all(np.abs(pv) < inv.ZERO_REL * max(scale, 1.0)):
        return None
    if np.any(pv < -inv.ZERO_REL * scale):
        raise NegativeRadicand("d1k1 * d2k2 < 0: the Lie density is not real on this chart")
    dk = (k1 - k2).truncate(order - 1)
    return F.sqrt(prod) / abs(dk)


def potentials_by_quadrature(U, grid):
    """V, W with d2 V = d1(U^2), d1 W = d2(U^2).

    Gauge: zero mean along periodic directions, zero on the base line
    otherwise (W on R1 = R1_0, V on R2 = R2_0).
    """
    u2 = U * U
    dW = F.value(u2.diff(1))   # d1 W = d2(U^2): integrate along axis 0
    dV = F.value(u2.diff(0))   # d2 V = d1(U^2): integrate along axis 1
    W = _integrate_axis(dW, grid, 0)
    V = _integrate_axis(dV, grid, 1)
    return V, W


def _integrate_axis(f, grid, axis):
    x = grid.axis(axis)
    if grid.periodic[axis]:
        n = grid.shape[axis]
        L = grid.hi[axis] - grid.lo[axis]
        fh = np.fft.fft(f, axis=axis)
        kk = np.fft.fftfreq(n, d=L / n) * 2.0 * np.pi
        shape = [1] * f.ndim
        shape[axis] = n
        kk = kk.reshape(shape)
        mean = np.take(fh, [0], axis=axis)
        if np.max(np.abs(mean)) > 1e-8 * (np.max(np.abs(fh)) + 1e-300):
            raise IncompatibleData("nonzero mean: no periodic potential exists")
        with np.errstate(divide="ignore", invalid="ignore"):
            gh = np.where(kk == 0, 0.0, fh / (1j * kk))
        return np.real(np.fft.ifft(gh, axis=axis))
    f = np.moveaxis(f, axis, -1)
    out = np.concatenate([np.zeros(f.shape[:-1] + (1,)), cumulative_simpson(f, x=x, axis=-1)],
                         axis=-1)
    return np.moveaxis(out, -1, axis)


GAUGES = ("baseline", "fitted")


def _cheb_columns(t, lo, hi, degree, start=0):
    """Chebyshev polynomials on [lo, hi] and their derivatives at ``t``."""
    s = (2.0 * t - lo - hi) / (hi - lo)
    out = []
    for k in range(start, degree + 1):
        e = np.zeros(k + 1)
        e[k] = 1.0
        out.append((cheb.chebval(s, e), cheb.chebval(s, cheb.chebder(e)) * 2.0 / (hi - lo)))
    return out


def _lie_density_arrays(chart):
    """U and the derivatives the mVN residual needs, as arrays.

    Closed-form charts use exact jets and Simpson quadrature of exact
    derivatives for V, W and their first derivatives; sampled charts use
    finite differences.
    """
    grid = chart.grid
    if chart.closed_form:
        U = lie_density(chart, 5)
        if U is None:
            return None
        U2 = U * U
        x, y = grid.axis(0), grid.axis(1)
        return {"U": U.value, "Ux": U.d(1, 0), "Uy": U.d(0, 1), "Uxxx": U.d(3, 0),
                "Uyyy": U.d(0, 3), "V": _integrate_axis(U2.d(1, 0), grid, 1),
                "Vx": _integrate_axis(U2.d(2, 0), grid, 1),
                "W": _integrate_axis(U2.d(0, 1), grid, 0),
                "Wy": _integrate_axis(U2.d(0, 2), grid, 0)}
    U = lie_density(chart)
    if U is None:
        return None
    Ug = GridField(F.value(U), grid, 4)
    V, W = potentials_by_quadrature(Ug, grid)
    return {"U": Ug.value, "Ux": F.value(Ug.diff(0)), "Uy": F.value(Ug.diff(1)),
            "Uxxx": F.value(_d(Ug, 0, 0, 0)), "Uyyy": F.value(_d(Ug, 1, 1, 1)),
            "V": V, "Vx": F.value(GridField(V, grid).diff(0)),
            "W": W, "Wy": F.value(GridField(W, grid).diff(1))}


def _mvn_from_arrays(a):
    return (a["Uxxx"] + 3.0 * a["Ux"] * a["V"] + 1.5 * a["U"] * a["Vx"]
            - a["Uyyy"] - 3.0 * a["Uy"] * a["W"] - 1.5 * a["U"] * a["Wy"])


def fit_gauge(a, grid, degree=16):
    """Least-squares gauge ``V += f(x)``, ``W += g(y)`` minimizing the mVN residual.

    ``f`` and ``g`` are Chebyshev polynomials of the given degree (the
    constant of ``g`` is dropped: it duplicates the constant of ``f`` up to
    the kernel of the residual).  Returns the gauged arrays.
    """
    X, Y = grid.mesh()
    cols = []
    for T, dT in _cheb_columns(X, grid.lo[0], grid.hi[0], degree):
        cols.append(3.0 * a["Ux"] * T + 1.5 * a["U"] * dT)
    for T, dT in _cheb_columns(Y, grid.lo[1], grid.hi[1], degree, 1):
        cols.append(-(3.0 * a["Uy"] * T + 1.5 * a["U"] * dT))
    M = np.stack([c.ravel() for c in cols], axis=1)
    coef, *_ = np.linalg.lstsq(M, -_mvn_from_arrays(a).ravel(), rcond=None)
    f = sum(c * T for c, (T, _) in zip(coef, _cheb_columns(X, grid.lo[0], grid.hi[0], degree)))
    fx = sum(c * dT for c, (_, dT) in zip(coef, _cheb_columns(X, grid.lo[0], grid.hi[0], degree)))
    rest = coef[degree + 1:]
    gy_cols = _cheb_columns(Y, grid.lo[1], grid.hi[1], degree, 1)
    g = sum(c * T for c, (T, _) in zip(rest, gy_cols))
    gy = sum(c * dT for c, (_, dT) in zip(rest, gy_cols))
    out = dict(a)
    out.update({"V": a["V"] + f, "Vx": a["Vx"] + fx, "W": a["W"] + g, "Wy": a["Wy"] + gy})
    return out


def lie_density_mvn_check(chart, gauge="baseline", degree=16):
    """Lie density of a diagonally-cyclidic chart and its mVN residual.

    V and W come from ``d2 V = d1(U^2)``, ``d1 W = d2(U^2)`` by quadrature.
    ``gauge="baseline"`` keeps the declared integration constants (zero on
    the base lines); ``"fitted"`` additionally adds the one-variable
    functions that minimize the residual, since the mVN equation is not
    invariant under ``V -> V + f(x)``, ``W -> W + g(y)``.  Both residuals
    are reported; the returned ``residual`` is the one of ``gauge``.
    """
    if gauge not in GAUGES:
        raise ValidationError(f"gauge must be one of {GAUGES}")
    a = _lie_density_arrays(chart)
    if a is None:
        return None, {"dupin": True, "U_max": 0.0}
    grid = chart.grid
    base = float(np.max(np.abs(_mvn_from_arrays(a))))
    fitted = float(np.max(np.abs(_mvn_from_arrays(fit_gauge(a, grid, degree)))))
    Uv = a["U"]
    info = {"dupin": False, "U_min": float(np.min(Uv)), "U_max": float(np.max(Uv)),
            "U_variation": float(np.ptp(Uv) / np.max(np.abs(Uv))),
            "residual_baseline": base, "residual_fitted": fitted, "gauge": gauge,
            "residual": base if gauge == "baseline" else fitted}
    return GridField(Uv, grid, 4), info
