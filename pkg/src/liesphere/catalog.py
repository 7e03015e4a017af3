"""Closed-form test geometries in curvature-line coordinates.

Every entry returns a :class:`~liesphere.geometry.CurvatureLineChart`; most
also attach the immersion they come from.  ``graph_patch`` builds its
curvature-line coordinates numerically by integrating principal-direction
streamlines.
"""
import math

import numpy as np
from scipy.integrate import solve_ivp

from . import fields as F
from .errors import NotConjugate, UmbilicInDomain, UnknownCatalogId
from .expr import Expression
from .fields import Grid, GridField
from .geometry import (CurvatureLineChart, GridImmersion, Immersion, chart_from_immersion,
                       is_umbilic)
from .jet import Jet

TWO_PI = 2.0 * math.pi


def _grid(params, lo, hi, periodic, default_shape):
    shape = params.get("shape", default_shape)
    if isinstance(shape, int):
        shape = (shape, shape)
    lo = tuple(params.get("lo", lo))
    hi = tuple(params.get("hi", hi))
    per = tuple(params.get("periodic", periodic))
    return Grid(lo, hi, tuple(shape), per)


# -- surfaces in E3 ---------------------------------------------------------------

def plane(params=None):
    params = dict(params or {})
    grid = _grid(params, (-1.0, -1.0), (1.0, 1.0), (False, False), (17, 17))

    def fn(u, v):
        return [u, v, 0.0 * u]

    def source(u, v):
        z = 0.0 * u
        return {"k1": z, "k2": z, "g11": z + 1.0, "g22": z + 1.0}

    imm = Immersion(fn, normal_sign=1.0, label="plane")
    return CurvatureLineChart(grid, source, None, imm, "plane", params)


def sphere_immersion(radius=1.0):
    def fn(t, p):
        c = F.cos(t)
        return [radius * c * F.cos(p), radius * c * F.sin(p), radius * F.sin(t)]

    # d_theta x d_phi points inward for this parametrization
    return Immersion(fn, normal_sign=1.0, label="sphere", params={"radius": radius})


def sphere(params=None):
    params = dict(params or {})
    rho = float(params.get("radius", 1.0))
    if not params.get("allow_umbilic", False):
        raise UmbilicInDomain("every point of a round sphere is umbilic")
    grid = _grid(params, (-1.0, 0.0), (1.0, TWO_PI), (False, True), (17, 16))

    def source(t, p):
        c = F.cos(t)
        z = 0.0 * t
        return {"k1": z + 1.0 / rho, "k2": z + 1.0 / rho,
                "g11": z + rho ** 2, "g22": rho ** 2 * c * c}

    chart = CurvatureLineChart(grid, source, None, sphere_immersion(rho), "sphere", params)
    chart.flags["umbilic"] = True
    return chart


def torus_immersion(R=2.0, r=1.0):
    def fn(t, p):
        w = R + r * F.cos(t)
        return [w * F.cos(p), w * F.sin(p), r * F.sin(t)]

    return Immersion(fn, normal_sign=1.0, label="torus_of_revolution", params={"R": R, "r": r})


def torus(params=None):
    params = dict(params or {})
    R = float(params.get("R", 2.0))
    r = float(params.get("r", 1.0))
    if not R > r > 0:
        raise ValueError("torus needs R > r > 0")
    grid = _grid(params, (0.0, 0.0), (TWO_PI, TWO_PI), (True, True), (32, 32))

    def source(t, p):
        c = F.cos(t)
        w = R + r * c
        z = 0.0 * p
        return {"k1": z + 1.0 / r, "k2": c / w + z, "g11": z + r * r, "g22": w * w + z}

    return CurvatureLineChart(grid, source, None, torus_immersion(R, r), "torus_of_revolution",
                              {"R": R, "r": r, **params})


def surface_of_revolution(params=None):
    """Profile curve (rho(t), z(t)) rotated about the z-axis; R1 = t, R2 = angle."""
    params = dict(params or {})
    rho = Expression(params.get("rho", "cosh(t)"), ("t",))
    zed = Expression(params.get("z", "t"), ("t",))
    grid = _grid(params, (-1.0, 0.0), (1.0, TWO_PI), (False, True), (17, 16))

    def fn(t, p):
        rr = rho(t)
        return [rr * F.cos(p), rr * F.sin(p), zed(t) + 0.0 * p]

    imm = Immersion(fn, normal_sign=float(params.get("normal_sign", 1.0)),
                    label="surface_of_revolution")
    return chart_from_immersion(imm, grid, label="surface_of_revolution",
                                params={"rho": rho.text, "z": zed.text})


def ellipsoid_immersion(axes_sq):
    a = tuple(float(x) for x in axes_sq)

    def fn(u, v):
        out = []
        for i, ai in enumerate(a):
            den = 1.0
            for j, aj in enumerate(a):
                if j != i:
                    den *= ai - aj
            out.append(F.sqrt(ai * (ai - u) * (ai - v) / den))
        return out

    return Immersion(fn, normal_sign=-1.0, label="ellipsoid_confocal",
                     params={"axes_sq": list(a)})


def ellipsoid(params=None):
    """Triaxial ellipsoid in confocal coordinates (u, v), positive octant.

    Semi-axes ``(s1, s2, s3)`` with ``s1 < s2 < s3``; ``u`` ranges over
    ``(s1^2, s2^2)`` and ``v`` over ``(s2^2, s3^2)``.
    """
    params = dict(params or {})
    s = tuple(float(x) for x in params.get("semi_axes", (1.0, 2.0, 3.0)))
    if not 0 < s[0] < s[1] < s[2]:
        raise ValueError("semi-axes must be strictly increasing and positive")
    a, b, c = (x * x for x in s)
    lo = (a + (b - a) / 6.0, b + (c - b) / 6.0)
    hi = (b - (b - a) / 6.0, c - (c - b) / 6.0)
    grid = _grid(params, lo, hi, (False, False), (17, 17))
    if grid.lo[0] <= a or grid.hi[0] >= b or grid.lo[1] <= b or grid.hi[1] >= c:
        raise UmbilicInDomain("confocal patch must stay inside the open coordinate box")
    abc = a * b * c

    def source(u, v):
        base = F.sqrt(abc / (u * v))
        return {"k1": base / u, "k2": base / v,
                "g11": u * (v - u) / (4.0 * (u - a) * (b - u) * (c - u)),
                "g22": v * (v - u) / (4.0 * (v - a) * (v - b) * (c - v))}

    return CurvatureLineChart(grid, source, None, ellipsoid_immersion((a, b, c)),
                              "ellipsoid_confocal", {"semi_axes": list(s), **params})


def dupin_cyclide(params=None):
    """Ring cyclide with parameters a > mu > c > 0, b^2 = a^2 - c^2."""
    params = dict(params or {})
    a = float(params.get("a", 2.0))
    c = float(params.get("c", 0.5))
    mu = float(params.get("mu", 1.0))
    if not (a > mu > c > 0):
        raise ValueError("cyclide needs a > mu > c > 0")
    b = math.sqrt(a * a - c * c)
    grid = _grid(params, (0.0, 0.0), (TWO_PI, TWO_PI), (True, True), (32, 32))

    def fn(t, s):
        ct, cs = F.cos(t), F.cos(s)
        den = a - c * ct * cs
        x = (mu * (c - a * ct * cs) + b * b * ct) / den
        y = b * F.sin(t) * (a - mu * cs) / den
        z = b * F.sin(s) * (c * ct - mu) / den
        return [x, y, z]

    imm = Immersion(fn, normal_sign=float(params.get("normal_sign", 1.0)), label="dupin_cyclide")
    return chart_from_immersion(imm, grid, label="dupin_cyclide",
                                params={"a": a, "c": c, "mu": mu})


def minimal_weierstrass_immersion(scale=0.125):
    """Minimal surface with Weierstrass data g = (w^2 - 1)/4, f dw = dw/(2w).

    The Hopf differential is constant, so ``(Re w, Im w)`` are curvature-line
    coordinates.  The Gauss map is not radial, which makes the surface generic
    (neither Dupin nor with hexagonal curvature-line web).
    """

    def fn(u, v):
        ln = 0.5 * F.log(u * u + v * v)
        arg = F.arctan(v / u)
        w2r, w2i = u * u - v * v, 2.0 * u * v
        w4r, w4i = w2r * w2r - w2i * w2i, 2.0 * w2r * w2i
        return [scale * (15.0 * ln + w2r - 0.25 * w4r),
                -scale * (17.0 * arg - w2i + 0.25 * w4i),
                scale * (4.0 * w2r - 8.0 * ln)]

    return Immersion(fn, normal_sign=1.0, label="minimal_weierstrass", params={"scale": scale})


def minimal_weierstrass(params=None):
    params = dict(params or {})
    grid = _grid(params, (2.0, 0.3), (2.8, 1.2), (False, False), (17, 17))
    if grid.lo[0] <= 0.0:
        raise ValueError("the patch needs Re w > 0")
    imm = minimal_weierstrass_immersion(float(params.get("scale", 0.125)))
    return chart_from_immersion(imm, grid, label="minimal_weierstrass", params=params)


def synthetic(params=None):
    """Formula-test chart with user-supplied k1, k2, g11, g22 expressions (no immersion)."""
    params = dict(params or {})
    exprs = {key: Expression(str(params.get(key, dflt)))
             for key, dflt in (("k1", "R1"), ("k2", "R2"), ("g11", "1"), ("g22", "1"))}
    grid = _grid(params, (2.0, 0.0), (3.0, 1.0), (False, False), (17, 17))

    def source(u, v):
        return {key: ex(u, v) + 0.0 * u for key, ex in exprs.items()}

    return CurvatureLineChart(grid, source, None, None, "synthetic",
                              {key: ex.text for key, ex in exprs.items()})


def hyperboloid_asymptotic(params=None):
    """One-sheeted hyperboloid x^2 + y^2 - z^2 = 1 on its ruling (asymptotic) net."""

    def fn(u, v):
        t = F.tan(0.5 * (v - u))
        return [F.cos(u) - t * F.sin(u), F.sin(u) + t * F.cos(u), t + 0.0 * u]

    return Immersion(fn, normal_sign=1.0, label="hyperboloid_asymptotic")


# -- graph patch with numerically built curvature-line coordinates --------------------

class _GraphPrincipal:
    def __init__(self, expr):
        self.expr = expr

    def data(self, x, y):
        xs = Jet.variables([np.atleast_1d(np.asarray(x, float)),
                            np.atleast_1d(np.asarray(y, float))], 2)
        f = self.expr(*xs)
        fx, fy = f.d(1, 0), f.d(0, 1)
        fxx, fxy, fyy = f.d(2, 0), f.d(1, 1), f.d(0, 2)
        w = np.sqrt(1.0 + fx * fx + fy * fy)
        g = np.stack([np.stack([1 + fx * fx, fx * fy], -1), np.stack([fx * fy, 1 + fy * fy], -1)], -2)
        ii = np.stack([np.stack([fxx, fxy], -1), np.stack([fxy, fyy], -1)], -2) / w[:, None, None]
        L = np.linalg.cholesky(g)
        Li = np.linalg.inv(L)
        A = Li @ ii @ np.swapaxes(Li, -1, -2)
        kk, yv = np.linalg.eigh(0.5 * (A + np.swapaxes(A, -1, -2)))
        kk = kk[:, ::-1]
        vec = np.swapaxes(Li, -1, -2) @ yv[:, :, ::-1]
        return kk, vec

    def direction(self, p, which, ref):
        _, vec = self.data(p[0], p[1])
        e = vec[0, :, which]
        e = e / np.hypot(e[0], e[1])
        if np.dot(e, ref) < 0:
            e = -e
        return e


def graph_patch(params=None):
    """Graph z = f(x, y) in curvature-line coordinates built from streamlines.

    ``R1`` runs along the first principal direction (larger curvature) and
    ``R2`` along the second, both starting at ``base``; parameters are the
    planar arclengths of the two base curves.
    """
    params = dict(params or {})
    expr = Expression(params.get("f", "0.5*x^2 + 0.25*y^2 + 0.1*x^3 + 0.05*x*y^2"), ("x", "y"))
    base = np.asarray(params.get("base", (0.0, 0.0)), dtype=float)
    L = tuple(params.get("lengths", (0.4, 0.4)))
    tol = float(params.get("tol", 1e-10))
    grid = _grid(params, (0.0, 0.0), L, (False, False), (17, 17))
    gp = _GraphPrincipal(expr)
    kk, vec = gp.data(base[0], base[1])
    if is_umbilic(kk[0, 0], kk[0, 1]):
        raise UmbilicInDomain("base point of the graph patch is umbilic")
    refs = []
    for which in range(2):
        e = vec[0, :, which]
        refs.append(e / np.hypot(e[0], e[1]))

    def flow(start, which, span):
        ref = refs[which]

        def rhs(_, p):
            return gp.direction(p, which, ref)

        sol = solve_ivp(rhs, (0.0, span), start, method="RK45", rtol=tol, atol=tol,
                        dense_output=True, max_step=span / 8.0)
        if not sol.success:
            raise NotConjugate(f"streamline integration failed: {sol.message}")
        return sol.sol

    s1 = grid.axis(0)
    s2 = grid.axis(1)
    margin = 1.5
    c1 = flow(base, 0, s1[-1])
    c2 = flow(base, 1, s2[-1])
    lines2 = [flow(c1(a), 1, margin * s2[-1] + 1e-3) for a in s1]   # e2-lines from C1(s1)
    lines1 = [flow(c2(b), 0, margin * s1[-1] + 1e-3) for b in s2]   # e1-lines from C2(s2)
    xy = np.empty((2,) + grid.shape)
    for i, a in enumerate(s1):
        X = lines2[i]
        for j, b in enumerate(s2):
            Y = lines1[j]
            t, tau = b, a
            for _ in range(30):
                diff = X(t) - Y(tau)
                J = np.column_stack([gp.direction(X(t), 1, refs[1]), -gp.direction(Y(tau), 0, refs[0])])
                step = np.linalg.solve(J, diff)
                t -= step[0]
                tau -= step[1]
                if np.max(np.abs(step)) < 1e-14:
                    break
            xy[:, i, j] = X(t)
    x, y = xy
    z = expr(x, y)
    kk, _ = gp.data(x.ravel(), y.ravel())
    k1 = kk[:, 0].reshape(grid.shape)
    k2 = kk[:, 1].reshape(grid.shape)
    if np.any(is_umbilic(k1, k2)):
        raise UmbilicInDomain("graph patch contains an umbilic")
    samples = np.stack([x, y, z])
    imm = GridImmersion(samples, grid, normal_sign=1.0, label="graph_patch")
    r = imm.fields()
    r1 = [c.diff(0) for c in r]
    r2 = [c.diff(1) for c in r]
    g11 = r1[0] * r1[0] + r1[1] * r1[1] + r1[2] * r1[2]
    g22 = r2[0] * r2[0] + r2[1] * r2[1] + r2[2] * r2[2]
    g12 = r1[0] * r2[0] + r1[1] * r2[1] + r1[2] * r2[2]
    sampled = {"k1": GridField(k1, grid, 3), "k2": GridField(k2, grid, 3),
               "g11": GridField(g11.data, grid, 3), "g22": GridField(g22.data, grid, 3)}
    chart = CurvatureLineChart(grid, None, sampled, imm, "graph_patch",
                               {"f": expr.text, "base": list(base), "lengths": list(L)})
    chart.flags["g12_max"] = float(np.max(np.abs(g12.data) / np.sqrt(g11.data * g22.data)))
    return chart


# -- hypersurfaces in E4 -------------------------------------------------------------

def sphere3_immersion(radius=1.0):
    def fn(a, b, c):
        ca, cb = F.cos(a), F.cos(b)
        return [radius * ca * cb * F.cos(c), radius * ca * cb * F.sin(c),
                radius * ca * F.sin(b), radius * F.sin(a)]

    return Immersion(fn, 3, 4, normal_sign=1.0, label="sphere3")


def graph4_immersion(coeffs=(1.0, 2.0, 3.0), eps=0.1):
    q1, q2, q3 = coeffs

    def fn(x, y, z):
        w = (q1 * x * x + q2 * y * y + q3 * z * z
             + eps * (x * x * x + y * y * y + z * z * z + x * y * z))
        return [x, y, z, w]

    return Immersion(fn, 3, 4, normal_sign=1.0, label="graph4")


def torus_product_immersion(R=2.0, r=1.0):
    """Torus of revolution times a line: k = (1/r, cos t/(R + r cos t), 0)."""

    def fn(t, p, s):
        w = R + r * F.cos(t)
        return [w * F.cos(p), w * F.sin(p), r * F.sin(t), s]

    return Immersion(fn, 3, 4, normal_sign=1.0, label="torus_product")


CATALOG = {
    "plane": plane,
    "sphere": sphere,
    "torus_of_revolution": torus,
    "torus": torus,
    "surface_of_revolution": surface_of_revolution,
    "ellipsoid_confocal": ellipsoid,
    "ellipsoid": ellipsoid,
    "dupin_cyclide": dupin_cyclide,
    "graph_patch": graph_patch,
    "minimal_weierstrass": minimal_weierstrass,
    "synthetic": synthetic,
}

CATALOG_IDS = ("plane", "sphere", "torus_of_revolution", "surface_of_revolution",
               "ellipsoid_confocal", "dupin_cyclide", "graph_patch", "minimal_weierstrass",
               "synthetic")


def curvature_chart(catalog_id, params=None):
    try:
        builder = CATALOG[catalog_id]
    except KeyError:
        raise UnknownCatalogId(f"unknown catalog id {catalog_id!r}") from None
    return builder(params)
