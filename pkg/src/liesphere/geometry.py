"""Immersions, curvature-line charts and pointwise principal data.

Conventions
-----------
* Second fundamental form ``II_ab = <r_ab, n>`` and principal curvatures are
  the eigenvalues of ``g^{-1} II``.  With this sign the offset ``r + a n``
  has curvatures ``k / (1 - a k)``.
* Closed catalog surfaces carry the inward normal (round spheres have
  ``k = 1/radius > 0``); graphs carry the normal with positive last
  component.  The orientation is stored on the immersion as ``normal_sign``.
"""
from dataclasses import dataclass, field

import numpy as np

from . import fields as F
from .errors import (InsufficientDerivativeOrder, NotConjugate, RankDeficient,
                     UmbilicPoint)
from .fields import Grid, GridField
from .jet import Jet

UMBILIC_EPS = 1e-8
KAPPA_FLOOR = 1e-12


def is_umbilic(k1, k2):
    k1 = np.asarray(k1)
    k2 = np.asarray(k2)
    return np.abs(k1 - k2) < UMBILIC_EPS * (np.abs(k1) + np.abs(k2) + KAPPA_FLOOR)


# -- small vector helpers over field objects ---------------------------------

def dot(u, v):
    out = u[0] * v[0]
    for a, b in zip(u[1:], v[1:]):
        out = out + a * b
    return out


def cross(u, v):
    return [u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0]]


def _det3(m):
    return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))


def normal_vector(tangents):
    """Unnormalized normal of n tangent vectors in R^(n+1) (generalized cross product)."""
    n = len(tangents)
    if n == 2:
        return cross(tangents[0], tangents[1])
    if n == 3:
        out = []
        for c in range(4):
            cols = [j for j in range(4) if j != c]
            minor = [[tangents[r][j] for j in cols] for r in range(3)]
            out.append(_det3(minor) * (-1.0) ** c)
        return out
    raise ValueError("only surfaces in E3 and hypersurfaces in E4 are supported")


# -- immersions ----------------------------------------------------------------

class Immersion:
    """Closed-form immersion ``R^m -> R^(m+1)`` evaluated through jets.

    ``fn(*coordinate_jets)`` returns the list of ambient coordinates.
    """

    def __init__(self, fn, dim_domain=2, dim_ambient=3, normal_sign=1.0, label="immersion",
                 params=None):
        self.fn = fn
        self.dim_domain = dim_domain
        self.dim_ambient = dim_ambient
        self.normal_sign = float(normal_sign)
        self.label = label
        self.params = dict(params or {})

    def jets(self, points, order):
        if isinstance(points, Grid):
            points = points.mesh()
        xs = Jet.variables(points, order)
        out = self.fn(*xs)
        shape = xs[0].shape
        res = []
        for c in out:
            if not isinstance(c, Jet):
                c = Jet.constant(np.broadcast_to(np.asarray(c, dtype=float), shape),
                                 self.dim_domain, order)
            res.append(c)
        return res

    def __call__(self, *points):
        return np.stack([j.value for j in self.jets(points, 0)])

    def with_map(self, fmap, label=None, normal_factor=1.0):
        """Compose with an ambient map acting on lists of jets."""
        if self.fn is None:
            return MappedImmersion(self, fmap, label, normal_factor)
        inner = self.fn

        def fn(*xs):
            return fmap(inner(*xs))

        return Immersion(fn, self.dim_domain, self.dim_ambient,
                         self.normal_sign * normal_factor, label or self.label, self.params)


class MappedImmersion(Immersion):
    """Ambient map applied to an immersion that only exposes ``jets``."""

    def __init__(self, base, fmap, label=None, normal_factor=1.0):
        super().__init__(None, base.dim_domain, base.dim_ambient,
                         base.normal_sign * normal_factor, label or base.label, base.params)
        self.base = base
        self.fmap = fmap

    def jets(self, points, order):
        return self.fmap(self.base.jets(points, order))


class GridImmersion:
    """Immersion known only through samples on a grid (finite differences)."""

    def __init__(self, samples, grid, normal_sign=1.0, label="grid immersion", order=4):
        self.samples = np.asarray(samples, dtype=float)
        self.grid = grid
        self.dim_domain = grid.ndim
        self.dim_ambient = self.samples.shape[0]
        self.normal_sign = float(normal_sign)
        self.label = label
        self.order = order

    def fields(self):
        return [GridField(c, self.grid, self.order) for c in self.samples]


def immersion_fields(imm, where, order):
    if isinstance(imm, GridImmersion):
        return imm.fields()
    return imm.jets(where, order)


def unit_normal(tangents, sign=1.0):
    nv = normal_vector(tangents)
    norm = F.sqrt(dot(nv, nv))
    return [sign * c / norm for c in nv]


# -- curvature-line charts -------------------------------------------------------

@dataclass
class CurvatureLineChart:
    """Curvature-line chart on a grid.

    ``source(R1, R2)`` returns a dict with ``k1, k2, g11, g22`` given
    coordinate jets; grid-sampled charts instead pass ``sampled`` fields.
    """

    grid: Grid
    source: object = None
    sampled: dict = None
    immersion: object = None
    label: str = "chart"
    params: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)

    def fields(self, order=3):
        if self.sampled is not None:
            return dict(self.sampled)
        xs = Jet.variables(self.grid.mesh(), order)
        out = self.source(*xs)
        shape = xs[0].shape
        res = {}
        for key, val in out.items():
            if not isinstance(val, Jet):
                val = Jet.constant(np.broadcast_to(np.asarray(val, dtype=float), shape), 2, order)
            res[key] = val
        return res

    def values(self):
        fl = self.fields(0)
        return {k: F.value(v) for k, v in fl.items()}

    @property
    def closed_form(self):
        return self.sampled is None

    def with_grid(self, grid):
        return CurvatureLineChart(grid, self.source, None, self.immersion, self.label,
                                  dict(self.params), dict(self.flags))

    def reparametrize(self, psi1, psi2, grid, label=None):
        """Chart in new coordinates S with R^i = psi_i(S^i), psi_i monotone."""
        if not self.closed_form:
            raise ValueError("reparametrization needs a closed-form chart")
        src = self.source

        def source(s1, s2):
            r1 = psi1(s1)
            r2 = psi2(s2)
            base = src(r1, r2)
            # psi' as jets of one order less; truncation keeps orders consistent
            d1 = _jet_derivative(psi1, s1)
            d2 = _jet_derivative(psi2, s2)
            return {"k1": base["k1"], "k2": base["k2"],
                    "g11": base["g11"] * d1 * d1, "g22": base["g22"] * d2 * d2}

        imm = None
        if isinstance(self.immersion, Immersion):
            inner = self.immersion.fn
            imm = Immersion(lambda a, b: inner(psi1(a), psi2(b)), 2, 3,
                            self.immersion.normal_sign, self.immersion.label)
        return CurvatureLineChart(grid, source, None, imm, label or self.label + "-reparam",
                                  dict(self.params), dict(self.flags))

    def scaled(self, factor):
        """Ambient similarity x -> factor * x (curvature scales by 1/factor)."""
        src = self.source

        def source(a, b):
            base = src(a, b)
            return {"k1": base["k1"] / factor, "k2": base["k2"] / factor,
                    "g11": base["g11"] * factor ** 2, "g22": base["g22"] * factor ** 2}

        imm = None
        if isinstance(self.immersion, Immersion):
            imm = self.immersion.with_map(lambda xs: [factor * x for x in xs])
        return CurvatureLineChart(self.grid, source, None, imm, self.label + "-scaled",
                                  dict(self.params), dict(self.flags))


def _jet_derivative(psi, s):
    # derivative of a univariate map applied to a coordinate jet of order m:
    # evaluate psi on a jet of order m+1 and differentiate along s
    axis = _jet_axis(s)
    lift = Jet.variables([s.value] * s.nvars, s.order + 1)[axis]
    return psi(lift).diff(axis)


def _jet_axis(s):
    # coordinate jet: the degree-one coefficient that equals 1 tells the axis
    if s.order < 1:
        return 0
    for ax in range(s.nvars):
        e = [0] * s.nvars
        e[ax] = 1
        if np.all(s.d(*e) == 1.0):
            return ax
    raise ValueError("not a coordinate jet")


def chart_from_immersion(imm, grid, order=3, label=None, check_tol=1e-6, params=None):
    """Curvature-line chart read off an immersion whose coordinates are principal."""

    def source(*xs):
        return _chart_fields_from_jets(imm, xs)

    chart = CurvatureLineChart(grid, source, None, imm, label or imm.label, dict(params or {}))
    if check_tol is not None:
        res = principal_alignment_residual(imm, grid)
        chart.flags["alignment_residual"] = float(res)
        if res > check_tol:
            raise NotConjugate(f"coordinates are not principal (residual {res:.3e})")
    return chart


def _chart_fields_from_jets(imm, xs):
    # xs: coordinate jets of order m; rebuild the immersion at order m+2
    order = xs[0].order + 2
    pts = [x.value for x in xs]
    r = imm.jets(pts, order)
    r1 = [c.diff(0) for c in r]
    r2 = [c.diff(1) for c in r]
    n = unit_normal([r1, r2], imm.normal_sign)
    g11 = dot(r1, r1)
    g22 = dot(r2, r2)
    ii11 = dot([c.diff(0) for c in r1], n)
    ii22 = dot([c.diff(1) for c in r2], n)
    return {"k1": ii11 / g11, "k2": ii22 / g22, "g11": g11, "g22": g22}


def principal_alignment_residual(imm, where, order=2):
    """max |g12| / sqrt(g11 g22) + max |II12| / |II| over the sample points."""
    r = immersion_fields(imm, where, order)
    r1 = [c.diff(0) for c in r]
    r2 = [c.diff(1) for c in r]
    n = unit_normal([r1, r2], imm.normal_sign)
    g11, g22, g12 = (F.value(dot(r1, r1)), F.value(dot(r2, r2)), F.value(dot(r1, r2)))
    ii11 = F.value(dot([c.diff(0) for c in r1], n))
    ii22 = F.value(dot([c.diff(1) for c in r2], n))
    ii12 = F.value(dot([c.diff(1) for c in r1], n))
    m1 = np.max(np.abs(g12) / np.sqrt(g11 * g22))
    iis = np.sqrt(ii11 ** 2 + ii22 ** 2) + 1e-300
    m2 = np.max(np.abs(ii12) / np.maximum(iis, np.max(iis) * 1e-12))
    return max(m1, m2)


def third_fundamental_form(chart, order=0):
    f = chart.fields(order)
    return f["k1"] * f["k1"] * f["g11"], f["k2"] * f["k2"] * f["g22"]


def conjugate_net_coefficients(imm, where, tol=1e-8, order=2):
    """a, b with r_12 = a r_1 + b r_2; raises NotConjugate on a normal component."""
    r = immersion_fields(imm, where, order)
    r1 = [c.diff(0) for c in r]
    r2 = [c.diff(1) for c in r]
    r12 = [c.diff(1) for c in r1]
    g11, g12, g22 = dot(r1, r1), dot(r1, r2), dot(r2, r2)
    p1, p2 = dot(r12, r1), dot(r12, r2)
    det = g11 * g22 - g12 * g12
    a = (g22 * p1 - g12 * p2) / det
    b = (g11 * p2 - g12 * p1) / det
    orth = [F.value(r12[i] - a * r1[i] - b * r2[i]) for i in range(len(r))]
    resid = np.sqrt(sum(o ** 2 for o in orth))
    scale = np.sqrt(sum(F.value(c) ** 2 for c in r12)) + np.sqrt(sum(F.value(c) ** 2 for c in r1))
    rel = float(np.max(resid / np.maximum(scale, 1e-300)))
    if rel > tol:
        raise NotConjugate(f"r_12 has a normal component (relative {rel:.3e})")
    return a, b, rel


# -- principal data by jet eigen-solving ----------------------------------------

def _base_geneig(II0, g0):
    """Batched generalized symmetric eigenproblem, eigenvalues descending."""
    L = np.linalg.cholesky(g0)
    Linv = np.linalg.inv(L)
    A = Linv @ II0 @ np.swapaxes(Linv, -1, -2)
    A = 0.5 * (A + np.swapaxes(A, -1, -2))
    w, y = np.linalg.eigh(A)
    w = w[..., ::-1]
    y = y[..., ::-1]
    v = np.swapaxes(Linv, -1, -2) @ y
    return w, v


def _stack_values(mat):
    n = len(mat)
    return np.stack([np.stack([F.value(mat[i][j]) for j in range(n)], -1) for i in range(n)], -2)


def jet_eigen(II, g):
    """Eigenpairs of ``II v = k g v`` with jet entries (simple eigenvalues).

    Returns ``(k, V)`` where ``k`` is a list of jets (descending at the base
    point) and ``V[a][i]`` is the a-th component of the i-th g-unit eigenvector.
    """
    n = len(II)
    II0 = _stack_values(II)
    g0 = _stack_values(g)
    w0, v0 = _base_geneig(II0, g0)
    template = II[0][0]
    order = template.order
    nv = template.nvars
    shape = template.shape
    ks, vecs = [], []
    for i in range(n):
        k0 = w0[..., i]
        vb = v0[..., :, i]
        # chord matrix J0 (constant per point)
        J = np.zeros(shape + (n + 1, n + 1))
        J[..., :n, :n] = II0 - k0[..., None, None] * g0
        gv = np.einsum("...ab,...b->...a", g0, vb)
        J[..., :n, n] = -gv
        J[..., n, :n] = gv
        Jinv = np.linalg.inv(J)
        v = [Jet.constant(vb[..., a], nv, order) for a in range(n)]
        k = Jet.constant(k0, nv, order)
        for _ in range(order + 1):
            Fs = []
            for a in range(n):
                row = (II[a][0] - k * g[a][0]) * v[0]
                for b in range(1, n):
                    row = row + (II[a][b] - k * g[a][b]) * v[b]
                Fs.append(row)
            lin = v[0] * gv[..., 0]
            for b in range(1, n):
                lin = lin + v[b] * gv[..., b]
            Fs.append(lin - 1.0)
            coefs = np.stack([f.coef for f in Fs], 0)  # (n+1, ncoef, *shape)
            delta = np.einsum("...ij,jc...->ic...", Jinv, coefs)
            v = [Jet(v[a].coef - delta[a], nv, order) for a in range(n)]
            k = Jet(k.coef - delta[n], nv, order)
        # unit length in the metric and a deterministic orientation
        norm2 = None
        for a in range(n):
            for b in range(n):
                term = v[a] * g[a][b] * v[b]
                norm2 = term if norm2 is None else norm2 + term
        inv = norm2.power(-0.5)
        v = [va * inv for va in v]
        vals = np.stack([va.value for va in v], -1)
        idx = np.argmax(np.abs(vals), axis=-1)
        sgn = np.sign(np.take_along_axis(vals, idx[..., None], -1)[..., 0])
        sgn = np.where(sgn == 0, 1.0, sgn)
        v = [va * sgn for va in v]
        ks.append(k)
        vecs.append(v)
    V = [[vecs[i][a] for i in range(n)] for a in range(n)]
    return ks, V


def invert_matrix(V):
    n = len(V)
    if n == 2:
        det = V[0][0] * V[1][1] - V[0][1] * V[1][0]
        return [[V[1][1] / det, -V[0][1] / det], [-V[1][0] / det, V[0][0] / det]], det
    if n == 3:
        det = _det3(V)
        cof = [[None] * 3 for _ in range(3)]
        for i in range(3):
            for j in range(3):
                rows = [r for r in range(3) if r != i]
                cols = [c for c in range(3) if c != j]
                m = V[rows[0]][cols[0]] * V[rows[1]][cols[1]] - V[rows[0]][cols[1]] * V[rows[1]][cols[0]]
                cof[i][j] = m * (-1.0) ** (i + j)
        inv = [[cof[j][i] / det for j in range(3)] for i in range(3)]
        return inv, det
    raise ValueError("matrix size not supported")


@dataclass
class PrincipalFrame:
    """Principal data at one point or an array of points.

    ``k[i]`` curvatures (descending), ``vectors[a][i]`` g-unit principal
    vectors, ``omega[i][a]`` the dual coframe, ``g[i] = g(e_i, e_i)`` in the
    coordinate coframe basis ``omega^i`` (equal to 1 for unit vectors, so
    ``g`` reports the metric on the chosen frame), ``kd[i][j]`` with
    ``dk^i = kd[i][j] omega^j``.
    """

    point: object
    k: np.ndarray
    omega: np.ndarray
    vectors: np.ndarray
    g: np.ndarray
    kd: np.ndarray
    degenerate: np.ndarray
    jets: dict = field(default=None, repr=False)


def principal_jets(imm, points, order):
    """Jet-level principal data of a (hyper)surface; ``order`` is that of the curvatures."""
    m = imm.dim_domain
    if imm.dim_ambient != m + 1:
        raise ValueError("ambient dimension must exceed the domain dimension by one")
    r = imm.jets(points, order + 2)
    tang = [[c.diff(a) for c in r] for a in range(m)]
    tv = np.stack([np.stack([F.value(c) for c in t], -1) for t in tang], -2)
    sv = np.linalg.svd(tv, compute_uv=False)
    if np.any(sv[..., -1] <= 1e-12 * np.maximum(sv[..., 0], 1e-300)):
        raise RankDeficient("Jacobian is not of full rank")
    n = unit_normal(tang, imm.normal_sign)
    g = [[dot(tang[a], tang[b]) for b in range(m)] for a in range(m)]
    II = [[dot([c.diff(b) for c in tang[a]], n) for b in range(m)] for a in range(m)]
    g = [[g[a][b].truncate(order) for b in range(m)] for a in range(m)]
    return {"r": r, "normal": n, "g": g, "II": II}


def principal_data(imm, points, strict=False, order=1):
    """Principal curvatures, frame, coframe and curvature derivatives.

    ``points`` is a tuple of coordinate arrays (scalars allowed).  Umbilic
    points are flagged in ``degenerate``; with ``strict=True`` they raise
    :class:`UmbilicPoint`.
    """
    points = tuple(np.asarray(p, dtype=float) for p in points)
    m = imm.dim_domain
    data = principal_jets(imm, points, max(order, 1))
    II, g = data["II"], data["g"]
    w0, _ = _base_geneig(_stack_values(II), _stack_values(g))
    degen = np.zeros(w0.shape[:-1], dtype=bool)
    for i in range(m):
        for j in range(i + 1, m):
            degen |= is_umbilic(w0[..., i], w0[..., j])
    if strict and np.any(degen):
        raise UmbilicPoint("principal curvatures coincide")
    if np.any(degen):
        # frame not unique: report base eigen-data without derivatives
        L = np.linalg.cholesky(_stack_values(g))
        kd = np.full(w0.shape + (m,), np.nan)
        w, v = _base_geneig(_stack_values(II), _stack_values(g))
        theta = np.linalg.inv(v)
        return PrincipalFrame(points, w, theta, v, np.ones_like(w), kd, degen)
    ks, V = jet_eigen(II, g)
    theta, _ = invert_matrix(V)
    kd = np.zeros(w0.shape + (m,))
    for i in range(m):
        for j in range(m):
            s = None
            for a in range(m):
                term = ks[i].diff(a) * V[a][j]
                s = term if s is None else s + term
            kd[..., i, j] = F.value(s)
    karr = np.stack([k.value for k in ks], -1)
    Varr = np.stack([np.stack([V[a][i].value for i in range(m)], -1) for a in range(m)], -2)
    Tarr = np.stack([np.stack([theta[i][a].value for a in range(m)], -1) for i in range(m)], -2)
    gdiag = np.ones_like(karr)
    return PrincipalFrame(points, karr, Tarr, Varr, gdiag, kd, degen,
                          jets={"k": ks, "V": V, "theta": theta, **data})


def principal_curvatures_fd(imm, point, h=1e-3):
    """Independent oracle: shape operator from central differences (order 4)."""
    point = np.asarray(point, dtype=float)
    m = point.size
    f = lambda p: imm(*[np.asarray(x) for x in p])

    def d1(p, a):
        e = np.zeros(m)
        e[a] = h
        return (-f(p + 2 * e) + 8 * f(p + e) - 8 * f(p - e) + f(p - 2 * e)) / (12 * h)

    def d2(p, a, b):
        ea = np.zeros(m)
        ea[a] = h
        eb = np.zeros(m)
        eb[b] = h
        if a == b:
            return (-f(p + 2 * ea) + 16 * f(p + ea) - 30 * f(p) + 16 * f(p - ea) - f(p - 2 * ea)) / (12 * h * h)
        return (f(p + ea + eb) - f(p + ea - eb) - f(p - ea + eb) + f(p - ea - eb)) / (4 * h * h)

    T = np.stack([d1(point, a) for a in range(m)])  # (m, ambient)
    # normal: null vector of the tangent span
    _, _, vt = np.linalg.svd(T)
    nrm = vt[-1]
    ref = normal_vector([list(t) for t in T])
    if np.dot(nrm, np.asarray(ref, dtype=float)) < 0:
        nrm = -nrm
    nrm = imm.normal_sign * nrm
    G = T @ T.T
    II = np.array([[np.dot(d2(point, a, b), nrm) for b in range(m)] for a in range(m)])
    w = np.linalg.eigvals(np.linalg.solve(G, II))
    return np.sort(w.real)[::-1]


def rigid_motion(imm, Q, t):
    Q = np.asarray(Q, dtype=float)
    t = np.asarray(t, dtype=float)
    det = np.linalg.det(Q)

    def fmap(xs):
        return [sum(Q[i, j] * xs[j] for j in range(len(xs))) + t[i] for i in range(len(xs))]

    return imm.with_map(fmap, normal_factor=np.sign(det))


def require_order(field_obj, needed):
    if F.order_of(field_obj) < needed:
        raise InsufficientDerivativeOrder(f"need {needed} derivative orders")
