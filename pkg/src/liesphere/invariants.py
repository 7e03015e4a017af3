"""Invariant forms and functionals of surfaces and hypersurfaces.

Surface quantities are computed from a curvature-line chart
``(k1, k2, g11, g22)``.  Coefficients are returned as numpy arrays on the
chart grid; 1-forms by their ``dR1``/``dR2`` coefficients, 2-forms by the
``dR1^dR2`` coefficient.

Web connection.  For the 3-web ``omega1 = 0, omega2 = 0, omega1 = omega2``
with ``omega_i = f_i dR^i`` the connection defined by
``d omega_i = omega ^ omega_i`` is ``omega = d1 ln|f2| dR1 + d2 ln|f1| dR2``.
Its curvature equals one third of ``d Omega`` for

    Omega = (d1d2k2/d2k2 + 2 d1k1/(k1-k2)) dR1 + (d1d2k1/d1k1 + 2 d2k2/(k2-k1)) dR2,

which is the Lie-invariant curvature 1-form used throughout.  The variant
with coefficient 1 instead of 2 in front of the first-derivative terms is
kept as ``Omega_printed``; its differential is not invariant under normal
shifts (differs by ``d1d2 ln((1-a k2)/(1-a k1))``).
"""
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.integrate import simpson

from . import fields as F
from .errors import (DegenerateInvariant, NonIntegrable, NormalizationFailure,
                     RepeatedCurvature, UmbilicPoint, ZeroCurvature)
from .geometry import invert_matrix, is_umbilic, jet_eigen, principal_jets

ZERO_REL = 1e-9


def field_scale(*arrays):
    return max(float(np.max(np.abs(np.asarray(a)))) for a in arrays) + 1e-300


def is_zero(arr, scale):
    return float(np.max(np.abs(arr))) < ZERO_REL * scale


def _extent(grid):
    return max(h - l for l, h in zip(grid.lo, grid.hi))


def _check_umbilic(k1, k2):
    if np.any(is_umbilic(F.value(k1), F.value(k2))):
        raise UmbilicPoint("principal curvatures coincide on the domain")


def _nonisolated_zero(mask):
    if not np.any(mask):
        return False
    if mask.ndim == 0 or mask.size == 1:
        return bool(mask)
    for ax in range(mask.ndim):
        a = np.moveaxis(mask, ax, 0)
        if np.any(a[1:] & a[:-1]):
            return True
    return False


def genericity_masks(chart, fl=None):
    """Boolean masks where d1k1 and d2k2 vanish (relative threshold)."""
    fl = fl or chart.fields(1)
    k1_1 = F.value(fl["k1"].diff(0))
    k2_2 = F.value(fl["k2"].diff(1))
    kscale = field_scale(F.value(fl["k1"]), F.value(fl["k2"])) / _extent(chart.grid)
    return (np.abs(k1_1) < ZERO_REL * kscale, np.abs(k2_2) < ZERO_REL * kscale)


def _require_generic(chart, fl):
    z1, z2 = genericity_masks(chart, fl)
    if _nonisolated_zero(z1) or _nonisolated_zero(z2):
        raise DegenerateInvariant("d1k1 or d2k2 vanishes on more than isolated points")


# -- 2D Lie forms ----------------------------------------------------------------

def _one_form_fields(fl):
    k1, k2, g11, g22 = fl["k1"], fl["k2"], fl["g11"], fl["g22"]
    k1_1 = k1.diff(0)
    k2_2 = k2.diff(1)
    arg = (k2_2 * k2_2 * g11) / (k1_1 * k1_1 * g22)
    root = arg.power(1.0 / 6.0)
    f1 = k1_1 / (k1 - k2) * root
    f2 = k2_2 / (k2 - k1) / root
    return f1, f2


def lie_one_forms(chart, fl=None):
    """Coefficients of the Lie-invariant 1-forms ``omega1 = f1 dR1``, ``omega2 = f2 dR2``."""
    fl = fl or chart.fields(1)
    _check_umbilic(fl["k1"], fl["k2"])
    _require_generic(chart, fl)
    f1, f2 = _one_form_fields(fl)
    return F.value(f1), F.value(f2)


@dataclass
class InvariantForms2D:
    omega1: np.ndarray
    omega2: np.ndarray
    quad: np.ndarray
    cubic1: np.ndarray
    cubic3: np.ndarray
    cubic_rep: tuple
    cubic_multiple: np.ndarray
    conn: tuple
    curv: np.ndarray
    Omega: tuple
    Omega_printed: tuple
    dOmega: np.ndarray
    dOmega_printed: np.ndarray
    flags: dict = field(default_factory=dict)


def cubic_representative(c1, c3, scale=None):
    """Canonical representative of the conformal class of ``c1 dR1^3 + c3 dR2^3``."""
    c1 = np.asarray(c1, dtype=float)
    c3 = np.asarray(c3, dtype=float)
    scale = field_scale(c1, c3) if scale is None else scale
    z1 = np.abs(c1) < ZERO_REL * scale
    z3 = np.abs(c3) < ZERO_REL * scale
    r1 = np.where(z1, 0.0, 1.0)
    r3 = np.where(z1, np.where(z3, 0.0, 1.0), c3 / np.where(z1, 1.0, c1))
    return r1, r3


def lie_forms(chart, order=3):
    """All 2D invariant coefficient fields of a chart.

    Forms that need ``d1k1 d2k2 != 0`` (omega_i, connection, Omega) are
    filled with NaN where the chart is not generic.
    """
    fl = chart.fields(order)
    k1, k2, g11, g22 = fl["k1"], fl["k2"], fl["g11"], fl["g22"]
    _check_umbilic(k1, k2)
    k1_1 = k1.diff(0)
    k2_2 = k2.diff(1)
    dk = k1 - k2
    quad = F.value(k1_1 * k2_2 / (dk * dk))
    c1 = F.value(k1_1 * g11)
    c3 = F.value(k2_2 * g22)
    cscale = (field_scale(F.value(k1), F.value(k2)) * field_scale(F.value(g11), F.value(g22))
              / _extent(chart.grid))
    rep = cubic_representative(c1, c3, cscale)
    flags = {"r1_flip": False, "dupin": bool(is_zero(c1, cscale) and is_zero(c3, cscale))}
    z1, z2 = genericity_masks(chart, fl)
    generic = not (np.any(z1) or np.any(z2))
    flags["generic"] = generic
    shape = F.value(k1).shape
    nan = np.full(shape, np.nan)
    if not generic:
        return InvariantForms2D(nan, nan, quad, c1, c3, rep, nan, (nan, nan), nan,
                                (nan, nan), (nan, nan), nan, nan, flags)
    sign = np.sign(F.value(k1_1) * F.value(k2_2))
    flags["r1_flip"] = bool(np.all(sign < 0))
    flags["mixed_sign"] = bool(np.any(sign < 0) and np.any(sign > 0))
    f1, f2 = _one_form_fields(fl)
    multiple = F.value(k1_1 * k2_2 / (dk * dk * dk * F.sqrt(g11 * g22)))
    conn, curv = _web_connection(fl)
    Om, dOm = _omega(fl, 2.0)
    Omp, dOmp = _omega(fl, 1.0)
    return InvariantForms2D(F.value(f1), F.value(f2), quad, c1, c3, rep, multiple, conn, curv,
                            Om, Omp, dOm, dOmp, flags)


def _web_connection(fl):
    k1, k2, g11, g22 = fl["k1"], fl["k2"], fl["g11"], fl["g22"]
    a1 = F.log(abs(k1.diff(0)))
    a2 = F.log(abs(k2.diff(1)))
    lk = F.log(abs(k1 - k2))
    lg = F.log(g11 / g22)
    lnf1 = a1 * (2.0 / 3.0) + a2 * (1.0 / 3.0) - lk + lg * (1.0 / 6.0)
    lnf2 = a2 * (2.0 / 3.0) + a1 * (1.0 / 3.0) - lk - lg * (1.0 / 6.0)
    c1 = lnf2.diff(0)
    c2 = lnf1.diff(1)
    curv = c2.diff(0) - c1.diff(1)
    return (F.value(c1), F.value(c2)), F.value(curv)


def _omega(fl, weight):
    k1, k2 = fl["k1"], fl["k2"]
    k1_1 = k1.diff(0)
    k2_2 = k2.diff(1)
    o1 = k2_2.diff(0) / k2_2 + weight * k1_1 / (k1 - k2)
    o2 = k1_1.diff(1) / k1_1 + weight * k2_2 / (k2 - k1)
    d = o2.diff(0) - o1.diff(1)
    return (F.value(o1), F.value(o2)), F.value(d)


def web_connection(chart, order=3):
    """``(conn, curv, Omega)`` with ``curv = d(conn)`` and ``curv = dOmega / 3``."""
    fl = chart.fields(order)
    _check_umbilic(fl["k1"], fl["k2"])
    _require_generic(chart, fl)
    conn, curv = _web_connection(fl)
    Om, dOm = _omega(fl, 2.0)
    Omp, dOmp = _omega(fl, 1.0)
    return {"conn": conn, "curv": curv, "Omega": Om, "dOmega": dOm,
            "Omega_printed": Omp, "dOmega_printed": dOmp}


def mobius_laguerre_forms(chart, order=1, laguerre=True):
    fl = chart.fields(order)
    k1, k2, g11, g22 = fl["k1"], fl["k2"], fl["g11"], fl["g22"]
    _check_umbilic(k1, k2)
    out = {
        "mobius_1": F.value(k1.diff(0) / (k1 - k2)),
        "mobius_2": F.value(k2.diff(1) / (k2 - k1)),
        "mobius_quad_11": F.value((k1 - k2) * (k1 - k2) * g11),
        "mobius_quad_22": F.value((k1 - k2) * (k1 - k2) * g22),
    }
    if laguerre:
        kv = np.concatenate([np.ravel(F.value(k1)), np.ravel(F.value(k2))])
        if np.any(np.abs(kv) < ZERO_REL * field_scale(kv)):
            raise ZeroCurvature("a principal curvature vanishes; radii undefined")
        w1, w2 = 1.0 / k1, 1.0 / k2
        G11, G22 = k1 * k1 * g11, k2 * k2 * g22
        out.update({
            "laguerre_1": F.value(w1.diff(0) / (w1 - w2)),
            "laguerre_2": F.value(w2.diff(1) / (w2 - w1)),
            "laguerre_quad_11": F.value((w1 - w2) * (w1 - w2) * G11),
            "laguerre_quad_22": F.value((w1 - w2) * (w1 - w2) * G22),
        })
    return out


def radii_chart_fields(fl):
    """(w1, w2, G11, G22) from (k1, k2, g11, g22): radii and third fundamental form."""
    k1, k2 = fl["k1"], fl["k2"]
    return {"k1": 1.0 / k1, "k2": 1.0 / k2,
            "g11": k1 * k1 * fl["g11"], "g22": k2 * k2 * fl["g22"]}


# -- functionals -------------------------------------------------------------------

def integrate(values, grid):
    """Tensor-product rule: trapezoid on periodic axes, composite Simpson otherwise."""
    out = np.asarray(values, dtype=float)
    for ax in range(grid.ndim - 1, -1, -1):
        if grid.periodic[ax]:
            out = np.sum(out, axis=ax) * grid.spacing(ax)
        else:
            out = simpson(out, x=grid.axis(ax), axis=ax)
    return float(out)


def functional_density(chart, which, order=2):
    fl = chart.fields(order)
    k1, k2, g11, g22 = fl["k1"], fl["k2"], fl["g11"], fl["g22"]
    if which in ("lie_13", "ab_31", "ab_31_beta", "lie_13_mixed"):
        _check_umbilic(k1, k2)
    dk = k1 - k2
    if which == "lie_13":
        dens = k1.diff(0) * k2.diff(1) / (dk * dk)
    elif which == "lie_13_mixed":
        dens = k1.diff(1) * k2.diff(0) / (dk * dk)
    elif which == "ab_31":
        a = k1.diff(1) / (k2 - k1)
        b = k2.diff(0) / (k1 - k2)
        dens = -(a * b)
    elif which == "ab_31_beta":
        h1 = F.sqrt(g11)
        h2 = F.sqrt(g22)
        beta12 = h2.diff(0) / h1
        beta21 = h1.diff(1) / h2
        dens = -(beta12 * beta21)
    elif which == "willmore":
        dens = dk * dk * F.sqrt(g11 * g22)
    elif which == "laguerre":
        w1, w2 = 1.0 / k1, 1.0 / k2
        G = k1 * k1 * g11 * (k2 * k2 * g22)
        dens = (w1 - w2) * (w1 - w2) * F.sqrt(G)
    else:
        raise ValueError(f"unknown functional {which!r}")
    vals = F.value(dens)
    if not np.all(np.isfinite(vals)):
        raise NonIntegrable(f"density of {which} is unbounded on the domain")
    return vals


def functionals(chart, which, order=2):
    """Integral of one of: lie_13, ab_31, ab_31_beta, lie_13_mixed, willmore, laguerre."""
    return integrate(functional_density(chart, which, order), chart.grid)


# -- hypersurfaces -----------------------------------------------------------------

@dataclass
class HyperInvariants:
    k: np.ndarray
    kd: np.ndarray
    quad: np.ndarray
    cubic: np.ndarray
    cross_ratios: dict
    covectors: dict
    conf_quad: np.ndarray
    omega_n: np.ndarray
    domega_n: np.ndarray
    structure_c: np.ndarray
    holonomic: bool
    lie_volume: np.ndarray
    normalized: dict = None
    coframe: np.ndarray = None


def _structure(theta, V, n):
    """C[i][j][k] = d(omega^i)(e_j, e_k) (coefficient of omega^j ^ omega^k, j<k)."""
    C = [[[None] * n for _ in range(n)] for _ in range(n)]
    dth = [[[theta[i][b].diff(a) for b in range(n)] for a in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(n):
            for kk in range(n):
                s = None
                for a in range(n):
                    for b in range(n):
                        if a == b:
                            continue
                        t = (dth[i][a][b] - dth[i][b][a]) * V[a][j] * V[b][kk]
                        s = t if s is None else s + t
                C[i][j][kk] = s
    return C


def _two_form_in_frame(coeffs, V, n):
    # coeffs[a]: 1-form coefficients in coordinates; returns d(form)(e_j, e_k)
    out = np.zeros(F.value(V[0][0]).shape + (n, n))
    for j in range(n):
        for kk in range(n):
            s = 0.0
            for a in range(n):
                for b in range(n):
                    if a == b:
                        continue
                    s = s + F.value((coeffs[b].diff(a) - coeffs[a].diff(b)) * V[a][j] * V[b][kk])
            out[..., j, kk] = s
    return out


def cross_ratio(k, i, j, n_, l):
    return (k[i] - k[j]) * (k[n_] - k[l]) / ((k[n_] - k[j]) * (k[i] - k[l]))


def hypersurface_invariants(imm, points, hol_tol=1e-8):
    """Invariants of a hypersurface M^3 in E^4 at an array of parameter points."""
    points = tuple(np.asarray(p, dtype=float) for p in points)
    n = imm.dim_domain
    pj = principal_jets(imm, points, 2)
    II, g = pj["II"], pj["g"]
    w0 = np.linalg.eigvals(np.linalg.solve(
        np.stack([np.stack([F.value(g[a][b]) for b in range(n)], -1) for a in range(n)], -2),
        np.stack([np.stack([F.value(II[a][b]) for b in range(n)], -1) for a in range(n)], -2))).real
    w0 = np.sort(w0, axis=-1)
    for i in range(n - 1):
        if np.any(is_umbilic(w0[..., i], w0[..., i + 1])):
            raise RepeatedCurvature("two principal curvatures coincide")
    ks, V = jet_eigen(II, g)
    theta, _ = invert_matrix(V)
    kd = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            s = None
            for a in range(n):
                t = ks[i].diff(a) * V[a][j]
                s = t if s is None else s + t
            kd[i][j] = s
    kv = np.stack([k.value for k in ks], -1)
    kdv = np.stack([np.stack([F.value(kd[i][j]) for j in range(n)], -1) for i in range(n)], -2)
    shape = kv.shape[:-1]
    quad = np.zeros(shape + (n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                quad[..., i, j] = kdv[..., i, i] * kdv[..., j, j] / (kv[..., i] - kv[..., j]) ** 2
    cubic = np.stack([kdv[..., i, i] for i in range(n)], -1)  # g_ii = 1 on the unit frame
    crs = {}
    if n >= 4:
        for (i, j, n_, l) in combinations(range(n), 4):
            crs[(i, j, n_, l)] = cross_ratio([kv[..., q] for q in range(n)], i, j, n_, l)
    cov = {}
    for i in range(n):
        for j, l in combinations([q for q in range(n) if q != i], 2):
            cov[(i, j, l)] = (kdv[..., i, i] * (kv[..., j] - kv[..., l])
                              / ((kv[..., i] - kv[..., j]) * (kv[..., i] - kv[..., l])))
    conf = np.zeros(shape + (n,))
    for i in range(n):
        prod = np.ones(shape)
        for l in range(n):
            if l != i:
                prod = prod * (kv[..., i] - kv[..., l])
        conf[..., i] = np.abs(prod) ** (2.0 / (n - 2))
    # 1-form Omega (frame coefficients), then coordinate coefficients and d
    Om = []
    for i in range(n):
        s = None
        for l in range(n):
            if l == i:
                continue
            t = (kd[l][i] - kd[i][i] * (1.0 / (n - 1))) / (ks[i] - ks[l])
            s = t if s is None else s + t
        Om.append(s)
    Om_coord = []
    for a in range(n):
        s = None
        for i in range(n):
            t = Om[i] * theta[i][a]
            s = t if s is None else s + t
        Om_coord.append(s)
    dOm = _two_form_in_frame(Om_coord, V, n)
    C = _structure(theta, V, n)
    Cv = np.stack([np.stack([np.stack([F.value(C[i][j][q]) for q in range(n)], -1)
                             for j in range(n)], -2) for i in range(n)], -3)
    distinct = [(i, j, q) for i in range(n) for j in range(n) for q in range(n)
                if len({i, j, q}) == 3 and j < q]
    scale = float(np.max(np.abs(Cv))) + float(np.max(np.abs(kv))) + 1e-300
    dvals = np.array([np.max(np.abs(Cv[..., i, j, q])) for (i, j, q) in distinct])
    vanish = dvals < hol_tol * scale
    holonomic = bool(np.all(vanish))
    vol = np.ones(shape)
    for i in range(n):
        vol = vol * kdv[..., i, i]
    for i, j in combinations(range(n), 2):
        vol = vol / (kv[..., i] - kv[..., j])
    thv = np.stack([np.stack([F.value(theta[i][a]) for a in range(n)], -1) for i in range(n)], -2)
    vol = vol * np.linalg.det(thv)
    res = HyperInvariants(kv, kdv, quad, cubic, crs, cov, conf, np.stack([F.value(o) for o in Om], -1),
                          dOm, Cv, holonomic, vol, None, thv)
    if not holonomic:
        if np.any(vanish) or n != 3:
            raise NormalizationFailure("some structure coefficients with distinct indices vanish "
                                       "while others do not")
        res.normalized = _normalize_57(theta, V, C)
    return res


def _normalize_57(theta, V, C):
    """Rescale the coframe so the omega^j ^ omega^k coefficient of d omega^i is 1."""
    c1 = C[0][1][2]
    c2 = C[1][2][0]
    c3 = C[2][0][1]
    s = [np.sign(F.value(c)) for c in (c1, c2, c3)]
    if not (np.all(s[0] == s[1]) and np.all(s[1] == s[2])):
        raise NormalizationFailure("structure coefficients of mixed sign admit no real normalization")
    sigma = s[0]
    p = [F.sqrt(c2 * c3) * sigma, F.sqrt(c1 * c3) * sigma, F.sqrt(c1 * c2) * sigma]
    n = 3
    th = [[theta[i][a].truncate(1) * p[i] for a in range(n)] for i in range(n)]
    Vn = [[V[a][i].truncate(1) / p[i] for i in range(n)] for a in range(n)]
    Cn = _structure(th, Vn, n)
    val = lambda i, j, k: F.value(Cn[i][j][k])
    return {"a": val(0, 0, 1), "b": val(0, 0, 2), "p": val(1, 1, 0), "q": val(1, 1, 2),
            "r": val(2, 2, 0), "s": val(2, 2, 1),
            "unit": (val(0, 1, 2), val(1, 2, 0), val(2, 0, 1)),
            "scales": tuple(F.value(x) for x in p)}
