"""Lie sphere group action on surfaces and the invariance test harness.

The group is generated by conformal maps of Euclidean space (translations,
rotations, dilations, inversions) and normal shifts ``r -> r + a n``.
Conformal elements act on the immersion and curvature data is recomputed
from the image; normal shifts act on curvature data through the closed-form
offset rules, so the two paths cross-check each other.
"""
from dataclasses import dataclass, field

import numpy as np

from . import invariants as inv
from .errors import FocalSingularity, SingularInversion, ValidationError
from .geometry import (CurvatureLineChart, Immersion, chart_from_immersion, dot,
                       unit_normal)

FOCAL_MARGIN = 1e-6
KINDS = ("translation", "rotation", "dilation", "inversion", "normal_shift")


@dataclass
class LieSphereElement:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown element kind {self.kind!r}")
        p = self.params
        if self.kind == "translation":
            p["vector"] = np.asarray(p.get("vector", (0.0, 0.0, 0.0)), dtype=float)
        elif self.kind == "rotation":
            Q = np.asarray(p.get("matrix", np.eye(3)), dtype=float)
            if np.max(np.abs(Q @ Q.T - np.eye(len(Q)))) > 1e-12:
                raise ValidationError("rotation matrix is not orthogonal")
            p["matrix"] = Q
        elif self.kind == "dilation":
            s = float(p.get("factor", 1.0))
            if s == 0.0:
                raise ValidationError("dilation factor must be nonzero")
            p["factor"] = s
        elif self.kind == "inversion":
            rho = float(p.get("radius", 1.0))
            if not rho > 0.0:
                raise ValidationError("inversion radius must be positive")
            p["radius"] = rho
            p["center"] = np.asarray(p.get("center", (0.0, 0.0, 0.0)), dtype=float)
        else:
            p["a"] = float(p.get("a", 0.0))

    @property
    def normal_factor(self):
        """Sign picked up by the transported unit normal."""
        if self.kind == "rotation":
            return float(np.sign(np.linalg.det(self.params["matrix"])))
        if self.kind == "dilation":
            return float(np.sign(self.params["factor"]))
        if self.kind == "inversion":
            return -1.0
        return 1.0

    def ambient_map(self):
        """Map acting on a list of coordinate fields (jets, arrays)."""
        p = self.params
        if self.kind == "translation":
            t = p["vector"]
            return lambda xs: [x + t[i] for i, x in enumerate(xs)]
        if self.kind == "rotation":
            Q = p["matrix"]
            return lambda xs: [sum(Q[i, j] * xs[j] for j in range(len(xs)))
                               for i in range(len(xs))]
        if self.kind == "dilation":
            s = p["factor"]
            return lambda xs: [s * x for x in xs]
        if self.kind == "inversion":
            c, rho2 = p["center"], p["radius"] ** 2

            def inversion(xs):
                d = [x - c[i] for i, x in enumerate(xs)]
                q = rho2 / dot(d, d)
                return [c[i] + q * di for i, di in enumerate(d)]

            return inversion
        raise ValueError("normal shifts act on charts, not on ambient points")

    def to_dict(self):
        out = {"kind": self.kind}
        for k, v in self.params.items():
            out[k] = np.asarray(v).tolist() if isinstance(v, np.ndarray) else v
        return out


def apply_conformal(imm, elem, where=None, spacing=None):
    """Image of an immersion under a conformal element (same parameter domain).

    For inversions ``where`` (a grid or point arrays) is used to check that the
    surface keeps a distance of at least ``10 * spacing`` from the center.
    """
    if elem.kind == "normal_shift":
        raise ValueError("use normal_shift for normal shifts")
    if elem.kind == "inversion" and where is not None:
        pts = where.mesh() if hasattr(where, "mesh") else where
        x = imm(*pts)
        dist = np.sqrt(np.sum((x - elem.params["center"].reshape((-1,) + (1,) * (x.ndim - 1))) ** 2,
                              axis=0))
        if spacing is None:
            spacing = _sample_spacing(x)
        if np.min(dist) <= 10.0 * spacing:
            raise SingularInversion("surface passes too close to the inversion center")
    return imm.with_map(elem.ambient_map(), label=f"{imm.label}|{elem.kind}",
                        normal_factor=elem.normal_factor)


def _sample_spacing(x):
    # largest distance between neighbouring samples of an ambient point grid
    h = 0.0
    for ax in range(1, x.ndim):
        d = np.diff(x, axis=ax)
        if d.size:
            h = max(h, float(np.max(np.sqrt(np.sum(d * d, axis=0)))))
    return h


class ShiftedImmersion(Immersion):
    """Parallel surface ``r + a n`` of a jet-capable immersion."""

    def __init__(self, base, a, orientation=1.0):
        super().__init__(None, base.dim_domain, base.dim_ambient,
                         base.normal_sign * orientation, f"{base.label}|shift({a:g})",
                         base.params)
        self.base = base
        self.a = float(a)

    def jets(self, points, order):
        r = self.base.jets(points, order + 1)
        tang = [[c.diff(ax) for c in r] for ax in range(self.dim_domain)]
        n = unit_normal(tang, self.base.normal_sign)
        return [(c.truncate(order) + self.a * nc) for c, nc in zip(r, n)]


def _check_focal(fac1, fac2):
    m = min(float(np.min(np.abs(fac1))), float(np.min(np.abs(fac2))))
    if m < FOCAL_MARGIN:
        raise FocalSingularity(f"1 - a k vanishes on the domain (min |1 - a k| = {m:.2e})")
    s = np.sign(np.concatenate([np.ravel(fac1), np.ravel(fac2)]))
    return s


def normal_shift(chart, a):
    """Offset chart: ``k -> k / (1 - a k)``, ``g -> (1 - a k)^2 g``."""
    a = float(a)
    vals = chart.values()
    f1 = 1.0 - a * vals["k1"]
    f2 = 1.0 - a * vals["k2"]
    _check_focal(f1, f2)
    orient = float(np.sign(f1.flat[0] * f2.flat[0]))

    def shift(fl):
        k1, k2 = fl["k1"], fl["k2"]
        m1 = 1.0 - a * k1
        m2 = 1.0 - a * k2
        return {"k1": k1 / m1, "k2": k2 / m2, "g11": fl["g11"] * m1 * m1,
                "g22": fl["g22"] * m2 * m2}

    imm = None
    if isinstance(chart.immersion, Immersion):
        imm = ShiftedImmersion(chart.immersion, a, orient)
    label = f"{chart.label}|shift({a:g})"
    flags = dict(chart.flags)
    if chart.closed_form:
        src = chart.source

        def source(u, v):
            return shift(src(u, v))

        return CurvatureLineChart(chart.grid, source, None, imm, label, dict(chart.params), flags)
    return CurvatureLineChart(chart.grid, None, shift(chart.sampled), imm, label,
                              dict(chart.params), flags)


def transform_chart(chart, elem, check_tol=1e-6):
    """Apply any element to a chart, recomputing curvature data for conformal maps."""
    if elem.kind == "normal_shift":
        return normal_shift(chart, elem.params["a"])
    if not isinstance(chart.immersion, Immersion):
        raise ValidationError("conformal elements need a chart with a closed-form immersion")
    imm = apply_conformal(chart.immersion, elem, chart.grid)
    return chart_from_immersion(imm, chart.grid, label=imm.label, check_tol=check_tol,
                                params=chart.params)


# -- random elements -------------------------------------------------------------------

def surface_extent(chart):
    x = chart.immersion(*chart.grid.mesh())
    pts = x.reshape(x.shape[0], -1)
    bary = pts.mean(axis=1)
    diam = 0.0
    step = max(1, pts.shape[1] // 400)
    sub = pts[:, ::step]
    for j in range(sub.shape[1]):
        diam = max(diam, float(np.max(np.linalg.norm(sub - sub[:, j:j + 1], axis=0))))
    return bary, diam


def min_focal_distance(chart):
    v = chart.values()
    kmax = max(float(np.max(np.abs(v["k1"]))), float(np.max(np.abs(v["k2"]))))
    return 1.0 / kmax if kmax > 0 else np.inf


def random_rotation(rng, dim=3):
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_elements(chart, count, rng, kind="inversion"):
    """Seeded elements of one kind with all preconditions satisfied with margin.

    Inversion centers lie at 2 to 5 surface diameters from the barycenter;
    shift distances are within half the minimal focal distance.
    """
    out = []
    if kind == "normal_shift":
        dmin = min_focal_distance(chart)
        dmin = 1.0 if not np.isfinite(dmin) else dmin
        for _ in range(count):
            out.append(LieSphereElement("normal_shift", {"a": float(rng.uniform(-0.5, 0.5) * dmin)}))
        return out
    bary, diam = surface_extent(chart)
    dim = len(bary)
    for _ in range(count):
        if kind == "inversion":
            u = rng.standard_normal(dim)
            u /= np.linalg.norm(u)
            dist = rng.uniform(2.0, 5.0) * diam
            out.append(LieSphereElement("inversion", {"center": bary + dist * u, "radius": dist}))
        elif kind == "rotation":
            out.append(LieSphereElement("rotation", {"matrix": random_rotation(rng, dim)}))
        elif kind == "translation":
            out.append(LieSphereElement("translation", {"vector": rng.uniform(-1, 1, dim) * diam}))
        elif kind == "dilation":
            s = float(np.exp(rng.uniform(-1.0, 1.0)))
            out.append(LieSphereElement("dilation", {"factor": s}))
        else:
            raise ValidationError(f"unknown element kind {kind!r}")
    return out


# -- invariance harness ----------------------------------------------------------------

TARGETS = ("eq1.1", "eq1.2", "eq1.2-class", "eq2.1", "eq4.3-curv", "eq4.3-dOmega",
           "eq4.3-dOmega-printed", "eq1.3", "willmore", "mobius", "laguerre")


def _collect(chart, targets):
    """Arrays (or scalars) compared by the harness, keyed by target tag."""
    out = {}
    need_forms = any(t in targets for t in ("eq1.1", "eq1.2", "eq1.2-class", "eq2.1",
                                            "eq4.3-curv", "eq4.3-dOmega", "eq4.3-dOmega-printed"))
    if need_forms:
        fm = inv.lie_forms(chart)
        if "eq1.1" in targets:
            out["eq1.1"] = [fm.quad]
        if "eq1.2" in targets:
            out["eq1.2"] = [fm.cubic1, fm.cubic3]
        if "eq1.2-class" in targets:
            out["eq1.2-class"] = list(fm.cubic_rep)
        if "eq2.1" in targets:
            out["eq2.1"] = [fm.omega1, fm.omega2]
        if "eq4.3-curv" in targets:
            out["eq4.3-curv"] = [fm.curv]
        if "eq4.3-dOmega" in targets:
            out["eq4.3-dOmega"] = [fm.dOmega]
        if "eq4.3-dOmega-printed" in targets:
            out["eq4.3-dOmega-printed"] = [fm.dOmega_printed]
    if "eq1.3" in targets:
        out["eq1.3"] = [np.array(inv.functionals(chart, "lie_13"))]
    if "willmore" in targets:
        out["willmore"] = [np.array(inv.functionals(chart, "willmore"))]
    if "mobius" in targets or "laguerre" in targets:
        ml = inv.mobius_laguerre_forms(chart, laguerre="laguerre" in targets)
        if "mobius" in targets:
            out["mobius"] = [ml[k] for k in ("mobius_1", "mobius_2", "mobius_quad_11",
                                             "mobius_quad_22")]
        if "laguerre" in targets:
            out["laguerre"] = [ml[k] for k in ("laguerre_1", "laguerre_2", "laguerre_quad_11",
                                               "laguerre_quad_22")]
    return out


def deviation(before, after, absolute=False, floor=0.0):
    """max |x' - x| / max(max |x|, floor) over all components.

    ``absolute`` skips the normalization (used for fields that must vanish).
    """
    num = max(float(np.max(np.abs(np.asarray(b) - np.asarray(a)))) for b, a in zip(before, after))
    scale = max(max(float(np.max(np.abs(np.asarray(b)))) for b in before), floor)
    if absolute or scale < 1e-300:
        return num
    return num / scale


def invariance_report(chart, elements, targets, tol=1e-6):
    """Transform, recompute and compare every target for each element.

    Web-curvature targets are 2-form coefficients like the quadratic form;
    their deviation is normalized by the larger of their own size and the
    size of the quadratic form, which keeps the measure meaningful on
    hexagonal charts where the curvature vanishes identically.
    """
    unknown = [t for t in targets if t not in TARGETS]
    if unknown:
        raise ValidationError(f"unknown invariance targets {unknown}")
    base = _collect(chart, targets)
    floors = {t: 0.0 for t in targets}
    if any(t.startswith("eq4.3") for t in targets):
        qscale = float(np.max(np.abs(inv.lie_forms(chart).quad)))
        for t in targets:
            if t.startswith("eq4.3"):
                floors[t] = qscale
    rows = []
    worst = {t: 0.0 for t in targets}
    for elem in elements:
        img = transform_chart(chart, elem)
        new = _collect(img, targets)
        dev = {}
        for t in targets:
            d = deviation(base[t], new[t], absolute=(t == "eq1.2"), floor=floors[t])
            dev[t] = d
            worst[t] = max(worst[t], d)
        rows.append({"element": elem.to_dict(), "deviation": dev})
    return {"chart": chart.label, "targets": list(targets), "max_deviation": worst,
            "tolerance": tol, "passed": {t: bool(worst[t] < tol) for t in targets},
            "elements": rows, "baseline_scale": {
                t: max(float(np.max(np.abs(np.asarray(x)))) for x in base[t]) for t in targets}}
