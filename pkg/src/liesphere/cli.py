"""Command-line entry point.

Every run resolves a configuration (flags over config file over defaults),
validates it against ``config.schema.json``, dispatches to one subcommand
and writes a deterministic JSON report plus optional CSV field dumps.
Diagnostics go to stderr.  Exit codes: 0 success, 1 invalid input,
2 numerical failure or a check above its tolerance.
"""
import argparse
import csv
import json
import logging
import math
import os
import sys
from importlib import resources

import jsonschema
import numpy as np

from . import __version__, _accel
from . import cyclidic as C
from . import fields as F
from . import ds_flow as DS
from . import hydro as H
from . import invariants as inv
from . import transform as T
from .catalog import CATALOG_IDS, curvature_chart
from .errors import (LieSphereError, NumericalError, SchemaViolation, UnknownCatalogId,
                     ValidationError)
from .expr import Expression, parse_assignment, to_field
from .fields import Grid

log = logging.getLogger("liesphere")

SUBCOMMANDS = ("catalog", "invariants", "transform-check", "classify", "residual",
               "reconstruct", "hydro", "correspond", "evolve")

CATALOG_PARAMS = {
    "plane": (),
    "sphere": ("radius", "allow_umbilic"),
    "torus": ("R", "r"),
    "torus_of_revolution": ("R", "r"),
    "surface_of_revolution": ("rho", "z", "normal_sign"),
    "ellipsoid": ("semi_axes",),
    "ellipsoid_confocal": ("semi_axes",),
    "dupin_cyclide": ("a", "c", "mu", "normal_sign"),
    "graph_patch": ("f", "base", "lengths", "tol"),
    "minimal_weierstrass": ("scale",),
    "synthetic": ("k1", "k2", "g11", "g22"),
    "enneper_cyclidic": (),
}
GRID_PARAMS = ("shape", "lo", "hi", "periodic")

DEFAULTS = {
    "catalog": {},
    "invariants": {"catalog": "torus", "csv_field": "eq1.1"},
    "transform-check": {"catalog": "ellipsoid", "elements": 20, "seed": 7, "tol": 1e-6,
                        "kinds": ["inversion", "normal_shift"],
                        "targets": ["eq1.1", "eq1.2-class", "eq4.3-curv"]},
    "classify": {"catalog": "torus"},
    "residual": {"eq": "calapso", "field": ["u=const(1)"], "grid": 9,
                 "domain": [0.0, 1.0, 0.0, 1.0], "c": 1.0, "tol": 1e-8},
    "reconstruct": {"mode": "exponential", "grid": 33, "domain": [0.0, 0.5, 0.0, 0.5],
                    "tol": 1e-6, "c": 1.0, "wave": [1.2, 0.0]},
    "hydro": {"system": "decoupled", "pairs": 25, "seed": 7, "tol": 1e-8},
    "correspond": {"h": "(u1^3+u2^3)/6", "grid": 17, "domain": [0.2, 1.0, -1.0, -0.2],
                   "tol": 1e-6},
    "evolve": {"a": "0.1*cos(R1+R2)", "b": "0.1*cos(R1+R2)", "alpha": 1.0, "beta": 1.0,
               "grid": 64, "T": 1.0, "dt": 1e-3, "cfl": DS.CFL_DEFAULT, "method": "spectral",
               "tol": 1e-6},
}


def load_schema():
    return json.loads(resources.files("liesphere").joinpath("config.schema.json").read_text())


# -- config ---------------------------------------------------------------------------

def _build_parser():
    parser = argparse.ArgumentParser(prog="liesphere", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"liesphere {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config document")
        p.add_argument("--catalog")
        p.add_argument("--grid", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="JSON report path (stdout when omitted)")
        p.add_argument("--csv", help="CSV field dump path")
        p.add_argument("--csv-field", dest="csv_field")
        if name == "transform-check":
            p.add_argument("--elements", type=int)
            p.add_argument("--kinds", nargs="+")
            p.add_argument("--targets", nargs="+")
        if name in ("residual", "reconstruct"):
            p.add_argument("--eq")
            p.add_argument("--field", action="append")
            p.add_argument("--domain", type=float, nargs=4)
            p.add_argument("--c", type=float)
        if name == "reconstruct":
            p.add_argument("--mode")
            p.add_argument("--wave", type=float, nargs=2, help="U0 and U0' of the wave")
        if name == "hydro":
            p.add_argument("--system")
            p.add_argument("--pairs", type=int)
        if name == "correspond":
            p.add_argument("--h")
            p.add_argument("--domain", type=float, nargs=4)
        if name == "evolve":
            p.add_argument("--a")
            p.add_argument("--b")
            p.add_argument("--alpha", type=float)
            p.add_argument("--beta", type=float)
            p.add_argument("--T", type=float)
            p.add_argument("--dt", type=float)
            p.add_argument("--cfl", type=float)
            p.add_argument("--method")
            p.add_argument("--trajectory", help="time-indexed CSV of the integral")
    return parser


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _extra_params(tokens):
    """``--key value`` pairs left over by argparse become catalog parameters."""
    out = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--") or i + 1 >= len(tokens) or tokens[i + 1].startswith("--"):
            raise SchemaViolation(f"unrecognized argument {tok!r}")
        out[tok[2:]] = _parse_value(tokens[i + 1])
        i += 2
    return out


def _schema_error(err, source):
    where = "/".join(str(p) for p in err.absolute_path) or "<root>"
    return SchemaViolation(f"{source}: key {where}: {err.message}")


def validate_config(cfg, source="config"):
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        raise _schema_error(errors[0], source)
    cat = cfg.get("catalog")
    if cat is not None:
        if cat not in CATALOG_PARAMS:
            raise UnknownCatalogId(f"unknown catalog id {cat!r}")
        allowed = set(CATALOG_PARAMS[cat]) | set(GRID_PARAMS)
        bad = sorted(set(cfg.get("params", {})) - allowed)
        if bad:
            raise SchemaViolation(f"{source}: key params/{bad[0]}: not a parameter of {cat!r}")
    return cfg


def _read_config_file(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"{path}: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise SchemaViolation(f"{path}: the config document must be an object")
    return data


def parse_config(argv, file_data=None):
    """Resolve a run configuration; returns ``(config, conflicts)``."""
    parser = _build_parser()
    args, rest = parser.parse_known_args(argv)
    sub = args.subcommand
    flags = {k: v for k, v in vars(args).items() if v is not None and k not in ("config",)}
    extra = _extra_params(rest)
    if extra:
        flags["params"] = extra
    if file_data is None and args.config:
        file_data = _read_config_file(args.config)
    file_data = dict(file_data or {})
    if "subcommand" in file_data and file_data["subcommand"] != sub:
        raise SchemaViolation(f"config: key subcommand: file says {file_data['subcommand']!r}, "
                              f"command line says {sub!r}")
    validate_config({"subcommand": sub, **file_data}, "config file")
    cfg = {"subcommand": sub}
    cfg.update(DEFAULTS[sub])
    conflicts = []
    for k, v in file_data.items():
        if k == "params":
            cfg["params"] = dict(v)
        else:
            cfg[k] = v
    for k, v in flags.items():
        if k == "params":
            merged = dict(cfg.get("params", {}))
            for pk, pv in v.items():
                if pk in merged and merged[pk] != pv:
                    conflicts.append(f"params.{pk}")
                merged[pk] = pv
            cfg["params"] = merged
            continue
        if k in file_data and file_data[k] != v:
            conflicts.append(k)
        cfg[k] = v
    for k in conflicts:
        log.warning("flag overrides config file value for %s", k)
    validate_config(cfg)
    return cfg, conflicts


# -- helpers --------------------------------------------------------------------------

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return x


def _amax(x):
    x = np.asarray(x, dtype=float)
    if not np.any(np.isfinite(x)):
        return float("nan")
    return float(np.nanmax(np.abs(x)))


def _chart(cfg):
    params = dict(cfg.get("params", {}))
    if "grid" in cfg:
        g = cfg["grid"]
        params["shape"] = [g, g] if isinstance(g, int) else list(g)
    cat = cfg["catalog"]
    if cat == "enneper_cyclidic":
        return C.enneper_cyclidic_chart(params)
    try:
        return curvature_chart(cat, params)
    except ValueError as exc:
        if isinstance(exc, LieSphereError):
            raise
        raise ValidationError(str(exc)) from None


def _square_grid(cfg, periodic=(False, False)):
    g = cfg["grid"]
    shape = (g, g) if isinstance(g, int) else tuple(g)
    d = cfg["domain"]
    return Grid((d[0], d[2]), (d[1], d[3]), shape, periodic)


def write_csv(path, grid, values):
    """Rows ``R1,R2,value`` in C order of the grid."""
    X, Y = grid.mesh()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["R1", "R2", "value"])
        for x, y, v in zip(X.ravel(), Y.ravel(), np.asarray(values, dtype=float).ravel()):
            w.writerow([repr(float(x)), repr(float(y)), repr(float(v))])


# -- subcommands ------------------------------------------------------------------------

def cmd_catalog(cfg):
    if "catalog" not in cfg:
        entries = {cid: {"parameters": list(CATALOG_PARAMS[cid])}
                   for cid in CATALOG_IDS + ("enneper_cyclidic",)}
        return {"surfaces": entries, "hydro_systems": sorted(H.HYDRO_CATALOG)}, {}, True, {}
    chart = _chart(cfg)
    vals = chart.values()
    res = {"label": chart.label, "grid": {"lo": chart.grid.lo, "hi": chart.grid.hi,
                                          "shape": chart.grid.shape},
           "max_abs": {k: _amax(v) for k, v in vals.items()}}
    fields = {k: v for k, v in vals.items()}
    return res, {}, True, fields


def cmd_invariants(cfg):
    chart = _chart(cfg)
    fm = inv.lie_forms(chart)
    res = {"chart": chart.label, "flags": fm.flags,
           "eq1.1": {"quad_max": _amax(fm.quad)},
           "eq1.2": {"cubic1_max": _amax(fm.cubic1), "cubic3_max": _amax(fm.cubic3)},
           "eq2.1": {"omega1_max": _amax(fm.omega1), "omega2_max": _amax(fm.omega2)},
           "eq4.3": {"curv_max": _amax(fm.curv), "dOmega_max": _amax(fm.dOmega),
                     "dOmega_printed_max": _amax(fm.dOmega_printed)}}
    tags = {"eq1.1": "eq1.1", "eq1.2": "eq1.2", "eq2.1": "eq2.1", "eq4.3": "eq4.3"}
    try:
        res["willmore"] = inv.functionals(chart, "willmore")
        tags["willmore"] = "willmore"
    except NumericalError as exc:
        res["willmore"] = f"unavailable: {exc}"
    if fm.flags.get("generic"):
        res["eq1.3"] = inv.functionals(chart, "lie_13")
        tags["eq1.3"] = "eq1.3"
    fields = {"eq1.1": fm.quad, "eq1.2-cubic1": fm.cubic1, "eq1.2-cubic3": fm.cubic3,
              "eq4.3-curv": fm.curv, "eq4.3-dOmega": fm.dOmega}
    return res, tags, True, fields


def cmd_transform_check(cfg):
    chart = _chart(cfg)
    rng = np.random.default_rng(cfg["seed"])
    elements = []
    for kind in cfg["kinds"]:
        elements.extend(T.random_elements(chart, cfg["elements"], rng, kind))
    rep = T.invariance_report(chart, elements, cfg["targets"], cfg["tol"])
    res = {"chart": rep["chart"], "max_deviation": rep["max_deviation"],
           "passed": rep["passed"], "elements": len(elements),
           "baseline_scale": rep["baseline_scale"]}
    tags = {t: t for t in cfg["targets"]}
    return res, tags, all(rep["passed"].values()), {}


def cmd_classify(cfg):
    chart = _chart(cfg)
    label, rep = C.classify(chart, cfg.get("tol"))
    return {"chart": chart.label, "label": label, "report": rep}, {"label": "eq1.2+eq4.3"}, \
        True, {}


def _expr_fields(cfg, order, grid):
    out = {}
    for item in cfg.get("field", []):
        name, ex = parse_assignment(item)
        out[name] = to_field(ex).jet(grid.mesh(), order)
    return out


def cmd_residual(cfg):
    grid = _square_grid(cfg)
    tag = C.canonical_tag(cfg["eq"])
    fields = _expr_fields(cfg, C.TAG_ORDER[tag] + 1, grid)
    if tag.startswith("mvn"):
        name = "U" if tag == "mvn_lie" else "p"
        if name in fields and ("V" not in fields or "W" not in fields):
            V, W = C.ansatz_potentials(fields[name], "lie" if tag == "mvn_lie" else "projective")
            fields.setdefault("V", V)
            fields.setdefault("W", W)
    rep = C.residual(tag, fields, cfg["c"])
    res = {"eq": tag, "residual_max": rep.max,
           "components": {k: _amax(v) for k, v in rep.components.items()},
           "constraints": {k: _amax(v) for k, v in rep.constraints.items()},
           "tolerance": cfg["tol"]}
    worst = max([rep.max] + list(res["constraints"].values()))
    return res, {"residual_max": tag}, bool(worst < cfg["tol"]), {"residual": rep.residual}


def cmd_reconstruct(cfg):
    grid = _square_grid(cfg)
    mode = cfg["mode"]
    tags = {"path_independence": "eq4.13"}
    if mode == "exponential":
        fs = C.MvnFieldSet(1.0, reduction="projective")
        imm, net, rep = C.reconstruct_projective_surface(
            fs, grid, {"a": 0.0, "b": 0.0, "f": 0.0, "r": C.exponential_seeds()}, tol=cfg["tol"])
        extra = {"exponential_span": C.exponential_span_residual(imm.samples, grid)}
    elif mode in ("affine", "wave"):
        if mode == "affine":
            fields = dict(parse_assignment(f) for f in cfg.get("field", []))
            if "p" not in fields:
                raise ValidationError("affine mode needs --field p=<expression>")
            src = to_field(fields["p"])
        else:
            d = cfg["domain"]
            src = C.TravellingWave(cfg["c"], cfg["wave"][0], cfg["wave"][1],
                                   (d[0] + d[2], d[1] + d[3]), "projective")
        fs = C.MvnFieldSet(src, reduction="projective", c=cfg["c"])
        seeds = C.affine_sphere_seeds(src, grid.lo[0], grid.lo[1])
        imm, net, rep = C.reconstruct_projective_surface(fs, grid, seeds, tol=cfg["tol"])
        extra = {"affine_sphere": C.affine_sphere_residual(rep["state"], net.p, grid)}
        tags["affine_sphere"] = "eq4.10"
    else:
        d = cfg["domain"]
        wave = C.TravellingWave(cfg["c"], cfg["wave"][0], cfg["wave"][1],
                                (d[0] + d[2], d[1] + d[3]), "lie")
        fs = C.MvnFieldSet(wave, c=cfg["c"])
        st, rep = C.auxiliary_chain(fs, grid, tol=cfg["tol"])
        res = {"mode": mode, "max_path_residual": rep["max_path_residual"],
               "relations": rep["relations"]}
        tags = {"max_path_residual": "eq10.3", "relations": "eq10.3-eq10.13"}
        return res, tags, True, {}
    net_res = C.asymptotic_net_residual(rep["state"], net, grid)
    res = {"mode": mode, "max_path_residual": rep["max_path_residual"],
           "asymptotic_net": net_res, **extra}
    fields = {f"r{i}": imm.samples[i] for i in range(3)}
    return res, tags, True, fields


def cmd_hydro(cfg):
    name = cfg["system"]
    if name not in H.HYDRO_CATALOG:
        raise UnknownCatalogId(f"unknown hydro system {name!r}")
    system = H.HYDRO_CATALOG[name](cfg.get("params"))
    rng = np.random.default_rng(cfg["seed"])
    laws = {law.label: H.conservation_residual(system, law)["max"] for law in system.laws}
    pairs = H.random_law_pairs(system, cfg["pairs"], rng)
    rep = H.invariance_report(system, pairs, cfg["tol"])
    flip = H.reciprocal_transform(system, H.TRIVIAL_DT, H.TRIVIAL_DX)
    lam = [np.asarray(F.value(v)) for v in system.velocity_jets(0)]
    Lam = [np.asarray(F.value(v)) for v in flip.velocity_jets(0)]
    flip_dev = max(_amax(L - 1.0 / l) for L, l in zip(Lam, lam))
    res = {"system": system.label, "laws_residual": laws, "max_deviation": rep["max_deviation"],
           "rows": rep["rows"], "flip_deviation": flip_dev, "tolerance": cfg["tol"]}
    tags = {"laws_residual": "eq6.4", "max_deviation": "eq6.9+eq6.10+eq7.6",
            "flip_deviation": "eq6.8"}
    ok = rep["passed"] and flip_dev < cfg["tol"] and max(laws.values(), default=0.0) < cfg["tol"]
    return res, tags, bool(ok), {}


def cmd_correspond(cfg):
    grid = _square_grid(cfg)
    ex = Expression(cfg["h"], ("u1", "u2"))
    h = H.HamiltonianDensity(lambda a, b: ex(a, b), cfg["h"])
    imm, n, srep = H.surface_from_hamiltonian(h, grid)
    eq = H.correspondence_equivariance(h, grid)
    res = {"surface": srep, "equivariance": eq, "tolerance": cfg["tol"]}
    tags = {"surface": "eq8.2", "equivariance": "eq8.3"}
    ok = eq["max_deviation"] < cfg["tol"] and srep["norm_deviation"] < 1e-12
    r = np.asarray(imm(*grid.mesh()))
    return res, tags, bool(ok), {f"r{i}": r[i] for i in range(3)}


def cmd_evolve(cfg):
    g = cfg["grid"]
    shape = (g, g) if isinstance(g, int) else tuple(g)
    grid = Grid((0.0, 0.0), (2.0 * math.pi, 2.0 * math.pi), shape, (True, True))
    ea = Expression(cfg["a"])
    eb = Expression(cfg["b"])
    state = DS.state_from_functions(lambda x, y: ea(x, y) + 0.0 * x,
                                    lambda x, y: eb(x, y) + 0.0 * x, grid,
                                    cfg["alpha"], cfg["beta"], method=cfg["method"])
    final, rep = DS.evolve(state, cfg["T"], cfg["dt"], cfg["cfl"])
    res = {"I0": rep["I0"], "max_drift": rep["max_drift"], "steps": rep["steps"],
           "times": rep["times"], "integral": rep["integral"], "tolerance": cfg["tol"]}
    if cfg.get("trajectory"):
        with open(cfg["trajectory"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "I", "drift"])
            for t, v in zip(rep["times"], rep["integral"]):
                w.writerow([repr(float(t)), repr(float(v)), repr(float(abs(v - rep["I0"])))])
    tags = {"I0": "eq3.4", "max_drift": "eq3.4"}
    return res, tags, bool(rep["max_drift"] < cfg["tol"]), {"a": final.a, "b": final.b}


HANDLERS = {"catalog": cmd_catalog, "invariants": cmd_invariants,
            "transform-check": cmd_transform_check, "classify": cmd_classify,
            "residual": cmd_residual, "reconstruct": cmd_reconstruct, "hydro": cmd_hydro,
            "correspond": cmd_correspond, "evolve": cmd_evolve}


def _csv_grid(cfg, fields):
    sub = cfg["subcommand"]
    if sub in ("catalog", "invariants", "classify", "transform-check"):
        return _chart(cfg).grid
    if sub == "evolve":
        g = cfg["grid"]
        shape = (g, g) if isinstance(g, int) else tuple(g)
        return Grid((0.0, 0.0), (2.0 * math.pi, 2.0 * math.pi), shape, (True, True))
    return _square_grid(cfg)


def execute(cfg, conflicts=()):
    """Run a resolved configuration; returns ``(exit_code, report_text)``."""
    res, tags, ok, fields = HANDLERS[cfg["subcommand"]](cfg)
    report = {"tool": "liesphere", "version": __version__, "backend": _accel.backend(),
              "config": cfg, "conflicts": list(conflicts), "results": res, "tags": tags,
              "passed": ok}
    text = json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"
    if cfg.get("csv"):
        if not fields:
            raise ValidationError(f"{cfg['subcommand']} produces no field for CSV output")
        key = cfg.get("csv_field") or next(iter(fields))
        if key not in fields:
            raise ValidationError(f"unknown csv field {key!r}; choose from {sorted(fields)}")
        write_csv(cfg["csv"], _csv_grid(cfg, fields), fields[key])
    return (0 if ok else 2), text


def _set_threads():
    n = os.environ.get("LIESPHERE_THREADS")
    if not n or not _accel.USE_NUMBA:
        return
    import numba
    numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="liesphere: %(message)s", stream=sys.stderr)
    argv = sys.argv[1:] if argv is None else argv
    try:
        _set_threads()
        cfg, conflicts = parse_config(argv)
        code, text = execute(cfg, conflicts)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    except ValidationError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 1
    except NumericalError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 2
    except (LieSphereError, ArithmeticError, np.linalg.LinAlgError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 2
    if cfg.get("out"):
        with open(cfg["out"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if code:
        log.error("check above tolerance; see the report")
    return code


if __name__ == "__main__":
    sys.exit(main())
