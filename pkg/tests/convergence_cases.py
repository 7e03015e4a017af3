"""Exact solutions for every residual tag, sampled on refined grids.

Errors are max |residual| over the central half of the grid, where all
difference stencils are centered.
"""
import functools

import numpy as np

from liesphere import cyclidic as C
from liesphere import fields as F
from liesphere.fields import Grid, GridField

LEVELS = (9, 17, 33)
FD_ORDER = 6
DOMAIN = ((0.1, 0.2), (0.6, 0.9))


def _gf(fn, grid):
    X, Y = grid.mesh()
    return GridField(fn(X, Y), grid, FD_ORDER)


def _w(x, y):
    return 1.0 + x * x + y * y


def _liouville(x, y):
    return np.exp((x + y) / 2.0) / (np.exp(x) + np.exp(y))


@functools.lru_cache(maxsize=None)
def _waves():
    lie, _ = C.travelling_wave(1.0, (1.2, 0.0), (0.0, 1.0), 5)
    proj, _ = C.travelling_wave(-1.0, (1.0, 0.1), (0.0, 1.0), 5, "projective")
    return lie, proj


def _mvn(grid, red):
    lie, proj = _waves()
    U = _gf(lie if red == "lie" else proj, grid)
    V, W = C.ansatz_potentials(U, red)
    return U, V, W


def _eq410(grid):
    p = _gf(_waves()[1], grid)
    return {"p": p, "a": -(p.diff(0) / p), "b": -(p.diff(1) / p)}


@functools.lru_cache(maxsize=None)
def _enneper():
    return C.enneper_cyclidic_chart()


def _eq44(grid):
    c = _enneper().with_grid(grid)
    v = c.values()
    rho = F.value(C.cyclidic_rho(c, 1))
    return {"k1": GridField(v["k1"], grid, FD_ORDER), "k2": GridField(v["k2"], grid, FD_ORDER),
            "rho": GridField(rho, grid, FD_ORDER)}


# tag -> (field builder, parameter c)
RESIDUAL_CASES = {
    "calapso": (lambda g: {"u": _gf(lambda x, y: 4.0 / _w(x, y), g)}, 1.0),
    # R1 = x + y, R2 = x - y turns the Calapso solution into this one
    "ds2": (lambda g: {"u": _gf(lambda x, y: 4.0 / (1.0 + 2 * x * x + 2 * y * y), g)}, 1.0),
    "eq4.5": (lambda g: {"k1": _gf(lambda x, y: 2.0 / _w(x, y) ** 2, g),
                         "k2": _gf(lambda x, y: -2.0 / _w(x, y) ** 2, g),
                         "rho": _gf(lambda x, y: np.log(_w(x, y)), g)}, 1.0),
    "liouville": (lambda g: {"p": _gf(_liouville, g)}, 1.0),
    "mvn_lie": (lambda g: dict(zip(("U", "V", "W"), _mvn(g, "lie"))), 1.0),
    "mvn_projective": (lambda g: dict(zip(("p", "V", "W"), _mvn(g, "projective"))), -1.0),
    "tzitzeica": (lambda g: {"U": _gf(_waves()[0], g)}, 1.0),
    "eq4.10": (_eq410, 1.0),
    "eq4.4": (_eq44, 1.0),
}


def level_grid(tag, n):
    if tag == "eq4.4":
        g = _enneper().grid
        return Grid(g.lo, g.hi, (n, n))
    return Grid(DOMAIN[0], DOMAIN[1], (n, n))


def interior_error(tag, n):
    build, c = RESIDUAL_CASES[tag]
    grid = level_grid(tag, n)
    r = C.residual(tag, build(grid), c).residual
    m = (n - 1) // 4
    return float(np.max(np.abs(r[m:n - m, m:n - m])))


@functools.lru_cache(maxsize=None)
def convergence_orders(tag):
    errs = tuple(interior_error(tag, n) for n in LEVELS)
    orders = tuple(float(np.log2(errs[i] / errs[i + 1])) for i in range(len(errs) - 1))
    return errs, orders
