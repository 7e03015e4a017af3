"""Scalar fields on rectangular parameter domains.

Two concrete representations share one arithmetic interface (``+ - * /``,
``**``, ``diff(axis)``, ``order`` as remaining derivative budget, ``value``):

* :class:`~liesphere.jet.Jet` for closed-form data (exact derivatives);
* :class:`GridField` for sampled data (fourth-order finite differences).

Formulas in the rest of the package are written against this interface
and the helpers below (``exp``, ``log``, ...), so they run unchanged on
either representation.
"""
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .errors import InsufficientDerivativeOrder, PeriodicityError
from .jet import Jet


@dataclass(frozen=True)
class Grid:
    """Tensor-product grid.  Periodic axes omit the right endpoint."""

    lo: tuple
    hi: tuple
    shape: tuple
    periodic: tuple = field(default=None)

    def __post_init__(self):
        n = len(self.shape)
        per = self.periodic if self.periodic is not None else (False,) * n
        object.__setattr__(self, "lo", tuple(float(x) for x in self.lo))
        object.__setattr__(self, "hi", tuple(float(x) for x in self.hi))
        object.__setattr__(self, "shape", tuple(int(x) for x in self.shape))
        object.__setattr__(self, "periodic", tuple(bool(p) for p in per))
        if not (len(self.lo) == len(self.hi) == n == len(self.periodic)):
            raise ValueError("grid bounds, shape and periodic flags differ in length")
        for ax in range(n):
            if self.shape[ax] < (2 if self.periodic[ax] else 5):
                raise ValueError("grid too coarse along axis %d" % ax)

    @property
    def ndim(self):
        return len(self.shape)

    def axis(self, ax):
        if self.periodic[ax]:
            return np.linspace(self.lo[ax], self.hi[ax], self.shape[ax], endpoint=False)
        return np.linspace(self.lo[ax], self.hi[ax], self.shape[ax])

    def spacing(self, ax):
        n = self.shape[ax]
        span = self.hi[ax] - self.lo[ax]
        return span / n if self.periodic[ax] else span / (n - 1)

    @property
    def h(self):
        return tuple(self.spacing(a) for a in range(self.ndim))

    def mesh(self):
        return np.meshgrid(*[self.axis(a) for a in range(self.ndim)], indexing="ij")

    def refined(self, factor=2):
        shape = []
        for ax, n in enumerate(self.shape):
            shape.append(n * factor if self.periodic[ax] else (n - 1) * factor + 1)
        return Grid(self.lo, self.hi, tuple(shape), self.periodic)

    def to_dict(self):
        return {"lo": list(self.lo), "hi": list(self.hi), "shape": list(self.shape),
                "periodic": list(self.periodic)}


class GridField:
    """Samples on a :class:`Grid` with a finite-difference derivative budget."""

    __slots__ = ("data", "grid", "order")
    __array_priority__ = 1000

    def __init__(self, data, grid, order=4):
        self.data = np.asarray(data, dtype=float)
        if self.data.shape != grid.shape:
            raise ValueError(f"samples of shape {self.data.shape} on grid {grid.shape}")
        self.grid = grid
        self.order = order

    @classmethod
    def from_function(cls, fn, grid, order=4):
        return cls(fn(*grid.mesh()), grid, order)

    @property
    def value(self):
        return self.data

    @property
    def shape(self):
        return self.data.shape

    def diff(self, axis):
        if self.order < 1:
            raise InsufficientDerivativeOrder("finite-difference budget exhausted")
        d = _accel.fd1(self.data, self.grid.spacing(axis), axis, self.grid.periodic[axis])
        return GridField(d, self.grid, self.order - 1)

    def _wrap(self, data, other=None):
        order = self.order
        if isinstance(other, GridField):
            order = min(order, other.order)
        return GridField(data, self.grid, order)

    @staticmethod
    def _raw(x):
        return x.data if isinstance(x, GridField) else x

    def __neg__(self):
        return GridField(-self.data, self.grid, self.order)

    def __pos__(self):
        return self

    def __add__(self, o):
        return self._wrap(self.data + self._raw(o), o)

    __radd__ = __add__

    def __sub__(self, o):
        return self._wrap(self.data - self._raw(o), o)

    def __rsub__(self, o):
        return self._wrap(self._raw(o) - self.data, o)

    def __mul__(self, o):
        return self._wrap(self.data * self._raw(o), o)

    __rmul__ = __mul__

    def __truediv__(self, o):
        return self._wrap(self.data / self._raw(o), o)

    def __rtruediv__(self, o):
        return self._wrap(self._raw(o) / self.data, o)

    def __pow__(self, p):
        return self._wrap(self.data ** self._raw(p), p)

    def __abs__(self):
        return GridField(np.abs(self.data), self.grid, self.order)

    def _apply(self, fn):
        return GridField(fn(self.data), self.grid, self.order)

    def exp(self):
        return self._apply(np.exp)

    def log(self):
        return self._apply(np.log)

    def sqrt(self):
        return self._apply(np.sqrt)

    def sin(self):
        return self._apply(np.sin)

    def cos(self):
        return self._apply(np.cos)

    def sinh(self):
        return self._apply(np.sinh)

    def cosh(self):
        return self._apply(np.cosh)

    def tan(self):
        return self._apply(np.tan)

    def arctan(self):
        return self._apply(np.arctan)

    def power(self, p):
        return self._apply(lambda d: d ** p)

    def reciprocal(self):
        return self._apply(lambda d: 1.0 / d)

    def __repr__(self):
        return f"GridField(shape={self.shape}, order={self.order})"


def _dispatch(name, npfn):
    def f(x):
        if hasattr(x, name):
            return getattr(x, name)()
        return npfn(x)

    f.__name__ = name
    return f


exp = _dispatch("exp", np.exp)
log = _dispatch("log", np.log)
sqrt = _dispatch("sqrt", np.sqrt)
sin = _dispatch("sin", np.sin)
cos = _dispatch("cos", np.cos)
sinh = _dispatch("sinh", np.sinh)
cosh = _dispatch("cosh", np.cosh)
tan = _dispatch("tan", np.tan)
arctan = _dispatch("arctan", np.arctan)


def value(x):
    """Point values of a field, or the input if it is already numeric."""
    return x.value if hasattr(x, "value") else np.asarray(x, dtype=float)


def order_of(x):
    return getattr(x, "order", 10 ** 6)


def d(x, axis):
    if hasattr(x, "diff"):
        return x.diff(axis)
    return np.zeros_like(np.asarray(x, dtype=float))


class AnalyticField:
    """Closed-form scalar function of the parameters, evaluated as jets.

    ``fn`` receives one coordinate :class:`Jet` per parameter and returns a
    jet; plain numpy callables also work because jets implement the
    arithmetic operators and the dispatchers in this module.
    """

    def __init__(self, fn, nvars=2, label=None):
        self.fn = fn
        self.nvars = nvars
        self.label = label or getattr(fn, "__name__", "field")

    def jet(self, points, order):
        vars_ = Jet.variables(points, order)
        out = self.fn(*vars_)
        if not isinstance(out, Jet):
            out = Jet.constant(np.broadcast_to(np.asarray(out, dtype=float), vars_[0].shape),
                               self.nvars, order)
        return out

    def on_grid(self, grid, order):
        return self.jet(grid.mesh(), order)

    def sample(self, grid):
        return GridField(self.jet(grid.mesh(), 0).value, grid)

    def __call__(self, *pts):
        return self.jet(pts, 0).value


def check_periodic(fn, grid, rtol=1e-8):
    """Reject a closed-form input that is not periodic along the periodic axes."""
    mesh = grid.mesh()
    base = np.asarray(fn(*mesh), dtype=float)
    scale = max(np.max(np.abs(base)), 1e-300)
    for ax in range(grid.ndim):
        if not grid.periodic[ax]:
            continue
        shifted = list(mesh)
        shifted[ax] = mesh[ax] + (grid.hi[ax] - grid.lo[ax])
        other = np.asarray(fn(*shifted), dtype=float)
        if np.max(np.abs(other - base)) > rtol * scale:
            raise PeriodicityError(f"input is not periodic along axis {ax + 1}")
    return base
