"""Truncated multivariate Taylor arithmetic ("jets").

A :class:`Jet` carries the Taylor coefficients of a smooth function of
``nvars`` parameters up to total degree ``order`` at every point of an
array of base points.  Arithmetic and elementary functions propagate the
coefficients exactly (to rounding), so derivatives of closed-form charts
are available without finite differences.  ``diff`` returns the
derivative as a jet of one order less.
"""
from functools import lru_cache
from itertools import product
from math import comb, factorial

import numpy as np

from . import _accel
from .errors import InsufficientDerivativeOrder


@lru_cache(maxsize=None)
def _basis(nvars, order):
    idx = [m for m in product(range(order + 1), repeat=nvars) if sum(m) <= order]
    idx.sort(key=lambda m: (sum(m), tuple(-c for c in m)))
    pos = {m: i for i, m in enumerate(idx)}
    ia, ib, ic = [], [], []
    for i, m in enumerate(idx):
        for j, n in enumerate(idx):
            s = tuple(p + q for p, q in zip(m, n))
            if sum(s) <= order:
                ia.append(i)
                ib.append(j)
                ic.append(pos[s])
    table = tuple(np.asarray(t, dtype=np.int64) for t in (ia, ib, ic))
    return tuple(idx), pos, table


@lru_cache(maxsize=None)
def _diff_map(nvars, order, axis):
    idx_lo, _, _ = _basis(nvars, order - 1)
    _, pos_hi, _ = _basis(nvars, order)
    src, fac = [], []
    for m in idx_lo:
        up = list(m)
        up[axis] += 1
        src.append(pos_hi[tuple(up)])
        fac.append(float(up[axis]))
    return np.asarray(src, dtype=np.int64), np.asarray(fac)


@lru_cache(maxsize=None)
def _truncate_map(nvars, order_hi, order_lo):
    idx_lo, _, _ = _basis(nvars, order_lo)
    _, pos_hi, _ = _basis(nvars, order_hi)
    return np.asarray([pos_hi[m] for m in idx_lo], dtype=np.int64)


def _is_scalar_like(x):
    return np.isscalar(x) or isinstance(x, np.ndarray)


class Jet:
    """Taylor coefficients ``coef[k] = d^m f / m!`` for the k-th multi-index m."""

    __slots__ = ("coef", "nvars", "order")
    __array_priority__ = 1000

    def __init__(self, coef, nvars, order):
        self.coef = coef
        self.nvars = nvars
        self.order = order

    # construction ----------------------------------------------------------
    @classmethod
    def constant(cls, value, nvars, order):
        value = np.asarray(value, dtype=float)
        idx, _, _ = _basis(nvars, order)
        coef = np.zeros((len(idx),) + value.shape)
        coef[0] = value
        return cls(coef, nvars, order)

    @classmethod
    def variables(cls, points, order):
        """Coordinate jets for a list of same-shaped point arrays."""
        pts = np.broadcast_arrays(*[np.asarray(p, dtype=float) for p in points])
        nvars = len(pts)
        _, pos, _ = _basis(nvars, order)
        out = []
        for axis, p in enumerate(pts):
            j = cls.constant(p, nvars, order)
            if order >= 1:
                e = [0] * nvars
                e[axis] = 1
                j.coef[pos[tuple(e)]] = 1.0
            out.append(j)
        return out

    # inspection ------------------------------------------------------------
    @property
    def value(self):
        return self.coef[0]

    @property
    def shape(self):
        return self.coef.shape[1:]

    def d(self, *counts):
        """Partial derivative values, e.g. ``d(1, 2)`` = d1 d2^2 f."""
        if len(counts) != self.nvars:
            raise ValueError("need one count per variable")
        if sum(counts) > self.order:
            raise InsufficientDerivativeOrder(
                f"derivative of total order {sum(counts)} requested from a jet of order {self.order}")
        _, pos, _ = _basis(self.nvars, self.order)
        scale = 1.0
        for c in counts:
            scale *= factorial(c)
        return self.coef[pos[tuple(counts)]] * scale

    def diff(self, axis):
        if self.order < 1:
            raise InsufficientDerivativeOrder("cannot differentiate a jet of order 0")
        src, fac = _diff_map(self.nvars, self.order, axis)
        fac = fac.reshape((-1,) + (1,) * (self.coef.ndim - 1))
        return Jet(self.coef[src] * fac, self.nvars, self.order - 1)

    def truncate(self, order):
        if order == self.order:
            return self
        if order > self.order:
            raise InsufficientDerivativeOrder("cannot raise the order of a jet")
        return Jet(self.coef[_truncate_map(self.nvars, self.order, order)], self.nvars, order)

    def __repr__(self):
        return f"Jet(nvars={self.nvars}, order={self.order}, shape={self.shape})"

    # arithmetic ------------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.nvars != self.nvars:
                raise ValueError("jets over different parameter counts")
            order = min(self.order, other.order)
            return self.truncate(order), other.truncate(order)
        if _is_scalar_like(other):
            return self, Jet.constant(np.broadcast_to(np.asarray(other, dtype=float), self.shape),
                                      self.nvars, self.order)
        return NotImplemented

    def __neg__(self):
        return Jet(-self.coef, self.nvars, self.order)

    def __pos__(self):
        return self

    def __add__(self, other):
        if _is_scalar_like(other):
            coef = self.coef.copy()
            coef[0] = coef[0] + other
            return Jet(coef, self.nvars, self.order)
        pair = self._coerce(other)
        if pair is NotImplemented:
            return NotImplemented
        a, b = pair
        return Jet(a.coef + b.coef, a.nvars, a.order)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if _is_scalar_like(other):
            other = np.asarray(other, dtype=float)
            return Jet(self.coef * other, self.nvars, self.order)
        pair = self._coerce(other)
        if pair is NotImplemented:
            return NotImplemented
        a, b = pair
        return _mul(a, b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if _is_scalar_like(other):
            return self * (1.0 / np.asarray(other, dtype=float))
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return NotImplemented

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, Jet):
            return (p * self.log()).exp()
        if isinstance(p, (int, np.integer)) and p >= 0:
            return _ipow(self, int(p))
        return self.power(float(p))

    def __rpow__(self, base):
        return (self * np.log(base)).exp()

    # elementary functions --------------------------------------------------
    def compose(self, taylor):
        """f(self) given the Taylor coefficients ``taylor[n] = f^(n)(x0)/n!``."""
        h = Jet(self.coef.copy(), self.nvars, self.order)
        h.coef[0] = 0.0
        out = Jet.constant(taylor[self.order], self.nvars, self.order)
        for n in range(self.order - 1, -1, -1):
            out = _mul(out, h)
            out.coef[0] = out.coef[0] + taylor[n]
        return out

    def exp(self):
        e = np.exp(self.value)
        return self.compose([e / factorial(n) for n in range(self.order + 1)])

    def log(self):
        x0 = self.value
        tay = [np.log(x0)]
        for n in range(1, self.order + 1):
            tay.append((-1.0) ** (n + 1) / (n * x0 ** n))
        return self.compose(tay)

    def power(self, p):
        x0 = self.value
        tay = [x0 ** p]
        c = np.ones_like(x0)
        for n in range(1, self.order + 1):
            c = c * (p - n + 1) / n
            tay.append(c * x0 ** (p - n))
        return self.compose(tay)

    def reciprocal(self):
        x0 = self.value
        inv = 1.0 / x0
        tay = [inv]
        for n in range(1, self.order + 1):
            tay.append(tay[-1] * (-inv))
        return self.compose(tay)

    def sqrt(self):
        return self.power(0.5)

    def sin(self):
        s, c = np.sin(self.value), np.cos(self.value)
        cyc = (s, c, -s, -c)
        return self.compose([cyc[n % 4] / factorial(n) for n in range(self.order + 1)])

    def cos(self):
        s, c = np.sin(self.value), np.cos(self.value)
        cyc = (c, -s, -c, s)
        return self.compose([cyc[n % 4] / factorial(n) for n in range(self.order + 1)])

    def sinh(self):
        s, c = np.sinh(self.value), np.cosh(self.value)
        return self.compose([(s if n % 2 == 0 else c) / factorial(n) for n in range(self.order + 1)])

    def cosh(self):
        s, c = np.sinh(self.value), np.cosh(self.value)
        return self.compose([(c if n % 2 == 0 else s) / factorial(n) for n in range(self.order + 1)])

    def tan(self):
        return self.sin() / self.cos()

    def arctan(self):
        # d/dx arctan = 1/(1+x^2); integrate the series of the derivative
        x0 = self.value
        one = Jet.variables([np.zeros_like(x0)], self.order)[0]
        u = one + x0
        dser = (1.0 + u * u).reciprocal()
        tay = [np.arctan(x0)]
        for n in range(1, self.order + 1):
            tay.append(dser.coef[n - 1] / n)
        return self.compose(tay)

    def __abs__(self):
        return self * np.sign(self.value)


def _mul(a, b):
    _, _, (ia, ib, ic) = _basis(a.nvars, a.order)
    shape = a.coef.shape[1:]
    ncoef = a.coef.shape[0]
    ac = a.coef.reshape(ncoef, -1)
    bc = b.coef.reshape(ncoef, -1)
    out = _accel.jet_mul(ac, bc, ia, ib, ic, ncoef)
    return Jet(out.reshape((ncoef,) + shape), a.nvars, a.order)


def _ipow(x, p):
    if p == 0:
        return Jet.constant(np.ones(x.shape), x.nvars, x.order)
    out = None
    base = x
    while p:
        if p & 1:
            out = base if out is None else _mul(out, base)
        p >>= 1
        if p:
            base = _mul(base, base)
    return out


def univariate_to_sum(series, nvars, order):
    """Jet of F(x_1 + ... + x_n) from Taylor coefficients of F in one variable.

    ``series`` holds ``F^(m)(s0)/m!`` for m = 0..order as arrays over points.
    """
    idx, _, _ = _basis(nvars, order)
    shape = np.shape(series[0])
    coef = np.zeros((len(idx),) + shape)
    for k, m in enumerate(idx):
        tot = sum(m)
        mult = factorial(tot)
        for c in m:
            mult //= factorial(c)
        coef[k] = series[tot] * mult
    return Jet(coef, nvars, order)


def binomial(n, k):
    return comb(n, k)
