"""DS-type evolution of conjugate nets on a doubly periodic parameter domain.

State: the coefficients ``a, b`` of ``r_12 = a r_1 + b r_2`` and optionally
the radius vector ``r``.  The flow

    a_t = beta a_22 - alpha a_11 + 2 alpha (ab)_1 + beta (a^2)_2 + p a_1 + (q a)_2
    b_t = alpha b_11 - beta b_22 + 2 beta (ab)_2 + alpha (b^2)_1 + q b_2 + (p b)_1
    p_2 = -2 alpha a_1,   q_1 = -2 beta b_2

is advanced by classical fourth-order Runge-Kutta with spectral (default) or
fourth-order finite-difference derivatives; ``r`` follows
``r_t = alpha r_11 + beta r_22 + p r_1 + q r_2``.  The quadratic integral
``I = iint a b`` is monitored.

The linear part ``beta d2^2 - alpha d1^2`` is anti-diffusive in one
direction for each of ``a`` and ``b``, so generic high-frequency content
grows from rounding noise.  After every stage the state is passed through a
2/3-rule dealiasing mask and a Krasny noise-floor filter, which zeroes Fourier
coefficients below ``noise_floor`` times the largest one.

The constraints for ``p, q`` have periodic solutions only when ``a_1`` has
zero mean in R2 and ``b_2`` zero mean in R1.  The flow does not preserve this
for generic data, so means up to ``solvability_tol`` are dropped and larger
ones raise ``SolvabilityFailure``.
"""
from dataclasses import dataclass, field, replace

import numpy as np

from . import _accel
from .errors import CFLViolation, SolvabilityFailure, ValidationError
from .fields import Grid, check_periodic

CFL_DEFAULT = 0.2
NOISE_FLOOR = 1e-13
SOLVABILITY_TOL = 1e-8


@dataclass
class ConjugateNetState:
    a: np.ndarray
    b: np.ndarray
    grid: Grid
    alpha: float = 1.0
    beta: float = 1.0
    t: float = 0.0
    r: np.ndarray = None
    method: str = "spectral"
    noise_floor: float = NOISE_FLOOR
    solvability_tol: float = SOLVABILITY_TOL
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not all(self.grid.periodic):
            raise ValidationError("the DS flow needs a doubly periodic grid")
        if self.method not in ("spectral", "fd"):
            raise ValidationError("method must be 'spectral' or 'fd'")
        self.a = np.asarray(self.a, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.a.shape != self.grid.shape or self.b.shape != self.grid.shape:
            raise ValidationError("a and b must be sampled on the grid")


def state_from_functions(a_fn, b_fn, grid, alpha=1.0, beta=1.0, r_fn=None, method="spectral",
                         noise_floor=NOISE_FLOOR):
    """Sample closed-form initial data; rejects data that is not periodic."""
    for fn in (a_fn, b_fn):
        check_periodic(fn, grid)
    X, Y = grid.mesh()
    r = None
    if r_fn is not None:
        r = np.stack([np.broadcast_to(np.asarray(c, dtype=float), X.shape) for c in r_fn(X, Y)])
    return ConjugateNetState(np.broadcast_to(a_fn(X, Y), X.shape).astype(float),
                             np.broadcast_to(b_fn(X, Y), X.shape).astype(float),
                             grid, alpha, beta, 0.0, r, method, noise_floor)


# -- spatial operators ---------------------------------------------------------------

class _Ops:
    def __init__(self, grid, method, noise_floor=NOISE_FLOOR):
        self.grid = grid
        self.method = method
        self.noise_floor = noise_floor
        n1, n2 = grid.shape
        L1 = grid.hi[0] - grid.lo[0]
        L2 = grid.hi[1] - grid.lo[1]
        self.k1 = (2.0 * np.pi * np.fft.fftfreq(n1, d=L1 / n1))[:, None]
        self.k2 = (2.0 * np.pi * np.fft.fftfreq(n2, d=L2 / n2))[None, :]
        m1 = np.abs(np.fft.fftfreq(n1) * n1)[:, None] <= n1 / 3.0
        m2 = np.abs(np.fft.fftfreq(n2) * n2)[None, :] <= n2 / 3.0
        self.mask = (m1 & m2).astype(float)

    def d(self, f, axis, times=1):
        if self.method == "spectral":
            k = self.k1 if axis == 0 else self.k2
            fh = np.fft.fft2(f)
            return np.real(np.fft.ifft2(fh * (1j * k) ** times))
        for _ in range(times):
            f = _accel.fd1(f, self.grid.spacing(axis), axis, True)
        return f

    def filt(self, f):
        fh = np.fft.fft2(f) * self.mask
        if self.noise_floor > 0.0:
            mag = np.abs(fh)
            fh[mag < self.noise_floor * float(mag.max())] = 0.0
        return np.real(np.fft.ifft2(fh))

    def antiderivative(self, f, axis, tol):
        """Zero-mean periodic antiderivative along ``axis`` (spectral)."""
        n = f.shape[axis]
        L = self.grid.hi[axis] - self.grid.lo[axis]
        fh = np.fft.fft(f, axis=axis)
        mean = np.take(fh, [0], axis=axis) / n
        scale = float(np.max(np.abs(f))) + 1e-300
        if float(np.max(np.abs(mean))) > tol * max(scale, 1.0):
            raise SolvabilityFailure("the integrand has nonzero mean along the integration "
                                     "direction; no periodic potential exists")
        k = 2.0 * np.pi * np.fft.fftfreq(n, d=L / n)
        shape = [1, 1]
        shape[axis] = n
        k = k.reshape(shape)
        with np.errstate(divide="ignore", invalid="ignore"):
            gh = np.where(k == 0, 0.0, fh / (1j * k))
        return np.real(np.fft.ifft(gh, axis=axis))


def _ops(state):
    key = (state.grid, state.method, state.noise_floor)
    cache = state.meta.setdefault("_ops", {})
    if key not in cache:
        cache[key] = _Ops(state.grid, state.method, state.noise_floor)
    return cache[key]


def solve_pq(state, tol=None):
    """``p = -2 alpha int a_1 dR2``, ``q = -2 beta int b_2 dR1`` (zero-mean gauge)."""
    ops = _ops(state)
    tol = state.solvability_tol if tol is None else tol
    return _pq(ops, state.a, state.b, state.alpha, state.beta, tol)


def _pq(ops, a, b, alpha, beta, tol=SOLVABILITY_TOL):
    p = np.zeros_like(a)
    q = np.zeros_like(b)
    if alpha != 0.0:
        p = ops.antiderivative(-2.0 * alpha * ops.d(a, 0), 1, tol)
    if beta != 0.0:
        q = ops.antiderivative(-2.0 * beta * ops.d(b, 1), 0, tol)
    return p, q


def rhs(ops, a, b, alpha, beta, tol=SOLVABILITY_TOL):
    p, q = _pq(ops, a, b, alpha, beta, tol)
    d = ops.d
    ab = a * b
    at = np.zeros_like(a)
    bt = np.zeros_like(b)
    if alpha != 0.0:
        at += -alpha * d(a, 0, 2) + 2.0 * alpha * d(ab, 0) + p * d(a, 0)
        bt += alpha * d(b, 0, 2) + alpha * d(b * b, 0) + d(p * b, 0)
    if beta != 0.0:
        at += beta * d(a, 1, 2) + beta * d(a * a, 1) + d(q * a, 1)
        bt += -beta * d(b, 1, 2) + 2.0 * beta * d(ab, 1) + q * d(b, 1)
    return at, bt, p, q


def _r_rhs(ops, r, p, q, alpha, beta):
    out = np.empty_like(r)
    for c in range(r.shape[0]):
        out[c] = (alpha * ops.d(r[c], 0, 2) + beta * ops.d(r[c], 1, 2)
                  + p * ops.d(r[c], 0) + q * ops.d(r[c], 1))
    return out


def check_cfl(state, dt, C=CFL_DEFAULT):
    h = min(state.grid.h)
    if dt > C * h * h:
        raise CFLViolation(f"dt = {dt:g} exceeds the explicit bound {C:g} h^2 = {C * h * h:g}")


def step(state, dt, C=CFL_DEFAULT, alpha=None, beta=None):
    """One classical Runge-Kutta step of the flow (or of a split flow via alpha/beta)."""
    check_cfl(state, dt, C)
    al = state.alpha if alpha is None else alpha
    be = state.beta if beta is None else beta
    ops = _ops(state)
    a0, b0, r0 = state.a, state.b, state.r

    def f(a, b, r):
        at, bt, p, q = rhs(ops, a, b, al, be, state.solvability_tol)
        rt = None if r is None else _r_rhs(ops, r, p, q, al, be)
        return at, bt, rt

    def add(x, y, s):
        return None if x is None else x + s * y

    k1 = f(a0, b0, r0)
    s2 = [ops.filt(add(a0, k1[0], dt / 2)), ops.filt(add(b0, k1[1], dt / 2)), add(r0, k1[2], dt / 2)]
    k2 = f(*s2)
    s3 = [ops.filt(add(a0, k2[0], dt / 2)), ops.filt(add(b0, k2[1], dt / 2)), add(r0, k2[2], dt / 2)]
    k3 = f(*s3)
    s4 = [ops.filt(add(a0, k3[0], dt)), ops.filt(add(b0, k3[1], dt)), add(r0, k3[2], dt)]
    k4 = f(*s4)

    def comb(x, i):
        if x is None:
            return None
        return x + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])

    a1 = ops.filt(comb(a0, 0))
    b1 = ops.filt(comb(b0, 1))
    r1 = comb(r0, 2)
    if not (np.all(np.isfinite(a1)) and np.all(np.isfinite(b1))):
        raise CFLViolation("the solution became non-finite")
    return replace(state, a=a1, b=b1, r=r1, t=state.t + dt)


def quadratic_integral(state):
    """``iint a b dR1 dR2`` (periodic trapezoid, spectrally accurate)."""
    h1, h2 = state.grid.h
    return float(np.sum(state.a * state.b) * h1 * h2)


def conjugacy_residual(state):
    """Max of ``|r_12 - a r_1 - b r_2|`` with ``a, b`` recomputed from ``r`` by least squares."""
    if state.r is None:
        return None
    ops = _ops(state)
    r = state.r
    r1 = np.stack([ops.d(c, 0) for c in r], -1)
    r2 = np.stack([ops.d(c, 1) for c in r], -1)
    r12 = np.stack([ops.d(ops.d(c, 0), 1) for c in r], -1)
    M = np.stack([r1, r2], -1)
    MtM = np.einsum("...ki,...kj->...ij", M, M)
    Mtb = np.einsum("...ki,...k->...i", M, r12)
    coef = np.linalg.solve(MtM, Mtb[..., None])[..., 0]
    res = r12 - np.einsum("...ki,...i->...k", M, coef)
    scale = float(np.max(np.abs(r12))) + float(np.max(np.abs(r1))) + 1e-300
    return float(np.max(np.linalg.norm(res, axis=-1))) / scale


def evolve(state, T, dt, C=CFL_DEFAULT, record_every=None, callback=None):
    """Advance to time ``T``; returns the final state and a conservation report."""
    nsteps = int(round(T / dt))
    if nsteps < 1 or abs(nsteps * dt - T) > 1e-9 * max(T, 1.0):
        raise ValidationError("T must be a positive multiple of dt")
    check_cfl(state, dt, C)
    record_every = record_every or max(nsteps // 100, 1)
    I0 = quadratic_integral(state)
    c0 = conjugacy_residual(state)
    times, integrals, conj = [state.t], [I0], [c0]
    s = state
    for k in range(1, nsteps + 1):
        s = step(s, dt, C)
        if k % record_every == 0 or k == nsteps:
            times.append(s.t)
            integrals.append(quadratic_integral(s))
            conj.append(conjugacy_residual(s))
            if callback is not None:
                callback(s)
    drift = max(abs(v - I0) for v in integrals)
    report = {"T": T, "dt": dt, "steps": nsteps, "I0": I0, "max_drift": drift,
              "times": times, "integral": integrals}
    if c0 is not None:
        report["conjugacy"] = conj
        report["conjugacy_growth"] = max(conj) / max(c0, 1e-300)
    return s, report


def composition_discrepancy(state, dt, C=CFL_DEFAULT):
    """Max difference between one step of each split flow in both orders."""
    ab = step(step(state, dt, C, 1.0, 0.0), dt, C, 0.0, 1.0)
    ba = step(step(state, dt, C, 0.0, 1.0), dt, C, 1.0, 0.0)
    return max(float(np.max(np.abs(ab.a - ba.a))), float(np.max(np.abs(ab.b - ba.b))))


def rounding_floor(state):
    """Level below which changes of ``I`` are indistinguishable from rounding."""
    return 1e3 * np.finfo(float).eps * max(abs(quadratic_integral(state)), 1.0)


def order_estimate(coarse, fine, floor):
    """Observed order from errors at ``dt`` and ``dt/2``; None when both sit below ``floor``."""
    if coarse <= floor and fine <= floor:
        return None
    if fine <= 0.0:
        return float("inf")
    return float(np.log2(coarse / fine))


def convergence_study(state, T, dt, C=CFL_DEFAULT):
    """Drift and split-flow composition discrepancy at ``dt`` and ``dt/2``."""
    _, coarse = evolve(state, T, dt, C)
    _, fine = evolve(state, T, dt / 2, C)
    floor = rounding_floor(state)
    comp = [composition_discrepancy(state, dt, C), composition_discrepancy(state, dt / 2, C)]
    cfloor = 1e3 * np.finfo(float).eps * max(float(np.max(np.abs(state.a))),
                                             float(np.max(np.abs(state.b))), 1e-300)
    return {"drift": [coarse["max_drift"], fine["max_drift"]],
            "drift_order": order_estimate(coarse["max_drift"], fine["max_drift"], floor),
            "drift_floor": floor,
            "composition": comp,
            "composition_order": order_estimate(comp[0], comp[1], cfloor),
            "composition_floor": cfloor,
            "I0": coarse["I0"]}
