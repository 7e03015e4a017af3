"""Hot kernels with an optional numba path.

Set ``LIESPHERE_NUMBA=0`` to force the pure-numpy implementations.  When
numba is not importable the numpy path is used silently.
``LIESPHERE_THREADS`` caps numba's thread pool.
"""
import os

import numpy as np

try:
    import numba
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False


def _env_flag(name, default):
    raw = os.environ.get(name)
    if raw is None:
        return default
    return raw.strip().lower() not in ("0", "false", "no", "off", "")


USE_NUMBA = _HAVE_NUMBA and _env_flag("LIESPHERE_NUMBA", True)

if _HAVE_NUMBA and os.environ.get("LIESPHERE_THREADS"):
    try:
        numba.set_num_threads(
            max(1, min(int(os.environ["LIESPHERE_THREADS"]), numba.config.NUMBA_NUM_THREADS))
        )
    except ValueError:
        pass


def backend():
    return "numba" if USE_NUMBA else "numpy"


# -- truncated Taylor product -------------------------------------------------

def jet_mul_numpy(a, b, ia, ib, ic, ncoef):
    """Cauchy product of two coefficient blocks of shape (ncoef_in, npts)."""
    out = np.zeros((ncoef, a.shape[1]), dtype=np.result_type(a, b))
    for r in range(ia.shape[0]):
        out[ic[r]] += a[ia[r]] * b[ib[r]]
    return out


def fd1_numpy(f, h, periodic):
    """Fourth-order first derivative along the last axis."""
    if periodic:
        return (np.roll(f, 2, -1) - 8.0 * np.roll(f, 1, -1)
                + 8.0 * np.roll(f, -1, -1) - np.roll(f, -2, -1)) / (12.0 * h)
    n = f.shape[-1]
    out = np.empty_like(f)
    out[..., 2:n - 2] = (f[..., 0:n - 4] - 8.0 * f[..., 1:n - 3]
                         + 8.0 * f[..., 3:n - 1] - f[..., 4:n]) / (12.0 * h)
    out[..., 0] = (-25.0 * f[..., 0] + 48.0 * f[..., 1] - 36.0 * f[..., 2]
                   + 16.0 * f[..., 3] - 3.0 * f[..., 4]) / (12.0 * h)
    out[..., 1] = (-3.0 * f[..., 0] - 10.0 * f[..., 1] + 18.0 * f[..., 2]
                   - 6.0 * f[..., 3] + f[..., 4]) / (12.0 * h)
    out[..., n - 1] = (25.0 * f[..., n - 1] - 48.0 * f[..., n - 2] + 36.0 * f[..., n - 3]
                       - 16.0 * f[..., n - 4] + 3.0 * f[..., n - 5]) / (12.0 * h)
    out[..., n - 2] = (3.0 * f[..., n - 1] + 10.0 * f[..., n - 2] - 18.0 * f[..., n - 3]
                       + 6.0 * f[..., n - 4] - f[..., n - 5]) / (12.0 * h)
    return out


if _HAVE_NUMBA:

    @njit(cache=False, fastmath=False)
    def _jet_mul_nb(a, b, ia, ib, ic, ncoef):
        npts = a.shape[1]
        out = np.zeros((ncoef, npts))
        for r in range(ia.shape[0]):
            i = ia[r]
            j = ib[r]
            k = ic[r]
            for p in range(npts):
                out[k, p] += a[i, p] * b[j, p]
        return out

    @njit(cache=False)
    def _fd1_nb(f, h, periodic):
        # f is 2-D: (lines, n); derivative along axis 1
        m, n = f.shape
        out = np.empty_like(f)
        c = 1.0 / (12.0 * h)
        for i in range(m):
            if periodic:
                # wrap-around only at the edges; keeps the inner loop branch-free
                for j in range(2, n - 2):
                    out[i, j] = (f[i, j - 2] - 8.0 * f[i, j - 1]
                                 + 8.0 * f[i, j + 1] - f[i, j + 2]) * c
                for j in (0, 1, n - 2, n - 1):
                    out[i, j] = (f[i, (j - 2) % n] - 8.0 * f[i, (j - 1) % n]
                                 + 8.0 * f[i, (j + 1) % n] - f[i, (j + 2) % n]) * c
            else:
                for j in range(2, n - 2):
                    out[i, j] = (f[i, j - 2] - 8.0 * f[i, j - 1]
                                 + 8.0 * f[i, j + 1] - f[i, j + 2]) * c
                out[i, 0] = (-25.0 * f[i, 0] + 48.0 * f[i, 1] - 36.0 * f[i, 2]
                             + 16.0 * f[i, 3] - 3.0 * f[i, 4]) * c
                out[i, 1] = (-3.0 * f[i, 0] - 10.0 * f[i, 1] + 18.0 * f[i, 2]
                             - 6.0 * f[i, 3] + f[i, 4]) * c
                out[i, n - 1] = (25.0 * f[i, n - 1] - 48.0 * f[i, n - 2] + 36.0 * f[i, n - 3]
                                 - 16.0 * f[i, n - 4] + 3.0 * f[i, n - 5]) * c
                out[i, n - 2] = (3.0 * f[i, n - 1] + 10.0 * f[i, n - 2] - 18.0 * f[i, n - 3]
                                 + 6.0 * f[i, n - 4] - f[i, n - 5]) * c
        return out


def jet_mul(a, b, ia, ib, ic, ncoef, use_numba=None):
    if use_numba is None:
        use_numba = USE_NUMBA
    if (use_numba and a.dtype == np.float64 and b.dtype == np.float64):
        return _jet_mul_nb(np.ascontiguousarray(a), np.ascontiguousarray(b), ia, ib, ic, ncoef)
    return jet_mul_numpy(a, b, ia, ib, ic, ncoef)


def fd1(f, h, axis, periodic, use_numba=None):
    """Fourth-order first derivative of ``f`` along ``axis``."""
    if use_numba is None:
        use_numba = USE_NUMBA
    g = np.moveaxis(f, axis, -1)
    if use_numba and g.dtype == np.float64:
        shape = g.shape
        flat = np.ascontiguousarray(g.reshape(-1, shape[-1]))
        out = _fd1_nb(flat, float(h), bool(periodic)).reshape(shape)
    else:
        out = fd1_numpy(g, h, periodic)
    return np.moveaxis(out, -1, axis)
