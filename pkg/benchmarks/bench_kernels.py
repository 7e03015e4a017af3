"""Timing of the hot kernels: numba path versus the pure-numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from liesphere import _accel
from liesphere.jet import Jet


def _jet_mul_case(order=4, npts=256 * 256):
    X, Y = Jet.variables([np.linspace(0, 1, npts), np.linspace(1, 2, npts)], order)
    a, b = (X * Y + 1.0).coef, (X - Y * Y).coef
    from liesphere.jet import _basis
    _, _, prod = _basis(2, order)
    ia, ib, ic = (np.asarray(v, dtype=np.int64) for v in prod)
    return a, b, ia, ib, ic, a.shape[0]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not _accel._HAVE_NUMBA:
        print("numba is not installed; only the numpy path is available")
        return
    rng = np.random.default_rng(0)
    f = rng.standard_normal((512, 512))
    jm = _jet_mul_case()
    cases = {
        "fd1 512x512 bounded": lambda nb: _accel.fd1(f, 0.01, 1, False, use_numba=nb),
        "fd1 512x512 periodic": lambda nb: _accel.fd1(f, 0.01, 0, True, use_numba=nb),
        "jet_mul order 4, 65536 pts": lambda nb: _accel.jet_mul(*jm, use_numba=nb),
    }
    print(f"{'kernel':32s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s}")
    for name, fn in cases.items():
        fn(True)  # compile
        t_np = min(timeit.repeat(lambda: fn(False), number=1, repeat=args.repeat))
        t_nb = min(timeit.repeat(lambda: fn(True), number=1, repeat=args.repeat))
        assert np.allclose(fn(False), fn(True), rtol=1e-12, atol=1e-12)
        print(f"{name:32s} {1e3 * t_np:11.2f} {1e3 * t_nb:11.2f} {t_np / t_nb:8.2f}")


if __name__ == "__main__":
    main()
