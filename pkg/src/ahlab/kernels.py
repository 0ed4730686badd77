"""Kernel dispatch: compiled extension when it imports, numpy otherwise.

The compiled loops replace non-integer powers by libm ``pow``, which loses
to numpy's vectorised power, so non-integer ``p`` always takes the numpy
path. Set ``AHLAB_PURE_PYTHON=1`` to force numpy everywhere.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("AHLAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"


def _for_power(p):
    return _impl if float(p).is_integer() and 2.0 <= p <= 10.0 else _kernels_py


def energy_grad(f, p, inv_h, W, wq, xi):
    return _for_power(p).energy_grad(f, p, inv_h, W, wq, xi)


def assemble(f, p, inv_h, W, wq, xi, floor):
    return _for_power(p).assemble(f, p, inv_h, W, wq, xi, floor)


tridiag_solve = _impl.tridiag_solve
tridiag_matvec = _impl.tridiag_matvec


def backends():
    """Map of backend name to kernel module, for cross-checks and benchmarks."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels as _compiled
    except ImportError:
        return out
    out["cython"] = _compiled
    return out
