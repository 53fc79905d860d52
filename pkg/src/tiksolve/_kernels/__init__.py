"""Kernel backend selection.

At import time the compiled extension is preferred; the pure NumPy/SciPy
backend is the fallback. ``BACKEND`` names the active one ("compiled" or
"python"). The environment variable ``SSCD_THREADS`` caps the number of
threads the compiled CSR matvec may use (default 1, i.e. serial; the result
is bitwise-independent of the thread count).
"""

import os

from tiksolve._kernels import pykernels

try:  # pragma: no cover - depends on the build environment
    from tiksolve._kernels import _core

    HAVE_COMPILED = True
except ImportError:  # pragma: no cover
    _core = None
    HAVE_COMPILED = False

BACKEND = "compiled" if HAVE_COMPILED else "python"
_active = _core if HAVE_COMPILED else pykernels


def _cap_from_env():
    try:
        return max(1, int(os.environ.get("SSCD_THREADS", "1")))
    except ValueError:
        return 1


_thread_cap = _cap_from_env()


def thread_cap():
    """Current matvec thread cap."""
    return _thread_cap


def set_thread_cap(n):
    """Override the SSCD_THREADS-derived matvec thread cap."""
    global _thread_cap
    _thread_cap = max(1, int(n))


def make_csr_handle(indptr, indices, data, shape):
    return _active.make_csr_handle(indptr, indices, data, shape)


def csr_matvec(handle, x):
    if HAVE_COMPILED:
        return _core.csr_matvec(handle, x, _thread_cap)
    return pykernels.csr_matvec(handle, x)


def csr_rmatvec(handle, y):
    return _active.csr_rmatvec(handle, y)


def prox_power_newton(vhat, c, p):
    return _active.prox_power_newton(vhat, c, p)


def radon_entries(n1, n2, angles, offsets):
    return _active.radon_entries(n1, n2, angles, offsets)
