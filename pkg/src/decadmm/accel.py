"""Optional numba acceleration for the hot rollout kernels.

The environment variable ``DECADMM_NUMBA`` selects the path:

* unset / ``auto`` / ``1`` -- JIT-compile kernels with numba when it is
  importable, otherwise fall back silently to the plain numpy implementation;
* ``0`` / ``off`` / ``false`` -- force the pure-numpy fallback.

Both paths execute the same function bodies, so results are identical; only
speed differs. ``benchmarks/benchmark_kernels.py`` compares the two.
"""

from __future__ import annotations

import os

_FLAG = os.environ.get("DECADMM_NUMBA", "auto").strip().lower()
_DISABLED = _FLAG in ("0", "off", "false", "no")

NUMBA_ENABLED = False
if not _DISABLED:
    try:
        from numba import njit as _njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - depends on the environment
        pass


def jit_kernel(fn):
    """Compile ``fn`` in nopython mode when numba is active, else return it."""
    if NUMBA_ENABLED:
        return _njit(cache=True)(fn)
    return fn


def python_impl(fn):
    """Return the uncompiled implementation of a (possibly jitted) kernel."""
    return getattr(fn, "py_func", fn)
