"""Kernel backend selection: numba JIT by default, pure numpy on demand.

All hot numeric kernels in :mod:`ymloops.kernels` are written once as plain
numpy code and decorated with :func:`maybe_njit`.  Setting the environment
variable ``YMLOOPS_NUMBA=0`` before import disables compilation, so the same
functions run under the plain interpreter.

Both paths consume identical random streams and are individually
deterministic (same seed, same backend: same bits).  Across backends,
results match up to floating-point reassociation in the compiled
arithmetic (~1e-13 per step); a long chain may eventually diverge at a
Metropolis accept boundary while remaining statistically equivalent.

``benchmarks/bench_backends.py`` times the two paths against each other.
"""

import os

NUMBA_ENABLED = os.environ.get("YMLOOPS_NUMBA", "1").lower() not in ("0", "false", "off")

if NUMBA_ENABLED:
    from numba import njit as _njit

    def maybe_njit(func=None, **kwargs):
        if func is not None:
            return _njit(cache=True, nogil=True)(func)
        kwargs.setdefault("cache", True)
        kwargs.setdefault("nogil", True)
        return _njit(**kwargs)
else:
    def maybe_njit(func=None, **kwargs):
        if func is not None:
            return func
        return lambda f: f


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"
