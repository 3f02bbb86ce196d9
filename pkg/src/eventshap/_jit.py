"""Kernel compilation switch.

Hot loops are written once, in explicit-loop style, and decorated with
:func:`njit`. By default they compile through numba. Setting the environment
variable ``EVENTSHAP_DISABLE_JIT=1`` swaps in identity decorators so the same
source runs interpreted over numpy arrays — useful for debugging, coverage,
and as a dependency-light fallback.

Arithmetic-only kernels produce bit-identical results on both paths;
kernels using transcendentals (exp/log) may differ by ~1 ulp between paths
because numba links its own libm. Each path is individually deterministic.
"""

import os

JIT_ENABLED = os.environ.get("EVENTSHAP_DISABLE_JIT", "").lower() not in (
    "1", "true", "yes",
)

if JIT_ENABLED:
    from numba import njit
else:

    def njit(func=None, **kwargs):
        """Identity stand-in for numba.njit when compilation is disabled."""
        if func is not None:
            return func

        def wrapper(f):
            return f

        return wrapper
