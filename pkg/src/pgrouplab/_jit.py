"""Switch between numba-compiled kernels and the plain Python path.

Set PGROUPLAB_NO_JIT=1 before import to run every kernel uncompiled.
"""
import os

JIT_DISABLED = os.environ.get("PGROUPLAB_NO_JIT", "").strip().lower() not in ("", "0", "false", "no")

if not JIT_DISABLED:
    try:
        import numba
    except ImportError:  # pragma: no cover
        JIT_DISABLED = True

if JIT_DISABLED:

    def jit(func):
        return func

else:

    def jit(func):
        return numba.njit(cache=True)(func)


def backend() -> str:
    return "python" if JIT_DISABLED else "numba"
