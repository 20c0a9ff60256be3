"""Kernel backend selection.

Hot loops ship in two interchangeable implementations: numba @njit kernels
and pure-numpy fallbacks.  The env var ``FUSEKIT_BACKEND`` picks one:

* ``auto`` (default) - numba when importable, numpy otherwise
* ``numba``          - require numba, error if it cannot be imported
* ``numpy``          - force the pure-numpy path

Both paths produce bit-identical outputs (see benchmarks/bench_backends.py,
which asserts equality before timing).
"""

from __future__ import annotations

import os

from .errors import UsageError

ENV_VAR = "FUSEKIT_BACKEND"

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False


def resolve_backend(override: str | None = None) -> str:
    """Return 'numba' or 'numpy' for this call.

    `override` beats the env var; the env var is read on every call so the
    flag works without reimporting.
    """
    choice = (override or os.environ.get(ENV_VAR, "auto")).strip().lower()
    if choice == "auto":
        return "numba" if HAS_NUMBA else "numpy"
    if choice == "numba":
        if not HAS_NUMBA:
            raise UsageError(
                f"{ENV_VAR}=numba requested but numba is not importable"
            )
        return "numba"
    if choice == "numpy":
        return "numpy"
    raise UsageError(
        f"unrecognized backend {choice!r} (expected auto, numba, or numpy)"
    )
