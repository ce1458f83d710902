"""Kernel backend selection.

The hot loops (vector fields, trajectory stepping, tangent propagation) exist
twice: as numba ``@njit`` loops in :mod:`kuramoto_rc._kernels_numba` and as
vectorised numpy code in :mod:`kuramoto_rc._kernels_numpy`.  Both modules
expose the same function names and signatures.

The active backend is chosen once at import time from the environment
variable ``KURAMOTO_RC_BACKEND`` (``numba`` or ``numpy``).  When numba is not
importable the numpy path is used regardless.
"""

from __future__ import annotations

import importlib
import os
from types import ModuleType

ENV_VAR = "KURAMOTO_RC_BACKEND"

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False


def _requested() -> str:
    name = os.environ.get(ENV_VAR, "numba").strip().lower()
    if name not in ("numba", "numpy"):
        raise ValueError(f"{ENV_VAR} must be 'numba' or 'numpy', got {name!r}")
    return name


BACKEND = _requested() if HAVE_NUMBA else "numpy"


def jit(fn):
    """``numba.njit(cache=True)`` under the numba backend, identity otherwise."""
    if BACKEND == "numba":
        from numba import njit

        return njit(cache=True)(fn)
    return fn


def kernels(name: str | None = None) -> ModuleType:
    """Return the kernel module for ``name`` (default: the active backend)."""
    name = BACKEND if name is None else name
    if name == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is not installed")
        return importlib.import_module("kuramoto_rc._kernels_numba")
    if name == "numpy":
        return importlib.import_module("kuramoto_rc._kernels_numpy")
    raise ValueError(f"unknown backend {name!r}")
