"""Kernel backend selection.

Set ``PERMCYCLES_NO_NUMBA=1`` before import to force the pure-numpy path.
"""
from __future__ import annotations

import os

_DISABLED = os.environ.get("PERMCYCLES_NO_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError("numba disabled by PERMCYCLES_NO_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    njit = None
    HAVE_NUMBA = False


def backend_name() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
