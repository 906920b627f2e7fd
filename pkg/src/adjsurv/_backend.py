"""Kernel backend selection.

The compiled extension is used when it imports; set ``ADJSURV_PURE_PYTHON=1``
to force the numpy fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
loo_km = _kernels_py.loo_km
pava_nonincreasing = _kernels_py.pava_nonincreasing

if os.environ.get("ADJSURV_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        loo_km = _compiled.loo_km
        pava_nonincreasing = _compiled.pava_nonincreasing


def backends() -> dict:
    """All importable kernel implementations, keyed by name."""
    found = {"python": _kernels_py}
    try:
        from . import _kernels as _compiled
    except ImportError:
        return found
    found["cython"] = _compiled
    return found
