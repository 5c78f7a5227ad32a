"""Kernel backend chosen at import time.

The compiled extension is preferred; ``CBSCM_BACKEND=python`` forces the
numpy fallback and ``CBSCM_BACKEND=cython`` makes a missing extension an
import error.
"""

from __future__ import annotations

import os

from . import _pykernels

_requested = os.environ.get("CBSCM_BACKEND", "auto").lower()
if _requested not in ("auto", "python", "cython"):
    raise ImportError(f"CBSCM_BACKEND must be auto, python or cython, not {_requested!r}")

kernels = _pykernels
BACKEND = "python"
if _requested != "python":
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        kernels = _pykernels

simplex_ls = kernels.simplex_ls
weighted_fit = kernels.weighted_fit
hhi_max_enumerate = kernels.hhi_max_enumerate

__all__ = ["BACKEND", "kernels", "simplex_ls", "weighted_fit", "hhi_max_enumerate"]
