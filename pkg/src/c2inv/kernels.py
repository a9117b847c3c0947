"""Kernel selection: compiled ``_ckernels`` when importable, numpy otherwise.

Set ``C2INV_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _fallback

BACKEND = "python"
_impl = _fallback
if os.environ.get("C2INV_PURE_PYTHON") != "1":
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _fallback

grid_values = _impl.grid_values
count_chunk = _impl.count_chunk
iterate = _impl.iterate
first_return = getattr(_impl, "first_return", _fallback.first_return)

__all__ = ["BACKEND", "grid_values", "count_chunk", "iterate", "first_return"]
