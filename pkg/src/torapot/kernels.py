"""Kernel backend selection.

The compiled extension (`torapot._core`, Cython) provides O(N + M) hull-sweep
conjugates and a C polygon clipper; `torapot._fallback` provides equivalent
pure-numpy versions.  The compiled backend is used when importable unless
the environment variable ``TORAPOT_PURE`` is set to a nonempty value.

Kernel convention: masked nodes are passed as +inf potential values, so they
never achieve a conjugate max.
"""

from __future__ import annotations

import os

from . import _fallback

if os.environ.get("TORAPOT_PURE"):
    _impl = _fallback
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _fallback

conjugate_1d = _impl.conjugate_1d
conjugate_1d_batch = _impl.conjugate_1d_batch
cell_areas_2d = _impl.cell_areas_2d


def backend_name() -> str:
    return _impl.BACKEND


def backends() -> dict:
    """Both implementations, for benchmarks and cross-checks."""
    out = {"python": _fallback}
    try:
        from . import _core  # type: ignore[attr-defined]

        out["compiled"] = _core
    except ImportError:
        pass
    return out
