"""Hot evaluation kernels: compiled extension with a pure numpy fallback.

The compiled backend is picked at import time when the extension built
successfully; setting ``TRAFFICLENS_PURE=1`` forces the fallback (used by
the benchmark and the backend-parity tests). Both backends are
bit-identical, so the choice only affects speed.
"""

import os

from ._pure import RECALL_GRID

if os.environ.get("TRAFFICLENS_PURE", "0") not in ("", "0"):
    from . import _pure as _impl

    BACKEND = "pure"
else:
    try:
        from . import _native as _impl

        BACKEND = "native"
    except ImportError:
        from . import _pure as _impl

        BACKEND = "pure"

iou_single = _impl.iou_single
iou_matrix = _impl.iou_matrix
greedy_match = _impl.greedy_match
envelope_101 = _impl.envelope_101


def backend():
    """Name of the active kernel backend ("native" or "pure")."""
    return BACKEND


__all__ = [
    "RECALL_GRID",
    "backend",
    "envelope_101",
    "greedy_match",
    "iou_matrix",
    "iou_single",
]
