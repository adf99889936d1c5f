"""Kernel backend selection.

The compiled extension is used when it was built; otherwise the numpy
fallback is imported. Setting ``FACLOC_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _fallback

if os.environ.get("FACLOC_PURE_PYTHON", "") not in ("", "0"):
    _impl = _fallback
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _fallback

BACKEND = _impl.BACKEND
weighted_lower_median = _impl.weighted_lower_median
rotated_medians_2d = _impl.rotated_medians_2d
costs_2d = _impl.costs_2d


def compiled_available() -> bool:
    try:
        from . import _kernels  # noqa: F401
    except ImportError:
        return False
    return True
