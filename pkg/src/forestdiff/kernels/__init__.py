"""Pixel kernels with a compiled fast path and a numpy fallback.

The compiled extension is preferred when importable; set FORESTDIFF_PURE=1
to force the fallback (used by the equivalence tests and the benchmark).
"""

import os

import numpy as np

from . import _fallback

if os.environ.get("FORESTDIFF_PURE") == "1":
    _impl = _fallback
    BACKEND = "fallback"
else:
    try:
        from . import _native as _impl
        BACKEND = "native"
    except ImportError:
        _impl = _fallback
        BACKEND = "fallback"

label_components = _impl.label_components
region_stats = _impl.region_stats
confusion_counts = _impl.confusion_counts
binary_dilate = _impl.binary_dilate
binary_erode = _impl.binary_erode


def disk_offsets(radius):
    """Offsets (dy, dx) of a disk structuring element: dy^2 + dx^2 <= r^2."""
    r = int(radius)
    if r < 0:
        raise ValueError("radius must be >= 0")
    dy, dx = np.mgrid[-r:r + 1, -r:r + 1]
    keep = dy * dy + dx * dx <= r * r
    return np.stack([dy[keep], dx[keep]], axis=1).astype(np.int64)


def binary_open(mask, offsets):
    return binary_dilate(binary_erode(mask, offsets), offsets)


def binary_close(mask, offsets):
    return binary_erode(binary_dilate(mask, offsets), offsets)
