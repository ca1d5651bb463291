"""Toolkit for interpreting bi-temporal forest change rasters.

Subpackages cover binary change-mask analytics, rule-based caption synthesis,
caption and mask evaluation metrics, zero-shot latent matching over region
proposals, multi-task loss balancing experiments, dataset plumbing, and an
HTTP agent service that exposes the lot as tools.
"""

__version__ = "0.1.0"

from .raster import (  # noqa: F401
    BitemporalPair,
    ChangeMask,
    Patch,
    change_fraction,
    connected_patches,
    difference_mask,
    overlay,
    patch_statistics,
    spatial_distribution,
)
