"""Hole filling primitives shared by the retargeting and disparity stages."""

from __future__ import annotations

import numpy as np
from scipy import ndimage


def nearest_fill_indices(mask: np.ndarray):
    """Per-pixel (row, col) index of the nearest valid pixel (Euclidean).

    Valid pixels map to themselves. Ties are resolved by the distance
    transform's deterministic scan order.
    """
    if not mask.any():
        raise ValueError("cannot fill: no valid pixels")
    if mask.all():
        yy, xx = np.indices(mask.shape)
        return yy, xx
    _, (yy, xx) = ndimage.distance_transform_edt(~mask, return_indices=True)
    return yy, xx


def nearest_fill(values: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Replace invalid pixels with the value of their nearest valid pixel."""
    yy, xx = nearest_fill_indices(mask)
    if values.ndim == 3:
        return values[yy, xx, :]
    return values[yy, xx]


def median_over(values: np.ndarray, region: np.ndarray, size: int = 3) -> np.ndarray:
    """Apply a size x size median filter, but only on pixels inside `region`."""
    out = values.copy()
    if not region.any():
        return out
    if values.ndim == 3:
        for c in range(values.shape[2]):
            med = ndimage.median_filter(values[..., c], size=size, mode="nearest")
            out[..., c][region] = med[region]
    else:
        med = ndimage.median_filter(values, size=size, mode="nearest")
        out[region] = med[region]
    return out
