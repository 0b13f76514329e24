"""Disparity-to-depth conversion via the inverse relation z = bf / (d + d0).

The zero-disparity offset d0 and the baseline-focal product bf are fitted
from the scene distance bounds and the observed disparity extremes so that
the largest disparity maps to the nearest distance and vice versa. Output
depth is min-max normalized to [0, 1] with 0 = nearest.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import DepthMap, DisparityField, DisparityMap


@dataclass(frozen=True)
class DepthConversionParams:
    min_z: float
    max_z: float
    min_d: float
    max_d_obs: float
    d0: float
    bf: float

    def z(self, d):
        return self.bf / (np.asarray(d, dtype=np.float64) + self.d0)


def fit_conversion(min_z, max_z, min_d, max_d_obs) -> DepthConversionParams:
    """Fit d0 and bf so z(max_d_obs) = min_z and z(min_d) = max_z."""
    if not (max_z > min_z > 0):
        raise ValueError("need max_z > min_z > 0")
    if not (max_d_obs > min_d):
        raise ValueError("need max_d_obs > min_d")
    d0 = (min_z * max_d_obs - max_z * min_d) / (max_z - min_z)
    bf = max_z * (min_d + d0)
    if min_d + d0 <= 0:
        raise ValueError("degenerate fit: d + d0 not positive over the disparity range")
    return DepthConversionParams(min_z=float(min_z), max_z=float(max_z),
                                 min_d=float(min_d), max_d_obs=float(max_d_obs),
                                 d0=float(d0), bf=float(bf))


def disparity_to_depth(disp: DisparityMap, params: DepthConversionParams) -> DepthMap:
    """Per-pixel depth, normalized to [0, 1] by the fitted distance bounds.

    0 maps to the nearest distance (min_z), 1 to the farthest (max_z), so
    views converted with the same params share a consistent depth scale.
    """
    if not disp.mask.any():
        raise ValueError("disparity map has no valid pixels")
    z = params.z(disp.disparities)
    norm = (z - params.min_z) / (params.max_z - params.min_z)
    norm = np.where(disp.mask, np.clip(norm, 0.0, 1.0), 0.0)
    return DepthMap(norm.astype(np.float32), disp.mask.copy())


def convert_field(field: DisparityField, min_z=1.0, max_z=10.0):
    """Convert every view with one shared fit from the field's global extremes.

    A shared conversion keeps depth consistent across views, which the
    parallax-boosting equations rely on.
    """
    lo, hi = field.global_extremes()
    if hi - lo < 1e-12:
        # constant field: every pixel sits at one distance, call it nearest
        params = fit_conversion(min_z, max_z, lo, lo + 1.0)
        depths = [[DepthMap(np.zeros_like(field.map(j, i).disparities),
                            field.map(j, i).mask.copy())
                   for i in range(field.v_x)] for j in range(field.v_y)]
        return depths, params
    params = fit_conversion(min_z, max_z, lo, hi)
    depths = [[disparity_to_depth(field.map(j, i), params)
               for i in range(field.v_x)] for j in range(field.v_y)]
    return depths, params
