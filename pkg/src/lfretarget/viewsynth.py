"""Continuous-angle view synthesis and simulated fused-display compositing.

Poses are bilinearly interpolated over the grid of synthesized views; the
display simulation blends the interpolated view onto panels, applies the
per-panel affine calibration, and sums the panels additively.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calib import PanelCalibration, apply_affine, calibration_at
from .model import DepthMap, ViewImage
from .panels import BlendMode, PanelLayout, PanelStack, blend_to_panels


@dataclass(frozen=True)
class ViewerPose:
    ang_x: float
    ang_y: float

    def clamped(self):
        cx = float(np.clip(self.ang_x, -0.5, 0.5))
        cy = float(np.clip(self.ang_y, -0.5, 0.5))
        was = (cx != self.ang_x) or (cy != self.ang_y)
        return ViewerPose(cx, cy), was


def _cell(ang, n):
    """Continuous grid position of an angle over n views; returns (i0, frac)."""
    u = (ang + 0.5) * (n - 1)
    i0 = int(np.floor(u))
    i0 = min(max(i0, 0), n - 2)
    return i0, u - i0


def interpolate_view(views, depths, pose: ViewerPose):
    """Bilinear blend of the 4 grid views around the pose.

    Exact (bit-for-bit) at grid nodes. `views`/`depths` are 2-D lists over
    [row][col]; depths may be None.
    """
    pose, _ = pose.clamped()
    v_y, v_x = len(views), len(views[0])
    i0, fx = _cell(pose.ang_x, v_x)
    j0, fy = _cell(pose.ang_y, v_y)

    if fx == 0.0 and fy == 0.0:
        v = views[j0][i0]
        d = depths[j0][i0] if depths is not None else None
        return v.copy(), (d and DepthMap(d.depths.copy(), d.mask.copy()))

    wts = ((1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy)
    quad = ((j0, i0), (j0, i0 + 1), (j0 + 1, i0), (j0 + 1, i0 + 1))

    img = np.zeros_like(views[0][0].samples, dtype=np.float64)
    mask = np.ones_like(views[0][0].mask)
    dep = None
    if depths is not None:
        dep = np.zeros_like(depths[0][0].depths, dtype=np.float64)
    for w, (j, i) in zip(wts, quad):
        if w == 0.0:
            continue
        img += w * views[j][i].samples
        mask &= views[j][i].mask
        if dep is not None:
            dep += w * depths[j][i].depths
    out_v = ViewImage(img.astype(np.float32), mask)
    out_d = DepthMap(dep.astype(np.float32), mask.copy()) if dep is not None else None
    return out_v, out_d


def bilinear_weights(pose: ViewerPose, v_x, v_y):
    """The four interpolation weights used for a pose (testing hook)."""
    pose, _ = pose.clamped()
    _, fx = _cell(pose.ang_x, v_x)
    _, fy = _cell(pose.ang_y, v_y)
    return ((1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy)


def simulate_display(views, depths, layout: PanelLayout, pose: ViewerPose,
                     mode: BlendMode = BlendMode.ALL_PANEL,
                     calibration: PanelCalibration | None = None,
                     falsecolor: bool = False):
    """Full display path for one pose: interpolate, panelize, calibrate, fuse.

    Returns (composite ViewImage, PanelStack, clamped flag). With identity
    calibration the composite equals the interpolated view exactly
    (conservation of the additive display).
    """
    cpose, clamped = pose.clamped()
    view, depth = interpolate_view(views, depths, cpose)
    stack = blend_to_panels(view, depth, layout, mode,
                            pose=(cpose.ang_x, cpose.ang_y))

    if calibration is not None:
        params = calibration_at(calibration, (cpose.ang_x, cpose.ang_y))
        panels = [apply_affine(p, *params[k]) for k, p in enumerate(stack.panels)]
        stack = PanelStack(panels=panels, layout=stack.layout, pose=stack.pose)

    if falsecolor:
        comp = ViewImage.full(stack.falsecolor())
    else:
        comp = ViewImage.full(stack.composite())
    return comp, stack, clamped
