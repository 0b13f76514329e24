"""Fine slicing, parallax boosting, occlusion-aware merging and hole filling.

A view is cut into depth-quantized slices, each slice is translated by an
integer amount proportional to (view angle - reference view angle) times
(slice depth - reference depth) times a user scale, slices are composited
back to front, and the disocclusion holes are filled from their nearest
valid pixels followed by a 3x3 median restricted to the filled regions.
The view's depth map goes through the identical sequence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fill import median_over, nearest_fill_indices
from .model import AngularCoord, DepthMap, ViewImage


@dataclass(frozen=True)
class BoostConfig:
    num_slices: int = 100
    scale: float = 100.0
    ref_view: AngularCoord = AngularCoord(0, 0, 0.0, 0.0)
    ref_depth: float = 0.5

    def __post_init__(self):
        if self.num_slices < 2:
            raise ValueError("num_slices must be >= 2")
        if self.scale < 0:
            raise ValueError("scale must be >= 0")
        if not (0.0 <= self.ref_depth <= 1.0):
            raise ValueError("ref_depth must be in [0, 1]")


@dataclass
class SliceStack:
    """Depth-quantized slices of one view, compactly held as a label image.

    slice_index[y, x] = k means the pixel belongs to the slice at quantized
    depth quant_depths[k]; -1 marks pixels invalid in the source view.
    """

    view: ViewImage
    slice_index: np.ndarray      # (H, W) int32, -1 for invalid
    quant_depths: np.ndarray     # (num_slices,) float64, strictly increasing
    coord: AngularCoord | None = None

    @property
    def num_slices(self):
        return len(self.quant_depths)

    def mask(self, k) -> np.ndarray:
        return self.slice_index == k

    def slices(self):
        """Yield (quantized_depth, slice ViewImage) in increasing depth order."""
        for k, q in enumerate(self.quant_depths):
            yield float(q), ViewImage(self.view.samples, self.mask(k))


def fine_slice(view: ViewImage, depth: DepthMap, num_slices,
               coord: AngularCoord | None = None) -> SliceStack:
    """Uniformly quantize depth into num_slices bins with centers (k+0.5)/n."""
    if view.samples.shape[:2] != depth.depths.shape:
        raise ValueError("view and depth dimensions differ")
    if num_slices < 2:
        raise ValueError("num_slices must be >= 2")
    idx = np.clip((depth.depths * num_slices).astype(np.int32), 0, num_slices - 1)
    idx = np.where(view.mask & depth.mask, idx, -1).astype(np.int32)
    quant = (np.arange(num_slices) + 0.5) / num_slices
    return SliceStack(view=view, slice_index=idx, quant_depths=quant, coord=coord)


def boost_shifts(ang: AngularCoord, quant_d, cfg: BoostConfig):
    """Integer slice translation (T_x, T_y) for one view angle and slice depth."""
    tx = (ang.ang_x - cfg.ref_view.ang_x) * (quant_d - cfg.ref_depth) * cfg.scale
    ty = (ang.ang_y - cfg.ref_view.ang_y) * (quant_d - cfg.ref_depth) * cfg.scale
    return int(np.rint(tx)), int(np.rint(ty))


def _merge(values: np.ndarray, stack: SliceStack, cfg: BoostConfig,
           slice_values=None):
    """Composite shifted slices back to front; returns (merged, mask).

    `slice_values` substitutes a constant per-slice value (used for the depth
    channel, which carries the quantized depth of each slice).
    """
    h, w = stack.slice_index.shape
    out = np.zeros_like(values) if slice_values is None else np.zeros((h, w), dtype=np.float32)
    mask = np.zeros((h, w), dtype=bool)
    ang = stack.coord if stack.coord is not None else cfg.ref_view

    flat_idx = stack.slice_index.ravel()
    order = np.argsort(flat_idx, kind="stable")
    counts = np.bincount(flat_idx + 1, minlength=stack.num_slices + 1)
    bounds = np.cumsum(counts)
    yy, xx = np.divmod(order, w)

    for k in range(stack.num_slices - 1, -1, -1):       # farthest first
        lo, hi = bounds[k], bounds[k + 1]
        if lo == hi:
            continue
        sy, sx = yy[lo:hi], xx[lo:hi]
        tx, ty = boost_shifts(ang, stack.quant_depths[k], cfg)
        dx = sx + tx
        dy = sy + ty
        sel = (dx >= 0) & (dx < w) & (dy >= 0) & (dy < h)
        dy, dx = dy[sel], dx[sel]
        if slice_values is None:
            out[dy, dx] = values[sy[sel], sx[sel]]
        else:
            out[dy, dx] = slice_values[k]
        mask[dy, dx] = True
    return out, mask


def boost_and_merge(stack: SliceStack, cfg: BoostConfig) -> ViewImage:
    """Shift each slice by its boost translation and composite near-over-far."""
    merged, mask = _merge(stack.view.samples, stack, cfg)
    return ViewImage(merged, mask)


def fill_holes(img: ViewImage) -> ViewImage:
    """Nearest-valid fill of all holes, then a 3x3 median over filled pixels."""
    if not img.mask.any():
        raise ValueError("cannot fill an all-hole image")
    if img.mask.all():
        return img.copy()
    yy, xx = nearest_fill_indices(img.mask)
    filled = img.samples[yy, xx] if img.samples.ndim == 2 else img.samples[yy, xx, :]
    holes = ~img.mask
    filled = median_over(filled, holes)
    return ViewImage(filled, np.ones_like(img.mask))


def retarget_view(view: ViewImage, depth: DepthMap, cfg: BoostConfig,
                  coord: AngularCoord | None = None):
    """Slice, boost, merge and fill one view and its depth map identically.

    Returns (synthesized ViewImage, synthesized DepthMap), both fully valid.
    """
    stack = fine_slice(view, depth, cfg.num_slices, coord=coord)
    merged_img, mask = _merge(view.samples, stack, cfg)
    merged_depth, dmask = _merge(None, stack, cfg,
                                 slice_values=stack.quant_depths.astype(np.float32))
    assert np.array_equal(mask, dmask)

    if not mask.any():
        raise ValueError("merge produced an empty view")
    if mask.all():
        return ViewImage(merged_img, mask), DepthMap(merged_depth, dmask)

    yy, xx = nearest_fill_indices(mask)
    holes = ~mask
    img_filled = merged_img[yy, xx] if merged_img.ndim == 2 else merged_img[yy, xx, :]
    img_filled = median_over(img_filled, holes)
    depth_filled = median_over(merged_depth[yy, xx], holes)
    ones = np.ones_like(mask)
    return ViewImage(img_filled, ones), DepthMap(depth_filled, ones.copy())


def retarget_grid(grid, depths, cfg: BoostConfig):
    """Retarget every view of a grid; returns (views, depth maps) 2-D lists."""
    out_views, out_depths = [], []
    for j in range(grid.v_y):
        vrow, drow = [], []
        for i in range(grid.v_x):
            v, d = retarget_view(grid.view(j, i), depths[j][i], cfg,
                                 coord=grid.coord(j, i))
            vrow.append(v)
            drow.append(d)
        out_views.append(vrow)
        out_depths.append(drow)
    return out_views, out_depths
