"""Synthetic light-field and scene generators used by tests and demos.

Two families of generators are provided:

* integer-shift layered light fields, where every view is produced by
  shifting textured layers whole pixels per view step, so ground-truth
  disparity is known exactly;
* band-limited sinusoid light fields, where views are analytic evaluations
  of a smooth texture at fractionally shifted coordinates, for sub-pixel
  accuracy measurements.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .model import DepthMap, DisparityMap, LightFieldGrid, ViewImage


def smooth_noise_texture(height, width, rng, blur=1.5, lo=0.1, hi=0.9):
    """Dense random texture with contrast everywhere, kept inside [lo, hi]."""
    t = rng.random((height, width)).astype(np.float32)
    t = ndimage.gaussian_filter(t, blur, mode="wrap")
    t -= t.min()
    t /= max(t.max(), 1e-9)
    return (lo + (hi - lo) * t).astype(np.float32)


@dataclass
class Layer:
    """A fronto-parallel textured layer with one disparity for the whole layer.

    `disparity` is in pixels of shift per unit view step; `mask` marks the
    layer's pixels in the center view (None = covers everything).
    """

    texture: np.ndarray
    disparity: float
    mask: np.ndarray | None = None
    depth: float = 0.0           # normalized depth used by scene generators


def _shift_int(arr, sy, sx):
    return np.roll(np.roll(arr, sy, axis=0), sx, axis=1)


def layered_light_field(layers, v_y, v_x, noise=0.0, rng=None):
    """Build an integer-shift light field from far-to-near ordered layers.

    Returns (grid, truth) where truth[j][i] is the exact DisparityMap of each
    view. Shifts wrap around the frame, so texture content is consistent
    across views everywhere except at the wrap seam.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    h, w = layers[0].texture.shape[:2]
    ci, cj = (v_x - 1) / 2.0, (v_y - 1) / 2.0
    views, truth = [], []
    for j in range(v_y):
        vrow, trow = [], []
        for i in range(v_x):
            img = np.zeros((h, w), dtype=np.float32)
            dsp = np.zeros((h, w), dtype=np.float32)
            for layer in layers:
                sx = int(round(layer.disparity * (i - ci)))
                sy = int(round(layer.disparity * (j - cj)))
                tex = _shift_int(layer.texture, sy, sx)
                if layer.mask is None:
                    img[:] = tex
                    dsp[:] = layer.disparity
                else:
                    m = _shift_int(layer.mask, sy, sx)
                    img[m] = tex[m]
                    dsp[m] = layer.disparity
            if noise > 0:
                img = np.clip(img + rng.normal(0.0, noise, img.shape), 0.0, 1.0)
            vrow.append(ViewImage.full(img.astype(np.float32)))
            trow.append(DisparityMap(dsp, np.ones_like(dsp, dtype=bool)))
        views.append(vrow)
        truth.append(trow)
    return LightFieldGrid.from_views(views), truth


def sinusoid_light_field(disparity, v_y, v_x, height, width, rng=None,
                         n_waves=24, max_freq=0.12, noise=0.0):
    """Analytic band-limited light field with one exact fractional disparity.

    Each view evaluates a fixed sum of 2-D sinusoids at coordinates shifted
    by `disparity` pixels per view step, so sub-pixel ground truth is exact.
    """
    if rng is None:
        rng = np.random.default_rng(7)
    freqs = rng.uniform(0.02, max_freq, (n_waves, 2))
    phases = rng.uniform(0, 2 * np.pi, n_waves)
    amps = rng.uniform(0.5, 1.0, n_waves)
    amps /= amps.sum()
    ci, cj = (v_x - 1) / 2.0, (v_y - 1) / 2.0
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)

    def render(dx, dy):
        img = np.zeros((height, width))
        for (fu, fv), ph, a in zip(freqs, phases, amps):
            img += a * np.sin(2 * np.pi * (fu * (xx - dx) + fv * (yy - dy)) + ph)
        return (0.5 + 0.4 * img).astype(np.float32)

    views = []
    for j in range(v_y):
        vrow = []
        for i in range(v_x):
            img = render(disparity * (i - ci), disparity * (j - cj))
            if noise > 0:
                img = np.clip(img + rng.normal(0.0, noise, img.shape).astype(np.float32), 0, 1)
            vrow.append(ViewImage.full(img))
        views.append(vrow)
    return LightFieldGrid.from_views(views)


def two_layer_scene(height=128, width=128, fg_depth=0.1, bg_depth=0.9,
                    fg_box=None, rng=None):
    """A single view + depth map: textured background with a foreground box."""
    if rng is None:
        rng = np.random.default_rng(3)
    img = smooth_noise_texture(height, width, rng)
    depth = np.full((height, width), bg_depth, dtype=np.float32)
    if fg_box is None:
        fg_box = (height // 4, height // 2, width // 4, width // 2)
    y0, y1, x0, x1 = fg_box
    fg_tex = smooth_noise_texture(height, width, rng, lo=0.3, hi=1.0)
    img[y0:y1, x0:x1] = fg_tex[y0:y1, x0:x1]
    depth[y0:y1, x0:x1] = fg_depth
    mask = np.ones((height, width), dtype=bool)
    return ViewImage(img, mask), DepthMap(depth, mask.copy())


def demo_light_field(v_y=5, v_x=5, height=96, width=96, seed=11):
    """Small two-layer light field used by the demos and pipeline tests."""
    rng = np.random.default_rng(seed)
    bg = smooth_noise_texture(height, width, rng)
    fg = smooth_noise_texture(height, width, rng, lo=0.35, hi=1.0)
    m = np.zeros((height, width), dtype=bool)
    m[height // 3: 2 * height // 3, width // 3: 2 * width // 3] = True
    layers = [Layer(bg, disparity=1.0), Layer(fg, disparity=4.0, mask=m)]
    return layered_light_field(layers, v_y, v_x)
