"""Multi-view sub-pixel disparity estimation.

Reference views are estimated with a multi-baseline two-step matcher
(integer winner-take-all over cross-hair view pairs, then sub-pixel
refinement on 2x upscaled data), and the remaining views receive their
maps through weighted forward remapping.

Disparity is expressed in pixels of shift per unit view step: a pair of
views m grid steps apart searches a shift of m*d for candidate d.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline, interp1d

from .fill import nearest_fill
from .model import (AngularCoord, DisparityField, DisparityMap,
                    LightFieldError, LightFieldGrid, ViewImage)


@dataclass(frozen=True)
class SupportThresholds:
    """Max color / gradient-magnitude / grayscale difference for arm growth."""

    color: float = 0.04
    gradient: float = 0.08
    gray: float = 0.04


@dataclass
class DisparityConfig:
    max_d: int = 8                      # disparity search bound, pixels per view step
    mu: int = 2                         # sub-pixel search radius, upscaled pixels
    ref_spacing: int = 2                # reference-view subsampling stride
    num_refs: int | None = None         # explicit reference count (overrides spacing)
    cross_offset: int = 1               # angular offset to cross-hair partners
    thresholds: SupportThresholds = field(default_factory=SupportThresholds)
    max_arm: int = 8
    uniqueness_min_variance: float = 1e-4   # fraction of squared mean cost
    dense_factor: int = 10              # cost-curve samples per upscaled pixel
    census_window: int = 7
    census_weight: float = 0.5
    gradient_weight: float = 0.5
    color_sigma: float = 0.1            # propagation color-weight scale
    threads: int = 1

    def __post_init__(self):
        if self.max_d < 1 or self.mu < 1 or self.max_arm < 1:
            raise ValueError("max_d, mu and max_arm must all be >= 1")
        if self.census_window % 2 == 0 or self.census_window < 3:
            raise ValueError("census window must be odd and >= 3")
        # final quantization is 1/(2*dense_factor) original pixels; keep <= 1/20
        if self.dense_factor < 10:
            raise ValueError("dense_factor must be >= 10 for 1/20 px quantization")


@dataclass
class PixelFeatures:
    """Per-pixel matching features: luminance, gradients, packed census bits."""

    gray: np.ndarray             # (H, W) float32
    grad_x: np.ndarray           # (H, W) float32
    grad_y: np.ndarray           # (H, W) float32
    census: np.ndarray           # (H, W) uint64, bit-packed window comparisons
    census_bits: int
    window: int


@dataclass
class SupportRegion:
    """Per-pixel cross arms; every arm pixel is within the similarity thresholds."""

    left: np.ndarray             # (H, W) int16
    right: np.ndarray
    up: np.ndarray
    down: np.ndarray


@dataclass(frozen=True)
class CrosshairPair:
    """One (reference, partner) matching pair with its signed baseline."""

    ref: AngularCoord
    partner: AngularCoord

    @property
    def baseline_i(self):
        return self.partner.i - self.ref.i

    @property
    def baseline_j(self):
        return self.partner.j - self.ref.j

    @property
    def baseline_ang(self):
        return (self.partner.ang_x - self.ref.ang_x,
                self.partner.ang_y - self.ref.ang_y)


@dataclass
class CostCurve:
    """Aggregated matching cost sampled at strictly increasing candidates."""

    candidates: np.ndarray
    costs: np.ndarray

    def __post_init__(self):
        self.candidates = np.asarray(self.candidates, dtype=np.float64)
        self.costs = np.asarray(self.costs, dtype=np.float64)
        if np.any(np.diff(self.candidates) <= 0):
            raise ValueError("candidates must be strictly increasing")
        if not np.all(np.isfinite(self.costs)) or np.any(self.costs < 0):
            raise ValueError("costs must be finite and non-negative")


# ---------------------------------------------------------------------------
# Reference view selection


def select_reference_views(v_x, v_y, ref_spacing=None, count=None):
    """Pick reference views: the four corners plus farthest-point-sampled views.

    The count comes either from an explicit `count` or from subsampling the
    grid with stride `ref_spacing` per dimension. Farthest-point sampling
    keeps the selection spread uniformly (occlusion coverage) and is
    deterministic.
    """
    if count is None:
        if ref_spacing is None:
            raise ValueError("give ref_spacing or count")
        if ref_spacing < 1:
            raise ValueError("ref_spacing must be >= 1")
        if ref_spacing >= min(v_x, v_y):
            raise ValueError(
                f"ref_spacing {ref_spacing} too large for {v_y}x{v_x} grid "
                "(fewer than 4 references)")
        count = int(np.ceil(v_x / ref_spacing)) * int(np.ceil(v_y / ref_spacing))
    if count < 4:
        raise ValueError("need at least 4 reference views")
    count = min(count, v_x * v_y)

    pts = [(0, 0), (v_x - 1, 0), (0, v_y - 1), (v_x - 1, v_y - 1)]
    grid_pts = [(i, j) for j in range(v_y) for i in range(v_x)]
    chosen = set(pts)
    coords = np.array(grid_pts, dtype=np.float64)
    dist = np.full(len(grid_pts), np.inf)
    for p in pts:
        dist = np.minimum(dist, ((coords - p) ** 2).sum(axis=1))
    while len(pts) < count:
        best = int(np.argmax(dist))     # ties -> first in row-major scan order
        p = grid_pts[best]
        pts.append(p)
        chosen.add(p)
        dist = np.minimum(dist, ((coords - p) ** 2).sum(axis=1))
    return [AngularCoord.from_indices(i, j, v_x, v_y) for (i, j) in sorted(pts, key=lambda p: (p[1], p[0]))]


def _axis_partner_indices(ref_idx, n, off):
    """Two partner indices along one axis, folding clamped duplicates outward."""
    if n < 2:
        raise LightFieldError("axis too short for cross-hair partners")
    a = min(max(ref_idx + off, 0), n - 1)
    b = min(max(ref_idx - off, 0), n - 1)
    if a == ref_idx:
        a = min(max(ref_idx - 2 * off, 0), n - 1)
    if b == ref_idx:
        b = min(max(ref_idx + 2 * off, 0), n - 1)
    if a == ref_idx:
        a = b
    if b == ref_idx:
        b = a
    if a == b:
        # fold produced a duplicate; take the nearest distinct in-line view
        for cand in sorted(range(n), key=lambda c: (abs(c - ref_idx), c)):
            if cand != ref_idx and cand != a:
                b = cand
                break
    return a, b


def select_crosshair_pairs(ref: AngularCoord, grid: LightFieldGrid, cross_offset):
    """Four (reference, partner) pairs at +/- cross_offset on each axis.

    Partners that clamp onto the reference fold to the opposite side; on a
    2-view axis the two partners coincide (duplicate baseline).
    """
    if cross_offset < 1:
        raise ValueError("cross_offset must be >= 1")
    xa, xb = _axis_partner_indices(ref.i, grid.v_x, cross_offset)
    ya, yb = _axis_partner_indices(ref.j, grid.v_y, cross_offset)
    partners = [(xa, ref.j), (xb, ref.j), (ref.i, ya), (ref.i, yb)]
    return [CrosshairPair(ref, AngularCoord.from_indices(i, j, grid.v_x, grid.v_y))
            for (i, j) in partners]


# ---------------------------------------------------------------------------
# Features and support regions


def compute_features(img: ViewImage, window=7) -> PixelFeatures:
    """Luminance gradients and a packed census transform (strict-less bits)."""
    gray = img.to_gray()
    gy, gx = np.gradient(gray.astype(np.float32))
    r = window // 2
    padded = np.pad(gray, r, mode="edge")
    h, w = gray.shape
    census = np.zeros((h, w), dtype=np.uint64)
    bit = 0
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            if dy == 0 and dx == 0:
                continue
            neigh = padded[r + dy:r + dy + h, r + dx:r + dx + w]
            census |= (neigh < gray).astype(np.uint64) << np.uint64(bit)
            bit += 1
    return PixelFeatures(gray=gray, grad_x=gx.astype(np.float32),
                         grad_y=gy.astype(np.float32), census=census,
                         census_bits=window * window - 1, window=window)


def build_support_regions(img: ViewImage, thresholds: SupportThresholds,
                          max_arm) -> SupportRegion:
    """Grow cross arms until color/gradient/gray similarity breaks or the
    border / max_arm is reached."""
    gray = img.to_gray()
    gy, gx = np.gradient(gray.astype(np.float32))
    gmag = np.hypot(gx, gy).astype(np.float32)
    color = img.samples if img.samples.ndim == 3 else gray[..., None]
    h, w = gray.shape

    def grow(dy, dx):
        arm = np.zeros((h, w), dtype=np.int16)
        ok = np.ones((h, w), dtype=bool)
        for s in range(1, max_arm + 1):
            oy, ox = dy * s, dx * s
            ys = np.clip(np.arange(h) + oy, 0, h - 1)
            xs = np.clip(np.arange(w) + ox, 0, w - 1)
            inb = np.ones((h, w), dtype=bool)
            if oy:
                inb &= ((np.arange(h) + oy)[:, None] >= 0) & ((np.arange(h) + oy)[:, None] < h)
            if ox:
                inb &= ((np.arange(w) + ox)[None, :] >= 0) & ((np.arange(w) + ox)[None, :] < w)
            gsh = gray[ys][:, xs]
            msh = gmag[ys][:, xs]
            csh = color[ys][:, xs, :]
            sim = (np.abs(gsh - gray) <= thresholds.gray)
            sim &= (np.abs(msh - gmag) <= thresholds.gradient)
            sim &= (np.abs(csh - color).mean(axis=2) <= thresholds.color)
            ok &= inb & sim
            arm += ok
        return arm

    return SupportRegion(left=grow(0, -1), right=grow(0, 1),
                         up=grow(-1, 0), down=grow(1, 0))


# ---------------------------------------------------------------------------
# Cost computation and aggregation

_POPCOUNT = np.bitwise_count if hasattr(np, "bitwise_count") else None


def _hamming(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    x = a ^ b
    if _POPCOUNT is not None:
        return _POPCOUNT(x).astype(np.float32)
    # fallback: per-byte popcount lookup
    lut = np.unpackbits(np.arange(256, dtype=np.uint8)[:, None], axis=1).sum(axis=1)
    return lut[x.view(np.uint8)].reshape(*x.shape, 8).sum(axis=-1).astype(np.float32)


def pixel_cost(ref: PixelFeatures, partner: PixelFeatures, shift_x, shift_y,
               census_weight=0.5, gradient_weight=0.5) -> np.ndarray:
    """Per-pixel AD cost against the partner sampled at (x+shift_x, y+shift_y).

    Shifts may be scalars or per-pixel integer arrays; coordinates clamp at
    the frame. Census and gradient terms are each normalized to [0, 1].
    """
    h, w = ref.gray.shape
    yy, xx = np.indices((h, w))
    xs = np.clip(xx + shift_x, 0, w - 1)
    ys = np.clip(yy + shift_y, 0, h - 1)
    ham = _hamming(ref.census, partner.census[ys, xs]) / ref.census_bits
    grad = (np.abs(ref.grad_x - partner.grad_x[ys, xs])
            + np.abs(ref.grad_y - partner.grad_y[ys, xs])) * 0.5
    return (census_weight * ham + gradient_weight * grad).astype(np.float32)


def aggregate_costs(cost: np.ndarray, region: SupportRegion) -> np.ndarray:
    """Cross-based SAD aggregation via 1-D integral images.

    Horizontal pass uses each row pixel's own left/right arms; the vertical
    pass accumulates those row sums over the anchor's up/down arms.
    """
    h, w = cost.shape
    xs = np.arange(w)[None, :]
    rowcum = np.zeros((h, w + 1), dtype=np.float64)
    np.cumsum(cost, axis=1, out=rowcum[:, 1:])
    horiz = (np.take_along_axis(rowcum, xs + region.right + 1, axis=1)
             - np.take_along_axis(rowcum, xs - region.left, axis=1))
    ys = np.arange(h)[:, None]
    colcum = np.zeros((h + 1, w), dtype=np.float64)
    np.cumsum(horiz, axis=0, out=colcum[1:, :])
    agg = (np.take_along_axis(colcum, ys + region.down + 1, axis=0)
           - np.take_along_axis(colcum, ys - region.up, axis=0))
    return agg.astype(np.float32)


def naive_aggregate_costs(cost: np.ndarray, region: SupportRegion) -> np.ndarray:
    """Direct double-loop oracle for aggregate_costs (small images only)."""
    h, w = cost.shape
    out = np.zeros_like(cost, dtype=np.float64)
    for y in range(h):
        for x in range(w):
            total = 0.0
            for v in range(y - region.up[y, x], y + region.down[y, x] + 1):
                for u in range(x - region.left[v, x], x + region.right[v, x] + 1):
                    total += cost[v, u]
            out[y, x] = total
    return out.astype(np.float32)


def submin(pair_costs: np.ndarray, axis=0) -> np.ndarray:
    """Best 3-of-4 subset cost sum: total minus the worst single pair."""
    return pair_costs.sum(axis=axis) - pair_costs.max(axis=axis)


def winner_take_all(curve: np.ndarray, axis=0) -> np.ndarray:
    """Minimum-cost candidate index; ties go to the smallest disparity."""
    return np.argmin(curve, axis=axis)


# ---------------------------------------------------------------------------
# Integer stage


def _pair_features(grid, pairs, cfg):
    feats = {}
    for p in pairs:
        key = (p.partner.j, p.partner.i)
        if key not in feats:
            feats[key] = compute_features(grid.view(*key), cfg.census_window)
    return feats


def integer_disparity(ref_features: PixelFeatures, pairs, partner_features,
                      region: SupportRegion, cfg: DisparityConfig) -> DisparityMap:
    """Integer WTA disparity with SUBMIN cross-pair aggregation and a
    cost-curve variance uniqueness check."""
    n_d = cfg.max_d + 1
    h, w = ref_features.gray.shape
    curves = np.empty((n_d, h, w), dtype=np.float32)
    pair_buf = np.empty((len(pairs), h, w), dtype=np.float32)
    for d in range(n_d):
        for k, p in enumerate(pairs):
            raw = pixel_cost(ref_features, partner_features[(p.partner.j, p.partner.i)],
                             p.baseline_i * d, p.baseline_j * d,
                             cfg.census_weight, cfg.gradient_weight)
            pair_buf[k] = aggregate_costs(raw, region)
        curves[d] = submin(pair_buf, axis=0)
    var = curves.var(axis=0)
    mean = curves.mean(axis=0)
    valid = var > cfg.uniqueness_min_variance * mean * mean + 1e-12
    d_int = winner_take_all(curves, axis=0).astype(np.float32)
    return DisparityMap(np.where(valid, d_int, 0.0), valid)


# ---------------------------------------------------------------------------
# Sub-pixel stage


def _upscale2_linear(arr: np.ndarray) -> np.ndarray:
    """Exact 2x bilinear upsample (sample-replicating at the far edge)."""
    def up_axis(a, axis):
        a = np.moveaxis(a, axis, 0)
        n = a.shape[0]
        out = np.empty((2 * n,) + a.shape[1:], dtype=np.float32)
        out[0::2] = a
        nxt = np.concatenate([a[1:], a[-1:]], axis=0)
        out[1::2] = (a + nxt) * 0.5
        return np.moveaxis(out, 0, axis)
    return up_axis(up_axis(arr.astype(np.float32), 0), 1)


def _upscale2_nearest(arr: np.ndarray) -> np.ndarray:
    return np.repeat(np.repeat(arr, 2, axis=0), 2, axis=1)


def _upscale_region(region: SupportRegion, shape2) -> SupportRegion:
    h2, w2 = shape2
    yy = np.arange(h2)[:, None]
    xx = np.arange(w2)[None, :]

    def up(a, limit):
        b = _upscale2_nearest(a).astype(np.int32) * 2
        return np.minimum(b, limit).astype(np.int16)

    return SupportRegion(left=up(region.left, xx),
                         right=up(region.right, w2 - 1 - xx),
                         up=up(region.up, yy),
                         down=up(region.down, h2 - 1 - yy))


def parabola_vertex(candidates: np.ndarray, costs: np.ndarray, idx):
    """Vertex of the parabola through sample idx and its two neighbors.

    Falls back to the sampled minimum when idx is at a boundary or the fit
    is degenerate (non-convex / collinear samples).
    """
    n = len(candidates)
    if idx <= 0 or idx >= n - 1:
        return float(candidates[idx])
    y0, y1, y2 = costs[idx - 1], costs[idx], costs[idx + 1]
    if not (np.isfinite(y0) and np.isfinite(y2)):
        return float(candidates[idx])
    denom = y0 - 2.0 * y1 + y2
    if denom <= 0:
        return float(candidates[idx])
    h = candidates[idx + 1] - candidates[idx]
    delta = 0.5 * (y0 - y2) / denom * h
    return float(candidates[idx] + np.clip(delta, -h, h))


def refine_cost_curve(curve: CostCurve, dense_factor=10):
    """Densify a cost curve (cubic), take the argmin, and fit its parabola."""
    cands, costs = curve.candidates, curve.costs
    if len(cands) < 2:
        return float(cands[0])
    step = (cands[1] - cands[0]) / dense_factor
    dense_x = np.arange(cands[0], cands[-1] + step / 2, step)
    kind = "cubic" if len(cands) >= 4 else len(cands) - 1
    f = interp1d(cands, costs, kind=kind)
    dense_y = f(dense_x)
    j = int(np.argmin(dense_y))
    return parabola_vertex(dense_x, dense_y, j)


def subpixel_refine(ref_view: ViewImage, grid: LightFieldGrid, pairs,
                    integer_map: DisparityMap, region: SupportRegion,
                    cfg: DisparityConfig) -> DisparityMap:
    """Refine integer disparity on 2x upscaled data to 1/20 px quantization."""
    up_ref = ViewImage.full(_upscale2_linear(ref_view.samples))
    feats_ref = compute_features(up_ref, cfg.census_window)
    h2, w2 = feats_ref.gray.shape
    region2 = _upscale_region(region, (h2, w2))
    feats_p = {}
    for p in pairs:
        key = (p.partner.j, p.partner.i)
        if key not in feats_p:
            up = ViewImage.full(_upscale2_linear(grid.view(*key).samples))
            feats_p[key] = compute_features(up, cfg.census_window)

    d_up = _upscale2_nearest(integer_map.disparities).astype(np.int32) * 2
    valid = _upscale2_nearest(integer_map.mask)
    max_up = 2 * cfg.max_d
    offsets = np.arange(-cfg.mu, cfg.mu + 1)

    curves = np.empty((len(offsets), h2, w2), dtype=np.float32)
    pair_buf = np.empty((len(pairs), h2, w2), dtype=np.float32)
    feasible = np.empty((len(offsets), h2, w2), dtype=bool)
    for oi, o in enumerate(offsets):
        cand = d_up + o
        feasible[oi] = (cand >= 0) & (cand <= max_up)
        cand = np.clip(cand, 0, max_up)
        for k, p in enumerate(pairs):
            raw = pixel_cost(feats_ref, feats_p[(p.partner.j, p.partner.i)],
                             p.baseline_i * cand, p.baseline_j * cand,
                             cfg.census_weight, cfg.gradient_weight)
            pair_buf[k] = aggregate_costs(raw, region2)
        curves[oi] = submin(pair_buf, axis=0)

    # clamp infeasible samples to their nearest feasible cost so the dense
    # interpolation stays tame, then exclude them from the argmin
    for oi in range(len(offsets) - 2, -1, -1):
        bad = ~feasible[oi]
        curves[oi][bad] = curves[oi + 1][bad]
    for oi in range(1, len(offsets)):
        bad = ~feasible[oi]
        curves[oi][bad] = curves[oi - 1][bad]

    step = 1.0 / cfg.dense_factor
    dense_off = np.arange(-cfg.mu, cfg.mu + step / 2, step)
    spline = CubicSpline(offsets.astype(np.float64),
                         curves.reshape(len(offsets), -1), axis=0)
    dense = spline(dense_off).astype(np.float32)          # (n_dense, h2*w2)
    dense_feasible = ((d_up.reshape(-1)[None, :] + dense_off[:, None] >= -1e-9)
                      & (d_up.reshape(-1)[None, :] + dense_off[:, None] <= max_up + 1e-9))
    dense[~dense_feasible] = np.inf
    j = np.argmin(dense, axis=0)

    flat = np.arange(dense.shape[1])
    interior = (j > 0) & (j < len(dense_off) - 1)
    y1 = dense[j, flat]
    y0 = np.where(interior, dense[np.maximum(j - 1, 0), flat], np.inf)
    y2 = np.where(interior, dense[np.minimum(j + 1, len(dense_off) - 1), flat], np.inf)
    fin = np.isfinite(y0) & np.isfinite(y2)
    y0 = np.where(fin, y0, 0.0)
    y2 = np.where(fin, y2, 0.0)
    denom = y0 - 2.0 * y1 + y2
    ok = interior & fin & (denom > 0)
    delta = np.zeros_like(y1)
    np.divide(0.5 * (y0 - y2), denom, out=delta, where=ok)
    delta = np.where(ok, np.clip(delta, -1.0, 1.0) * step, 0.0)
    o_star = dense_off[j] + delta

    d_sub_up = d_up.reshape(-1) + o_star
    d_sub = np.clip(d_sub_up.reshape(h2, w2) / 2.0, 0.0, cfg.max_d)
    out = d_sub[::2, ::2].astype(np.float32)
    mask = integer_map.mask.copy()
    return DisparityMap(np.where(mask, out, 0.0), mask)


# ---------------------------------------------------------------------------
# Propagation


def splat_weights(alpha, beta):
    """Bilinear distance weights for the (UL, UR, LL, LR) neighbors."""
    return ((1 - alpha) * (1 - beta), alpha * (1 - beta),
            (1 - alpha) * beta, alpha * beta)


def propagate_disparity(reference_maps, reference_coords, target: AngularCoord,
                        grid: LightFieldGrid, color_sigma=0.1) -> DisparityMap:
    """Weighted forward remapping of reference disparities into a target view.

    Each source pixel splats into the four surrounding target pixels with
    bilinear distance weights times a color-similarity weight
    exp(-mean_abs_diff / sigma); contributions normalize by total weight.
    """
    if not reference_maps:
        raise ValueError("need at least one reference map")
    h, w = reference_maps[0].disparities.shape
    acc = np.zeros((h, w), dtype=np.float64)
    wsum = np.zeros((h, w), dtype=np.float64)
    tgt = grid.view(target.j, target.i)
    tgt_color = tgt.samples if tgt.samples.ndim == 3 else tgt.samples[..., None]

    yy, xx = np.indices((h, w))
    for smap, scoord in zip(reference_maps, reference_coords):
        valid = smap.mask
        if not valid.any():
            continue
        d = smap.disparities[valid].astype(np.float64)
        sx = xx[valid]
        sy = yy[valid]
        di = target.i - scoord.i
        dj = target.j - scoord.j
        dxf = sx + d * di
        dyf = sy + d * dj
        x0 = np.floor(dxf).astype(np.int64)
        y0 = np.floor(dyf).astype(np.int64)
        alpha = dxf - x0
        beta = dyf - y0
        src = grid.view(scoord.j, scoord.i)
        src_color = src.samples if src.samples.ndim == 3 else src.samples[..., None]
        sc = src_color[sy, sx].astype(np.float64)
        for ox, oy, dw in ((0, 0, (1 - alpha) * (1 - beta)),
                           (1, 0, alpha * (1 - beta)),
                           (0, 1, (1 - alpha) * beta),
                           (1, 1, alpha * beta)):
            xt = x0 + ox
            yt = y0 + oy
            sel = (xt >= 0) & (xt < w) & (yt >= 0) & (yt < h) & (dw > 0)
            if not sel.any():
                continue
            xs_, ys_ = xt[sel], yt[sel]
            dc = np.abs(tgt_color[ys_, xs_].astype(np.float64) - sc[sel]).mean(axis=1)
            wt = dw[sel] * np.exp(-dc / color_sigma)
            np.add.at(acc, (ys_, xs_), wt * d[sel])
            np.add.at(wsum, (ys_, xs_), wt)

    mask = wsum > 1e-12
    out = np.zeros((h, w), dtype=np.float32)
    np.divide(acc, wsum, out=out, where=mask, casting="unsafe")
    return DisparityMap(out.astype(np.float32), mask)


# ---------------------------------------------------------------------------
# Whole-grid estimation


def estimate_reference_view(grid: LightFieldGrid, ref: AngularCoord,
                            cfg: DisparityConfig) -> DisparityMap:
    """Integer + sub-pixel estimation for one reference view."""
    pairs = select_crosshair_pairs(ref, grid, cfg.cross_offset)
    ref_view = grid.view(ref.j, ref.i)
    feats = compute_features(ref_view, cfg.census_window)
    region = build_support_regions(ref_view, cfg.thresholds, cfg.max_arm)
    partner_feats = _pair_features(grid, pairs, cfg)
    d_int = integer_disparity(feats, pairs, partner_feats, region, cfg)
    return subpixel_refine(ref_view, grid, pairs, d_int, region, cfg)


def estimate_all_views(grid: LightFieldGrid, cfg: DisparityConfig):
    """Estimate reference views, propagate the rest, fill residual holes.

    Returns (DisparityField, stats dict).
    """
    t0 = time.perf_counter()
    refs = select_reference_views(grid.v_x, grid.v_y,
                                  ref_spacing=cfg.ref_spacing if cfg.num_refs is None else None,
                                  count=cfg.num_refs)
    ref_keys = {(r.j, r.i) for r in refs}

    def work(ref):
        return (ref.j, ref.i), estimate_reference_view(grid, ref, cfg)

    ref_maps = {}
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            for key, m in pool.map(work, refs):
                ref_maps[key] = m
    else:
        for ref in refs:
            key, m = work(ref)
            ref_maps[key] = m

    ordered_maps = [ref_maps[(r.j, r.i)] for r in refs]

    def propagate(coord):
        return ((coord.j, coord.i),
                propagate_disparity(ordered_maps, refs, coord, grid, cfg.color_sigma))

    targets = [c for c in grid.all_coords() if (c.j, c.i) not in ref_keys]
    prop_maps = {}
    if cfg.threads > 1 and targets:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            for key, m in pool.map(propagate, targets):
                prop_maps[key] = m
    else:
        for c in targets:
            key, m = propagate(c)
            prop_maps[key] = m

    maps = []
    n_invalid = 0
    invalid_per_view = {}
    for j in range(grid.v_y):
        row = []
        for i in range(grid.v_x):
            m = ref_maps.get((j, i)) or prop_maps.get((j, i))
            bad = int((~m.mask).sum())
            n_invalid += bad
            invalid_per_view[f"view_{j:02d}_{i:02d}"] = 100.0 * bad / m.mask.size
            if m.mask.any() and not m.mask.all():
                filled = nearest_fill(m.disparities, m.mask)
                m = DisparityMap(np.clip(filled, 0, cfg.max_d),
                                 np.ones_like(m.mask))
            row.append(m)
        maps.append(row)

    stats = {
        "runtime_s": time.perf_counter() - t0,
        "n_references": len(refs),
        "n_propagated": len(targets),
        "invalid_fraction_prefill": n_invalid / (grid.v_x * grid.v_y * grid.width * grid.height),
        "percent_invalid_per_view": invalid_per_view,
    }
    return DisparityField(maps), stats
