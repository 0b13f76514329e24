"""Non-uniform depth quantization onto display panels and intensity blending.

Panel planes are placed from the synthesized depth of the reference view
using multi-level Otsu thresholding (or k-means / equal-count variants),
and each pixel's intensity is distributed across panels with one of three
blend modes: none, two-panel linear, or all-panel linear.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .model import DepthMap, ViewImage

N_HIST_BINS = 256


class BlendMode(Enum):
    NONE = "none"
    TWO_PANEL = "two"
    ALL_PANEL = "all"


@dataclass(frozen=True)
class PanelLayout:
    """N panel depth planes in [0,1] plus the N-1 partition thresholds."""

    panel_depths: tuple
    thresholds: tuple

    def __post_init__(self):
        pd = np.asarray(self.panel_depths, dtype=np.float64)
        th = np.asarray(self.thresholds, dtype=np.float64)
        if len(pd) < 2:
            raise ValueError("need at least 2 panels")
        if np.any(np.diff(pd) <= 0):
            raise ValueError("panel depths must be strictly increasing")
        if len(th) != len(pd) - 1:
            raise ValueError("need exactly N-1 thresholds")
        for k, t in enumerate(th):
            if not (pd[k] <= t <= pd[k + 1]):
                raise ValueError("thresholds must interleave panel depths")

    @property
    def num_panels(self):
        return len(self.panel_depths)

    def to_dict(self):
        return {"panelDepths": list(self.panel_depths),
                "thresholds": list(self.thresholds)}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["panelDepths"]), tuple(d["thresholds"]))


@dataclass
class PanelStack:
    """Per-panel images for one synthesized view on an additive display."""

    panels: list                  # N ViewImages
    layout: PanelLayout
    pose: tuple | None = None

    def composite(self) -> np.ndarray:
        total = sum(p.samples.astype(np.float64) for p in self.panels)
        return np.clip(total, 0.0, 1.0).astype(np.float32)

    def falsecolor(self) -> np.ndarray:
        """Panels 1..3 mapped to R/G/B (front panel red, back panel blue)."""
        if len(self.panels) > 3:
            raise ValueError("false-color composite supports at most 3 panels")
        h, w = self.panels[0].samples.shape[:2]
        rgb = np.zeros((h, w, 3), dtype=np.float32)
        for c, p in enumerate(self.panels):
            s = p.samples
            rgb[..., c] = s if s.ndim == 2 else s.mean(axis=2)
        return np.clip(rgb, 0.0, 1.0)


# ---------------------------------------------------------------------------
# Histogram helpers


def _depth_histogram(depth: DepthMap):
    vals = depth.depths[depth.mask]
    if vals.size == 0:
        raise ValueError("depth map has no valid pixels")
    hist, edges = np.histogram(vals, bins=N_HIST_BINS, range=(0.0, 1.0))
    centers = (edges[:-1] + edges[1:]) / 2.0
    return hist.astype(np.float64), centers, edges


def _check_distinct(depth: DepthMap, n):
    vals = depth.depths[depth.mask]
    if np.unique(vals).size < n:
        raise ValueError(f"need at least {n} distinct depth values for {n} panels")


def _class_means(hist, centers, bin_thresholds):
    """Per-class mean depth for classes split after the given bin indices."""
    means = []
    lo = 0
    for t in list(bin_thresholds) + [len(hist) - 1]:
        w = hist[lo:t + 1]
        c = centers[lo:t + 1]
        means.append(float((w * c).sum() / w.sum()) if w.sum() > 0 else float(c.mean()))
        lo = t + 1
    return means


def _layout_from_bins(hist, centers, edges, bin_thresholds):
    depths = _class_means(hist, centers, bin_thresholds)
    th = [float(edges[t + 1]) for t in bin_thresholds]
    # guard against empty classes collapsing panel depths
    for k in range(1, len(depths)):
        if depths[k] <= depths[k - 1]:
            depths[k] = depths[k - 1] + 1e-9
    return PanelLayout(tuple(depths), tuple(th))


def between_class_variance(hist, centers, bin_thresholds):
    """Otsu's criterion: sum over classes of w_k * (mu_k - mu)^2."""
    total = hist.sum()
    mu = (hist * centers).sum() / total
    score = 0.0
    lo = 0
    for t in list(bin_thresholds) + [len(hist) - 1]:
        w = hist[lo:t + 1].sum()
        if w > 0:
            mu_k = (hist[lo:t + 1] * centers[lo:t + 1]).sum() / w
            score += (w / total) * (mu_k - mu) ** 2
        lo = t + 1
    return score


def max_variance_thresholds(hist, centers, n_classes):
    """Exact maximizer of between-class variance over all threshold tuples.

    Dynamic program over (class count, last bin): maximizing between-class
    variance equals maximizing the sum of w_k * mu_k^2 over the partition,
    which decomposes over contiguous histogram segments.
    """
    nb = len(hist)
    cw = np.concatenate([[0.0], np.cumsum(hist)])
    cm = np.concatenate([[0.0], np.cumsum(hist * centers)])

    def seg_score(a, b):            # bins a..b inclusive
        w = cw[b + 1] - cw[a]
        if w <= 0:
            return 0.0
        m = cm[b + 1] - cm[a]
        return m * m / w

    NEG = -np.inf
    best = np.full((n_classes + 1, nb), NEG)
    arg = np.zeros((n_classes + 1, nb), dtype=np.int32)
    for b in range(nb):
        best[1, b] = seg_score(0, b)
    for k in range(2, n_classes + 1):
        for b in range(k - 1, nb):
            # previous class ends at t, current spans t+1..b
            cand = best[k - 1, k - 2:b] + np.array(
                [seg_score(t + 1, b) for t in range(k - 2, b)])
            t_best = int(np.argmax(cand)) + (k - 2)
            best[k, b] = cand[t_best - (k - 2)]
            arg[k, b] = t_best
    ths = []
    b = nb - 1
    for k in range(n_classes, 1, -1):
        t = int(arg[k, b])
        ths.append(t)
        b = t
    return sorted(ths)


def brute_force_otsu_thresholds(hist, centers, n_classes):
    """Exhaustive enumeration oracle (small class counts only)."""
    from itertools import combinations
    nb = len(hist)
    best_score, best_ths = -1.0, None
    for ths in combinations(range(nb - 1), n_classes - 1):
        s = between_class_variance(hist, centers, list(ths))
        if s > best_score:
            best_score, best_ths = s, list(ths)
    return best_ths


def otsu_thresholds(depth: DepthMap, n_panels) -> PanelLayout:
    """Multi-level Otsu layout: thresholds maximize between-class variance
    over a 256-bin histogram; panel depths are the class mean depths."""
    _check_distinct(depth, n_panels)
    hist, centers, edges = _depth_histogram(depth)
    ths = max_variance_thresholds(hist, centers, n_panels)
    return _layout_from_bins(hist, centers, edges, ths)


def equal_count_thresholds(depth: DepthMap, n_panels) -> PanelLayout:
    """Thresholds at the k/N quantiles of the valid depths."""
    _check_distinct(depth, n_panels)
    hist, centers, edges = _depth_histogram(depth)
    vals = depth.depths[depth.mask]
    qs = np.quantile(vals, [k / n_panels for k in range(1, n_panels)])
    ths = [int(np.clip(np.searchsorted(edges, q) - 1, 0, N_HIST_BINS - 2)) for q in qs]
    # quantiles on lumpy data may repeat; force strictly increasing bins
    for k in range(1, len(ths)):
        ths[k] = max(ths[k], ths[k - 1] + 1)
    return _layout_from_bins(hist, centers, edges, ths)


def kmeans_thresholds(depth: DepthMap, n_panels, max_iter=100) -> PanelLayout:
    """1-D Lloyd iterations on the depth histogram, equally spaced seeds."""
    _check_distinct(depth, n_panels)
    hist, centers, edges = _depth_histogram(depth)
    vals = depth.depths[depth.mask]
    lo, hi = float(vals.min()), float(vals.max())
    cents = np.linspace(lo, hi, n_panels)
    nz = hist > 0
    hval = centers[nz]
    hw = hist[nz]
    for _ in range(max_iter):
        assign = np.argmin(np.abs(hval[:, None] - cents[None, :]), axis=1)
        new = cents.copy()
        for k in range(n_panels):
            sel = assign == k
            if sel.any():
                new[k] = (hval[sel] * hw[sel]).sum() / hw[sel].sum()
        if np.allclose(new, cents, atol=1e-12):
            break
        cents = np.sort(new)
    ths = []
    mids = (cents[:-1] + cents[1:]) / 2.0
    for m in mids:
        ths.append(int(np.clip(np.searchsorted(edges, m) - 1, 0, N_HIST_BINS - 2)))
    for k in range(1, len(ths)):
        ths[k] = max(ths[k], ths[k - 1] + 1)
    hist_l, centers_l, edges_l = hist, centers, edges
    layout = _layout_from_bins(hist_l, centers_l, edges_l, ths)
    # k-means panel depths are the converged centers, not class means
    depths = list(cents)
    for k in range(1, len(depths)):
        if depths[k] <= depths[k - 1]:
            depths[k] = depths[k - 1] + 1e-9
    th_vals = []
    for k, t in enumerate(layout.thresholds):
        th_vals.append(float(np.clip(t, depths[k], depths[k + 1])))
    return PanelLayout(tuple(depths), tuple(th_vals))


QUANTIZERS = {"otsu": otsu_thresholds, "kmeans": kmeans_thresholds,
              "equal": equal_count_thresholds}


# ---------------------------------------------------------------------------
# Blending


def panel_weights(z: np.ndarray, layout: PanelLayout, mode: BlendMode) -> np.ndarray:
    """Per-pixel panel weights, shape (N, ...); weights sum to 1 exactly."""
    z = np.asarray(z, dtype=np.float64)
    pd = np.asarray(layout.panel_depths)
    n = len(pd)
    w = np.zeros((n,) + z.shape)

    if mode is BlendMode.NONE:
        idx = np.digitize(z, np.asarray(layout.thresholds))
        for p in range(n):
            w[p] = (idx == p).astype(np.float64)
    elif mode is BlendMode.TWO_PANEL:
        below = z <= pd[0]
        above = z >= pd[-1]
        w[0][below] = 1.0
        w[-1][above] = 1.0
        mid = ~(below | above)
        if mid.any():
            zi = z[mid]
            hi = np.searchsorted(pd, zi, side="left")
            lo = hi - 1
            span = pd[hi] - pd[lo]
            w_near = (pd[hi] - zi) / span
            for p in range(n):
                sel_lo = lo == p
                sel_hi = hi == p
                wp = np.zeros_like(zi)
                wp[sel_lo] = w_near[sel_lo]
                wp[sel_hi] = 1.0 - w_near[sel_hi]
                w[p][mid] += wp
    elif mode is BlendMode.ALL_PANEL:
        dist = np.abs(z[None, ...] - pd.reshape((n,) + (1,) * z.ndim))
        span = pd[-1] - pd[0]
        d_max = dist.max(axis=0) + span
        w = d_max[None, ...] - dist
        w /= w.sum(axis=0)
    else:
        raise ValueError(f"unknown blend mode {mode}")
    return w


def blend_to_panels(view: ViewImage, depth: DepthMap, layout: PanelLayout,
                    mode: BlendMode, pose=None) -> PanelStack:
    """Distribute each pixel's intensity across panels by its depth weight.

    Conservation: for every pixel, the sum over panels equals the input
    intensity (the display is additive).
    """
    if view.samples.shape[:2] != depth.depths.shape:
        raise ValueError("view and depth dimensions differ")
    w = panel_weights(depth.depths, layout, mode)
    panels = []
    for p in range(layout.num_panels):
        wp = w[p].astype(np.float32)
        if view.samples.ndim == 3:
            wp = wp[..., None]
        panels.append(ViewImage((view.samples * wp).astype(np.float32),
                                view.mask.copy()))
    return PanelStack(panels=panels, layout=layout, pose=pose)
