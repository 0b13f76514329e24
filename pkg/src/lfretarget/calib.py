"""View-dependent per-panel affine calibration.

Each non-reference panel carries sparse samples of scale/translation
parameters over viewing angles; a degree-1 polynomial in (ang_x, ang_y) is
least-squares fitted per parameter and evaluated on the fly. The affine
transform scales about the image center, then translates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .model import ViewImage

PARAM_NAMES = ("sx", "sy", "tx", "ty")
IDENTITY = (1.0, 1.0, 0.0, 0.0)


@dataclass(frozen=True)
class CalibrationSample:
    ang_x: float
    ang_y: float
    sx: float
    sy: float
    tx: float
    ty: float


@dataclass
class PanelCalibration:
    """Fitted linear calibration polynomials for every panel.

    coefficients[p][name] = (a0, a1, a2) evaluating to
    a0 + a1*ang_x + a2*ang_y; the reference panel is pinned to the identity.
    """

    num_panels: int
    reference_panel: int
    coefficients: list                    # per panel: dict name -> (a0, a1, a2)
    fov_bounds: tuple = (-0.5, 0.5, -0.5, 0.5)   # (min_x, max_x, min_y, max_y)
    display_size: tuple | None = None     # (width, height) or None
    samples: list = field(default_factory=list)  # per panel: list[CalibrationSample]
    residuals: list = field(default_factory=list)
    degree: int = 1

    def to_dict(self):
        return {
            "referencePanel": self.reference_panel,
            "displayWidth": None if self.display_size is None else self.display_size[0],
            "displayHeight": None if self.display_size is None else self.display_size[1],
            "fovBounds": list(self.fov_bounds),
            "degree": self.degree,
            "panels": [
                {"panel": p,
                 "coefficients": {n: list(self.coefficients[p][n]) for n in PARAM_NAMES},
                 "samples": [[s.ang_x, s.ang_y, s.sx, s.sy, s.tx, s.ty]
                             for s in (self.samples[p] if p < len(self.samples) else [])]}
                for p in range(self.num_panels)],
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("degree", 1) != 1:
            raise ValueError("only degree-1 calibration polynomials are supported")
        panels = sorted(d["panels"], key=lambda e: e["panel"])
        coeffs = [{n: tuple(e["coefficients"][n]) for n in PARAM_NAMES} for e in panels]
        samples = [[CalibrationSample(*s) for s in e.get("samples", [])] for e in panels]
        size = None
        if d.get("displayWidth") and d.get("displayHeight"):
            size = (d["displayWidth"], d["displayHeight"])
        return cls(num_panels=len(panels), reference_panel=d["referencePanel"],
                   coefficients=coeffs, fov_bounds=tuple(d.get("fovBounds", (-0.5, 0.5, -0.5, 0.5))),
                   display_size=size, samples=samples)

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)

    @classmethod
    def load(cls, path):
        with open(path) as f:
            return cls.from_dict(json.load(f))


def identity_calibration(num_panels, reference_panel=0) -> PanelCalibration:
    coeffs = [{n: (v, 0.0, 0.0) for n, v in zip(PARAM_NAMES, IDENTITY)}
              for _ in range(num_panels)]
    return PanelCalibration(num_panels=num_panels, reference_panel=reference_panel,
                            coefficients=coeffs)


def fit_calibration(samples_per_panel, reference_panel=0,
                    fov_bounds=(-0.5, 0.5, -0.5, 0.5),
                    display_size=None) -> PanelCalibration:
    """Least-squares plane fit of each affine parameter over viewing angles.

    Needs >= 3 non-collinear sample poses per non-reference panel.
    """
    coeffs, residuals, kept = [], [], []
    for p, samples in enumerate(samples_per_panel):
        if p == reference_panel:
            coeffs.append({n: (v, 0.0, 0.0) for n, v in zip(PARAM_NAMES, IDENTITY)})
            residuals.append({n: 0.0 for n in PARAM_NAMES})
            kept.append(list(samples))
            continue
        if len(samples) < 3:
            raise ValueError(f"panel {p}: need >= 3 calibration samples, got {len(samples)}")
        A = np.array([[1.0, s.ang_x, s.ang_y] for s in samples])
        if np.linalg.matrix_rank(A) < 3:
            raise ValueError(f"panel {p}: sample poses are collinear")
        c, r = {}, {}
        for n in PARAM_NAMES:
            b = np.array([getattr(s, n) for s in samples])
            sol, *_ = np.linalg.lstsq(A, b, rcond=None)
            c[n] = tuple(float(v) for v in sol)
            r[n] = float(np.sqrt(np.mean((A @ sol - b) ** 2)))
        coeffs.append(c)
        residuals.append(r)
        kept.append(list(samples))
    return PanelCalibration(num_panels=len(samples_per_panel),
                            reference_panel=reference_panel, coefficients=coeffs,
                            fov_bounds=fov_bounds, display_size=display_size,
                            samples=kept, residuals=residuals)


def calibration_at(calib: PanelCalibration, pose):
    """Per-panel (sx, sy, tx, ty) at a pose; the reference panel is identity.

    Poses outside the field-of-view bounds are clamped.
    """
    ax, ay = pose
    x0, x1, y0, y1 = calib.fov_bounds
    ax = float(np.clip(ax, x0, x1))
    ay = float(np.clip(ay, y0, y1))
    out = []
    for p in range(calib.num_panels):
        if p == calib.reference_panel:
            out.append(IDENTITY)
            continue
        c = calib.coefficients[p]
        out.append(tuple(c[n][0] + c[n][1] * ax + c[n][2] * ay for n in PARAM_NAMES))
    return out


def apply_affine(img: ViewImage, sx, sy, tx, ty, out_shape=None) -> ViewImage:
    """Scale about the image center, then translate; bilinear resampling.

    Output pixel (x, y) samples the input at
    ((x - cx' - tx) / sx + cx, (y - cy' - ty) / sy + cy). Out-of-bounds
    samples are zero and invalid. Identity parameters at unchanged size are
    a bit-exact copy. `out_shape` (h, w) sets the output resolution.
    """
    if sx <= 0 or sy <= 0:
        raise ValueError("scale factors must be positive")
    h, w = img.samples.shape[:2]
    oh, ow = out_shape if out_shape is not None else (h, w)
    if (sx, sy, tx, ty) == IDENTITY and (oh, ow) == (h, w):
        return img.copy()

    cy_in, cx_in = (h - 1) / 2.0, (w - 1) / 2.0
    cy_out, cx_out = (oh - 1) / 2.0, (ow - 1) / 2.0
    ys, xs = np.mgrid[0:oh, 0:ow].astype(np.float64)
    u = (xs - cx_out - tx) / sx + cx_in
    v = (ys - cy_out - ty) / sy + cy_in

    inb = (u >= 0) & (u <= w - 1) & (v >= 0) & (v <= h - 1)
    u0 = np.clip(np.floor(u), 0, w - 2).astype(np.int64)
    v0 = np.clip(np.floor(v), 0, h - 2).astype(np.int64)
    fu = np.clip(u - u0, 0.0, 1.0)
    fv = np.clip(v - v0, 0.0, 1.0)

    def sample(channel):
        p00 = channel[v0, u0]
        p01 = channel[v0, u0 + 1]
        p10 = channel[v0 + 1, u0]
        p11 = channel[v0 + 1, u0 + 1]
        top = p00 * (1 - fu) + p01 * fu
        bot = p10 * (1 - fu) + p11 * fu
        return top * (1 - fv) + bot * fv

    if img.samples.ndim == 3:
        out = np.stack([sample(img.samples[..., c].astype(np.float64))
                        for c in range(img.samples.shape[2])], axis=-1)
        out[~inb] = 0.0
    else:
        out = sample(img.samples.astype(np.float64))
        out[~inb] = 0.0
    mask_in = sample(img.mask.astype(np.float64)) >= 0.999
    return ViewImage(out.astype(np.float32), inb & mask_in)
