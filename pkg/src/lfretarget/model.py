"""Core data model: view grids, disparity/depth maps, and their on-disk formats.

Intensities are stored as floats in [0, 1]; 8-bit image files are divided by
255 on ingest. Validity is an explicit boolean mask so genuinely dark pixels
are distinguishable from holes. All containers are treated as immutable after
construction and are safe to share across workers.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image


class LightFieldError(ValueError):
    """Structured error for malformed or inconsistent light-field data."""

    def __init__(self, message, *, row=None, col=None, path=None):
        super().__init__(message)
        self.row = row
        self.col = col
        self.path = str(path) if path is not None else None


VIEW_FILE_PATTERN = "view_{row:02d}_{col:02d}.png"
_VIEW_FILE_RE = re.compile(r"view_(\d{2})_(\d{2})\.png$")


@dataclass(frozen=True)
class AngularCoord:
    """Grid position of a view plus its normalized angular coordinates.

    i is the column index, j the row index (both 0-based). ang_x/ang_y are
    dimensionless angles in [-0.5, 0.5], uniformly spaced over the grid.
    """

    i: int
    j: int
    ang_x: float
    ang_y: float

    @classmethod
    def from_indices(cls, i, j, v_x, v_y):
        if not (0 <= i < v_x and 0 <= j < v_y):
            raise LightFieldError(f"view index ({j},{i}) outside {v_y}x{v_x} grid",
                                  row=j, col=i)
        return cls(i=i, j=j,
                   ang_x=i / (v_x - 1) - 0.5 if v_x > 1 else 0.0,
                   ang_y=j / (v_y - 1) - 0.5 if v_y > 1 else 0.0)


@dataclass
class ViewImage:
    """One view: float samples in [0,1] plus a validity mask (False = hole)."""

    samples: np.ndarray          # (H, W) or (H, W, 3) float32
    mask: np.ndarray             # (H, W) bool

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float32)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.shape != self.samples.shape[:2]:
            raise LightFieldError("mask shape does not match samples")

    @classmethod
    def full(cls, samples):
        samples = np.asarray(samples, dtype=np.float32)
        return cls(samples, np.ones(samples.shape[:2], dtype=bool))

    @property
    def height(self):
        return self.samples.shape[0]

    @property
    def width(self):
        return self.samples.shape[1]

    @property
    def channels(self):
        return 1 if self.samples.ndim == 2 else self.samples.shape[2]

    def to_gray(self) -> np.ndarray:
        """Luminance as a (H, W) float32 array."""
        if self.samples.ndim == 2:
            return self.samples
        return self.samples.mean(axis=2).astype(np.float32)

    def copy(self) -> "ViewImage":
        return ViewImage(self.samples.copy(), self.mask.copy())


@dataclass
class LightFieldGrid:
    """Rectangular V_y x V_x grid of views with their angular coordinates."""

    views: list          # views[j][i] -> ViewImage
    coords: list         # coords[j][i] -> AngularCoord

    def __post_init__(self):
        if self.v_y < 2 or self.v_x < 2:
            raise LightFieldError("grid needs at least 2x2 views")
        h, w, c = self.height, self.width, self.channels
        for row in self.views:
            for v in row:
                if (v.height, v.width, v.channels) != (h, w, c):
                    raise LightFieldError("views have inconsistent dimensions")

    @property
    def v_y(self):
        return len(self.views)

    @property
    def v_x(self):
        return len(self.views[0])

    @property
    def height(self):
        return self.views[0][0].height

    @property
    def width(self):
        return self.views[0][0].width

    @property
    def channels(self):
        return self.views[0][0].channels

    def view(self, row, col) -> ViewImage:
        return self.views[row][col]

    def coord(self, row, col) -> AngularCoord:
        return self.coords[row][col]

    def all_coords(self):
        for row in self.coords:
            yield from row

    @classmethod
    def from_views(cls, views):
        v_y = len(views)
        v_x = len(views[0])
        coords = [[AngularCoord.from_indices(i, j, v_x, v_y) for i in range(v_x)]
                  for j in range(v_y)]
        return cls(views=views, coords=coords)


@dataclass
class DisparityMap:
    """Per-pixel disparity in pixels of shift per unit angular view step."""

    disparities: np.ndarray      # (H, W) float32
    mask: np.ndarray             # (H, W) bool

    def __post_init__(self):
        self.disparities = np.asarray(self.disparities, dtype=np.float32)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.shape != self.disparities.shape:
            raise LightFieldError("mask shape does not match disparities")

    @property
    def height(self):
        return self.disparities.shape[0]

    @property
    def width(self):
        return self.disparities.shape[1]


@dataclass
class DepthMap:
    """Normalized depth: 0 = nearest, 1 = farthest."""

    depths: np.ndarray           # (H, W) float32
    mask: np.ndarray             # (H, W) bool

    def __post_init__(self):
        self.depths = np.asarray(self.depths, dtype=np.float32)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.shape != self.depths.shape:
            raise LightFieldError("mask shape does not match depths")

    @property
    def height(self):
        return self.depths.shape[0]

    @property
    def width(self):
        return self.depths.shape[1]


@dataclass
class DisparityField:
    """Disparity maps for every view of a grid, aligned with its coordinates."""

    maps: list                   # maps[j][i] -> DisparityMap

    @property
    def v_y(self):
        return len(self.maps)

    @property
    def v_x(self):
        return len(self.maps[0])

    def map(self, row, col) -> DisparityMap:
        return self.maps[row][col]

    def global_extremes(self):
        """(min, max) disparity over all valid pixels of all views."""
        lo, hi = np.inf, -np.inf
        for row in self.maps:
            for m in row:
                if m.mask.any():
                    v = m.disparities[m.mask]
                    lo = min(lo, float(v.min()))
                    hi = max(hi, float(v.max()))
        if not np.isfinite(lo):
            raise LightFieldError("disparity field has no valid pixels")
        return lo, hi


# ---------------------------------------------------------------------------
# Image file helpers


def image_to_unit(arr8: np.ndarray) -> np.ndarray:
    return (arr8.astype(np.float32) / 255.0)


def unit_to_image(arr: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8)


def load_view_image(path) -> ViewImage:
    with Image.open(path) as im:
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB" if len(im.getbands()) >= 3 else "L")
        arr = np.asarray(im)
    return ViewImage.full(image_to_unit(arr))


def save_view_image(view: ViewImage, path):
    Image.fromarray(unit_to_image(view.samples)).save(path)


# ---------------------------------------------------------------------------
# View grid directory format


def load_light_field(directory, layout=None) -> LightFieldGrid:
    """Load a view grid from a directory of view_RR_CC.png files.

    `layout` may carry the manifest dict (grid.json contents); if omitted the
    manifest file is read, and failing that the shape is inferred from the
    file names present.
    """
    directory = Path(directory)
    if layout is None:
        manifest = directory / "grid.json"
        if manifest.exists():
            layout = json.loads(manifest.read_text())
    if layout is None:
        rows = cols = -1
        for p in directory.iterdir():
            m = _VIEW_FILE_RE.search(p.name)
            if m:
                rows = max(rows, int(m.group(1)))
                cols = max(cols, int(m.group(2)))
        if rows < 0:
            raise LightFieldError(f"no view files found in {directory}",
                                  path=directory)
        layout = {"V_y": rows + 1, "V_x": cols + 1}

    v_y, v_x = int(layout["V_y"]), int(layout["V_x"])
    views = []
    for j in range(v_y):
        row = []
        for i in range(v_x):
            path = directory / VIEW_FILE_PATTERN.format(row=j, col=i)
            if not path.exists():
                raise LightFieldError(f"missing view file for (row={j}, col={i}): {path.name}",
                                      row=j, col=i, path=path)
            row.append(load_view_image(path))
        views.append(row)

    h, w, c = views[0][0].height, views[0][0].width, views[0][0].channels
    for j in range(v_y):
        for i in range(v_x):
            v = views[j][i]
            if (v.height, v.width, v.channels) != (h, w, c):
                name = VIEW_FILE_PATTERN.format(row=j, col=i)
                raise LightFieldError(
                    f"view {name} has shape {v.height}x{v.width}x{v.channels}, "
                    f"expected {h}x{w}x{c}", row=j, col=i, path=directory / name)
    return LightFieldGrid.from_views(views)


def save_light_field(grid: LightFieldGrid, directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for j in range(grid.v_y):
        for i in range(grid.v_x):
            save_view_image(grid.view(j, i),
                            directory / VIEW_FILE_PATTERN.format(row=j, col=i))
    manifest = {"V_x": grid.v_x, "V_y": grid.v_y, "width": grid.width,
                "height": grid.height, "channels": grid.channels}
    (directory / "grid.json").write_text(json.dumps(manifest, indent=2))


# ---------------------------------------------------------------------------
# PFM format for disparity / depth maps
#
# ASCII header: "Pf", "W H", scale (sign gives endianness), then rows of
# 32-bit floats bottom-to-top. Invalid pixels are stored as NaN and the mask
# is reconstructed on load.


def _write_pfm(data: np.ndarray, mask: np.ndarray, path):
    data = np.where(mask, data.astype(np.float32), np.float32(np.nan))
    h, w = data.shape
    with open(path, "wb") as f:
        f.write(b"Pf\n")
        f.write(f"{w} {h}\n".encode("ascii"))
        f.write(b"-1.0\n")                      # little endian
        f.write(data[::-1].astype("<f4").tobytes())


def _read_pfm(path):
    with open(path, "rb") as f:
        if f.readline().strip() != b"Pf":
            raise LightFieldError(f"not a grayscale PFM file: {path}", path=path)
        w, h = (int(t) for t in f.readline().split())
        scale = float(f.readline())
        dtype = "<f4" if scale < 0 else ">f4"
        data = np.frombuffer(f.read(4 * w * h), dtype=dtype).reshape(h, w)
    data = data[::-1].astype(np.float32)
    mask = ~np.isnan(data)
    return np.where(mask, data, 0.0).astype(np.float32), mask


def save_disparity(disp: DisparityMap, path):
    _write_pfm(disp.disparities, disp.mask, path)


def load_disparity(path) -> DisparityMap:
    data, mask = _read_pfm(path)
    return DisparityMap(data, mask)


def save_depth(depth: DepthMap, path):
    _write_pfm(depth.depths, depth.mask, path)


def load_depth(path) -> DepthMap:
    data, mask = _read_pfm(path)
    return DepthMap(data, mask)
