"""End-to-end orchestration: batch pipeline stages and the render state
shared by the CLI and the view service.

Every stage writes its artifacts to disk (disparity PFMs, depth PFMs,
synthesized views, panel layout), so later stages and ablations can resume
from any stage without recomputing earlier ones.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import depth as depth_mod
from . import model
from .calib import PanelCalibration, identity_calibration
from .disparity import DisparityConfig, estimate_all_views
from .model import AngularCoord, DisparityField, LightFieldGrid
from .panels import QUANTIZERS, BlendMode, PanelLayout, blend_to_panels
from .retarget import BoostConfig, retarget_grid
from .viewsynth import ViewerPose, simulate_display


@dataclass
class PipelineConfig:
    input_dir: str
    output_dir: str
    disparity: DisparityConfig = field(default_factory=DisparityConfig)
    min_z: float = 1.0
    max_z: float = 10.0
    num_slices: int = 100
    scale: float = 100.0
    ref_view: tuple | None = None        # (row, col); None = center
    ref_depth: float = 0.5
    num_panels: int = 3
    blend: BlendMode = BlendMode.ALL_PANEL
    quantizer: str = "otsu"
    calibration_path: str | None = None
    threads: int = 1
    port: int = 8377

    @classmethod
    def from_json(cls, path):
        with open(path) as f:
            raw = json.load(f)
        disp = DisparityConfig(**raw.pop("disparity", {}))
        if "blend" in raw:
            raw["blend"] = BlendMode(raw["blend"])
        if "ref_view" in raw and raw["ref_view"] is not None:
            raw["ref_view"] = tuple(raw["ref_view"])
        return cls(disparity=disp, **raw)

    def validate(self, grid: LightFieldGrid):
        if self.num_panels > self.num_slices:
            raise ValueError(
                f"num_panels ({self.num_panels}) must not exceed num_slices "
                f"({self.num_slices})")
        if self.num_panels < 2:
            raise ValueError("num_panels must be >= 2")
        if self.quantizer not in QUANTIZERS:
            raise ValueError(f"unknown quantizer {self.quantizer!r}")
        row, col = self.ref_view_indices(grid)
        if not (0 <= row < grid.v_y and 0 <= col < grid.v_x):
            raise ValueError(f"reference view ({row},{col}) outside the grid")

    def ref_view_indices(self, grid: LightFieldGrid):
        if self.ref_view is None:
            return grid.v_y // 2, grid.v_x // 2
        return int(self.ref_view[0]), int(self.ref_view[1])

    def boost_config(self, grid: LightFieldGrid) -> BoostConfig:
        row, col = self.ref_view_indices(grid)
        return BoostConfig(num_slices=self.num_slices, scale=self.scale,
                           ref_view=grid.coord(row, col), ref_depth=self.ref_depth)


class PipelineLock:
    """Guards an output directory against concurrent batch/serve runs."""

    def __init__(self, directory):
        self.path = Path(directory) / ".lfretarget.lock"

    def __enter__(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise RuntimeError(
                f"output directory is locked by another run: {self.path}") from None
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        return self

    def __exit__(self, *exc):
        self.path.unlink(missing_ok=True)


def _view_name(j, i, ext):
    return f"view_{j:02d}_{i:02d}.{ext}"


def _load_map_grid(directory, loader):
    directory = Path(directory)
    manifest = json.loads((directory / "grid.json").read_text())
    return [[loader(directory / _view_name(j, i, "pfm"))
             for i in range(manifest["V_x"])] for j in range(manifest["V_y"])], manifest


def _save_map_grid(maps, directory, saver, extra=None):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    v_y, v_x = len(maps), len(maps[0])
    for j in range(v_y):
        for i in range(v_x):
            saver(maps[j][i], directory / _view_name(j, i, "pfm"))
    manifest = {"V_x": v_x, "V_y": v_y}
    if extra:
        manifest.update(extra)
    (directory / "grid.json").write_text(json.dumps(manifest, indent=2))


# ---------------------------------------------------------------------------
# Stages


def stage_disparity(grid, cfg: PipelineConfig, out_dir):
    disp_cfg = cfg.disparity
    disp_cfg.threads = cfg.threads
    fld, stats = estimate_all_views(grid, disp_cfg)
    disp_dir = Path(out_dir) / "disparity"
    _save_map_grid(fld.maps, disp_dir, model.save_disparity)
    summary = {
        "runtime_s": stats["runtime_s"],
        "n_references": stats["n_references"],
        "n_propagated": stats["n_propagated"],
        "percent_invalid_prefill": 100.0 * stats["invalid_fraction_prefill"],
        "percent_invalid_per_view": stats["percent_invalid_per_view"],
    }
    (disp_dir / "summary.json").write_text(json.dumps(summary, indent=2))
    return fld


def stage_depth(fld: DisparityField, cfg: PipelineConfig, out_dir):
    depths, params = depth_mod.convert_field(fld, cfg.min_z, cfg.max_z)
    ddir = Path(out_dir) / "depth"
    _save_map_grid(depths, ddir, model.save_depth,
                   extra={"d0": params.d0, "bf": params.bf})
    return depths


def stage_retarget(grid, depths, cfg: PipelineConfig, out_dir):
    boost = cfg.boost_config(grid)
    views, sdepths = retarget_grid(grid, depths, boost)
    rdir = Path(out_dir) / "retargeted"
    rdir.mkdir(parents=True, exist_ok=True)
    for j in range(grid.v_y):
        for i in range(grid.v_x):
            model.save_view_image(views[j][i], rdir / _view_name(j, i, "png"))
    manifest = {"V_x": grid.v_x, "V_y": grid.v_y, "width": grid.width,
                "height": grid.height, "channels": grid.channels}
    (rdir / "grid.json").write_text(json.dumps(manifest, indent=2))
    _save_map_grid(sdepths, Path(out_dir) / "retargeted_depth", model.save_depth)
    return views, sdepths


def stage_layout(sdepths, grid, cfg: PipelineConfig, out_dir):
    row, col = cfg.ref_view_indices(grid)
    layout = QUANTIZERS[cfg.quantizer](sdepths[row][col], cfg.num_panels)
    payload = layout.to_dict()
    payload["quantizer"] = cfg.quantizer
    payload["blend"] = cfg.blend.value
    (Path(out_dir) / "layout.json").write_text(json.dumps(payload, indent=2))
    return layout


def stage_panels(views, sdepths, layout, cfg: PipelineConfig, out_dir):
    pdir = Path(out_dir) / "panels"
    pdir.mkdir(parents=True, exist_ok=True)
    v_y, v_x = len(views), len(views[0])
    for j in range(v_y):
        for i in range(v_x):
            stack = blend_to_panels(views[j][i], sdepths[j][i], layout, cfg.blend)
            for p, panel in enumerate(stack.panels):
                model.save_view_image(panel, pdir / f"view_{j:02d}_{i:02d}_p{p}.png")


def run_pipeline(cfg: PipelineConfig):
    """Execute all batch stages; returns the per-stage timing report."""
    grid = model.load_light_field(cfg.input_dir)
    cfg.validate(grid)
    out = Path(cfg.output_dir)
    timings = {}
    with PipelineLock(out):
        t = time.perf_counter()
        fld = stage_disparity(grid, cfg, out)
        timings["disparity_s"] = time.perf_counter() - t

        t = time.perf_counter()
        depths = stage_depth(fld, cfg, out)
        timings["depth_s"] = time.perf_counter() - t

        t = time.perf_counter()
        views, sdepths = stage_retarget(grid, depths, cfg, out)
        timings["retarget_s"] = time.perf_counter() - t

        t = time.perf_counter()
        layout = stage_layout(sdepths, grid, cfg, out)
        stage_panels(views, sdepths, layout, cfg, out)
        timings["panelize_s"] = time.perf_counter() - t

        (out / "timings.json").write_text(json.dumps(timings, indent=2))
    return timings


# ---------------------------------------------------------------------------
# Render state (interactive path, shared by `render-view` and the service)


class RenderState:
    """Synthesized views + layout + calibration loaded once, rendered per pose."""

    def __init__(self, views, depths, layout: PanelLayout,
                 calibration: PanelCalibration | None = None,
                 blend: BlendMode = BlendMode.ALL_PANEL):
        self.views = views
        self.depths = depths
        self.layout = layout
        self.calibration = calibration
        self.blend = blend

    @classmethod
    def load(cls, artifact_dir, calibration_path=None, blend=None):
        artifact_dir = Path(artifact_dir)
        views_grid = model.load_light_field(artifact_dir / "retargeted")
        depths, _ = _load_map_grid(artifact_dir / "retargeted_depth", model.load_depth)
        payload = json.loads((artifact_dir / "layout.json").read_text())
        layout = PanelLayout.from_dict(payload)
        if blend is None:
            blend = BlendMode(payload.get("blend", "all"))
        calib = PanelCalibration.load(calibration_path) if calibration_path else None
        return cls(views_grid.views, depths, layout, calib, blend)

    @property
    def grid_shape(self):
        return len(self.views), len(self.views[0])

    def render(self, ang_x, ang_y, mode="composite"):
        """Render one pose; returns (image array float [0,1], clamped flag)."""
        pose = ViewerPose(ang_x, ang_y)
        calib = self.calibration
        if mode == "falsecolor":
            comp, _, clamped = simulate_display(self.views, self.depths, self.layout,
                                                pose, self.blend, calib, falsecolor=True)
            return comp.samples, clamped
        comp, stack, clamped = simulate_display(self.views, self.depths, self.layout,
                                                pose, self.blend, calib)
        if mode == "composite":
            return comp.samples, clamped
        if mode == "panels":
            import numpy as np
            return np.concatenate([p.samples for p in stack.panels], axis=1), clamped
        raise ValueError(f"unknown render mode {mode!r}")

    def render_png(self, ang_x, ang_y, mode="composite"):
        """Render one pose to PNG bytes (deterministic encoding)."""
        import io

        from PIL import Image
        arr, clamped = self.render(ang_x, ang_y, mode)
        buf = io.BytesIO()
        Image.fromarray(model.unit_to_image(arr)).save(buf, format="PNG")
        return buf.getvalue(), clamped
