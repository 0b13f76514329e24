"""Command-line interface: stage subcommands, full pipeline, and the view
service."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import depth as depth_mod
from . import model
from .calib import (CalibrationSample, PanelCalibration, apply_affine,
                    calibration_at, fit_calibration)
from .disparity import DisparityConfig, estimate_all_views
from .model import DisparityField
from .panels import QUANTIZERS, BlendMode, blend_to_panels
from .pipeline import (PipelineConfig, RenderState, _load_map_grid,
                       _save_map_grid, run_pipeline, stage_layout)
from .retarget import retarget_grid
from .service import ViewService

log = logging.getLogger("lfretarget")


def _add_common(p):
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--verbose", action="store_true")


def _disparity_config(args) -> DisparityConfig:
    if args.config:
        with open(args.config) as f:
            cfg = DisparityConfig(**json.load(f).get("disparity", {}))
    else:
        cfg = DisparityConfig()
    if getattr(args, "max_d", None) is not None:
        cfg.max_d = args.max_d
    if getattr(args, "mu", None) is not None:
        cfg.mu = args.mu
    if getattr(args, "refs", None) is not None:
        cfg.num_refs = args.refs
    cfg.threads = args.threads
    return cfg


def cmd_estimate_disparity(args):
    grid = model.load_light_field(args.input)
    cfg = _disparity_config(args)
    fld, stats = estimate_all_views(grid, cfg)
    out = Path(args.output)
    _save_map_grid(fld.maps, out, model.save_disparity)
    summary = {"runtime_s": stats["runtime_s"],
               "n_references": stats["n_references"],
               "percent_invalid_prefill": 100.0 * stats["invalid_fraction_prefill"],
               "percent_invalid_per_view": stats["percent_invalid_per_view"]}
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    print(f"estimated {grid.v_y * grid.v_x} views in {stats['runtime_s']:.2f}s")


def cmd_disparity_to_depth(args):
    maps, _ = _load_map_grid(args.input, model.load_disparity)
    fld = DisparityField(maps)
    depths, params = depth_mod.convert_field(fld, args.min_z, args.max_z)
    _save_map_grid(depths, args.output, model.save_depth,
                   extra={"d0": params.d0, "bf": params.bf})
    print(f"converted with d0={params.d0:.4f} bf={params.bf:.4f}")


def cmd_retarget(args):
    grid = model.load_light_field(args.input)
    depths, _ = _load_map_grid(args.depth, model.load_depth)
    cfg = PipelineConfig(input_dir=args.input, output_dir=args.output,
                         num_slices=args.slices, scale=args.scale,
                         ref_depth=args.ref_d,
                         ref_view=tuple(int(t) for t in args.ref_view.split(","))
                         if args.ref_view else None)
    boost = cfg.boost_config(grid)
    views, sdepths = retarget_grid(grid, depths, boost)
    out = Path(args.output)
    (out / "retargeted").mkdir(parents=True, exist_ok=True)
    for j in range(grid.v_y):
        for i in range(grid.v_x):
            model.save_view_image(views[j][i],
                                  out / "retargeted" / f"view_{j:02d}_{i:02d}.png")
    manifest = {"V_x": grid.v_x, "V_y": grid.v_y, "width": grid.width,
                "height": grid.height, "channels": grid.channels}
    (out / "retargeted" / "grid.json").write_text(json.dumps(manifest, indent=2))
    _save_map_grid(sdepths, out / "retargeted_depth", model.save_depth)
    print(f"retargeted {grid.v_y * grid.v_x} views (scale={args.scale})")


def cmd_panelize(args):
    views_grid = model.load_light_field(Path(args.input) / "retargeted")
    depths, _ = _load_map_grid(Path(args.input) / "retargeted_depth", model.load_depth)
    cfg = PipelineConfig(input_dir=args.input, output_dir=args.input,
                         num_panels=args.panels, blend=BlendMode(args.blend),
                         quantizer=args.quantizer)
    layout = stage_layout(depths, views_grid, cfg, args.input)
    pdir = Path(args.input) / "panels"
    pdir.mkdir(parents=True, exist_ok=True)
    for j in range(views_grid.v_y):
        for i in range(views_grid.v_x):
            stack = blend_to_panels(views_grid.view(j, i), depths[j][i],
                                    layout, cfg.blend)
            for p, panel in enumerate(stack.panels):
                model.save_view_image(panel, pdir / f"view_{j:02d}_{i:02d}_p{p}.png")
            if args.falsecolor:
                fc = stack.falsecolor()
                model.save_view_image(model.ViewImage.full(fc),
                                      pdir / f"view_{j:02d}_{i:02d}_falsecolor.png")
    print(f"panelized onto {args.panels} panels ({args.blend} blending)")


def cmd_render_view(args):
    state = RenderState.load(args.artifacts, calibration_path=args.calib,
                             blend=BlendMode(args.blend) if args.blend else None)
    mode = "falsecolor" if args.falsecolor else args.mode
    png, clamped = state.render_png(args.ang_x, args.ang_y, mode)
    Path(args.out).write_bytes(png)
    if clamped:
        print("pose clamped to [-0.5, 0.5]", file=sys.stderr)
    print(f"wrote {args.out}")


def cmd_fit_calib(args):
    with open(args.samples) as f:
        raw = json.load(f)
    samples = [[CalibrationSample(*s) for s in panel] for panel in raw["panels"]]
    calib = fit_calibration(samples, reference_panel=raw.get("referencePanel", 0),
                            fov_bounds=tuple(raw.get("fovBounds", (-0.5, 0.5, -0.5, 0.5))),
                            display_size=tuple(raw["displaySize"]) if raw.get("displaySize") else None)
    calib.save(args.out)
    print(f"wrote {args.out}")


def cmd_apply_calib(args):
    calib = PanelCalibration.load(args.calib)
    img = model.load_view_image(args.input)
    params = calibration_at(calib, (args.ang_x, args.ang_y))
    out = apply_affine(img, *params[args.panel])
    model.save_view_image(out, args.out)
    print(f"wrote {args.out}")


def cmd_run(args):
    if args.config:
        cfg = PipelineConfig.from_json(args.config)
        if args.input:
            cfg.input_dir = args.input
        if args.output:
            cfg.output_dir = args.output
    else:
        cfg = PipelineConfig(input_dir=args.input, output_dir=args.output)
    cfg.threads = args.threads
    timings = run_pipeline(cfg)
    print(json.dumps(timings, indent=2))


def cmd_serve(args):
    state = RenderState.load(args.artifacts, calibration_path=args.calib,
                             blend=BlendMode(args.blend) if args.blend else None)
    service = ViewService(state, port=args.port)
    print(f"serving on http://127.0.0.1:{service.port}")
    try:
        service.serve_forever()
    except KeyboardInterrupt:
        pass


def build_parser():
    ap = argparse.ArgumentParser(prog="lfretarget",
                                 description="Light-field retargeting for multi-panel displays")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate-disparity", help="multi-view disparity estimation")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--max-d", dest="max_d", type=int)
    p.add_argument("--mu", type=int)
    p.add_argument("--refs", type=int)
    _add_common(p)
    p.set_defaults(func=cmd_estimate_disparity)

    p = sub.add_parser("disparity-to-depth", help="convert disparity PFMs to depth")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--min-z", dest="min_z", type=float, default=1.0)
    p.add_argument("--max-z", dest="max_z", type=float, default=10.0)
    _add_common(p)
    p.set_defaults(func=cmd_disparity_to_depth)

    p = sub.add_parser("retarget", help="fine slice, boost parallax, merge, fill")
    p.add_argument("--input", required=True, help="view grid directory")
    p.add_argument("--depth", required=True, help="depth PFM directory")
    p.add_argument("--output", required=True)
    p.add_argument("--scale", type=float, default=100.0)
    p.add_argument("--slices", type=int, default=100)
    p.add_argument("--ref-d", dest="ref_d", type=float, default=0.5)
    p.add_argument("--ref-view", dest="ref_view", help='"row,col"')
    _add_common(p)
    p.set_defaults(func=cmd_retarget)

    p = sub.add_parser("panelize", help="non-uniform panel slicing + blending")
    p.add_argument("--input", required=True, help="pipeline artifact directory")
    p.add_argument("--panels", type=int, default=3)
    p.add_argument("--blend", choices=["none", "two", "all"], default="all")
    p.add_argument("--quantizer", choices=sorted(QUANTIZERS), default="otsu")
    p.add_argument("--falsecolor", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_panelize)

    p = sub.add_parser("render-view", help="render one viewer pose to PNG")
    p.add_argument("--artifacts", required=True)
    p.add_argument("--ang-x", dest="ang_x", type=float, required=True)
    p.add_argument("--ang-y", dest="ang_y", type=float, required=True)
    p.add_argument("--blend", choices=["none", "two", "all"])
    p.add_argument("--mode", choices=["composite", "falsecolor", "panels"],
                   default="composite")
    p.add_argument("--falsecolor", action="store_true")
    p.add_argument("--calib")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_render_view)

    p = sub.add_parser("fit-calib", help="fit linear calibration polynomials")
    p.add_argument("--samples", required=True)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_fit_calib)

    p = sub.add_parser("apply-calib", help="apply a panel's affine at a pose")
    p.add_argument("--calib", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--panel", type=int, required=True)
    p.add_argument("--ang-x", dest="ang_x", type=float, default=0.0)
    p.add_argument("--ang-y", dest="ang_y", type=float, default=0.0)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_apply_calib)

    p = sub.add_parser("run", help="full pipeline")
    p.add_argument("--input")
    p.add_argument("--output")
    _add_common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("serve", help="interactive view service")
    p.add_argument("--artifacts", required=True)
    p.add_argument("--calib")
    p.add_argument("--blend", choices=["none", "two", "all"])
    p.add_argument("--port", type=int, default=8377)
    _add_common(p)
    p.set_defaults(func=cmd_serve)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (ValueError, RuntimeError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
