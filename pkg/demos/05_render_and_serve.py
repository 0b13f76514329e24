"""Run the whole pipeline and render poses like the interactive service does.

Saves a synthetic light field to disk, runs every batch stage (disparity,
depth, retarget, layout, panels), reloads the artifacts into a render state
and pulls a few composite frames at continuous viewer poses - exactly what
`lfretarget serve` does per HTTP request.
"""

import time
from pathlib import Path

from lfretarget import model
from lfretarget.disparity import DisparityConfig
from lfretarget.pipeline import PipelineConfig, RenderState, run_pipeline
from lfretarget.synthetic import demo_light_field

OUT = Path(__file__).parent / "out" / "pipeline"


def main():
    lf_dir = OUT / "input"
    grid, _ = demo_light_field(v_y=3, v_x=3, height=96, width=96)
    model.save_light_field(grid, lf_dir)

    art = OUT / "artifacts"
    if (art / ".lfretarget.lock").exists():
        (art / ".lfretarget.lock").unlink()
    timings = run_pipeline(PipelineConfig(
        input_dir=str(lf_dir), output_dir=str(art),
        disparity=DisparityConfig(max_d=8, ref_spacing=2), scale=80.0))
    for stage, secs in timings.items():
        print(f"{stage:<12} {secs:.2f}s")

    state = RenderState.load(art)
    for pose in [(0.0, 0.0), (-0.5, -0.5), (0.37, 0.12), (2.0, 0.0)]:
        t = time.perf_counter()
        png, clamped = state.render_png(*pose)
        ms = 1000 * (time.perf_counter() - t)
        name = f"pose_{pose[0]:+.2f}_{pose[1]:+.2f}.png"
        (OUT / name).write_bytes(png)
        print(f"{name}: {len(png)} bytes in {ms:.1f} ms"
              + (" (pose clamped)" if clamped else ""))
    print(f"serve the same artifacts with: "
          f"lfretarget serve --artifacts {art} --port 8377")


if __name__ == "__main__":
    main()
