"""Quantize depth onto 3 display panels and compare the blend modes.

Places panel planes with multi-level Otsu on the reference view's depth
histogram, then blends a view onto the panels with each mode and writes a
false-color image (front panel red, middle green, back blue) per mode.
"""

from pathlib import Path

import numpy as np

from lfretarget import model
from lfretarget.model import DepthMap, ViewImage
from lfretarget.panels import BlendMode, blend_to_panels, otsu_thresholds
from lfretarget.synthetic import smooth_noise_texture

OUT = Path(__file__).parent / "out" / "panels"


def make_scene(h=128, w=128):
    """Textured view over a ground plane receding in depth, plus two boxes."""
    rng = np.random.default_rng(5)
    img = smooth_noise_texture(h, w, rng)
    depth = np.tile(np.linspace(0.55, 1.0, h)[:, None], (1, w)).astype(np.float32)
    depth[20:60, 15:60] = 0.15          # near box
    depth[50:95, 70:115] = 0.45         # middle box
    mask = np.ones((h, w), dtype=bool)
    return ViewImage(img, mask), DepthMap(depth, mask.copy())


def main():
    view, depth = make_scene()
    layout = otsu_thresholds(depth, 3)
    print("panel depths:", [round(d, 3) for d in layout.panel_depths])
    print("thresholds:  ", [round(t, 3) for t in layout.thresholds])

    OUT.mkdir(parents=True, exist_ok=True)
    for mode in BlendMode:
        stack = blend_to_panels(view, depth, layout, mode)
        model.save_view_image(ViewImage.full(stack.falsecolor()),
                              OUT / f"falsecolor_{mode.value}.png")
        for p, panel in enumerate(stack.panels):
            model.save_view_image(panel, OUT / f"{mode.value}_p{p}.png")
        print(f"{mode.value:>4}: wrote 3 panel images + false color")
    print(f"outputs in {OUT}")


if __name__ == "__main__":
    main()
