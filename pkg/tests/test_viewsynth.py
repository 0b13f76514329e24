import numpy as np
import pytest

from lfretarget.model import DepthMap, ViewImage
from lfretarget.panels import BlendMode, PanelLayout
from lfretarget.viewsynth import (ViewerPose, bilinear_weights,
                                  interpolate_view, simulate_display)


def make_views(v=3, h=12, w=12, seed=31):
    rng = np.random.default_rng(seed)
    views, depths = [], []
    for j in range(v):
        vr, dr = [], []
        for i in range(v):
            vr.append(ViewImage.full(rng.random((h, w)).astype(np.float32)))
            dr.append(DepthMap(rng.random((h, w)).astype(np.float32),
                               np.ones((h, w), bool)))
        views.append(vr)
        depths.append(dr)
    return views, depths


def node_pose(i, j, n):
    return ViewerPose(i / (n - 1) - 0.5, j / (n - 1) - 0.5)


def test_nodes_are_bit_exact():
    views, depths = make_views(3)
    for j in range(3):
        for i in range(3):
            v, d = interpolate_view(views, depths, node_pose(i, j, 3))
            assert np.array_equal(v.samples, views[j][i].samples)
            assert np.array_equal(d.depths, depths[j][i].depths)


def test_cell_center_weights():
    # pose midway between 4 nodes: all weights 0.25
    p = ViewerPose(-0.25, -0.25)
    assert bilinear_weights(p, 3, 3) == pytest.approx((0.25, 0.25, 0.25, 0.25))


def test_edge_midpoint_weights():
    p = ViewerPose(-0.25, -0.5)      # halfway along the top edge of a cell
    assert bilinear_weights(p, 3, 3) == pytest.approx((0.5, 0.5, 0.0, 0.0))


def test_weights_sum_to_one_random():
    rng = np.random.default_rng(32)
    for _ in range(200):
        p = ViewerPose(rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6))
        w = bilinear_weights(p, 5, 5)
        assert sum(w) == pytest.approx(1.0, abs=1e-12)
        assert all(x >= 0 for x in w)


def test_interpolation_is_linear_along_edge():
    views, depths = make_views(3)
    a, _ = interpolate_view(views, depths, ViewerPose(-0.5, -0.5))
    b, _ = interpolate_view(views, depths, ViewerPose(0.0, -0.5))
    mid, _ = interpolate_view(views, depths, ViewerPose(-0.25, -0.5))
    assert np.allclose(mid.samples, 0.5 * (a.samples + b.samples), atol=1e-6)


def test_pose_clamping():
    p, was = ViewerPose(0.7, -0.9).clamped()
    assert (p.ang_x, p.ang_y) == (0.5, -0.5)
    assert was
    p, was = ViewerPose(0.2, 0.0).clamped()
    assert not was


def test_out_of_range_pose_equals_edge_view():
    views, depths = make_views(3)
    v_out, _ = interpolate_view(views, depths, ViewerPose(2.0, 2.0))
    assert np.array_equal(v_out.samples, views[2][2].samples)


def test_simulate_display_conservation():
    views, depths = make_views(3)
    layout = PanelLayout((0.1, 0.5, 0.9), (0.3, 0.7))
    pose = ViewerPose(0.13, -0.27)
    ref, _ = interpolate_view(views, depths, pose)
    for mode in BlendMode:
        comp, stack, clamped = simulate_display(views, depths, layout, pose,
                                                mode=mode)
        assert not clamped
        assert len(stack.panels) == 3
        assert np.max(np.abs(comp.samples - ref.samples)) < 1e-5


def test_simulate_display_clamped_flag_and_falsecolor():
    views, depths = make_views(3)
    layout = PanelLayout((0.1, 0.5, 0.9), (0.3, 0.7))
    comp, stack, clamped = simulate_display(views, depths, layout,
                                            ViewerPose(1.0, 0.0),
                                            falsecolor=True)
    assert clamped
    assert comp.samples.shape == (12, 12, 3)
    # false color preserves energy per channel: sum of channels = composite
    assert np.allclose(comp.samples.sum(axis=2), stack.composite(), atol=1e-5)
