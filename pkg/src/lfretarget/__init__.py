"""Light-field retargeting toolkit for simulated multi-panel depth displays."""

from .calib import (PanelCalibration, apply_affine, calibration_at,
                    fit_calibration, identity_calibration)
from .depth import DepthConversionParams, disparity_to_depth, fit_conversion
from .disparity import (DisparityConfig, SupportThresholds, estimate_all_views,
                        propagate_disparity, select_crosshair_pairs,
                        select_reference_views)
from .model import (AngularCoord, DepthMap, DisparityField, DisparityMap,
                    LightFieldError, LightFieldGrid, ViewImage,
                    load_depth, load_disparity, load_light_field, save_depth,
                    save_disparity, save_light_field)
from .panels import (BlendMode, PanelLayout, PanelStack, blend_to_panels,
                     equal_count_thresholds, kmeans_thresholds, otsu_thresholds)
from .pipeline import PipelineConfig, RenderState, run_pipeline
from .retarget import (BoostConfig, SliceStack, boost_and_merge, boost_shifts,
                       fill_holes, fine_slice, retarget_view)
from .viewsynth import ViewerPose, interpolate_view, simulate_display

__version__ = "0.1.0"
