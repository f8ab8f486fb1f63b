"""Relightable object models from single masked image fragments.

The pipeline splits a fragment into albedo, a contour-derived coarse
shape, and two shading detail layers; the result can be reshaded under
new point-light or spherical-harmonic illumination, composited into
scenes, and scored with a scale-invariant re-rendering error.
"""

from .build import BuildConfig, build_model
from .images import LinearImage, Mask, load_image, load_mask, load_pfm, save_pfm, save_png
from .lights import SH9, PointLightMix, shade_points, shade_sh
from .model import (
    ObjectModel,
    WeightVector,
    compose_detail,
    final_composite,
    load_model,
    oracle_weights,
    regress_weights,
    reshade,
    save_model,
)

__all__ = [
    "BuildConfig",
    "LinearImage",
    "Mask",
    "ObjectModel",
    "PointLightMix",
    "SH9",
    "WeightVector",
    "build_model",
    "compose_detail",
    "final_composite",
    "load_image",
    "load_mask",
    "load_model",
    "load_pfm",
    "oracle_weights",
    "regress_weights",
    "reshade",
    "save_model",
    "save_pfm",
    "save_png",
    "shade_points",
    "shade_sh",
]
__version__ = "0.1.0"
