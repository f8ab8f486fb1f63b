"""End-to-end model construction from a fragment image and its matte."""

from dataclasses import dataclass, field

import numpy as np

from . import retinex
from .contour_shape import (
    DEFAULT_EPSILON,
    boundary_normals,
    interpolate_normals,
    reconstruct_height,
)
from .detail_layers import (
    DEFAULT_LAMBDA,
    PatchDictionary,
    geometric_detail,
    nonparametric_filter,
    parametric_residual,
)
from .images import cleanup_mask, quantize
from .light_fit import fit_lights
from .model import ObjectModel


class BuildError(RuntimeError):
    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage


@dataclass
class BuildConfig:
    chroma_threshold: float = retinex.DEFAULT_CHROMA_THRESHOLD
    epsilon: float = DEFAULT_EPSILON
    fit_iterations: int = 200
    lam: float = DEFAULT_LAMBDA
    normal_rounds: int = 500
    extra_metadata: dict = field(default_factory=dict)

    def validate(self):
        for name in ("chroma_threshold", "epsilon", "lam"):
            if getattr(self, name) <= 0:
                raise ValueError(f"config field {name} must be positive")
        if self.fit_iterations < 1 or self.normal_rounds < 1:
            raise ValueError("iteration counts must be at least 1")


@dataclass
class BuildSummary:
    fit_initial_rmse: float
    fit_final_rmse: float
    fit_iterations: int
    fit_converged: bool
    normal_rounds: int
    normals_converged: bool
    rms_s_p: float
    rms_s_g: float
    normal_energies: np.ndarray = None
    fit_cost_history: np.ndarray = None


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except Exception as e:  # noqa: BLE001 - reported with the stage name
        raise BuildError(name, e) from e


def build_model(image, mask, dictionary: PatchDictionary, config=None):
    """Run the full pipeline: intrinsics, shape, light fit, detail layers.

    Returns (ObjectModel, BuildSummary).  The stored shading and every
    coarse render live on the storage grid, so both layer decompositions
    add back bit-exactly.
    """
    config = config or BuildConfig()
    config.validate()

    mask = _stage("mask cleanup", cleanup_mask, mask)
    pair = _stage(
        "retinex", retinex.color_retinex, image, mask, config.chroma_threshold
    )
    shading = pair.shading  # already grid-quantized

    bn = _stage("boundary normals", boundary_normals, mask)
    sol = _stage(
        "normal interpolation",
        interpolate_normals,
        mask,
        boundary=bn,
        max_rounds=config.normal_rounds,
    )
    height = _stage(
        "height reconstruction",
        reconstruct_height,
        sol.normals,
        mask,
        epsilon=config.epsilon,
    )

    fit = _stage(
        "light fit",
        fit_lights,
        shading,
        height,
        sol.normals,
        mask,
        max_iterations=config.fit_iterations,
    )

    from .model import coarse_shading  # local import to avoid cycle at import time

    om = mask.omega
    draft = ObjectModel(
        albedo=pair.albedo,
        shading=shading,
        height=height,
        normals=sol.normals,
        mask=mask,
        s_p=np.zeros(shading.shape),
        s_g=np.zeros(shading.shape),
        fitted_light=fit.fitted,
    )
    coarse = coarse_shading(draft, fit.fitted)
    s_p = _stage("parametric residual", parametric_residual, shading, coarse, mask)

    filtered = quantize(
        _stage("patch filter", nonparametric_filter, shading, mask, dictionary)
    )
    s_g = _stage("geometric detail", geometric_detail, shading, filtered, mask)

    metadata = {
        "chroma_threshold": config.chroma_threshold,
        "epsilon": config.epsilon,
        "lambda": dictionary.lam,
        "patch_size": dictionary.patch_size,
        "fit_rmse": fit.final_rmse,
        "width": mask.width,
        "height": mask.height,
        "rms_s_p": float(np.sqrt(np.mean(s_p[om] ** 2))),
        "rms_s_g": float(np.sqrt(np.mean(s_g[om] ** 2))),
    }
    metadata.update(config.extra_metadata)

    model = ObjectModel(
        albedo=pair.albedo,
        shading=shading,
        height=height,
        normals=sol.normals,
        mask=mask,
        s_p=s_p,
        s_g=s_g,
        fitted_light=fit.fitted,
        metadata=metadata,
    )
    summary = BuildSummary(
        fit_initial_rmse=fit.initial_rmse,
        fit_final_rmse=fit.final_rmse,
        fit_iterations=fit.iterations,
        fit_converged=fit.converged,
        normal_rounds=sol.rounds,
        normals_converged=sol.converged,
        rms_s_p=metadata["rms_s_p"],
        rms_s_g=metadata["rms_s_g"],
        normal_energies=sol.energies,
        fit_cost_history=fit.cost_history,
    )
    return model, summary
