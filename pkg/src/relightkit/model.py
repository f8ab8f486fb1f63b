"""The relightable asset and everything that renders or composites it.

An ObjectModel bundles albedo, the coarse shape, the two shading detail
layers, and the fitted build light.  Reshading is coarse shading plus a
weighted sum of the layers; stored shading-space rasters live on the
2^-24 grid, so reshading at the fitted light with weights (1, 0)
reproduces the stored shading bit for bit.
"""

import json
import os
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .images import (
    ImageError,
    LinearImage,
    Mask,
    load_mask,
    load_pfm,
    quantize,
    save_mask_png,
    save_pfm,
)
from .lights import (
    SH9,
    PointLightMix,
    load_light,
    save_light,
    shade_points,
    shade_sh,
)


class WeightVector(NamedTuple):
    w_p: float
    w_g: float


DEFAULT_WEIGHTS = WeightVector(1.0, 1.0)


@dataclass
class ObjectModel:
    albedo: np.ndarray
    shading: np.ndarray
    height: np.ndarray
    normals: np.ndarray
    mask: Mask
    s_p: np.ndarray
    s_g: np.ndarray
    fitted_light: PointLightMix
    metadata: dict = field(default_factory=dict)

    @property
    def width(self):
        return self.mask.width

    @property
    def height_px(self):
        return self.mask.height


def coarse_shading(model, light):
    """Shading of the coarse shape under either light family, grid-snapped.

    The snap makes the residual-layer identities exact: the build computes
    s_p against this very function, so re-evaluating it reproduces the
    same grid values bit for bit.
    """
    if isinstance(light, PointLightMix):
        s = shade_points(model.height, model.normals, model.mask, light)
    elif isinstance(light, SH9):
        s = shade_sh(model.normals, model.mask, light)
    else:
        raise ImageError(f"unsupported light type {type(light).__name__}")
    return quantize(s)


def reshade(model, light, weights=DEFAULT_WEIGHTS):
    """Coarse shading plus weighted detail layers; signed, unclamped."""
    w = WeightVector(*weights)
    out = coarse_shading(model, light)
    if w.w_p != 0.0:
        out = out + w.w_p * model.s_p
    if w.w_g != 0.0:
        out = out + w.w_g * model.s_g
    return out


def compose_detail(albedo, shading, s_p, s_g, weights=DEFAULT_WEIGHTS):
    """Albedo times the detail-composited shading, clamped at zero."""
    w = WeightVector(*weights)
    if albedo.shape[:2] != shading.shape:
        raise ImageError("albedo and shading dimensions must match")
    s = shading
    if w.w_p != 0.0:
        s = s + w.w_p * s_p
    if w.w_g != 0.0:
        s = s + w.w_g * s_g
    return np.maximum(albedo * s[:, :, None], 0.0)


def final_composite(target, render, empty, mask):
    """Matte the object render over the target, carrying scene changes.

    Inside the matte the render wins; outside, the difference between the
    with-object and without-object renders (shadows, interreflections)
    transfers onto the target.  Clamped at zero.
    """
    t, r, e = target.data, render.data, empty.data
    if t.shape != r.shape or t.shape != e.shape or t.shape[:2] != mask.values.shape:
        raise ImageError("composite inputs must share dimensions")
    m = mask.values
    if t.ndim == 3:
        m = m[:, :, None]
    out = m * r + (1.0 - m) * (t + (r - e))
    return LinearImage(np.maximum(out, 0.0))


class DegenerateBasisError(ValueError):
    pass


def oracle_weights(target, albedo, coarse, s_p, s_g, mask):
    """Least-squares scale and detail weights against a known target.

    Solves target ~ a0*(A*S_c) + a1*(A*s_p) + a2*(A*s_g) over the object
    region and reports k = a0 with the weights normalized by k.  Basis
    images that are numerically rank-deficient are dropped (weight zero).
    """
    om = mask.omega
    basis = []
    for layer in (coarse, s_p, s_g):
        b = albedo * layer[:, :, None] if albedo.ndim == 3 else albedo * layer
        basis.append(b[om].ravel())
    B = np.stack(basis, axis=1)
    t = (target[om] if target.ndim == 2 else target[om]).ravel()

    G = B.T @ B
    rhs = B.T @ t
    scale = float(np.max(np.diag(G)))
    active = np.diag(G) > max(scale, 1.0) * 1e-12
    coeffs = np.zeros(3)
    if active.any():
        Ga = G[np.ix_(active, active)]
        # drop further columns until the active system is well posed
        while True:
            cond_ok = np.linalg.cond(Ga) < 1e12 if Ga.size else True
            if cond_ok:
                break
            idx = np.nonzero(active)[0]
            weakest = idx[np.argmin(np.diag(G)[idx])]
            active[weakest] = False
            Ga = G[np.ix_(active, active)]
        if active.any():
            coeffs[active] = np.linalg.solve(
                G[np.ix_(active, active)], rhs[active]
            )
    a0, a1, a2 = coeffs
    if abs(a0) < 1e-9:
        raise DegenerateBasisError("degenerate coarse basis")
    return float(a0), WeightVector(float(a1 / a0), float(a2 / a0))


def light_features(light):
    """Regression features: SH coefficients normalized by the DC term."""
    c = light.coefficients
    if abs(c[0]) < 1e-12:
        raise ImageError("light has no DC component to normalize by")
    return c / c[0]


def regress_weights(light, training, neighbors=100, ridge=1e-3):
    """Predict detail weights for a light from (light, weights) pairs.

    Ridge-regularized linear regression with intercept, fit on the
    `neighbors` nearest training lights in normalized-coefficient space.
    """
    if len(training) < 2:
        raise ImageError("need at least two training pairs")
    q = light_features(light)
    X = np.asarray([light_features(l) for l, _ in training])
    Y = np.asarray([[w[0], w[1]] for _, w in training])
    if len(training) > neighbors:
        order = np.argsort(np.linalg.norm(X - q[None, :], axis=1))[:neighbors]
        X, Y = X[order], Y[order]
    xm = X.mean(axis=0)
    ym = Y.mean(axis=0)
    Xc = X - xm
    beta = np.linalg.solve(Xc.T @ Xc + ridge * np.eye(X.shape[1]), Xc.T @ (Y - ym))
    pred = ym + (q - xm) @ beta
    return WeightVector(float(pred[0]), float(pred[1]))


# model directory layout ------------------------------------------------

MODEL_FILES = {
    "albedo": "albedo.pfm",
    "shading": "shading.pfm",
    "height": "height.pfm",
    "normals": "normals.pfm",
    "s_p": "sp.pfm",
    "s_g": "sg.pfm",
}


def save_model(model, directory):
    os.makedirs(directory, exist_ok=True)
    arrays = {
        "albedo": model.albedo,
        "shading": model.shading,
        "height": model.height,
        "normals": model.normals,
        "s_p": model.s_p,
        "s_g": model.s_g,
    }
    for key, name in MODEL_FILES.items():
        save_pfm(arrays[key], os.path.join(directory, name))
    save_mask_png(model.mask, os.path.join(directory, "mask.png"))
    save_light(model.fitted_light, os.path.join(directory, "light.json"))
    with open(os.path.join(directory, "metadata.json"), "w") as f:
        json.dump(model.metadata, f, indent=2, sort_keys=True)
        f.write("\n")


def load_model(directory):
    def arr(name):
        return load_pfm(os.path.join(directory, name)).data

    try:
        with open(os.path.join(directory, "metadata.json")) as f:
            metadata = json.load(f)
    except OSError as e:
        raise ImageError(f"not a model directory: {directory}: {e}") from e
    return ObjectModel(
        albedo=arr("albedo.pfm"),
        shading=arr("shading.pfm"),
        height=arr("height.pfm"),
        normals=arr("normals.pfm"),
        mask=load_mask(os.path.join(directory, "mask.png")),
        s_p=arr("sp.pfm"),
        s_g=arr("sg.pfm"),
        fitted_light=load_light(os.path.join(directory, "light.json")),
        metadata=metadata,
    )
