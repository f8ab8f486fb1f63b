"""Shared rendering helpers for the CLI and the HTTP service.

Both front ends call the same functions, so renders of identical
parameters are byte-identical however they are requested.
"""

import io

import numpy as np
from PIL import Image

from .images import linear_to_srgb
from .model import WeightVector, coarse_shading, compose_detail


def relight_composite(model, light, w_p=1.0, w_g=1.0):
    """Linear-light composite of the relit model (clamped at zero)."""
    coarse = coarse_shading(model, light)
    return compose_detail(
        model.albedo, coarse, model.s_p, model.s_g, WeightVector(w_p, w_g)
    )


def encode_png(rgb, alpha=None, exposure=1.0):
    """Exposure-scaled sRGB PNG bytes (RGBA when a matte is supplied)."""
    enc = linear_to_srgb(np.clip(rgb * exposure, 0.0, 1.0))
    b = np.round(enc * 255.0).astype(np.uint8)
    if alpha is not None:
        a = np.round(np.clip(alpha, 0.0, 1.0) * 255.0).astype(np.uint8)
        b = np.dstack([b, a])
    buf = io.BytesIO()
    Image.fromarray(b).save(buf, format="PNG")
    return buf.getvalue()


def relight_png(model, light, w_p=1.0, w_g=1.0, exposure=1.0):
    rgb = relight_composite(model, light, w_p, w_g)
    return encode_png(rgb, alpha=model.mask.values, exposure=exposure)


def layer_png(model, name):
    """Normalized visualization of one model layer."""
    if name == "albedo":
        rgb = np.clip(model.albedo, 0.0, 1.0)
        return encode_png(rgb)
    if name == "coarse":
        s = coarse_shading(model, model.fitted_light)
        peak = float(s.max())
        gray = s / peak if peak > 0 else s
    elif name in ("sp", "sg"):
        layer = model.s_p if name == "sp" else model.s_g
        peak = float(np.max(np.abs(layer)))
        gray = 0.5 + 0.5 * layer / peak if peak > 0 else np.full_like(layer, 0.5)
    else:
        raise KeyError(name)
    return encode_png(np.repeat(gray[:, :, None], 3, axis=2))


def model_summary(model):
    from .lights import light_to_record

    om = model.mask.omega
    return {
        "width": model.mask.width,
        "height": model.mask.height,
        "fitted_light": light_to_record(model.fitted_light),
        "layer_rms": {
            "sp": float(np.sqrt(np.mean(model.s_p[om] ** 2))),
            "sg": float(np.sqrt(np.mean(model.s_g[om] ** 2))),
        },
        "metadata": model.metadata,
    }
