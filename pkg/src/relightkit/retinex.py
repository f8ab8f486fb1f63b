"""Color-Retinex split of a masked fragment into albedo and shading.

Gradients of the log image are classified by chromaticity change: an
edge whose per-pixel chromaticity (RGB normalized to unit L2 norm)
jumps by more than a threshold is an albedo edge, everything else is
shading.  Log-shading is re-integrated from the shading-classified
luminance gradients by a masked least-squares Poisson solve, the gauge
is fixed at the 95th percentile, and albedo is whatever ratio is left.
"""

from dataclasses import dataclass

import numpy as np

from . import grid
from .images import DegenerateMaskError, ImageError, LinearImage, Mask, quantize

DEFAULT_CHROMA_THRESHOLD = 0.075
FLOOR = 1e-4


@dataclass(frozen=True)
class IntrinsicPair:
    """albedo (h, w, 3) and shading (h, w), both zero outside the mask."""

    albedo: np.ndarray
    shading: np.ndarray


def color_retinex(img, mask, chroma_threshold=DEFAULT_CHROMA_THRESHOLD,
                  rtol=1e-8, maxiter=10_000):
    if not isinstance(img, LinearImage) or img.channels != 3:
        raise ImageError("color retinex needs a 3-channel image")
    if not isinstance(mask, Mask) or mask.values.shape != img.data.shape[:2]:
        raise ImageError("mask dimensions do not match the image")
    omega = mask.omega
    if int(omega.sum()) < 16:
        raise DegenerateMaskError("mask too small for decomposition")

    floored = np.maximum(img.data, FLOOR)
    log_img = np.log(floored)
    log_lum = np.mean(log_img, axis=2)
    chroma = floored / np.linalg.norm(floored, axis=2, keepdims=True)

    index = grid.pixel_index(omega)
    (xs, xd), (ys, yd) = grid.forward_edges(omega)

    def classified_gradients(src, dst):
        g = log_lum[dst] - log_lum[src]
        dc = np.linalg.norm(chroma[dst] - chroma[src], axis=1)
        return np.where(dc > chroma_threshold, 0.0, g)

    b = np.concatenate([classified_gradients(xs, xd), classified_gradients(ys, yd)])
    D = grid.difference_matrix(omega, index)
    log_s = grid.solve_least_squares(D, b, rtol=rtol, maxiter=maxiter)

    s = np.exp(log_s - np.max(log_s))
    s /= np.percentile(s, 95)
    shading = np.zeros(omega.shape, dtype=np.float64)
    shading[omega] = s
    shading = np.maximum(quantize(shading), 0.0)
    shading[omega] = np.maximum(shading[omega], 2.0 ** -24)
    shading[~omega] = 0.0

    albedo = np.zeros(img.data.shape, dtype=np.float64)
    albedo[omega] = img.data[omega] / shading[omega, None]
    return IntrinsicPair(albedo=albedo, shading=shading)
