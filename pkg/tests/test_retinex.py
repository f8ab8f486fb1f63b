import numpy as np
import pytest

from relightkit.images import DegenerateMaskError, ImageError, LinearImage, Mask
from relightkit.retinex import color_retinex


def full_mask(h, w):
    return Mask(np.ones((h, w)))


def test_constant_image_gives_constant_shading():
    img = LinearImage(np.full((12, 12, 3), 0.4))
    pair = color_retinex(img, full_mask(12, 12))
    om = full_mask(12, 12).omega
    assert np.allclose(pair.shading[om], 1.0, atol=1e-6)
    assert np.allclose(pair.albedo[om], 0.4, atol=1e-5)


def test_reconstruction_identity():
    rng = np.random.default_rng(0)
    data = rng.uniform(0.05, 1.0, (20, 24, 3))
    m = np.zeros((20, 24))
    m[3:17, 4:20] = 1.0
    mask = Mask(m)
    img = LinearImage(data)
    pair = color_retinex(img, mask)
    om = mask.omega
    recon = pair.albedo * pair.shading[:, :, None]
    assert np.max(np.abs(recon[om] - data[om])) < 1e-5
    assert np.all(pair.shading[om] > 0)
    assert np.all(pair.albedo >= 0)
    # zero outside the region
    assert np.all(pair.shading[~om] == 0)
    assert np.all(pair.albedo[~om] == 0)


def chroma_step_times_ramp(w=48, h=32):
    """Piecewise-constant chroma step under a smooth 1D luminance ramp.

    The ramp is the analytic shading; the step edge must land in albedo.
    """
    ramp = 0.4 + 0.5 * np.linspace(0, 1, w)[None, :] * np.ones((h, 1))
    albedo = np.zeros((h, w, 3))
    albedo[:, : w // 2] = [0.9, 0.2, 0.2]
    albedo[:, w // 2 :] = [0.2, 0.9, 0.2]
    return LinearImage(albedo * ramp[:, :, None]), ramp, albedo


def test_chroma_step_lands_in_albedo_ramp_in_shading():
    img, ramp, _ = chroma_step_times_ramp()
    h, w = ramp.shape
    mask = full_mask(h, w)
    pair = color_retinex(img, mask)
    s = pair.shading
    # shading gradient across the albedo step is flat
    step_jump = np.abs(s[:, w // 2] - s[:, w // 2 - 1] - (ramp[:, w // 2] - ramp[:, w // 2 - 1]))
    at_step = np.abs(s[:, w // 2] - s[:, w // 2 - 1])
    assert np.max(at_step) < 1e-3
    # away from the step the shading gradient matches the ramp's
    gs = np.diff(s, axis=1)
    gr = np.diff(ramp, axis=1) * (s[2, 2] / ramp[2, 2])  # same gauge
    inner = np.s_[:, 2 : w // 2 - 2]
    assert np.max(np.abs(gs[inner] - gr[inner])) < 0.05 * np.max(np.abs(gr))
    del step_jump


def test_global_scale_leaves_shading_invariant():
    img, _, _ = chroma_step_times_ramp()
    mask = full_mask(*img.data.shape[:2])
    p1 = color_retinex(img, mask)
    p2 = color_retinex(LinearImage(img.data * 3.0), mask)
    # gauge absorbs the global constant: shading identical, albedo scales
    assert np.allclose(p2.shading, p1.shading, atol=1e-9)
    om = mask.omega
    assert np.allclose(p2.albedo[om], 3.0 * p1.albedo[om], rtol=1e-9)


def test_threshold_monotonicity():
    # raising the chroma threshold can only move edges from the albedo
    # class into the shading class
    from relightkit import grid as g

    img, _, _ = chroma_step_times_ramp()
    floored = np.maximum(img.data, 1e-4)
    chroma = floored / np.linalg.norm(floored, axis=2, keepdims=True)
    omega = np.ones(img.data.shape[:2], dtype=bool)
    (xs, xd), (ys, yd) = g.forward_edges(omega)
    dc = np.concatenate(
        [
            np.linalg.norm(chroma[xd] - chroma[xs], axis=1),
            np.linalg.norm(chroma[yd] - chroma[ys], axis=1),
        ]
    )
    t = 0.075
    albedo_low = dc > t
    albedo_high = dc > 2 * t
    assert np.all(albedo_high <= albedo_low)


def test_gauge_95th_percentile():
    rng = np.random.default_rng(1)
    data = rng.uniform(0.1, 1.0, (24, 24, 3))
    mask = full_mask(24, 24)
    pair = color_retinex(LinearImage(data), mask)
    om = mask.omega
    assert np.percentile(pair.shading[om], 95) == pytest.approx(1.0, abs=1e-6)


def test_rejects_single_channel():
    with pytest.raises(ImageError):
        color_retinex(LinearImage(np.ones((8, 8))), full_mask(8, 8))


def test_rejects_degenerate_mask():
    m = np.zeros((8, 8))
    m[4, 4] = 1.0
    with pytest.raises(DegenerateMaskError):
        color_retinex(LinearImage(np.ones((8, 8, 3))), Mask(m))
