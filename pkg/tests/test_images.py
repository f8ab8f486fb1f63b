import numpy as np
import pytest
from PIL import Image

from relightkit import images
from relightkit.images import (
    DegenerateMaskError,
    ImageError,
    LinearImage,
    Mask,
    boundary_of,
    cleanup_mask,
    load_image,
    load_mask,
    load_pfm,
    quantize,
    save_pfm,
    save_png,
)


def disk_mask(size, radius, center=None):
    c = (size - 1) / 2 if center is None else center
    yy, xx = np.mgrid[0:size, 0:size]
    return Mask(((xx - c) ** 2 + (yy - c) ** 2 <= radius**2).astype(float))


def soft_disk_mask(size, radius, supersample=4):
    """Coverage-rasterized disk matte, the shape real alpha masks have."""
    c = (size - 1) / 2
    offs = (np.arange(supersample) + 0.5) / supersample - 0.5
    yy, xx = np.mgrid[0:size, 0:size]
    cov = np.zeros((size, size))
    for oy in offs:
        for ox in offs:
            cov += (xx + ox - c) ** 2 + (yy + oy - c) ** 2 <= radius**2
    return Mask(cov / supersample**2)


def test_srgb_endpoints_and_midpoint(tmp_path):
    arr = np.zeros((1, 3, 3), dtype=np.uint8)
    arr[0, 0] = 255
    arr[0, 1] = 128
    arr[0, 2] = 0
    p = tmp_path / "t.png"
    Image.fromarray(np.repeat(arr, 2, axis=0)).save(p)
    img = load_image(p, transfer="srgb")
    assert img.data[0, 0, 0] == pytest.approx(1.0, abs=1e-12)
    # independent evaluation of the exact sRGB EOTF at code 128:
    # ((128/255 + 0.055) / 1.055) ** 2.4 = 0.21586050011389926
    assert img.data[0, 1, 0] == pytest.approx(0.21586, abs=1e-4)
    assert img.data[0, 1, 0] == pytest.approx(0.21586050011389926, abs=1e-12)
    assert img.data[0, 2, 0] == 0.0


def test_linear_transfer_is_plain_scaling(tmp_path):
    arr = np.full((2, 2), 128, dtype=np.uint8)
    p = tmp_path / "t.png"
    Image.fromarray(arr).save(p)
    img = load_image(p, transfer="linear")
    assert np.allclose(img.data, 128 / 255)


def test_png_16bit(tmp_path):
    arr = np.full((2, 2), 65535, dtype=np.uint16)
    p = tmp_path / "t16.png"
    Image.fromarray(arr).save(p)
    img = load_image(p, transfer="linear")
    assert np.allclose(img.data, 1.0)


def test_png_save_load_roundtrip_8bit(tmp_path):
    rng = np.random.default_rng(3)
    data = rng.uniform(0, 1, (8, 9, 3))
    p = tmp_path / "rt.png"
    save_png(LinearImage(data), p, transfer="srgb")
    back = load_image(p, transfer="srgb")
    # half-code sRGB quantization through the steepest part of the EOTF
    assert np.max(np.abs(back.data - data)) < 0.5 / 255 * 2.4


def test_pfm_exact_bytes(tmp_path):
    p = tmp_path / "g.pfm"
    save_pfm(LinearImage(np.array([[0.5]])), p)
    raw = p.read_bytes()
    assert raw == b"Pf\n1 1\n-1.0\n" + np.float32(0.5).tobytes()


def test_pfm_three_channel_header(tmp_path):
    p = tmp_path / "c.pfm"
    save_pfm(LinearImage(np.zeros((2, 2, 3))), p)
    assert p.read_bytes().startswith(b"PF\n2 2\n-1.0\n")


def test_pfm_roundtrip_bit_identical(tmp_path):
    rng = np.random.default_rng(0)
    data = rng.standard_normal((5, 7, 3)).astype(np.float32).astype(np.float64)
    p = tmp_path / "rt.pfm"
    save_pfm(LinearImage(data), p)
    back = load_pfm(p)
    assert np.array_equal(back.data, data)
    # and a second write produces identical bytes
    p2 = tmp_path / "rt2.pfm"
    save_pfm(back, p2)
    assert p.read_bytes() == p2.read_bytes()


def test_pfm_rejects_nan(tmp_path):
    img = LinearImage(np.ones((2, 2)))
    bad = img.data.copy()
    bad[0, 0] = np.nan
    # constructing a LinearImage with NaN already fails
    with pytest.raises(ImageError):
        LinearImage(bad)
    # and save_pfm refuses raw arrays with NaN before writing anything
    p = tmp_path / "bad.pfm"
    with pytest.raises(ImageError):
        save_pfm(bad, p)
    assert not p.exists()


def test_pfm_scale_sign_endianness(tmp_path):
    # big-endian PFM (positive scale) reads back correctly
    p = tmp_path / "be.pfm"
    payload = np.array([0.25], dtype=">f4").tobytes()
    p.write_bytes(b"Pf\n1 1\n1.0\n" + payload)
    assert load_pfm(p).data[0, 0] == 0.25


def test_linear_image_validation():
    with pytest.raises(ImageError):
        LinearImage(np.zeros((0, 4)))
    with pytest.raises(ImageError):
        LinearImage(np.zeros((4, 4, 2)))
    img = LinearImage(np.zeros((4, 4)))
    with pytest.raises(ValueError):
        img.data[0, 0] = 1.0  # immutable


def test_cleanup_keeps_largest_component():
    m = np.zeros((30, 30))
    m[2:12, 2:12] = 1.0  # area 100
    m[20:25, 20:30] = 1.0  # area 50
    out = cleanup_mask(Mask(m))
    assert out.area == 100
    assert not out.omega[22, 22]


def test_cleanup_all_zero_raises():
    with pytest.raises(DegenerateMaskError):
        cleanup_mask(Mask(np.zeros((10, 10))))


def test_cleanup_small_component_raises():
    m = np.zeros((10, 10))
    m[4:6, 4:6] = 1.0
    with pytest.raises(DegenerateMaskError):
        cleanup_mask(Mask(m))


def test_cleanup_full_frame_unchanged():
    m = Mask(np.ones((9, 9)))
    out = cleanup_mask(m)
    assert np.array_equal(out.values, m.values)
    b = boundary_of(out)
    expect = np.zeros((9, 9), dtype=bool)
    expect[0, :] = expect[-1, :] = expect[:, 0] = expect[:, -1] = True
    assert np.array_equal(b, expect)


def test_cleanup_idempotent():
    rng = np.random.default_rng(7)
    m = Mask((rng.uniform(0, 1, (40, 40)) > 0.45).astype(float))
    once = cleanup_mask(m)
    twice = cleanup_mask(once)
    assert np.array_equal(once.values, twice.values)


def test_boundary_square_perimeter():
    m = np.zeros((9, 9))
    m[2:7, 2:7] = 1.0
    b = boundary_of(Mask(m))
    assert int(b.sum()) == 16  # 5x5 square: 25 - 9 interior


def test_boundary_single_pixel():
    m = np.zeros((5, 5))
    m[2, 2] = 1.0
    b = boundary_of(Mask(m))
    assert b[2, 2] and b.sum() == 1


def brute_force_boundary_count(omega):
    h, w = omega.shape
    n = 0
    for r in range(h):
        for c in range(w):
            if not omega[r, c]:
                continue
            on_frame = r in (0, h - 1) or c in (0, w - 1)
            exposed = on_frame
            for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                rr, cc = r + dr, c + dc
                if 0 <= rr < h and 0 <= cc < w and not omega[rr, cc]:
                    exposed = True
            if exposed:
                n += 1
    return n


def test_boundary_disk_matches_brute_force_and_perimeter():
    m = soft_disk_mask(64, 20)
    b = boundary_of(m)
    brute = brute_force_boundary_count(m.omega)
    assert int(b.sum()) == brute
    assert abs(brute - 2 * np.pi * 20) <= 0.1 * 2 * np.pi * 20


def test_boundary_subset_and_exposure_property():
    rng = np.random.default_rng(11)
    blob = ndimage_binary_blob(rng)
    m = cleanup_mask(Mask(blob.astype(float)))
    b = boundary_of(m)
    omega = m.omega
    assert np.all(omega[b])  # boundary within the region
    h, w = omega.shape
    for r, c in zip(*np.nonzero(b)):
        on_frame = r in (0, h - 1) or c in (0, w - 1)
        has_outside = any(
            0 <= r + dr < h and 0 <= c + dc < w and not omega[r + dr, c + dc]
            for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1))
        )
        assert on_frame or has_outside


def ndimage_binary_blob(rng):
    from scipy.ndimage import gaussian_filter

    noise = gaussian_filter(rng.standard_normal((48, 48)), 4)
    return noise > np.quantile(noise, 0.6)


def test_mask_from_png_alpha_and_gray(tmp_path):
    rgba = np.zeros((4, 4, 4), dtype=np.uint8)
    rgba[1:3, 1:3, 3] = 200
    p = tmp_path / "a.png"
    Image.fromarray(rgba).save(p)
    m = load_mask(p)
    assert m.omega[1, 1] and not m.omega[0, 0]
    assert m.values[1, 1] == pytest.approx(200 / 255)

    gray = np.zeros((4, 4), dtype=np.uint8)
    gray[0, 0] = 255
    p2 = tmp_path / "g.png"
    Image.fromarray(gray).save(p2)
    m2 = load_mask(p2)
    assert m2.omega[0, 0] and m2.area == 1


def test_quantize_grid_addback_exact():
    rng = np.random.default_rng(5)
    a = quantize(rng.uniform(0, 4, 10_000) * 10.0 ** rng.uniform(-8, 0, 10_000))
    b = quantize(rng.uniform(0, 4, 10_000))
    assert np.array_equal((a - b) + b, a)
