"""Raster types, sRGB conversion, mask utilities, and PNG/PFM I/O.

Everything downstream works on linear radiometric float data. 8-bit PNG
goes through the exact piecewise sRGB transfer curve (not a gamma-2.2
approximation); PFM files round-trip bit-exactly.
"""

import struct

import numpy as np
from PIL import Image
from scipy import ndimage


class ImageError(ValueError):
    pass


class DegenerateMaskError(ImageError):
    pass


# Absolute value grid used for stored shading-space rasters.  Residual
# layers built from grid-valued images add back bit-exactly in float64
# (grid multiples below 2^29 subtract and re-add without rounding).
GRID = 2.0 ** 24


def quantize(data):
    """Snap an array to the 2^-24 absolute grid (returns float64)."""
    return np.round(np.asarray(data, dtype=np.float64) * GRID) / GRID


def _freeze(arr):
    arr.flags.writeable = False
    return arr


class LinearImage:
    """Immutable raster of linear radiometric samples, 1 or 3 channels.

    data is float64, shape (h, w) for single channel or (h, w, 3).
    """

    def __init__(self, data):
        data = np.asarray(data, dtype=np.float64)
        if data.ndim == 2:
            pass
        elif data.ndim == 3 and data.shape[2] in (1, 3):
            if data.shape[2] == 1:
                data = data[:, :, 0]
        else:
            raise ImageError(f"expected (h, w) or (h, w, 3) data, got shape {data.shape}")
        if data.shape[0] == 0 or data.shape[1] == 0:
            raise ImageError("zero-sized image")
        if not np.all(np.isfinite(data)):
            raise ImageError("image contains non-finite samples")
        self.data = _freeze(data.copy())

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def channels(self):
        return 1 if self.data.ndim == 2 else self.data.shape[2]


class Mask:
    """Per-pixel matte in [0, 1]; the object region is every pixel > 0."""

    def __init__(self, values):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2:
            raise ImageError("mask must be single channel")
        if not np.all(np.isfinite(values)):
            raise ImageError("mask contains non-finite values")
        self.values = _freeze(np.clip(values, 0.0, 1.0))

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def omega(self):
        """Boolean object-region map (pixels with matte > 0)."""
        return self.values > 0

    @property
    def area(self):
        return int(np.count_nonzero(self.values))


# exact piecewise sRGB transfer functions

def srgb_to_linear(u):
    u = np.asarray(u, dtype=np.float64)
    return np.where(u <= 0.04045, u / 12.92, ((u + 0.055) / 1.055) ** 2.4)


def linear_to_srgb(v):
    v = np.clip(np.asarray(v, dtype=np.float64), 0.0, 1.0)
    return np.where(v <= 0.0031308, 12.92 * v, 1.055 * v ** (1.0 / 2.4) - 0.055)


def load_image(path, transfer="srgb"):
    """Load a PNG (8/16-bit) or PFM file as a LinearImage.

    transfer applies only to PNG: "srgb" decodes through the exact sRGB
    EOTF, "linear" divides by the integer maximum only.  PFM data passes
    through unchanged.
    """
    if transfer not in ("srgb", "linear"):
        raise ImageError(f"unknown transfer {transfer!r}")
    path = str(path)
    if path.lower().endswith(".pfm"):
        return load_pfm(path)
    try:
        pil = Image.open(path)
        pil.load()
    except Exception as e:
        raise ImageError(f"unreadable image file {path}: {e}") from e
    mode = pil.mode
    if mode in ("I;16", "I"):
        arr = np.asarray(pil, dtype=np.float64) / 65535.0
    elif mode in ("L", "RGB", "RGBA", "LA"):
        arr = np.asarray(pil, dtype=np.float64) / 255.0
        if arr.ndim == 3:
            arr = arr[:, :, :3]
    else:
        raise ImageError(f"unsupported PNG mode {mode}")
    if transfer == "srgb":
        arr = srgb_to_linear(arr)
    return LinearImage(arr)


def save_png(img, path, transfer="srgb", alpha=None):
    """Write an 8-bit PNG, encoding through the exact sRGB OETF by default."""
    data = img.data if isinstance(img, LinearImage) else np.asarray(img, dtype=np.float64)
    if transfer == "srgb":
        enc = linear_to_srgb(data)
    else:
        enc = np.clip(data, 0.0, 1.0)
    b = np.round(enc * 255.0).astype(np.uint8)
    if alpha is not None:
        a = np.round(np.clip(alpha, 0.0, 1.0) * 255.0).astype(np.uint8)
        if b.ndim == 2:
            b = np.stack([b, b, b], axis=-1)
        b = np.dstack([b, a])
    Image.fromarray(b).save(path, format="PNG")


def save_mask_png(mask, path):
    """Persist a matte as 16-bit grayscale PNG (keeps soft edges)."""
    v = np.round(mask.values * 65535.0).astype(np.uint16)
    Image.fromarray(v).save(path, format="PNG")


def load_mask(path):
    """Mask from PNG: alpha channel if present, else grayscale coverage."""
    try:
        pil = Image.open(path)
        pil.load()
    except Exception as e:
        raise ImageError(f"unreadable mask file {path}: {e}") from e
    if "A" in pil.getbands():
        arr = np.asarray(pil.getchannel("A"), dtype=np.float64) / 255.0
    elif pil.mode in ("I;16", "I"):
        arr = np.asarray(pil, dtype=np.float64) / 65535.0
    else:
        arr = np.asarray(pil.convert("L"), dtype=np.float64) / 255.0
    return Mask(arr)


# PFM: header "Pf" (1ch) / "PF" (3ch), "w h", scale "-1.0" = little-endian,
# 32-bit float rows stored bottom-up.

def save_pfm(img, path):
    data = img.data if isinstance(img, LinearImage) else np.asarray(img, dtype=np.float64)
    if not np.all(np.isfinite(data)):
        raise ImageError("refusing to write non-finite samples to PFM")
    if data.ndim == 2:
        header = b"Pf"
    elif data.ndim == 3 and data.shape[2] == 3:
        header = b"PF"
    else:
        raise ImageError(f"PFM supports 1 or 3 channels, got shape {data.shape}")
    h, w = data.shape[:2]
    payload = np.flipud(data.astype(np.float32)).tobytes()
    with open(path, "wb") as f:
        f.write(header + b"\n")
        f.write(f"{w} {h}\n".encode("ascii"))
        f.write(b"-1.0\n")
        f.write(payload)


def _read_token(f):
    tok = b""
    while True:
        c = f.read(1)
        if c == b"":
            raise ImageError("truncated PFM header")
        if c.isspace():
            if tok:
                return tok
            continue
        tok += c


def load_pfm(path):
    with open(path, "rb") as f:
        magic = _read_token(f)
        if magic not in (b"Pf", b"PF"):
            raise ImageError(f"not a PFM file (magic {magic!r})")
        channels = 3 if magic == b"PF" else 1
        w = int(_read_token(f))
        h = int(_read_token(f))
        if w <= 0 or h <= 0:
            raise ImageError("PFM with zero dimension")
        scale = float(_read_token(f))
        endian = "<" if scale < 0 else ">"
        count = w * h * channels
        raw = f.read(count * 4)
        if len(raw) != count * 4:
            raise ImageError("truncated PFM payload")
        flat = np.frombuffer(raw, dtype=endian + "f4")
    shape = (h, w) if channels == 1 else (h, w, 3)
    data = np.flipud(flat.reshape(shape)).astype(np.float64)
    if not np.all(np.isfinite(data)):
        raise ImageError("PFM contains non-finite samples")
    return LinearImage(data)


FOUR_CONN = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


def cleanup_mask(raw):
    """Keep the largest 4-connected component of the matte, zero the rest."""
    omega = raw.values > 0
    labels, n = ndimage.label(omega, structure=FOUR_CONN)
    if n == 0:
        raise DegenerateMaskError("mask has no object pixels")
    counts = np.bincount(labels.ravel())
    counts[0] = 0
    keep = int(np.argmax(counts))
    cleaned = np.where(labels == keep, raw.values, 0.0)
    if np.count_nonzero(cleaned) < 16:
        raise DegenerateMaskError(
            f"largest component has area {np.count_nonzero(cleaned)} < 16"
        )
    return Mask(cleaned)


def boundary_of(mask):
    """Boolean map of object pixels 4-adjacent to background or the frame."""
    omega = mask.omega
    pad = np.pad(omega, 1, constant_values=False)
    interior = (
        pad[:-2, 1:-1] & pad[2:, 1:-1] & pad[1:-1, :-2] & pad[1:-1, 2:]
    )
    b = omega & ~interior
    h, w = omega.shape
    frame = np.zeros_like(omega)
    frame[0, :] = frame[-1, :] = frame[:, 0] = frame[:, -1] = True
    return b | (omega & frame)
