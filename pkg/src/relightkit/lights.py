"""Light parameterizations and shading of a height/normal field.

Two illumination families: a mixture of 5 positional point sources
(position + intensity each, 20 parameters) and a 9-coefficient order-2
real spherical-harmonic vector.  Point-source shading has no distance
falloff, so intensity is the sole magnitude parameter and doubling all
intensities doubles the shading exactly.

SH shading evaluates the radiance basis directly (no Lambertian
convolution weights); render and re-render sides of the evaluation use
the same convention, which is all the error metric needs.
"""

import json

import numpy as np

from .images import ImageError


class LightError(ValueError):
    pass


class PointLightMix:
    """Exactly 5 point sources; positions in pixel units, +z toward viewer."""

    N_SOURCES = 5

    def __init__(self, positions, intensities):
        positions = np.asarray(positions, dtype=np.float64)
        intensities = np.asarray(intensities, dtype=np.float64)
        if positions.shape != (self.N_SOURCES, 3):
            raise LightError(f"expected {self.N_SOURCES} light positions, got {positions.shape}")
        if intensities.shape != (self.N_SOURCES,):
            raise LightError("expected 5 intensities")
        if not (np.all(np.isfinite(positions)) and np.all(np.isfinite(intensities))):
            raise LightError("non-finite light parameters")
        if np.any(intensities < 0):
            raise LightError("negative light intensity")
        self.positions = positions.copy()
        self.intensities = intensities.copy()
        self.positions.flags.writeable = False
        self.intensities.flags.writeable = False


class SH9:
    """Order-2 real spherical harmonic coefficients, monochrome."""

    def __init__(self, coefficients):
        c = np.asarray(coefficients, dtype=np.float64)
        if c.shape != (9,):
            raise LightError(f"expected 9 SH coefficients, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise LightError("non-finite SH coefficients")
        self.coefficients = c.copy()
        self.coefficients.flags.writeable = False


# standard real SH basis constants
_C0 = 0.282095
_C1 = 0.488603
_C2A = 1.092548
_C2B = 0.315392
_C2C = 0.546274


def sh_basis(normals):
    """Stack the 9 basis functions evaluated at unit vectors (..., 3)."""
    n = np.asarray(normals, dtype=np.float64)
    x, y, z = n[..., 0], n[..., 1], n[..., 2]
    return np.stack(
        [
            np.full_like(x, _C0),
            _C1 * y,
            _C1 * z,
            _C1 * x,
            _C2A * x * y,
            _C2A * y * z,
            _C2A * x * z,
            _C2B * (3.0 * z * z - 1.0),
            _C2C * (x * x - y * y),
        ],
        axis=-1,
    )


def shade_sh_unclamped(normals, mask, light):
    """Signed per-pixel SH shading; linear in the coefficient vector."""
    basis = sh_basis(normals)
    s = basis @ light.coefficients
    out = np.zeros(mask.values.shape, dtype=np.float64)
    om = mask.omega
    out[om] = s[om]
    return out


def shade_sh(normals, mask, light):
    return np.maximum(shade_sh_unclamped(normals, mask, light), 0.0)


def shade_points(height, normals, mask, lights):
    """Clamped-cosine shading from a 5-source mixture, no distance falloff.

    Surface point for pixel (row, col) is (col, row, height); each source
    contributes intensity * max(0, N . dir_to_light).
    """
    om = mask.omega
    h = np.asarray(height, dtype=np.float64)
    n = np.asarray(normals, dtype=np.float64)
    rows, cols = np.nonzero(om)
    q = np.stack([cols.astype(np.float64), rows.astype(np.float64), h[om]], axis=1)
    nv = n[om]
    acc = np.zeros(q.shape[0], dtype=np.float64)
    for p, w in zip(lights.positions, lights.intensities):
        d = p[None, :] - q
        dist = np.linalg.norm(d, axis=1)
        if np.any(dist < 1e-6):
            raise LightError("point source coincides with a surface point")
        acc += w * np.maximum(0.0, np.sum(nv * (d / dist[:, None]), axis=1))
    out = np.zeros(om.shape, dtype=np.float64)
    out[om] = acc
    return out


def light_to_record(light):
    if isinstance(light, PointLightMix):
        return {
            "type": "points",
            "sources": [
                {"position": [float(v) for v in p], "intensity": float(w)}
                for p, w in zip(light.positions, light.intensities)
            ],
        }
    if isinstance(light, SH9):
        return {"type": "sh", "coefficients": [float(v) for v in light.coefficients]}
    raise LightError(f"unknown light type {type(light).__name__}")


def light_from_record(rec):
    if not isinstance(rec, dict) or "type" not in rec:
        raise LightError("light record must be an object with a 'type' field")
    t = rec["type"]
    if t == "points":
        sources = rec.get("sources")
        if not isinstance(sources, list) or len(sources) != PointLightMix.N_SOURCES:
            raise LightError("field 'sources' must list exactly 5 sources")
        pos, inten = [], []
        for i, s in enumerate(sources):
            try:
                pos.append([float(v) for v in s["position"]])
                inten.append(float(s["intensity"]))
            except (KeyError, TypeError, ValueError) as e:
                raise LightError(f"malformed source {i}: {e}") from e
            if len(pos[-1]) != 3:
                raise LightError(f"field 'position' of source {i} must have 3 components")
        return PointLightMix(pos, inten)
    if t == "sh":
        coeffs = rec.get("coefficients")
        if not isinstance(coeffs, list) or len(coeffs) != 9:
            raise LightError("field 'coefficients' must list exactly 9 values")
        return SH9([float(v) for v in coeffs])
    raise LightError(f"unknown light type {t!r}")


def save_light(light, path):
    with open(path, "w") as f:
        json.dump(light_to_record(light), f, indent=2, sort_keys=True)
        f.write("\n")


def load_light(path):
    try:
        with open(path) as f:
            rec = json.load(f)
    except OSError as e:
        raise ImageError(f"unreadable light record {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise LightError(f"malformed light record {path}: {e}") from e
    return light_from_record(rec)
