"""Re-rendering error protocol on synthetic ground truth.

Synthetic objects are squashed domes with sinusoidal bumps and a
piecewise-constant albedo; their normals are analytic, so ground-truth
renders are exact.  Each (object, light) pair is scored by the
scale-invariant re-rendering error: the re-render is scaled by the k
that minimizes the squared error before averaging over object pixels.
Absolute values depend on the target image's brightness, so acceptance
rests on orderings (oracle beats fixed weights, better base shapes
score lower), not on absolute numbers.
"""

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .detail_layers import geometric_detail, nonparametric_filter, parametric_residual
from .images import ImageError, LinearImage, Mask, load_image, load_mask, quantize
from .light_fit import fit_lights
from .lights import SH9, shade_sh
from .model import (
    ObjectModel,
    WeightVector,
    oracle_weights,
    regress_weights,
    reshade,
)


@dataclass(frozen=True)
class SyntheticObject:
    """Ground-truth asset: analytic height, normals, and flat-color albedo."""

    albedo: np.ndarray
    height: np.ndarray
    normals: np.ndarray
    mask: Mask
    seed: int


DOME_RADIUS_FRACTION = 0.4
BUILD_LIGHT = SH9([1.0, 0.05, 0.25, 0.12, 0.0, 0.0, 0.0, 0.0, 0.0])
CHECKER_CELL = 6
CHECKER_LUMINANCE_RATIO = 0.25
BUMP_AMPLITUDE_RANGE = (0.015, 0.04)


def synth_object(seed, size, bump_scale=1.0):
    """Deterministic bumpy dome; same seed, same bits.

    The base is a spherical cap of radius 0.4*size carrying 3 to 8
    sinusoidal bumps (amplitude a few percent of the dome height, scaled
    by `bump_scale`), windowed by the dome profile so they fade to zero
    at the rim.  Normals come from the analytic gradient.

    The three-color albedo is deliberately hard on a chroma-based
    intrinsic split: two of the colors share a chromaticity and differ
    only in luminance, tiled as a fine checker.  That texture lands in
    the shading estimate and therefore in the detail layers, which is
    the content reshading is supposed to carry across illuminations;
    the third color fills a wedge and keeps genuine albedo edges in
    play.
    """
    if size < 64:
        raise ImageError("synthetic objects need size >= 64")
    rng = np.random.default_rng(seed)
    c = (size - 1) / 2.0
    radius = DOME_RADIUS_FRACTION * size
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    ux, uy = xx - c, yy - c
    d2 = ux**2 + uy**2
    omega = d2 <= radius**2
    mask = Mask(omega.astype(float))

    root = np.sqrt(np.maximum(radius**2 - d2, 0.0))
    safe = np.maximum(root, 1e-9)
    height = root.copy()
    dome_peak = radius
    # analytic dome gradient
    hx = (-ux / safe) * omega
    hy = (-uy / safe) * omega

    window = root / radius  # 1 at the apex, 0 at the rim
    wx = -ux / (radius * safe)
    wy = -uy / (radius * safe)

    n_bumps = int(rng.integers(3, 9))
    for _ in range(n_bumps):
        amp = bump_scale * rng.uniform(*BUMP_AMPLITUDE_RANGE) * dome_peak
        freq = rng.uniform(0.25, 0.6)
        theta = rng.uniform(0.0, 2.0 * np.pi)
        kx, ky = freq * np.cos(theta), freq * np.sin(theta)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        arg = kx * ux + ky * uy + phase
        s, co = np.sin(arg), np.cos(arg)
        height = height + amp * s * window
        hx = hx + amp * (kx * co * window + s * wx) * omega
        hy = hy + amp * (ky * co * window + s * wy) * omega

    height = np.maximum(height, 0.0) * omega
    normals = np.stack([-hx, -hy, np.ones_like(height)], axis=-1)
    normals /= np.linalg.norm(normals, axis=2, keepdims=True)
    normals *= omega[..., None]

    base = rng.uniform(0.5, 0.85, 3)
    palette = np.stack([base, base * CHECKER_LUMINANCE_RATIO, rng.uniform(0.2, 0.9, 3)])
    checker = (((xx // CHECKER_CELL) + (yy // CHECKER_CELL)) % 2).astype(int)
    spin = rng.uniform(0.0, 2.0 * np.pi)
    wedge = ((np.arctan2(uy, ux) + spin) % (2.0 * np.pi)) < (np.pi / 3.0)
    albedo = palette[np.where(wedge, 2, checker)] * omega[..., None]
    return SyntheticObject(
        albedo=albedo, height=height, normals=normals, mask=mask, seed=seed
    )


def render_truth(obj, light):
    """Ground-truth target image: albedo times clamped SH shading."""
    s = shade_sh(obj.normals, obj.mask, light)
    return LinearImage(obj.albedo * s[..., None])


def synth_fragment(obj, light=BUILD_LIGHT):
    """The observation a model is built from: image plus matte."""
    return render_truth(obj, light), obj.mask


def imse(target, rerender, mask):
    """Least-squares scale and mean squared error over the object region.

    Per-pixel squared residuals sum over channels; the mean divides by
    the pixel count n.  A zero re-render gets k = 0.
    """
    om = mask.omega
    t = target[om].astype(np.float64)
    r = rerender[om].astype(np.float64)
    rr = float(np.sum(r * r))
    if rr == 0.0:
        k = 0.0
    else:
        k = float(np.sum(t * r) / rr)
    resid = t - k * r
    if resid.ndim == 2:
        per_pixel = np.sum(resid**2, axis=1)
    else:
        per_pixel = resid**2
    return k, float(np.mean(per_pixel))


def model_imse(target, model, light, weight_mode="oracle", weights=None):
    """One evaluation record for a model under one light.

    weight_mode: "oracle" fits (k, w) jointly by least squares;
    "default" fixes w = (1, 1); "coarse" fixes w = (0, 0); "regress"
    uses the supplied predicted weights.  The scale k is closed-form in
    every mode.
    """
    coarse = quantize(
        reshade(model, light, WeightVector(0.0, 0.0))
    )  # reshade with zero weights is exactly the coarse shading
    if weight_mode == "oracle":
        k, w = oracle_weights(
            target.data, model.albedo, coarse, model.s_p, model.s_g, model.mask
        )
        rerender = model.albedo * (coarse + w.w_p * model.s_p + w.w_g * model.s_g)[..., None]
        k2, err = imse(target.data, rerender, model.mask)
        k = k2  # identical to the joint fit's scale; recomputed for the record
    elif weight_mode in ("default", "coarse"):
        w = WeightVector(1.0, 1.0) if weight_mode == "default" else WeightVector(0.0, 0.0)
        rerender = model.albedo * (coarse + w.w_p * model.s_p + w.w_g * model.s_g)[..., None]
        k, err = imse(target.data, rerender, model.mask)
    elif weight_mode == "regress":
        if weights is None:
            raise ImageError("regress mode needs predicted weights")
        w = WeightVector(*weights)
        rerender = model.albedo * (coarse + w.w_p * model.s_p + w.w_g * model.s_g)[..., None]
        k, err = imse(target.data, rerender, model.mask)
    else:
        raise ImageError(f"unknown weight mode {weight_mode!r}")
    return {
        "mode": weight_mode,
        "k": float(k),
        "w_p": float(w.w_p),
        "w_g": float(w.w_g),
        "imse": float(err),
        "n": int(model.mask.omega.sum()),
    }


@dataclass
class EvalReport:
    records: list = field(default_factory=list)

    def aggregate(self):
        means = {}
        for rec in self.records:
            means.setdefault(rec["mode"], []).append(rec["imse"])
        return {mode: float(np.mean(v)) for mode, v in sorted(means.items())}

    def to_table(self):
        lines = [
            f"{'object':>8} {'light':>6} {'mode':>8} {'k':>10} {'w_p':>8} "
            f"{'w_g':>8} {'imse':>12} {'n':>7}"
        ]
        for r in self.records:
            lines.append(
                f"{r['object']:>8} {r['light_seed']:>6} {r['mode']:>8} "
                f"{r['k']:>10.4f} {r['w_p']:>8.3f} {r['w_g']:>8.3f} "
                f"{r['imse']:>12.6f} {r['n']:>7}"
            )
        lines.append("")
        for mode, mean in self.aggregate().items():
            lines.append(f"mean[{mode}] = {mean:.6f}")
        return "\n".join(lines) + "\n"

    def save_records(self, path):
        with open(path, "w") as f:
            for r in self.records:
                f.write(json.dumps(r, sort_keys=True) + "\n")


def random_protocol_light(seed):
    """Monochrome SH light with a positive DC term, one per seed."""
    rng = np.random.default_rng(seed)
    c = np.empty(9)
    c[0] = rng.uniform(0.5, 1.5)
    c[1:] = rng.uniform(-0.3, 0.3, 8)
    return SH9(c)


def run_protocol(entries, n_lights=20, modes=("oracle", "default", "coarse", "regress"),
                 light_seed_base=1000):
    """Full cross product of objects and random SH lights, one record each.

    entries: list of (name, SyntheticObject, ObjectModel).  Regression
    weights for an object are predicted from all other objects' oracle
    records (leave-one-object-out), using the nearest-neighbor scheme in
    normalized illumination space.
    """
    lights = [
        (light_seed_base + i, random_protocol_light(light_seed_base + i))
        for i in range(n_lights)
    ]
    report = EvalReport()
    oracle_by_object = {}
    for name, obj, model in entries:
        pairs = []
        for lseed, light in lights:
            target = render_truth(obj, light)
            for mode in modes:
                if mode == "regress":
                    continue
                rec = model_imse(target, model, light, mode)
                rec.update({"object": name, "light_seed": lseed})
                report.records.append(rec)
                if mode == "oracle":
                    pairs.append((light, WeightVector(rec["w_p"], rec["w_g"])))
        oracle_by_object[name] = pairs

    if "regress" in modes:
        for name, obj, model in entries:
            training = [
                p for other, pairs in oracle_by_object.items() if other != name
                for p in pairs
            ]
            for lseed, light in lights:
                target = render_truth(obj, light)
                w = regress_weights(light, training)
                rec = model_imse(target, model, light, "regress", weights=w)
                rec.update({"object": name, "light_seed": lseed})
                report.records.append(rec)
    return report


def ingest_external_shape(model, depth, dictionary):
    """Swap in an externally supplied base shape and rebuild the layers.

    Normals are rederived from the depth by finite differences, the
    lights refit, and both detail layers rebuilt so the model's internal
    identities keep holding.  Supplying the model's own height is a
    no-op.  Depth values must be finite on at least 95% of the region.
    """
    om = model.mask.omega
    depth = np.asarray(depth, dtype=np.float64)
    if depth.shape != model.height.shape:
        raise ImageError("depth raster does not match the model dimensions")
    missing = ~np.isfinite(depth[om])
    if missing.mean() > 0.05:
        raise ImageError(
            f"depth has {missing.mean():.0%} missing samples in the object region"
        )
    if np.array_equal(depth, model.height):
        return model

    filled = depth.copy()
    if missing.any():
        med = float(np.median(depth[om][~missing]))
        hole = np.zeros(depth.shape, dtype=bool)
        hole[om] = missing
        filled[hole] = med
    filled = filled * om

    gy, gx = np.gradient(filled)
    normals = np.stack([-gx, -gy, np.ones_like(filled)], axis=-1)
    normals /= np.linalg.norm(normals, axis=2, keepdims=True)
    normals *= om[..., None]

    fit = fit_lights(model.shading, filled, normals, model.mask)
    draft = ObjectModel(
        albedo=model.albedo, shading=model.shading, height=filled,
        normals=normals, mask=model.mask, s_p=model.s_p, s_g=model.s_g,
        fitted_light=fit.fitted,
    )
    from .model import coarse_shading

    coarse = coarse_shading(draft, fit.fitted)
    s_p = parametric_residual(model.shading, coarse, model.mask)
    filtered = quantize(nonparametric_filter(model.shading, model.mask, dictionary))
    s_g = geometric_detail(model.shading, filtered, model.mask)
    metadata = dict(model.metadata)
    metadata["base_shape"] = "external"
    return ObjectModel(
        albedo=model.albedo, shading=model.shading, height=filled,
        normals=normals, mask=model.mask, s_p=s_p, s_g=s_g,
        fitted_light=fit.fitted, metadata=metadata,
    )


def load_mit_object(directory):
    """Adapter for MIT-intrinsic-style object directories.

    Expects diffuse.png and mask.png (plus an optional shading.png) named
    as in that dataset.  Returns (image, mask, shading-or-None).
    """
    diffuse_path = os.path.join(directory, "diffuse.png")
    mask_path = os.path.join(directory, "mask.png")
    if not (os.path.exists(diffuse_path) and os.path.exists(mask_path)):
        raise ImageError(f"{directory} lacks diffuse.png/mask.png")
    image = load_image(diffuse_path, transfer="srgb")
    mask = load_mask(mask_path)
    shading = None
    shading_path = os.path.join(directory, "shading.png")
    if os.path.exists(shading_path):
        s = load_image(shading_path, transfer="linear")
        shading = s.data if s.channels == 1 else s.data.mean(axis=2)
    return image, mask, shading
