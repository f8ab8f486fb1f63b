"""Command-line front end.

One binary, subcommand style.  Exit codes: 0 on success, 1 when a
computation fails, 2 on usage errors (click's default).
"""

import os
import sys

import click
import numpy as np

from .build import BuildConfig, BuildError, build_model
from .contour_shape import DEFAULT_EPSILON, export_mesh
from .detail_layers import (
    ATOM_COUNT,
    DEFAULT_LAMBDA,
    PATCH_SIZE,
    load_dictionary,
    save_dictionary,
    train_dictionary,
)
from .images import ImageError, LinearImage, Mask, load_image, load_mask, save_pfm
from .lights import LightError, load_light
from .model import load_model, save_model, final_composite
from .render import relight_composite, relight_png
from .retinex import DEFAULT_CHROMA_THRESHOLD


class ComputationError(click.ClickException):
    exit_code = 1


def _fail(e):
    raise ComputationError(str(e))


def _load_dict(path):
    base, _ = os.path.splitext(path)
    meta = base + ".json"
    if not os.path.exists(meta):
        _fail(f"dictionary sidecar {meta} not found")
    return load_dictionary(path, meta)


def synthetic_corpus(seed, n_images, size=128):
    """Smooth shading corpus: contour shapes rendered under random SH."""
    from .contour_shape import interpolate_normals
    from .evaluation import random_protocol_light
    from .lights import shade_sh

    rng = np.random.default_rng(seed)
    radii = [(50, 50), (55, 40), (40, 55), (52, 46), (45, 52)]
    corpus = []
    i = 0
    while len(corpus) < n_images:
        rx, ry = radii[i % len(radii)]
        c = (size - 1) / 2
        yy, xx = np.mgrid[0:size, 0:size]
        om = ((xx - c) / rx) ** 2 + ((yy - c) / ry) ** 2 <= 1.0
        mask = Mask(om.astype(float))
        normals = interpolate_normals(mask).normals
        for _ in range(4):
            if len(corpus) >= n_images:
                break
            light = random_protocol_light(int(rng.integers(0, 2**31)))
            corpus.append((shade_sh(normals, mask, light), mask))
        i += 1
    return corpus


@click.group()
def main():
    """Build, relight, composite, and evaluate fragment-based object models."""


@main.command()
@click.option("--image", "image_path", required=True, type=click.Path(exists=True))
@click.option("--mask", "mask_path", required=True, type=click.Path(exists=True))
@click.option("--dict", "dict_path", required=True, type=click.Path(exists=True),
              help="Patch dictionary (.pfm with a .json sidecar).")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--chroma-threshold", default=DEFAULT_CHROMA_THRESHOLD, show_default=True)
@click.option("--epsilon", default=DEFAULT_EPSILON, show_default=True,
              help="Slope clamp for the height solve.")
@click.option("--fit-iterations", default=200, show_default=True)
def build(image_path, mask_path, dict_path, out_dir, chroma_threshold, epsilon,
          fit_iterations):
    """Build a relightable model directory from a fragment and its matte."""
    try:
        image = load_image(image_path, transfer="srgb")
        mask = load_mask(mask_path)
        dictionary = _load_dict(dict_path)
        config = BuildConfig(
            chroma_threshold=chroma_threshold,
            epsilon=epsilon,
            fit_iterations=fit_iterations,
            extra_metadata={"source_image": os.path.basename(image_path),
                            "source_mask": os.path.basename(mask_path)},
        )
        model, summary = build_model(image, mask, dictionary, config)
        save_model(model, out_dir)
    except (ImageError, BuildError, ValueError) as e:
        _fail(e)
    click.echo(f"model written to {out_dir}")
    click.echo(
        f"light fit: rmse {summary.fit_initial_rmse:.5f} -> {summary.fit_final_rmse:.5f} "
        f"in {summary.fit_iterations} iterations"
        f"{'' if summary.fit_converged else ' (not converged)'}"
    )
    click.echo(f"layer rms: s_p {summary.rms_s_p:.5f}, s_g {summary.rms_s_g:.5f}")


@main.command()
@click.option("--model", "model_dir", required=True, type=click.Path(exists=True))
@click.option("--light", "light_path", required=True, type=click.Path(exists=True))
@click.option("--wp", default=1.0, show_default=True)
@click.option("--wg", default=1.0, show_default=True)
@click.option("--exposure", default=1.0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def relight(model_dir, light_path, wp, wg, exposure, out_path):
    """Relight a model under a light record; write PNG (sRGB) or PFM (raw)."""
    try:
        model = load_model(model_dir)
        light = load_light(light_path)
        if out_path.lower().endswith(".pfm"):
            save_pfm(relight_composite(model, light, wp, wg), out_path)
        else:
            png = relight_png(model, light, wp, wg, exposure)
            with open(out_path, "wb") as f:
                f.write(png)
    except (ImageError, LightError) as e:
        _fail(e)
    click.echo(f"wrote {out_path}")


@main.command()
@click.option("--target", required=True, type=click.Path(exists=True))
@click.option("--render", required=True, type=click.Path(exists=True))
@click.option("--empty", required=True, type=click.Path(exists=True))
@click.option("--mask", "mask_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def composite(target, render, empty, mask_path, out_path):
    """Final scene composite from target, with-object, and empty renders."""
    try:
        t = load_image(target, transfer="srgb")
        r = load_image(render, transfer="srgb")
        e = load_image(empty, transfer="srgb")
        m = load_mask(mask_path)
        out = final_composite(t, r, e, m)
        if out_path.lower().endswith(".pfm"):
            save_pfm(out, out_path)
        else:
            from .images import save_png

            save_png(out, out_path, transfer="srgb")
    except ImageError as e:
        _fail(e)
    click.echo(f"wrote {out_path}")


@main.command()
@click.option("--model", "model_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--focal", default="ortho", show_default=True,
              help="'ortho' or a focal point 'x,y,z'.")
@click.option("--extrude", default=0.0, show_default=True)
def mesh(model_dir, out_path, focal, extrude):
    """Export the model's closed triangle mesh as Wavefront OBJ."""
    try:
        model = load_model(model_dir)
        if focal in ("ortho", "orthographic"):
            focal_arg = "orthographic"
        else:
            parts = focal.split(",")
            if len(parts) != 3:
                raise click.UsageError("--focal expects 'x,y,z' or 'ortho'")
            focal_arg = tuple(float(p) for p in parts)
        m = export_mesh(model.height, model.mask, focal=focal_arg, extrude=extrude)
        m.write_obj(out_path)
    except ImageError as e:
        _fail(e)
    click.echo(f"wrote {out_path} ({len(m.vertices)} vertices, {len(m.faces)} faces)")


@main.command("train-dict")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Output .pfm path; a .json sidecar is written next to it.")
@click.option("--corpus-seed", default=42, show_default=True)
@click.option("--images", "n_images", default=16, show_default=True)
@click.option("--lam", default=DEFAULT_LAMBDA, show_default=True)
@click.option("--atoms", default=ATOM_COUNT, show_default=True)
@click.option("--patch-size", default=PATCH_SIZE, show_default=True)
@click.option("--seed", default=0, show_default=True)
def train_dict(out_path, corpus_seed, n_images, lam, atoms, patch_size, seed):
    """Train a patch dictionary on synthetic smooth shading images."""
    try:
        corpus = synthetic_corpus(corpus_seed, n_images)
        d = train_dictionary(corpus, atom_count=atoms, lam=lam,
                             patch_size=patch_size, seed=seed)
        base, _ = os.path.splitext(out_path)
        save_dictionary(d, out_path, base + ".json")
    except Exception as e:  # noqa: BLE001
        _fail(e)
    click.echo(f"wrote {out_path} (objective {d.objectives[0]:.3f} -> {d.objectives[-1]:.3f})")


@main.command("eval")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--dict", "dict_path", type=click.Path(exists=True),
              help="Dictionary to reuse; trains a fresh one when omitted.")
@click.option("--objects", default=5, show_default=True)
@click.option("--lights", default=20, show_default=True)
@click.option("--size", default=128, show_default=True)
@click.option("--light-seed-base", default=1000, show_default=True)
@click.option("--modes", default="oracle,default,coarse,regress", show_default=True)
@click.option("--mit-dir", type=click.Path(exists=True),
              help="Evaluate MIT-intrinsic-style object directories instead.")
def eval_cmd(out_dir, dict_path, objects, lights, size, light_seed_base, modes,
             mit_dir):
    """Run the re-rendering error protocol and write report files."""
    from . import evaluation as ev

    try:
        os.makedirs(out_dir, exist_ok=True)
        dictionary = (
            _load_dict(dict_path)
            if dict_path
            else train_dictionary(synthetic_corpus(42, 16), seed=0)
        )
        mode_list = tuple(m.strip() for m in modes.split(",") if m.strip())
        if mit_dir:
            report = _eval_mit(mit_dir, dictionary)
        else:
            entries = []
            for seed in range(objects):
                obj = ev.synth_object(seed, size)
                img, mask = ev.synth_fragment(obj)
                model, _ = build_model(img, mask, dictionary)
                entries.append((f"obj{seed}", obj, model))
            report = ev.run_protocol(entries, n_lights=lights, modes=mode_list,
                                     light_seed_base=light_seed_base)
        with open(os.path.join(out_dir, "report.txt"), "w") as f:
            f.write(report.to_table())
        report.save_records(os.path.join(out_dir, "records.jsonl"))
    except (ImageError, BuildError) as e:
        _fail(e)
    click.echo(report.to_table())
    click.echo(f"report written to {out_dir}")


def _eval_mit(mit_dir, dictionary):
    """Self-reconstruction scores for real captures (no ground-truth lights)."""
    from . import evaluation as ev
    from .model import WeightVector, reshade

    report = ev.EvalReport()
    names = sorted(
        d for d in os.listdir(mit_dir) if os.path.isdir(os.path.join(mit_dir, d))
    )
    if not names:
        raise ImageError(f"{mit_dir} has no object subdirectories")
    for name in names:
        image, mask, _ = ev.load_mit_object(os.path.join(mit_dir, name))
        model, _ = build_model(image, mask, dictionary)
        target = ev.LinearImage(image.data)
        for mode, w in (("default", WeightVector(1.0, 1.0)),
                        ("coarse", WeightVector(0.0, 0.0))):
            s = reshade(model, model.fitted_light, w)
            rerender = model.albedo * np.maximum(s, 0.0)[..., None]
            k, err = ev.imse(target.data, rerender, model.mask)
            report.records.append({
                "object": name, "light_seed": -1, "mode": mode, "k": k,
                "w_p": w.w_p, "w_g": w.w_g, "imse": err,
                "n": int(model.mask.omega.sum()),
            })
    return report


@main.command()
@click.option("--model", "model_dir", required=True, type=click.Path(exists=True))
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--studio-dir", type=click.Path(), default=None,
              help="Directory with built studio assets (defaults to ./frontend/dist).")
def serve(model_dir, port, host, studio_dir):
    """Serve the relight API and the studio front end."""
    import uvicorn

    from .service import create_app

    try:
        model = load_model(model_dir)
    except ImageError as e:
        _fail(e)
    if studio_dir is None:
        candidate = os.path.join(os.getcwd(), "frontend", "dist")
        studio_dir = candidate if os.path.isdir(candidate) else None
    app = create_app(model, studio_dir=studio_dir)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
