"""Build a relightable model from a synthetic fragment and relight it.

Walks the full pipeline on one generated object: intrinsic split,
contour shape, light fit, detail layers — then renders the model under
a sweep of new lights and writes PNGs to demos/out/.

Run from the repository root:  python demos/build_and_relight.py
"""

import os
import time

import numpy as np

from relightkit import PointLightMix, SH9, build_model, save_model
from relightkit.detail_layers import train_dictionary
from relightkit.evaluation import synth_fragment, synth_object
from relightkit.render import relight_png

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

# A small dictionary is plenty for a demo; the full 500-atom training is
# what `relightkit train-dict` does.
print("training a compact patch dictionary on smooth renders...")
from relightkit.cli import synthetic_corpus

t0 = time.time()
dictionary = train_dictionary(
    synthetic_corpus(seed=7, n_images=12, size=96),
    atom_count=250, max_patches=2500, coding_sweeps=4,
)
print(f"  done in {time.time() - t0:.0f}s "
      f"(objective {dictionary.objectives[0]:.1f} -> {dictionary.objectives[-1]:.1f})")

print("synthesizing a fragment and building its model...")
obj = synth_object(seed=11, size=128)
image, mask = synth_fragment(obj)
t0 = time.time()
model, summary = build_model(image, mask, dictionary)
print(f"  built in {time.time() - t0:.0f}s; light-fit rmse "
      f"{summary.fit_initial_rmse:.4f} -> {summary.fit_final_rmse:.4f}")
print(f"  detail layers: rms(s_p) = {summary.rms_s_p:.4f}, rms(s_g) = {summary.rms_s_g:.4f}")

save_model(model, os.path.join(OUT, "demo_model"))

# the fitted light with weights (1, 0) reproduces the original fragment
with open(os.path.join(OUT, "self_reconstruction.png"), "wb") as f:
    f.write(relight_png(model, model.fitted_light, w_p=1.0, w_g=0.0))

# sweep the dominant light direction across the sky
for i, (name, coeffs) in enumerate([
    ("ambient", [1.0, 0, 0, 0, 0, 0, 0, 0, 0]),
    ("from_left", [0.8, 0, 0.25, -0.45, 0, 0, 0, 0, 0]),
    ("from_right", [0.8, 0, 0.25, 0.45, 0, 0, 0, 0, 0]),
    ("from_top", [0.8, -0.45, 0.25, 0, 0, 0, 0, 0, 0]),
]):
    png = relight_png(model, SH9(coeffs), w_p=1.0, w_g=1.0)
    with open(os.path.join(OUT, f"sh_{i}_{name}.png"), "wb") as f:
        f.write(png)

# and one harsh point-light mixture
c = (model.mask.width - 1) / 2
points = PointLightMix(
    positions=np.array([
        [c - 180, c, 120.0],
        [c + 60, c - 150, 180.0],
        [c, c, 400.0],
        [1e5, 1e5, 1e5],
        [1e5, 1e5, 1e5],
    ]),
    intensities=np.array([0.9, 0.5, 0.3, 0.0, 0.0]),
)
with open(os.path.join(OUT, "points_harsh.png"), "wb") as f:
    f.write(relight_png(model, points, w_p=1.0, w_g=1.0))

# detail weights change the character of the same light
for wp, wg in [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.5, 2.0)]:
    png = relight_png(model, SH9([0.8, 0, 0.25, -0.45, 0, 0, 0, 0, 0]), wp, wg)
    with open(os.path.join(OUT, f"weights_{wp}_{wg}.png"), "wb") as f:
        f.write(png)

print(f"renders written to {OUT}")
