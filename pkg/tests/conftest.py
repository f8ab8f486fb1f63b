import numpy as np
import pytest

from relightkit.images import Mask
from relightkit.contour_shape import interpolate_normals
from relightkit.lights import SH9, shade_sh
from relightkit.detail_layers import train_dictionary


def sfc_ellipse(size, rx, ry):
    c = (size - 1) / 2
    yy, xx = np.mgrid[0:size, 0:size]
    om = ((xx - c) / rx) ** 2 + ((yy - c) / ry) ** 2 <= 1.0
    mask = Mask(om.astype(float))
    return mask, interpolate_normals(mask).normals


def random_sh(rng):
    c = np.zeros(9)
    c[0] = rng.uniform(0.5, 1.5)
    c[1:] = rng.uniform(-0.3, 0.3, 8)
    return SH9(c)


def smooth_shading_corpus(n_shapes=5, per_shape=4, size=128, seed=42):
    """Rendered coarse contour shapes under random SH lights."""
    rng = np.random.default_rng(seed)
    radii = [(50, 50), (55, 40), (40, 55), (52, 46), (45, 52)][:n_shapes]
    corpus = []
    for rx, ry in radii:
        mask, normals = sfc_ellipse(size, rx, ry)
        for _ in range(per_shape):
            corpus.append((shade_sh(normals, mask, random_sh(rng)), mask))
    return corpus


@pytest.fixture(scope="session")
def shading_corpus():
    return smooth_shading_corpus()


@pytest.fixture(scope="session")
def smooth_dictionary(shading_corpus):
    """One trained dictionary shared across the whole test session."""
    return train_dictionary(shading_corpus[:-4], seed=0, max_patches=4000,
                            coding_sweeps=5)
