"""Coarse shape from a silhouette: normals, height field, and mesh.

The normal field is interpolated from outward boundary normals (held
fixed, with zero view-axis component) into the region by alternating a
screened-Laplace smoothing step with per-pixel renormalization; rounds
that would raise the discrete energy

    E(N) = sum_edges ||N_p - N_q||^2 + sum_pixels (||N||^2 - 1)^2

are damped or rejected, so the recorded energy trace never increases.
Height is then integrated from the normals by masked least squares with
the outline pinned at zero, which leaves a crease along the silhouette.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.sparse.linalg import factorized

from . import grid
from .images import ImageError, boundary_of

BOUNDARY_SMOOTH_SIGMA = 1.5
# Slope clamp: the crease makes N_z exactly zero on the outline, so rim
# slopes are 1/epsilon; 0.05 paired with trapezoid edge targets recovers
# a hemisphere's peak to about 1% (0.01 overshoots it wildly).
DEFAULT_EPSILON = 0.05


def boundary_normals(mask):
    """Outward in-plane unit normals at boundary pixels, shape (h, w, 3).

    Derived from the negated Gaussian-smoothed gradient of the mask
    indicator; pixels on the image frame get the outward frame normal.
    Rows are zero away from the boundary; every boundary normal has an
    exactly zero z component.
    """
    omega = mask.omega
    b = boundary_of(mask)
    indicator = omega.astype(np.float64)
    smooth = ndimage.gaussian_filter(indicator, BOUNDARY_SMOOTH_SIGMA, mode="constant")
    gy, gx = np.gradient(smooth)
    nx, ny = -gx, -gy

    h, w = omega.shape
    rows, cols = np.nonzero(b)
    vx = nx[rows, cols].copy()
    vy = ny[rows, cols].copy()

    # frame-touching runs take the outward image-frame normal
    fx = np.where(cols == 0, -1.0, 0.0) + np.where(cols == w - 1, 1.0, 0.0)
    fy = np.where(rows == 0, -1.0, 0.0) + np.where(rows == h - 1, 1.0, 0.0)
    on_frame = (fx != 0) | (fy != 0)
    vx[on_frame] = fx[on_frame]
    vy[on_frame] = fy[on_frame]

    norm = np.hypot(vx, vy)
    good = norm > 1e-12
    vx[good] /= norm[good]
    vy[good] /= norm[good]

    # degenerate gradients: average nearby boundary normals until filled
    if not np.all(good):
        bmap_x = np.zeros((h, w))
        bmap_y = np.zeros((h, w))
        bmap_x[rows[good], cols[good]] = vx[good]
        bmap_y[rows[good], cols[good]] = vy[good]
        filled = np.zeros((h, w), dtype=bool)
        filled[rows[good], cols[good]] = True
        for _ in range(max(h, w)):
            bad = np.nonzero(~good)[0]
            if bad.size == 0:
                break
            for i in bad:
                r, c = rows[i], cols[i]
                r0, r1 = max(0, r - 1), min(h, r + 2)
                c0, c1 = max(0, c - 1), min(w, c + 2)
                sel = filled[r0:r1, c0:c1]
                if not sel.any():
                    continue
                ax = bmap_x[r0:r1, c0:c1][sel].mean()
                ay = bmap_y[r0:r1, c0:c1][sel].mean()
                m = np.hypot(ax, ay)
                if m > 1e-12:
                    vx[i], vy[i] = ax / m, ay / m
                    bmap_x[r, c], bmap_y[r, c] = vx[i], vy[i]
                    filled[r, c] = True
                    good[i] = True
        if not np.all(good):
            # isolated leftovers: point away from the region centroid
            cr, cc = ndimage.center_of_mass(indicator)
            for i in np.nonzero(~good)[0]:
                dx, dy = cols[i] - cc, rows[i] - cr
                m = np.hypot(dx, dy)
                vx[i], vy[i] = (dx / m, dy / m) if m > 1e-12 else (0.0, -1.0)

    out = np.zeros((h, w, 3), dtype=np.float64)
    out[rows, cols, 0] = vx
    out[rows, cols, 1] = vy
    return out


@dataclass
class NormalSolution:
    """Interpolated unit normal field plus the optimization trace."""

    normals: np.ndarray
    energies: np.ndarray
    rounds: int
    converged: bool


def _energy(D, n_flat):
    dirichlet = sum(float(np.sum((D @ n_flat[:, c]) ** 2)) for c in range(3))
    unit = float(np.sum((np.sum(n_flat**2, axis=1) - 1.0) ** 2))
    return dirichlet + unit


def interpolate_normals(mask, boundary=None, tau=4.0, tol=1e-4, max_rounds=500):
    """Fill the region with unit normals matching the fixed boundary ring.

    Each round smooths the in-plane components implicitly ((I + tau*L)
    solve with boundary rows pinned) and renormalizes by lifting the z
    component to unit length, which keeps N_z nonnegative and, on a disk,
    converges to the hemisphere field.  A round that would raise the
    energy is retried with halved tau and discarded entirely if no
    damping helps, so the energy trace is non-increasing by construction.
    """
    omega = mask.omega
    b = boundary_of(mask)
    if boundary is None:
        boundary = boundary_normals(mask)

    index = grid.pixel_index(omega)
    fixed = b[omega]
    n = int(omega.sum())
    D = grid.difference_matrix(omega, index)

    current = np.zeros((n, 3), dtype=np.float64)
    current[:, 2] = 1.0
    current[fixed] = boundary[omega][fixed]

    solver_cache = {}

    def smooth_round(field, t):
        if t not in solver_cache:
            A_ff, A_fc = grid.screened_smooth_matrix(omega, index, fixed, t)
            solver_cache[t] = (factorized(A_ff.tocsc()), A_fc)
        solve, A_fc = solver_cache[t]
        cand = field.copy()
        fixed_vals = field[fixed]
        for c in range(2):
            rhs = field[~fixed, c] - A_fc @ fixed_vals[:, c]
            cand[~fixed, c] = solve(rhs)
        free = cand[~fixed]
        m2 = free[:, 0] ** 2 + free[:, 1] ** 2
        over = m2 > 1.0
        if over.any():
            free[over, :2] /= np.sqrt(m2[over, None])
        free[:, 2] = np.sqrt(np.maximum(0.0, 1.0 - np.minimum(m2, 1.0)))
        cand[~fixed] = free
        return cand

    energies = [_energy(D, current)]
    converged = False
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        t = tau
        accepted = None
        for _ in range(6):
            cand = smooth_round(current, t)
            e = _energy(D, cand)
            if e <= energies[-1] + 1e-12:
                accepted = (cand, e)
                break
            t /= 2.0
        if accepted is None:
            converged = True
            break
        cand, e = accepted
        delta = float(np.max(np.abs(cand - current)))
        current = cand
        energies.append(e)
        if delta < tol:
            converged = True
            break

    field = np.zeros(omega.shape + (3,), dtype=np.float64)
    field[omega] = current
    return NormalSolution(
        normals=field, energies=np.asarray(energies), rounds=rounds, converged=converged
    )


def reconstruct_height(normals, mask, epsilon=DEFAULT_EPSILON, rtol=1e-8, maxiter=10_000):
    """Integrate normals into a nonnegative height field, zero on the outline.

    Least-squares fit of forward differences to the normal-implied slopes
    -N_x / max(eps, N_z) and -N_y / max(eps, N_z), with boundary pixels
    held at zero (Dirichlet), solved by conjugate gradient.  Each edge
    target averages the slopes at its two endpoints (trapezoid rule).
    """
    if epsilon <= 0:
        raise ImageError("epsilon must be positive")
    omega = mask.omega
    b = boundary_of(mask)
    index = grid.pixel_index(omega)
    (xs, xd), (ys, yd) = grid.forward_edges(omega)

    nz = np.maximum(normals[..., 2], epsilon)
    gx = -(normals[..., 0] / nz)
    gy = -(normals[..., 1] / nz)
    targets = np.concatenate([(gx[xs] + gx[xd]) / 2.0, (gy[ys] + gy[yd]) / 2.0])

    D = grid.difference_matrix(omega, index)
    interior = ~b[omega]
    if not interior.any():
        return np.zeros(omega.shape, dtype=np.float64)
    A = D[:, interior].tocsr()
    z = grid.solve_least_squares(A, targets, rtol=rtol, maxiter=maxiter)
    z = np.maximum(z, 0.0)

    out = np.zeros(omega.shape, dtype=np.float64)
    vals = np.zeros(int(omega.sum()))
    vals[interior] = z
    out[omega] = vals
    return out


@dataclass
class Mesh:
    """Triangle mesh with per-vertex image-plane texture coordinates."""

    vertices: np.ndarray
    faces: np.ndarray
    uvs: np.ndarray

    def write_obj(self, path):
        lines = []
        for v in self.vertices:
            lines.append(f"v {v[0]:.6f} {v[1]:.6f} {v[2]:.6f}")
        for t in self.uvs:
            lines.append(f"vt {t[0]:.6f} {t[1]:.6f}")
        for f in self.faces:
            a, b, c = (int(i) + 1 for i in f)
            lines.append(f"f {a}/{a} {b}/{b} {c}/{c}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def export_mesh(height, mask, focal="orthographic", extrude=0.0):
    """Closed mesh from the height field: front sheet, mirrored back sheet.

    Front faces wind counterclockwise (positive z normal).  The front
    sheet is eased toward the focal point by its height; the back sheet
    is the z-mirror pushed further back by `extrude`, tapered linearly to
    zero at the silhouette.  The two sheets are stitched along the rim by
    a band of side faces (zero-area wherever the rim height is zero), so
    every edge is shared by exactly two faces.
    """
    if extrude < 0:
        raise ImageError("extrude must be nonnegative")
    omega = mask.omega
    h, w = omega.shape
    cells = omega[:-1, :-1] & omega[:-1, 1:] & omega[1:, :-1] & omega[1:, 1:]
    cr, cc = np.nonzero(cells)
    if cr.size == 0:
        raise ImageError("mask has no fully interior 2x2 cell to triangulate")

    def vid(r, c):
        return r * w + c

    quad = np.stack(
        [vid(cr, cc), vid(cr, cc + 1), vid(cr + 1, cc + 1), vid(cr + 1, cc)], axis=1
    )
    tris = np.concatenate([quad[:, [0, 1, 2]], quad[:, [0, 2, 3]]], axis=0)

    used = np.unique(tris)
    remap = np.full(h * w, -1, dtype=np.int64)
    remap[used] = np.arange(used.size)
    front_faces = remap[tris]
    rows, cols = used // w, used % w
    n_front = used.size

    zs = height[rows, cols]
    front = np.stack([cols.astype(np.float64), rows.astype(np.float64), zs], axis=1)

    if focal != "orthographic":
        f = np.asarray(focal, dtype=np.float64)
        if f.shape != (3,):
            raise ImageError("focal must be 'orthographic' or a 3-vector")
        pf = front.copy()
        pf[:, 2] = 0.0
        d = f[None, :] - pf
        dn = np.linalg.norm(d, axis=1)
        if np.any(dn < 1e-9):
            raise ImageError("focal point coincides with a surface vertex")
        front = pf + zs[:, None] * (d / dn[:, None])

    dist = ndimage.distance_transform_edt(omega)
    dmax = float(dist.max())
    taper = dist[rows, cols] / dmax if dmax > 0 else np.zeros(n_front)

    back = front.copy()
    back[:, 2] = -zs - extrude * taper

    # directed boundary edges of the front sheet (no opposite twin)
    directed = set()
    for face in front_faces:
        for a, b in ((face[0], face[1]), (face[1], face[2]), (face[2], face[0])):
            directed.add((int(a), int(b)))
    band = []
    for a, b in directed:
        if (b, a) not in directed:
            band.append([b, a, a + n_front])
            band.append([b, a + n_front, b + n_front])

    vertices = np.concatenate([front, back], axis=0)
    back_faces = front_faces[:, ::-1] + n_front
    faces = np.concatenate(
        [front_faces, back_faces, np.asarray(band, dtype=np.int64)], axis=0
    )

    uu = cols / max(w - 1, 1)
    vv = 1.0 - rows / max(h - 1, 1)
    uvs_front = np.stack([uu, vv], axis=1)
    uvs = np.concatenate([uvs_front, uvs_front], axis=0)
    return Mesh(vertices=vertices, faces=faces, uvs=uvs)
