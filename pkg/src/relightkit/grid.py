"""Sparse operators on masked pixel grids.

Shared by the log-shading Poisson solve and the height reconstruction:
both are least-squares problems over forward-difference edges whose
endpoints lie inside the object region.
"""

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import cg


def pixel_index(region):
    """Map each True pixel of a boolean region to a dense index."""
    idx = np.full(region.shape, -1, dtype=np.int64)
    idx[region] = np.arange(int(region.sum()))
    return idx


def forward_edges(region):
    """Forward-difference edges (p, q) with both endpoints in the region.

    Returns (src, dst) flat-pixel index pairs for x edges then y edges,
    as arrays of (row, col) coordinates.
    """
    r, c = np.nonzero(region)
    h, w = region.shape
    ex = (c + 1 < w) & region[r, np.minimum(c + 1, w - 1)]
    ey = (r + 1 < h) & region[np.minimum(r + 1, h - 1), c]
    x_src = (r[ex], c[ex])
    x_dst = (r[ex], c[ex] + 1)
    y_src = (r[ey], c[ey])
    y_dst = (r[ey] + 1, c[ey])
    return (x_src, x_dst), (y_src, y_dst)


def difference_matrix(region, index=None):
    """Sparse D with one row per in-region forward edge: (Dz)_e = z_q - z_p."""
    if index is None:
        index = pixel_index(region)
    (xs, xd), (ys, yd) = forward_edges(region)
    rows_src = np.concatenate([index[xs], index[ys]])
    rows_dst = np.concatenate([index[xd], index[yd]])
    n_edges = rows_src.size
    n = int(region.sum())
    ii = np.repeat(np.arange(n_edges), 2)
    jj = np.stack([rows_src, rows_dst], axis=1).ravel()
    vv = np.tile(np.array([-1.0, 1.0]), n_edges)
    return sparse.csr_matrix((vv, (ii, jj)), shape=(n_edges, n))


def solve_least_squares(D, b, rtol=1e-8, maxiter=10_000, x0=None):
    """Solve min ||Dz - b||^2 by CG on the normal equations."""
    A = (D.T @ D).tocsr()
    rhs = D.T @ b
    x, info = cg(A, rhs, x0=x0, rtol=rtol, maxiter=maxiter)
    if info > 0:
        # out of iterations; the iterate is still usable for our tolerances
        pass
    elif info < 0:
        raise RuntimeError("conjugate gradient failed on the normal equations")
    return x


def screened_smooth_matrix(region, index, fixed, tau):
    """(I + tau*L) on free pixels of the region, Dirichlet rows for fixed ones.

    L is the 4-neighbor graph Laplacian restricted to the region.  Returns
    (A, coupling) where coupling maps fixed-pixel values into the rhs.
    """
    n = int(region.sum())
    (xs, xd), (ys, yd) = forward_edges(region)
    src = np.concatenate([index[xs], index[ys]])
    dst = np.concatenate([index[xd], index[yd]])
    deg = np.zeros(n)
    np.add.at(deg, src, 1.0)
    np.add.at(deg, dst, 1.0)
    L = sparse.csr_matrix(
        (
            np.concatenate([deg, -np.ones(src.size), -np.ones(src.size)]),
            (
                np.concatenate([np.arange(n), src, dst]),
                np.concatenate([np.arange(n), dst, src]),
            ),
        ),
        shape=(n, n),
    )
    A = sparse.identity(n, format="csr") + tau * L
    free = ~fixed
    A_ff = A[free][:, free]
    A_fc = A[free][:, fixed]
    return A_ff.tocsr(), A_fc.tocsr()
