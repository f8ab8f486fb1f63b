"""Fit the 5-source point-light mixture to an observed shading image.

Levenberg-Marquardt on the masked pixel residuals with a forward
finite-difference Jacobian; intensities ride as squares of free
variables so they stay nonnegative without bounds.  Only improving
steps are accepted, so the recorded cost trace never increases.
"""

from dataclasses import dataclass, field

import numpy as np

from .lights import PointLightMix, shade_points

FD_STEP = 1e-4
MAX_ITERATIONS = 200
REL_COST_TOL = 1e-6


@dataclass
class FitReport:
    fitted: PointLightMix
    initial_rmse: float
    final_rmse: float
    iterations: int
    converged: bool
    cost_history: np.ndarray = field(default=None, repr=False)


def default_init(shading, mask, height=None):
    """Five sources covering the major directions: frontal and four sides.

    Sources sit at twice the larger image dimension from the region
    centroid; the side sources are lifted 30 degrees toward the viewer so
    they light the front.  Intensities are set so each source alone would
    produce roughly mean(S)/5 on a flat patch.
    """
    om = mask.omega
    rows, cols = np.nonzero(om)
    cy, cx = rows.mean(), cols.mean()
    d = 2.0 * max(mask.width, mask.height)
    lift = np.deg2rad(30.0)
    cl, sl = np.cos(lift), np.sin(lift)
    dirs = np.array(
        [
            [0.0, 0.0, 1.0],
            [cl, 0.0, sl],
            [-cl, 0.0, sl],
            [0.0, cl, sl],
            [0.0, -cl, sl],
        ]
    )
    positions = np.array([cx, cy, 0.0])[None, :] + d * dirs
    mean_s = float(np.mean(shading[om]))
    intensities = np.array([(mean_s / 5.0) / max(dz, 1e-6) for dz in dirs[:, 2]])
    return PointLightMix(positions, np.maximum(intensities, 0.0))


def _pack(lights):
    return np.concatenate([lights.positions.ravel(), np.sqrt(lights.intensities)])


def _unpack(theta):
    return PointLightMix(theta[:15].reshape(5, 3), theta[15:] ** 2)


def fit_lights(shading, height, normals, mask, init="default",
               max_iterations=MAX_ITERATIONS, rel_tol=REL_COST_TOL):
    om = mask.omega
    target = shading[om]

    if not np.any(target != 0.0):
        # nothing to explain: all intensities at zero is the exact optimum
        zero = PointLightMix(default_init(shading, mask).positions, np.zeros(5))
        return FitReport(
            fitted=zero, initial_rmse=0.0, final_rmse=0.0, iterations=0,
            converged=True, cost_history=np.zeros(1),
        )

    lights0 = default_init(shading, mask) if init == "default" else init
    theta = _pack(lights0)

    def residual(t):
        return shade_points(height, normals, mask, _unpack(t))[om] - target

    r = residual(theta)
    cost = float(r @ r)
    history = [cost]
    n_pix = target.size

    lam = 1e-3
    iterations = 0
    converged = False
    n_par = theta.size
    for iterations in range(1, max_iterations + 1):
        J = np.empty((n_pix, n_par))
        for j in range(n_par):
            step = FD_STEP * max(1.0, abs(theta[j]))
            tp = theta.copy()
            tp[j] += step
            J[:, j] = (residual(tp) - r) / step
        g = J.T @ r
        H = J.T @ J

        improved = False
        for _ in range(12):
            try:
                delta = np.linalg.solve(H + lam * np.diag(np.maximum(np.diag(H), 1e-12)), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = theta + delta
            r_trial = residual(trial)
            cost_trial = float(r_trial @ r_trial)
            if cost_trial < cost:
                rel_drop = (cost - cost_trial) / max(cost, 1e-300)
                theta, r, cost = trial, r_trial, cost_trial
                history.append(cost)
                lam = max(lam / 3.0, 1e-12)
                improved = True
                if rel_drop < rel_tol:
                    converged = True
                break
            lam *= 10.0
        if not improved:
            converged = True
            break
        if converged:
            break

    history = np.asarray(history)
    return FitReport(
        fitted=_unpack(theta),
        initial_rmse=float(np.sqrt(history[0] / n_pix)),
        final_rmse=float(np.sqrt(cost / n_pix)),
        iterations=iterations,
        converged=converged,
        cost_history=history,
    )
