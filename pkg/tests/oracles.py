"""Independent oracles used by the test suite.

Every solver here deliberately avoids the library's coordinate-descent /
Newton code paths: proximal-gradient (ISTA/FISTA) iterations, brute-force
grid enumeration, golden-section search, and explicit matrix inversion.
"""

from __future__ import annotations

import itertools

import numpy as np


def penalized_value(x, y, beta, omega, lam):
    """Objective ||y - X beta||^2 + lam * sum_j omega_j |beta_j| (pinned
    coordinates contribute zero by convention since beta_j = 0)."""
    free = np.isfinite(omega)
    resid = y - x @ beta
    return float(resid @ resid) + lam * float(omega[free] @ np.abs(beta[free]))


def ista_lasso(x, y, omega, lam, beta0=None, max_iter=500_000, tol=1e-14):
    """Proximal-gradient minimizer of the (transformed-scale) lasso."""
    p = x.shape[1]
    free = np.isfinite(omega)
    gram_norm = np.linalg.norm(x.T @ x, 2)
    step = 1.0 / (2.0 * max(gram_norm, 1e-12))
    beta = np.zeros(p) if beta0 is None else np.asarray(beta0, dtype=float).copy()
    beta[~free] = 0.0
    for _ in range(max_iter):
        grad = -2.0 * (x.T @ (y - x @ beta))
        z = beta - step * grad
        new = np.zeros(p)
        t = step * lam * omega[free]
        zf = z[free]
        new[free] = np.sign(zf) * np.maximum(np.abs(zf) - t, 0.0)
        if np.max(np.abs(new - beta)) <= tol * (1.0 + np.max(np.abs(new))):
            return new
        beta = new
    return beta


def fista_weighted_lasso(x, y, w, omega, lam, max_iter=500_000, tol=1e-13):
    """Proximal-gradient minimizer of the *raw* weighted objective

        sum_i w_i (y_i - eta - beta'x_i)^2 + lam * sum_j omega_j |beta_j|

    over (eta, beta), with the intercept unpenalized.  Used to check the
    centering-transform equivalence against an untransformed solve.
    """
    n, p = x.shape
    a = np.hstack([np.ones((n, 1)), x])
    aw = a * w[:, None]
    lip = 2.0 * np.linalg.norm(a.T @ aw, 2)
    step = 1.0 / max(lip, 1e-12)
    free = np.isfinite(omega)
    theta = np.zeros(p + 1)
    point = theta.copy()
    t_acc = 1.0
    for _ in range(max_iter):
        grad = -2.0 * (aw.T @ (y - a @ point))
        z = point - step * grad
        new = z.copy()
        thr = step * lam * omega[free]
        zf = z[1:][free]
        new_beta = np.zeros(p)
        new_beta[free] = np.sign(zf) * np.maximum(np.abs(zf) - thr, 0.0)
        new[1:] = new_beta
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_acc * t_acc))
        point = new + ((t_acc - 1.0) / t_next) * (new - theta)
        done = np.max(np.abs(new - theta)) <= tol * (1.0 + np.max(np.abs(new)))
        theta = new
        t_acc = t_next
        if done:
            break
    return theta[0], theta[1:]


def grid_refine_lasso(x, y, omega, lam, lo=-3.0, hi=3.0,
                      coarse=0.05, fine=0.001, chunk=200_000):
    """Two-stage exhaustive grid search plus proximal refinement.

    Scans [lo, hi]^p at the coarse step, rescans a +-coarse box around
    that minimizer at the fine step, then polishes with ISTA starting
    from the best grid point.  Only sensible for p <= 3.
    """
    p = x.shape[1]
    free = np.isfinite(omega)

    def scan(axes):
        best_val = np.inf
        best_pt = None
        grids = [np.asarray(ax) for ax in axes]
        total = 1
        for gax in grids:
            total *= gax.size
        combos = itertools.product(*grids)
        while True:
            block = list(itertools.islice(combos, chunk))
            if not block:
                break
            pts = np.array(block)
            pts[:, ~free] = 0.0
            resid = y[None, :] - pts @ x.T
            vals = np.einsum("ij,ij->i", resid, resid)
            vals += lam * (np.abs(pts[:, free]) @ omega[free])
            k = int(np.argmin(vals))
            if vals[k] < best_val:
                best_val = float(vals[k])
                best_pt = pts[k]
        return best_pt, best_val

    coarse_axes = [np.arange(lo, hi + 0.5 * coarse, coarse)] * p
    pt, _ = scan(coarse_axes)
    fine_axes = [np.arange(c - coarse, c + coarse + 0.5 * fine, fine) for c in pt]
    pt, _ = scan(fine_axes)
    beta = ista_lasso(x, y, omega, lam, beta0=pt)
    return beta, penalized_value(x, y, beta, omega, lam)


def golden_section_logistic(x1d, d, lo=-20.0, hi=20.0, tol=1e-10):
    """1-D maximizer of the Bernoulli log-likelihood by golden-section
    search (no gradients, no Newton steps)."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0

    def nll(a):
        eta = a * x1d
        return float(np.logaddexp(0.0, eta).sum() - d @ eta)

    a, b = lo, hi
    c = b - invphi * (b - a)
    e = a + invphi * (b - a)
    fc, fe = nll(c), nll(e)
    while abs(b - a) > tol:
        if fc < fe:
            b, e, fe = e, c, fc
            c = b - invphi * (b - a)
            fc = nll(c)
        else:
            a, c, fc = c, e, fe
            e = a + invphi * (b - a)
            fe = nll(e)
    return 0.5 * (a + b)


def wls_by_inversion(x, y, w):
    """Weighted OLS with intercept via an explicit matrix inverse."""
    a = np.hstack([np.ones((x.shape[0], 1)), x])
    m = a.T @ (a * w[:, None])
    b = a.T @ (w * y)
    theta = np.linalg.inv(m) @ b
    return float(theta[0]), theta[1:]
