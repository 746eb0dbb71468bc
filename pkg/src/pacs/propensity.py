"""Logistic propensity-score estimation by damped Newton (IRLS) MLE."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset

DEFAULT_CLIP = 1e-6
SEPARATION_BOUND = 30.0


class SeparationError(RuntimeError):
    """Complete or quasi-complete separation: the MLE diverges."""


def sigmoid(t):
    """Numerically stable logistic function."""
    t = np.asarray(t, dtype=np.float64)
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _log_likelihood(eta: np.ndarray, d: np.ndarray) -> float:
    # sum_i d_i eta_i - log(1 + exp(eta_i)), with a stable softplus
    return float(d @ eta - np.logaddexp(0.0, eta).sum())


def score(a: np.ndarray, d: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Analytic score of the Bernoulli log-likelihood: a'(d - sigmoid(a alpha))."""
    return a.T @ (d - sigmoid(a @ alpha))


def log_likelihood(a: np.ndarray, d: np.ndarray, alpha: np.ndarray) -> float:
    """Summed Bernoulli log-likelihood at coefficient vector alpha."""
    return _log_likelihood(a @ alpha, d)


@dataclass(frozen=True)
class PropensityFit:
    """Fitted logistic treatment model.

    ``alpha_hat`` holds the intercept first when ``include_intercept`` is
    set.  ``p_hat`` are fitted probabilities clipped to
    [clip_eps, 1 - clip_eps] so downstream inverse-probability weights
    stay finite.  ``ll_path`` records the log-likelihood after each
    Newton step (non-decreasing by construction).
    """

    alpha_hat: np.ndarray
    include_intercept: bool
    p_hat: np.ndarray
    converged: bool
    iterations: int
    log_likelihood: float
    clip_eps: float = DEFAULT_CLIP
    ll_path: tuple[float, ...] = field(default=(), repr=False)

    @property
    def n_covariates(self) -> int:
        return self.alpha_hat.shape[0] - (1 if self.include_intercept else 0)


def fit_logistic_matrix(
    x: np.ndarray,
    d: np.ndarray,
    include_intercept: bool = False,
    *,
    tol: float = 1e-8,
    max_iter: int = 100,
    clip_eps: float = DEFAULT_CLIP,
) -> PropensityFit:
    """Fit P(D=1|x) = sigmoid(x'alpha) by Newton's method with step halving.

    ``x`` may have zero columns; with ``include_intercept`` that reduces to
    the intercept-only model whose MLE is logit(mean(d)).  Convergence is
    declared when the score max-norm drops to ``tol``.  If any coefficient
    exceeds SEPARATION_BOUND in magnitude during iteration the data are
    (quasi-)separated and SeparationError is raised.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    d = np.asarray(d, dtype=np.float64)
    n = d.shape[0]
    if x.shape[0] != n:
        if x.size == 0:
            x = np.empty((n, 0))
        else:
            raise ValueError("x and d row counts differ")
    if include_intercept:
        a = np.hstack([np.ones((n, 1)), x])
    else:
        a = x
    k = a.shape[1]
    if n <= k:
        raise ValueError(f"need n > number of coefficients ({n} <= {k})")

    alpha = np.zeros(k)
    ll = _log_likelihood(a @ alpha, d)
    ll_path = [ll]
    converged = False
    updates = 0
    while updates < max_iter:
        p = sigmoid(a @ alpha)
        g = a.T @ (d - p)
        if k == 0 or np.max(np.abs(g)) <= tol:
            converged = True
            break
        w = np.maximum(p * (1.0 - p), 1e-10)
        h = (a * w[:, None]).T @ a
        try:
            step = np.linalg.solve(h, g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(h, g, rcond=None)[0]
        # step-halving line search keeps the likelihood non-decreasing
        t = 1.0
        improved = False
        for _ in range(50):
            trial = alpha + t * step
            ll_trial = _log_likelihood(a @ trial, d)
            if ll_trial >= ll:
                alpha, ll = trial, ll_trial
                improved = True
                break
            t *= 0.5
        if not improved:
            break  # no ascent left at this point; report as-is
        updates += 1
        ll_path.append(ll)
        if np.max(np.abs(alpha)) > SEPARATION_BOUND:
            raise SeparationError(
                "propensity coefficients diverged "
                f"(max |alpha| > {SEPARATION_BOUND:g}); data look separated"
            )
    else:
        converged = bool(k == 0 or np.max(np.abs(score(a, d, alpha))) <= tol)
    it = updates

    p_hat = np.clip(sigmoid(a @ alpha), clip_eps, 1.0 - clip_eps)
    return PropensityFit(
        alpha_hat=alpha,
        include_intercept=include_intercept,
        p_hat=p_hat,
        converged=converged,
        iterations=it,
        log_likelihood=ll,
        clip_eps=clip_eps,
        ll_path=tuple(ll_path),
    )


def fit_logistic(
    ds: Dataset,
    include_intercept: bool = False,
    *,
    tol: float = 1e-8,
    max_iter: int = 100,
    clip_eps: float = DEFAULT_CLIP,
) -> PropensityFit:
    """Fit the logistic propensity model on all covariates of a dataset."""
    if ds.n <= ds.p + (1 if include_intercept else 0):
        raise ValueError("need n > p for a well-posed propensity MLE")
    return fit_logistic_matrix(
        ds.x, ds.d, include_intercept,
        tol=tol, max_iter=max_iter, clip_eps=clip_eps,
    )


def predict_propensity(fit: PropensityFit, x_row: np.ndarray) -> float:
    """Propensity at a new covariate row, clipped like the training fit."""
    x_row = np.asarray(x_row, dtype=np.float64).ravel()
    if x_row.shape[0] != fit.n_covariates:
        raise ValueError(
            f"x_row has {x_row.shape[0]} entries, fit expects {fit.n_covariates}"
        )
    if fit.include_intercept:
        eta = fit.alpha_hat[0] + x_row @ fit.alpha_hat[1:]
    else:
        eta = x_row @ fit.alpha_hat
    p = float(sigmoid(np.asarray(eta)))
    return float(np.clip(p, fit.clip_eps, 1.0 - fit.clip_eps))
