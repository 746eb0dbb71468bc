"""Two-step covariate selection and IPW treatment-effect estimation.

Pipeline: logistic propensity fit on all covariates; per-arm IPW-weighted
pilot least squares; per-arm centering transform; per-arm (lambda, gamma)
cross-validated adaptive lasso; AND/OR combination of the two arms'
supports; logistic refit on the selected set; Hajek-form IPW estimate of
the average treatment effect.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset, GroupView, split_groups
from .penalized import (
    DEFAULT_FOLDS,
    DEFAULT_GAMMA_GRID,
    DEFAULT_LAMBDA_GRID_SIZE,
    DEFAULT_LAMBDA_MIN_RATIO,
    PenalizedFit,
    WlsFit,
    adaptive_lasso,
    adaptive_weights,
    arm_weights,
    center_transform,
    cross_validate,
    standardize_sample,
    weighted_ols,
)
from .propensity import DEFAULT_CLIP, PropensityFit, fit_logistic, fit_logistic_matrix

DEFAULT_SEED = 1729

RULE_AND = "and"
RULE_OR = "or"


@dataclass(frozen=True)
class PacsConfig:
    """Tuning knobs of the selection pipeline.

    ``seed`` only drives the deterministic CV fold assignment; the
    pipeline itself is deterministic given (dataset, config).
    """

    gamma_grid: tuple[float, ...] = DEFAULT_GAMMA_GRID
    lambda_grid_size: int = DEFAULT_LAMBDA_GRID_SIZE
    lambda_min_ratio: float = DEFAULT_LAMBDA_MIN_RATIO
    cv_folds: int = DEFAULT_FOLDS
    rule: str = RULE_AND
    intercept_in_propensity: bool = False
    clip_epsilon: float = DEFAULT_CLIP
    standardize: bool = False
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.rule not in (RULE_AND, RULE_OR):
            raise ValueError(f"rule must be 'and' or 'or', got {self.rule!r}")
        if not (0.0 < self.clip_epsilon < 0.1):
            raise ValueError("clip_epsilon must lie in (0, 0.1)")
        if self.cv_folds < 2:
            raise ValueError("cv_folds must be >= 2")
        if len(self.gamma_grid) == 0 or any(g <= 0 for g in self.gamma_grid):
            raise ValueError("gamma_grid entries must be positive")
        if self.lambda_grid_size < 1:
            raise ValueError("lambda_grid_size must be >= 1")


@dataclass(frozen=True)
class AteEstimate:
    """Hajek-form IPW average-treatment-effect estimate."""

    value: float
    n_treated: int
    n_control: int
    sum_weights_treated: float
    sum_weights_control: float


@dataclass(frozen=True)
class PacsResult:
    """Everything produced by one run of the selection pipeline."""

    fit_T: PenalizedFit
    fit_C: PenalizedFit
    wls_T: WlsFit
    wls_C: WlsFit
    propensity_full: PropensityFit
    selected: frozenset[int]
    propensity_selected: PropensityFit
    ate: float
    ate_detail: AteEstimate
    empty_selection: bool
    timing: dict[str, float] = field(repr=False)


def select(beta_t: np.ndarray, beta_c: np.ndarray, rule: str = RULE_AND) -> frozenset[int]:
    """Combine the two arms' supports into the selected index set.

    'and' keeps j with beta_t[j] != 0 and beta_c[j] != 0; 'or' keeps j
    active in either arm.  Exact-zero tests: coordinate-descent solutions
    are exactly sparse, so no thresholding is applied.
    """
    beta_t = np.asarray(beta_t, dtype=np.float64)
    beta_c = np.asarray(beta_c, dtype=np.float64)
    if beta_t.shape != beta_c.shape:
        raise ValueError("arm coefficient vectors differ in length")
    if rule == RULE_AND:
        mask = (beta_t != 0.0) & (beta_c != 0.0)
    elif rule == RULE_OR:
        mask = (beta_t != 0.0) | (beta_c != 0.0)
    else:
        raise ValueError(f"rule must be 'and' or 'or', got {rule!r}")
    return frozenset(int(j) for j in np.flatnonzero(mask))


def ipw_ate(ds: Dataset, p_hat: np.ndarray) -> AteEstimate:
    """Hajek IPW estimator: the difference of 1/p- and 1/(1-p)-weighted
    arm means of the outcome."""
    p_hat = np.asarray(p_hat, dtype=np.float64)
    if p_hat.shape[0] != ds.n:
        raise ValueError("p_hat length must match the dataset")
    if np.any(p_hat <= 0.0) or np.any(p_hat >= 1.0):
        raise ValueError("p_hat entries must lie strictly inside (0, 1)")
    d, y = ds.d, ds.y
    wt = d / p_hat
    wc = (1.0 - d) / (1.0 - p_hat)
    st, sc = float(wt.sum()), float(wc.sum())
    value = float(wt @ y) / st - float(wc @ y) / sc
    return AteEstimate(
        value=value,
        n_treated=int(d.sum()),
        n_control=int(ds.n - d.sum()),
        sum_weights_treated=st,
        sum_weights_control=sc,
    )


def _fit_arm(
    view: GroupView,
    p_hat: np.ndarray,
    cfg: PacsConfig,
    seed: int,
) -> tuple[WlsFit, PenalizedFit, list]:
    w = arm_weights(view, p_hat)
    wls = weighted_ols(view, w)
    ts = center_transform(view, p_hat)
    pilot = wls.beta_tilde
    scale = None
    if cfg.standardize:
        ts, scale = standardize_sample(ts)
        pilot = pilot * scale  # pilot expressed in the rescaled units
    lam_star, gamma_star, table = cross_validate(
        ts,
        pilot,
        gamma_grid=cfg.gamma_grid,
        folds=cfg.cv_folds,
        seed=seed,
        lambda_grid_size=cfg.lambda_grid_size,
        lambda_min_ratio=cfg.lambda_min_ratio,
    )
    omega = adaptive_weights(pilot, gamma_star)
    # raw-SSR objective: hold the penalty-to-sample ratio the CV folds
    # validated when refitting on the full arm
    lam_full = lam_star * cfg.cv_folds / (cfg.cv_folds - 1)
    fit = adaptive_lasso(ts, omega, lam_full, gamma=gamma_star)
    if scale is not None:
        fit = replace(fit, beta_hat=fit.beta_hat / scale)
    return wls, fit, table


def pacs_fit(ds: Dataset, cfg: PacsConfig | None = None) -> PacsResult:
    """Run the full two-step selection pipeline on a dataset.

    Both arm pipelines are pure and independent; results do not depend on
    the order in which the arms are processed.  An empty selected set
    falls back to an intercept-only propensity (constant p_hat equal to
    the treated fraction), flagged via ``empty_selection``.
    """
    cfg = cfg or PacsConfig()
    if ds.n <= ds.p:
        raise ValueError("need n > p to fit the propensity model")
    t_view, c_view = split_groups(ds)
    for view in (t_view, c_view):
        if view.size <= ds.p + 1:
            raise ValueError(
                f"{view.arm} arm too small ({view.size} rows, p={ds.p})")
    timing: dict[str, float] = {}

    t0 = time.perf_counter()
    prop_full = fit_logistic(
        ds, cfg.intercept_in_propensity, clip_eps=cfg.clip_epsilon)
    timing["propensity"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    wls_t, fit_t, _ = _fit_arm(t_view, prop_full.p_hat, cfg, cfg.seed)
    wls_c, fit_c, _ = _fit_arm(c_view, prop_full.p_hat, cfg, cfg.seed + 1)
    timing["arm_fits"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    selected = select(fit_t.beta_hat, fit_c.beta_hat, cfg.rule)
    empty = len(selected) == 0
    if empty:
        prop_sel = fit_logistic_matrix(
            np.empty((ds.n, 0)), ds.d, include_intercept=True,
            clip_eps=cfg.clip_epsilon)
    else:
        cols = np.array(sorted(selected), dtype=np.intp)
        prop_sel = fit_logistic_matrix(
            ds.x[:, cols], ds.d, cfg.intercept_in_propensity,
            clip_eps=cfg.clip_epsilon)
    timing["refit"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    ate = ipw_ate(ds, prop_sel.p_hat)
    timing["ate"] = time.perf_counter() - t0

    return PacsResult(
        fit_T=fit_t,
        fit_C=fit_c,
        wls_T=wls_t,
        wls_C=wls_c,
        propensity_full=prop_full,
        selected=selected,
        propensity_selected=prop_sel,
        ate=ate.value,
        ate_detail=ate,
        empty_selection=empty,
        timing=timing,
    )
