"""Data-generating processes and the replicated experiment harness.

Two synthetic scenarios over standard-normal covariates X ~ N(0, I_p)
with a logistic treatment assignment D ~ Bernoulli(sigmoid(X'alpha)):

  s1 (heterogeneous arms): per-arm linear potential outcomes
      yT = X'beta_t + eps,  yC = X'beta_c + eps  (shared per-unit noise),
      y = d*yT + (1-d)*yC.  The pooled outcome model is misspecified.
  s2 (single linear model): y = X'beta + d*mu + eps.

Covariate roles are fixed throughout: columns 1-2 confounders, 3-4
outcome predictors, 5-8 instruments, the rest spurious (1-based).

Replications are embarrassingly parallel; replication r draws its own RNG
substream from (seed, r), so results are bit-identical for any worker
count, and every method inside one replication consumes the same dataset.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from multiprocessing import Pool

import numpy as np

from .data import CovariateRoles, Dataset
from .oal import OalConfig, oal_fit
from .propensity import fit_logistic_matrix, sigmoid
from .selector import (
    DEFAULT_SEED,
    PacsConfig,
    ipw_ate,
    pacs_fit,
)

S1 = "s1"
S2 = "s2"

METHOD_PACS_AND = "pacs-and"
METHOD_PACS_OR = "pacs-or"
METHOD_OAL = "oal"
METHOD_ALL = "all-covariates"
METHOD_ORACLE = "oracle-target"
ALL_METHODS = (METHOD_PACS_AND, METHOD_PACS_OR, METHOD_OAL,
               METHOD_ALL, METHOD_ORACLE)

HETEROGENEITY = {  # (beta_t head, beta_c head), first four coordinates
    1: ((0.6, 0.6, 0.8, 0.8), (0.8, 0.8, 0.6, 0.6)),
    2: ((0.6, 0.6, 1.2, 1.2), (1.2, 1.2, 0.6, 0.6)),
    3: ((0.6, 0.6, 2.4, 2.4), (2.4, 2.4, 0.6, 0.6)),
}


def paper_roles(p: int) -> CovariateRoles:
    """The fixed role layout used by every scenario (0-based indices)."""
    if p < 8:
        raise ValueError("need p >= 8 for the fixed role layout")
    return CovariateRoles(
        confounders=frozenset({0, 1}),
        outcome_predictors=frozenset({2, 3}),
        instruments=frozenset({4, 5, 6, 7}),
        spurious=frozenset(range(8, p)),
    )


def alpha_weak(p: int) -> np.ndarray:
    a = np.zeros(p)
    a[[0, 1]] = 0.4
    a[4:8] = 1.0
    return a


def alpha_strong(p: int) -> np.ndarray:
    a = np.zeros(p)
    a[[0, 1]] = 1.0
    a[4:8] = 1.0
    return a


def _head4(values, p: int) -> np.ndarray:
    b = np.zeros(p)
    b[:4] = values
    return b


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation cell: scenario, sizes, and DGP coefficient vectors."""

    scenario: str
    n: int
    p: int
    m: int
    alpha: np.ndarray
    roles: CovariateRoles
    beta_t: np.ndarray | None = None
    beta_c: np.ndarray | None = None
    beta: np.ndarray | None = None
    mu: float | None = None
    seed: int = DEFAULT_SEED
    name: str = "custom"

    def __post_init__(self):
        if self.scenario not in (S1, S2):
            raise ValueError(f"scenario must be '{S1}' or '{S2}'")
        if self.p < 8:
            raise ValueError("p must be >= 8")
        if self.m < 1 or self.n < 2:
            raise ValueError("need m >= 1 and n >= 2")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=np.float64))
        if self.alpha.shape != (self.p,):
            raise ValueError("alpha must have length p")
        if self.roles.p != self.p:
            raise ValueError("roles cover a different p")
        fixed = paper_roles(self.p)
        if self.roles != fixed:
            raise ValueError("roles must follow the fixed layout "
                             "(confounders 1-2, predictors 3-4, instruments 5-8)")
        off = sorted(self.roles.outcome_predictors | self.roles.spurious)
        if np.any(self.alpha[off] != 0.0):
            raise ValueError("alpha must vanish on predictors and spurious")
        out_zero = sorted(self.roles.instruments | self.roles.spurious)
        if self.scenario == S1:
            if self.beta_t is None or self.beta_c is None or self.beta is not None:
                raise ValueError("s1 needs beta_t and beta_c (and no pooled beta)")
            for attr in ("beta_t", "beta_c"):
                b = np.asarray(getattr(self, attr), dtype=np.float64)
                object.__setattr__(self, attr, b)
                if b.shape != (self.p,):
                    raise ValueError(f"{attr} must have length p")
                if np.any(b[out_zero] != 0.0):
                    raise ValueError(f"{attr} must vanish on instruments and spurious")
        else:
            if self.beta is None or self.mu is None:
                raise ValueError("s2 needs beta and mu")
            if self.beta_t is not None or self.beta_c is not None:
                raise ValueError("s2 takes no per-arm coefficients")
            b = np.asarray(self.beta, dtype=np.float64)
            object.__setattr__(self, "beta", b)
            if b.shape != (self.p,):
                raise ValueError("beta must have length p")
            if np.any(b[out_zero] != 0.0):
                raise ValueError("beta must vanish on instruments and spurious")

    @property
    def true_ate(self) -> float:
        # X has mean zero, so the s1 arms share expectation 0; s2 shifts by mu
        return float(self.mu) if self.scenario == S2 else 0.0


def _s1_cell(name, hetero: int, strength: str, n=500, p=20, m=200, seed=DEFAULT_SEED):
    alpha = alpha_weak(p) if strength == "weak" else alpha_strong(p)
    bt, bc = HETEROGENEITY[hetero]
    return ScenarioConfig(
        scenario=S1, n=n, p=p, m=m, alpha=alpha, roles=paper_roles(p),
        beta_t=_head4(bt, p), beta_c=_head4(bc, p), seed=seed, name=name,
    )


def _s2_cell(name, strength: str, n: int, p: int, m=200, seed=DEFAULT_SEED):
    alpha = alpha_weak(p) if strength == "weak" else alpha_strong(p)
    return ScenarioConfig(
        scenario=S2, n=n, p=p, m=m, alpha=alpha, roles=paper_roles(p),
        beta=_head4((0.6, 0.6, 0.6, 0.6), p), mu=0.0, seed=seed, name=name,
    )


_S2_SIZES = {"small": (500, 20), "many": (500, 100), "large": (1000, 20)}


def preset(name: str, *, m: int | None = None, seed: int | None = None) -> ScenarioConfig:
    """Build one of the twelve standard experiment cells by name.

    s1-{weak|strong}-{1|2|3}: heterogeneous-arm cells at (n, p) = (500, 20)
    with increasing heterogeneity; s2-{weak|strong}-{small|many|large}:
    single-linear-model cells at (500, 20), (500, 100), (1000, 20).
    """
    cfg = _PRESETS.get(name)
    if cfg is None:
        raise KeyError(f"unknown preset {name!r}; choose from "
                       + ", ".join(sorted(_PRESETS)))
    if m is not None:
        cfg = replace(cfg, m=int(m))
    if seed is not None:
        cfg = replace(cfg, seed=int(seed))
    return cfg


_PRESETS = {}
for _strength in ("weak", "strong"):
    for _h in (1, 2, 3):
        _key = f"s1-{_strength}-{_h}"
        _PRESETS[_key] = _s1_cell(_key, _h, _strength)
    for _size, (_n, _p) in _S2_SIZES.items():
        _key = f"s2-{_strength}-{_size}"
        _PRESETS[_key] = _s2_cell(_key, _strength, _n, _p)

PRESET_NAMES = tuple(sorted(_PRESETS))


def replication_seed(seed: int, rep_index: int) -> int:
    """Stable 64-bit seed for one replication's RNG substream."""
    ss = np.random.SeedSequence((int(seed), int(rep_index)))
    return int(ss.generate_state(1, np.uint64)[0])


def generate(cfg: ScenarioConfig, rep_index: int, *, noise: bool = True) -> Dataset:
    """Draw one replication's dataset from the configured DGP.

    The RNG stream is derived deterministically from (cfg.seed,
    rep_index).  ``noise=False`` zeroes the outcome disturbance (debugging
    aid); the draw order (X, treatment uniforms, eps) is fixed either way.
    """
    rng = np.random.default_rng(np.random.SeedSequence((int(cfg.seed), int(rep_index))))
    x = rng.standard_normal((cfg.n, cfg.p))
    pr = sigmoid(x @ cfg.alpha)
    d = (rng.random(cfg.n) < pr).astype(np.float64)
    eps = rng.standard_normal(cfg.n)
    if not noise:
        eps = np.zeros(cfg.n)
    if cfg.scenario == S1:
        y = np.where(d == 1.0, x @ cfg.beta_t, x @ cfg.beta_c) + eps
    else:
        y = x @ cfg.beta + d * cfg.mu + eps
    names = tuple(f"x{j + 1}" for j in range(cfg.p))
    return Dataset(y=y, d=d, x=x, names=names)


@dataclass(frozen=True)
class ReplicationReport:
    """Aggregated outcome of one method over the m replications of a cell."""

    method: str
    m: int
    selection_counts: np.ndarray
    ate_estimates: np.ndarray
    failures: tuple[tuple[int, str], ...]
    wall_clock_total: float
    per_replication_seeds: tuple[int, ...]

    @property
    def frequencies(self) -> np.ndarray:
        return self.selection_counts / self.m

    @property
    def n_failed(self) -> int:
        return len(self.failures)


def _run_method(method: str, ds: Dataset, cfg: ScenarioConfig,
                pacs_cfg: PacsConfig, oal_cfg: OalConfig):
    """Apply one method to one dataset; returns (selected, ate)."""
    if method == METHOD_PACS_AND:
        res = pacs_fit(ds, replace(pacs_cfg, rule="and"))
        return res.selected, res.ate
    if method == METHOD_PACS_OR:
        res = pacs_fit(ds, replace(pacs_cfg, rule="or"))
        return res.selected, res.ate
    if method == METHOD_OAL:
        res = oal_fit(ds, oal_cfg)
        return res.selected, res.ate
    if method == METHOD_ALL:
        selected = frozenset(range(ds.p))
    elif method == METHOD_ORACLE:
        selected = cfg.roles.target
    else:
        raise ValueError(f"unknown method {method!r}")
    cols = np.array(sorted(selected), dtype=np.intp)
    prop = fit_logistic_matrix(
        ds.x[:, cols], ds.d, pacs_cfg.intercept_in_propensity,
        clip_eps=pacs_cfg.clip_epsilon)
    return selected, ipw_ate(ds, prop.p_hat).value


def _run_replication(args):
    cfg, methods, pacs_cfg, oal_cfg, r = args
    ds = generate(cfg, r)
    rep_cfg = replace(pacs_cfg, seed=replication_seed(cfg.seed, r))
    out = {}
    for method in methods:
        t0 = time.perf_counter()
        try:
            selected, ate = _run_method(method, ds, cfg, rep_cfg, oal_cfg)
            out[method] = (sorted(selected), ate, time.perf_counter() - t0, None)
        except Exception as exc:  # failures are audited, not fatal
            out[method] = (None, None, time.perf_counter() - t0,
                           f"{type(exc).__name__}: {exc}")
    return r, out


def run_experiment(
    cfg: ScenarioConfig,
    methods=(METHOD_PACS_AND, METHOD_OAL),
    *,
    pacs_config: PacsConfig | None = None,
    oal_config: OalConfig | None = None,
    workers: int = 1,
) -> list[ReplicationReport]:
    """Run every requested method on the same m generated datasets.

    Replications run as independent jobs (optionally across worker
    processes); aggregation happens in replication order, so reports are
    identical for any worker count.  A method failing on one replication
    is recorded in that method's audit trail and excluded from its
    aggregates without disturbing the other methods.
    """
    methods = tuple(methods)
    if not methods:
        raise ValueError("methods list is empty")
    for method in methods:
        if method not in ALL_METHODS:
            raise ValueError(f"unknown method {method!r}; choose from {ALL_METHODS}")
    if len(set(methods)) != len(methods):
        raise ValueError("duplicate method names")
    pacs_cfg = pacs_config or PacsConfig()
    oal_cfg = oal_config or OalConfig()

    jobs = [(cfg, methods, pacs_cfg, oal_cfg, r) for r in range(cfg.m)]
    if workers > 1:
        with Pool(processes=workers) as pool:
            raw = pool.map(_run_replication, jobs,
                           chunksize=max(1, cfg.m // (workers * 4)))
    else:
        raw = [_run_replication(job) for job in jobs]
    raw.sort(key=lambda item: item[0])

    seeds = tuple(replication_seed(cfg.seed, r) for r in range(cfg.m))
    reports = []
    for method in methods:
        counts = np.zeros(cfg.p, dtype=np.int64)
        ates = []
        failures = []
        total = 0.0
        for r, out in raw:
            selected, ate, dt, err = out[method]
            total += dt
            if err is not None:
                failures.append((r, err))
                continue
            counts[list(selected)] += 1
            ates.append(ate)
        reports.append(ReplicationReport(
            method=method,
            m=cfg.m,
            selection_counts=counts,
            ate_estimates=np.asarray(ates, dtype=np.float64),
            failures=tuple(failures),
            wall_clock_total=total,
            per_replication_seeds=seeds,
        ))
    return reports
