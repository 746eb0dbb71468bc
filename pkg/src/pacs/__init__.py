"""Propensity-adapted covariate selection and IPW treatment-effect estimation."""

from .data import (
    CONTROL,
    TREATMENT,
    CovariateRoles,
    DataError,
    Dataset,
    GroupView,
    load_csv,
    split_groups,
    write_csv,
)
from .oal import OalConfig, OalResult, oal_fit
from .penalized import (
    PenalizedFit,
    TransformedSample,
    WlsFit,
    adaptive_lasso,
    adaptive_weights,
    center_transform,
    cross_validate,
    lambda_max,
    weighted_ols,
)
from .propensity import (
    PropensityFit,
    SeparationError,
    fit_logistic,
    fit_logistic_matrix,
    predict_propensity,
    sigmoid,
)
from .report import SummaryTables, summarize, write_cell_chart, write_cell_csvs
from .selector import (
    DEFAULT_SEED,
    AteEstimate,
    PacsConfig,
    PacsResult,
    ipw_ate,
    pacs_fit,
    select,
)
from .simulate import (
    ALL_METHODS,
    PRESET_NAMES,
    ReplicationReport,
    ScenarioConfig,
    generate,
    paper_roles,
    preset,
    run_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_METHODS",
    "AteEstimate",
    "CONTROL",
    "CovariateRoles",
    "DataError",
    "Dataset",
    "DEFAULT_SEED",
    "GroupView",
    "OalConfig",
    "OalResult",
    "PacsConfig",
    "PacsResult",
    "PenalizedFit",
    "PRESET_NAMES",
    "PropensityFit",
    "ReplicationReport",
    "ScenarioConfig",
    "SeparationError",
    "SummaryTables",
    "TransformedSample",
    "TREATMENT",
    "WlsFit",
    "adaptive_lasso",
    "adaptive_weights",
    "center_transform",
    "cross_validate",
    "fit_logistic",
    "fit_logistic_matrix",
    "generate",
    "ipw_ate",
    "lambda_max",
    "load_csv",
    "oal_fit",
    "pacs_fit",
    "paper_roles",
    "predict_propensity",
    "preset",
    "run_experiment",
    "select",
    "sigmoid",
    "split_groups",
    "summarize",
    "weighted_ols",
    "write_cell_chart",
    "write_cell_csvs",
    "write_csv",
]
