"""Debiased inverse-variance weighted estimators for two-sample summary-data
Mendelian randomization, with instrument screening, threshold selection,
population-level reference quantities and a simulation engine.
"""

__version__ = "0.1.0"

from .data import (
    EstimateReport,
    PopulationParams,
    SnpRecord,
    SummaryDataset,
    read_population_params,
    read_summary_tsv,
    validate,
    write_population_params,
    write_summary_tsv,
)
from .errors import (
    ConfigurationError,
    DataParseError,
    DegenerateDenominatorError,
    DivwError,
    EstimatorError,
    NoUsableInstrumentsError,
)
from .estimators import LambdaPolicy, SelectionSet, analyze, divw, divw_variance, ivw, ivw_variance, tau2_hat
from .selection import kappa_hat, mr_eo, screen

__all__ = [
    "ConfigurationError",
    "DataParseError",
    "DegenerateDenominatorError",
    "DivwError",
    "EstimateReport",
    "EstimatorError",
    "LambdaPolicy",
    "NoUsableInstrumentsError",
    "PopulationParams",
    "SelectionSet",
    "SnpRecord",
    "SummaryDataset",
    "__version__",
    "analyze",
    "divw",
    "divw_variance",
    "ivw",
    "ivw_variance",
    "kappa_hat",
    "mr_eo",
    "read_population_params",
    "read_summary_tsv",
    "screen",
    "tau2_hat",
    "validate",
    "write_population_params",
    "write_summary_tsv",
]
