"""Hyperparameter tuning benchmark harness for four deep-learning families.

Preprocessing (factor encoding, sparsity, min-max scaling), split protocols,
from-scratch FFNN/RNN/SAE/DBN trainers, grid/random/Nelder-Mead search and
rank-based statistics for comparing the results.
"""

__version__ = "0.1.0"

from dltune.data_model import (
    ColumnMeta,
    DataError,
    DatasetProfile,
    DataTable,
    detect_factor,
    factor_to_numeric,
    load_table,
    minmax_normalize,
    preprocess_all,
    profile,
    sparsity,
    write_table,
)
from dltune.splits import SplitPlan, holdout, repeated_cv, three_way

__all__ = [
    "ColumnMeta",
    "DataError",
    "DataTable",
    "DatasetProfile",
    "SplitPlan",
    "detect_factor",
    "factor_to_numeric",
    "holdout",
    "load_table",
    "minmax_normalize",
    "preprocess_all",
    "profile",
    "repeated_cv",
    "sparsity",
    "three_way",
    "write_table",
]
