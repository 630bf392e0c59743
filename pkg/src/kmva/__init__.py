"""Linear and kernel multivariate feature extraction (PCA, PLS2, CCA, OPLS and relatives)."""

from .data import Dataset, encode_labels, load_delimited, split
from .errors import ConvergenceError, DataError, KMVAError, NumericalError, RankWarning, UsageError
from .kernels import KernelConfig
from .pipeline import ALL_METHODS, FitConfig, fit_classifier, fit_extractor, transform

__version__ = "0.1.0"

__all__ = [
    "ALL_METHODS", "ConvergenceError", "DataError", "Dataset", "FitConfig", "KMVAError",
    "KernelConfig", "NumericalError", "RankWarning", "UsageError", "encode_labels",
    "fit_classifier", "fit_extractor", "load_delimited", "split", "transform",
]
