"""One entry point per method tag, plus the extractor + least-squares classifier."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import dependence, extensions, mva_kernel, mva_linear
from .data import LabelEncoding, encode_labels
from .errors import DataError, UsageError
from .kernels import KernelConfig
from .predict import LSHead, fit_ls, predict_scores, wta

LINEAR = mva_linear.METHODS
KERNEL = mva_kernel.METHODS
REDUCED = extensions.RK_METHODS
SPARSE = extensions.SPARSE_VARIANTS
OTHER = ("hsca", "sskcca")
ALL_METHODS = LINEAR + KERNEL + REDUCED + SPARSE + OTHER
UNSUPERVISED = ("pca", "kpca", "rkpca")
ETA_METHODS = ("kcca", "kopls", "rkcca", "rkopls")


@dataclass(frozen=True)
class FitConfig:
    """Everything needed to fit one extractor.

    ``kernel`` families ``cluster`` and ``composite`` route the dense
    kernel methods through the cluster-kernel fit, which also uses any
    unlabeled rows.  ``ss`` holds the ss-kCCA regularization weights.
    """

    method: str
    n_f: int | None = None
    kernel: KernelConfig = field(default_factory=KernelConfig)
    eta: float = 0.0
    r: int = 100
    pool: int | None = None
    seed: int = 0
    standardize: bool = True
    pca_dims: int | str | None = None
    ridge: float = 0.0
    ss: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in ALL_METHODS:
            raise UsageError(f"unknown method {self.method!r}; valid: {', '.join(ALL_METHODS)}")
        if self.n_f is not None and self.n_f < 1:
            raise UsageError("n_f must be at least 1")
        if self.eta < 0 or self.ridge < 0:
            raise UsageError("eta and ridge must be non-negative")
        if self.kernel.family in ("cluster", "composite") and self.method not in KERNEL:
            raise UsageError(f"{self.kernel.family} kernels apply to {', '.join(KERNEL)} only")

    @property
    def supervised(self) -> bool:
        return self.method not in UNSUPERVISED


def fit_extractor(cfg: FitConfig, X, Y=None, X_unlab=None):
    m = cfg.method
    if cfg.supervised and Y is None:
        raise UsageError(f"{m} needs targets or labels")
    if m in LINEAR:
        kw = {} if m in ("pca", "pls2") else {"pca_dims": cfg.pca_dims, "ridge": cfg.ridge}
        return mva_linear.fit(m, X, Y, cfg.n_f, cfg.standardize, **kw)
    if m in KERNEL:
        if cfg.kernel.family in ("cluster", "composite"):
            beta = 0.0 if cfg.kernel.family == "cluster" else cfg.kernel.beta
            sigma = cfg.kernel.sigma if cfg.kernel.family == "composite" else 1.0
            return extensions.fit_cluster_kernel_kmva(
                m, X, Y, X_unlab, beta, cfg.kernel.Q, cfg.kernel.G, cfg.kernel.seed,
                cfg.n_f, cfg.eta, sigma, cfg.standardize)
        return mva_kernel.fit(m, X, Y, cfg.kernel, cfg.n_f, cfg.eta, cfg.standardize)
    if m in REDUCED:
        return extensions.fit_rk(m, X, Y, min(cfg.r, np.shape(X)[0]), cfg.seed, cfg.n_f, cfg.eta,
                                 cfg.kernel, cfg.standardize)
    if m in SPARSE:
        return extensions.fit_sparse_pls_data(m, X, Y, cfg.kernel, cfg.n_f, cfg.pool, cfg.seed,
                                              cfg.standardize)
    if m == "hsca":
        return fit_hsca_data(X, Y, cfg.kernel, cfg.n_f or 1, cfg.standardize)
    return extensions.fit_sskcca(X, Y, X_unlab, kernel=cfg.kernel, n_f=cfg.n_f,
                                 standardize=cfg.standardize, **cfg.ss)


def fit_hsca_data(X, Y, kernel: KernelConfig | None = None, n_f=1, standardize=True):
    """HSCA with a linear target kernel ``YY'`` on raw data."""
    kernel = KernelConfig() if kernel is None else kernel
    Xs, xs, Yc, ys, kernel, K, cstats = mva_kernel.prepare(X, Y, kernel, standardize)
    model = dependence.fit_hsca(K, Yc @ Yc.T, n_f)
    return dataclasses.replace(model, basis=Xs, kernel=kernel, centering=cstats,
                               x_stats=xs, y_stats=ys)


def transform(model, X) -> np.ndarray:
    if isinstance(model, mva_linear.LinearModel):
        return mva_linear.transform(model, X)
    return mva_kernel.transform(model, X)


@dataclass(frozen=True)
class Predictor:
    """Feature extractor followed by a least-squares head.

    With a label ``encoding`` predictions are argmax-decoded classes,
    otherwise the regression outputs themselves.
    """

    extractor: object
    head: LSHead
    encoding: LabelEncoding | None = None

    @property
    def is_classifier(self) -> bool:
        return self.encoding is not None

    def scores(self, X) -> np.ndarray:
        return predict_scores(self.head, transform(self.extractor, X))

    def predict(self, X) -> np.ndarray:
        s = self.scores(X)
        return self.encoding.decode(wta(s)) if self.is_classifier else s


def fit_classifier(cfg: FitConfig, X, labels, lam=0.0, X_unlab=None, classes=None) -> Predictor:
    """Extractor on 1-of-c targets, least-squares head, winner-takes-all."""
    enc = encode_labels(labels, classes)
    if np.shape(X)[0] != enc.matrix.shape[0]:
        raise DataError("X and labels row counts differ")
    ext = fit_extractor(cfg, X, enc.matrix, X_unlab)
    head = fit_ls(transform(ext, X), enc.matrix, lam, enc.classes)
    return Predictor(ext, head, enc)


def fit_regressor(cfg: FitConfig, X, Y, lam=0.0, X_unlab=None) -> Predictor:
    Y = np.asarray(Y, dtype=float)
    ext = fit_extractor(cfg, X, Y, X_unlab)
    return Predictor(ext, fit_ls(transform(ext, X), Y, lam))
