"""Kernel functions, Gram assembly and centering, cluster kernels, graph Laplacians."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .errors import DataError, UsageError
from .gmm import fit_gmm

FAMILIES = ("linear", "rbf", "cluster", "composite")
MEDIAN_MAX_ROWS = 5000


@dataclass(frozen=True)
class ClusterModel:
    """Q restarts x G cluster counts of fitted mixtures, ordered (q, g)."""

    mixtures: tuple
    Q: int
    G: int

    def posteriors(self, X):
        return [m.predict_proba(X) for m in self.mixtures]


@dataclass(frozen=True)
class KernelConfig:
    family: str = "rbf"
    sigma: float | str = "median"
    beta: float | None = None
    Q: int = 5
    G: int = 5
    seed: int = 0
    cluster: ClusterModel | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UsageError(f"unknown kernel family {self.family!r}; valid: {', '.join(FAMILIES)}")
        if self.family in ("rbf", "composite"):
            if isinstance(self.sigma, str):
                if self.sigma != "median":
                    raise UsageError(f"sigma must be a positive number or 'median', got {self.sigma!r}")
            elif not self.sigma > 0:
                raise UsageError(f"sigma must be positive, got {self.sigma}")
        if self.family == "composite":
            if self.beta is None or not 0.0 <= self.beta <= 1.0:
                raise UsageError("composite kernel needs beta in [0, 1]")
        if self.Q < 1 or self.G < 1:
            raise UsageError("Q and G must be at least 1")

    @property
    def resolved(self) -> bool:
        return not isinstance(self.sigma, str) or self.family in ("linear", "cluster")

    def resolve(self, X) -> "KernelConfig":
        """Replace the 'median' sentinel by the concrete bandwidth for X."""
        if self.family in ("rbf", "composite") and isinstance(self.sigma, str):
            return dataclasses.replace(self, sigma=median_bandwidth(X, seed=self.seed))
        return self


def rbf(A, B, sigma: float) -> np.ndarray:
    return np.exp(-cdist(A, B, "sqeuclidean") / (2.0 * sigma ** 2))


def gram(cfg: KernelConfig, A, B=None) -> np.ndarray:
    """Kernel evaluations ``K[i, j] = k(A_i, B_j)`` (``B`` defaults to ``A``)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = A if B is None else np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise DataError(f"column mismatch: {A.shape[1]} vs {B.shape[1]}")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
        raise DataError("non-finite kernel input")
    if cfg.family == "linear":
        return A @ B.T
    if cfg.family in ("rbf", "composite") and isinstance(cfg.sigma, str):
        raise UsageError("sigma must be resolved before evaluating the kernel")
    if cfg.family == "rbf":
        return rbf(A, B, cfg.sigma)
    if cfg.cluster is None:
        raise UsageError(f"{cfg.family} kernel requires a fitted cluster model")
    Kc = cluster_kernel_eval(cfg.cluster, A, B)
    if cfg.family == "cluster":
        return Kc
    return composite_kernel(rbf(A, B, cfg.sigma), Kc, cfg.beta)


def median_bandwidth(A, max_rows: int = MEDIAN_MAX_ROWS, seed: int = 0) -> float:
    """Median Euclidean distance over distinct pairs of rows."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] < 2:
        raise DataError("median heuristic needs at least two rows")
    if A.shape[0] > max_rows:
        idx = np.random.default_rng(seed).choice(A.shape[0], max_rows, replace=False)
        A = A[idx]
    sigma = float(np.median(pdist(A), overwrite_input=True))
    if sigma <= 0:
        raise DataError("median pairwise distance is zero (duplicated rows); set sigma explicitly")
    return sigma


@dataclass(frozen=True)
class KernelCentering:
    """Statistics for centering kernel rows in feature space.

    ``col_means[j]`` is the mean of ``k(x_i, b_j)`` over the reference
    (training) samples ``x_i`` for every basis sample ``b_j``.  In
    ``"double"`` mode test rows also subtract their own mean over the
    reference set (columns ``ref_idx`` of the basis, all when ``None``)
    and add back the grand mean.  ``"basis"`` mode only removes
    ``col_means``, which needs no kernel evaluations beyond the basis.
    """

    col_means: np.ndarray
    grand_mean: float
    mode: str = "double"
    ref_idx: np.ndarray | None = None


def center_train(K):
    """Double-center a square training Gram matrix."""
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise DataError("training Gram must be square")
    col = K.mean(axis=0)
    row = K.mean(axis=1)
    g = float(K.mean())
    Kc = K - col[None, :] - row[:, None] + g
    return 0.5 * (Kc + Kc.T), KernelCentering(col, g)


def center_test(K_test, stats: KernelCentering) -> np.ndarray:
    K_test = np.atleast_2d(np.asarray(K_test, dtype=float))
    if K_test.shape[1] != stats.col_means.size:
        raise DataError(
            f"test Gram has {K_test.shape[1]} columns, centering expects {stats.col_means.size}")
    if stats.mode == "basis":
        return K_test - stats.col_means[None, :]
    ref = K_test if stats.ref_idx is None else K_test[:, stats.ref_idx]
    return K_test - stats.col_means[None, :] - ref.mean(axis=1)[:, None] + stats.grand_mean


def cluster_kernel_fit(X_all, Q: int = 5, G: int = 5, seed: int = 0) -> ClusterModel:
    """Fit Q*G mixtures (cluster counts 2..G+1) on all available samples."""
    X_all = np.atleast_2d(np.asarray(X_all, dtype=float))
    if Q < 1 or G < 1:
        raise UsageError("Q and G must be at least 1")
    if X_all.shape[0] < G + 1:
        raise DataError(f"{X_all.shape[0]} samples cannot support up to {G + 1} clusters")
    mixtures = []
    for q in range(Q):
        for g in range(2, G + 2):
            rng = np.random.default_rng([seed, q, g])
            mixtures.append(fit_gmm(X_all, g, rng))
    return ClusterModel(tuple(mixtures), Q, G)


def cluster_kernel_eval(model: ClusterModel, A, B=None) -> np.ndarray:
    """Average dot product of posterior vectors, normalized by Q*G."""
    PA = model.posteriors(A)
    PB = PA if B is None else model.posteriors(B)
    K = sum(pa @ pb.T for pa, pb in zip(PA, PB))
    return K / (model.Q * model.G)


def composite_kernel(K_s, K_c, beta: float) -> np.ndarray:
    K_s, K_c = np.asarray(K_s, dtype=float), np.asarray(K_c, dtype=float)
    if K_s.shape != K_c.shape:
        raise DataError(f"shape mismatch {K_s.shape} vs {K_c.shape}")
    if not 0.0 <= beta <= 1.0:
        raise UsageError("beta must lie in [0, 1]")
    if beta == 1.0:
        return K_s.copy()
    if beta == 0.0:
        return K_c.copy()
    return beta * K_s + (1.0 - beta) * K_c


def graph_laplacian(M) -> np.ndarray:
    """Symmetric normalized Laplacian ``D^-1/2 (D - M) D^-1/2``."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DataError("similarity matrix must be square")
    if not np.allclose(M, M.T, atol=1e-12):
        raise DataError("similarity matrix must be symmetric")
    if np.any(M < 0):
        raise DataError("similarity weights must be non-negative")
    if np.any(np.diag(M) != 0):
        raise DataError("similarity matrix must have a zero diagonal")
    deg = M.sum(axis=1)
    if np.any(deg <= 0):
        raise DataError(f"isolated vertex at row {int(np.argmin(deg))}")
    s = 1.0 / np.sqrt(deg)
    L = np.eye(M.shape[0]) - s[:, None] * M * s[None, :]
    return 0.5 * (L + L.T)


def knn_graph(X, k: int = 7, sigma: float | None = None) -> np.ndarray:
    """Symmetric k-nearest-neighbour graph with RBF edge weights."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    if n < 2:
        raise DataError("graph needs at least two vertices")
    k = min(k, n - 1)
    D2 = cdist(X, X, "sqeuclidean")
    np.fill_diagonal(D2, np.inf)
    if sigma is None:
        try:
            sigma = median_bandwidth(X)
        except DataError:
            sigma = 1.0
    nbrs = np.argpartition(D2, k - 1, axis=1)[:, :k]
    W = np.zeros((n, n))
    rows = np.repeat(np.arange(n), k)
    # floor keeps far neighbours connected when exp() underflows
    W[rows, nbrs.ravel()] = np.maximum(
        np.exp(-D2[rows, nbrs.ravel()] / (2.0 * sigma ** 2)), 1e-300)
    W = np.maximum(W, W.T)
    np.fill_diagonal(W, 0.0)
    return W
