"""Dense kernel PCA, PLS2, CCA and OPLS in the dual (U = Phi' A).

The ``fit_k*`` functions take an already centered training Gram ``K``
(and centered targets) and return a :class:`KernelModel` without stored
samples; :func:`fit` wraps them with standardization, bandwidth
resolution and Gram centering so the model can :func:`transform` new
rows.

Dual problems solved (``l`` = number of training rows)::

    kPCA   K a = lam a                        A'KA = I
    kPLS2  per direction: top eigvec of Y'K_jY, K_j deflated by scores
    kOPLS  KYY'K a / l^2 = lam (K^2 + eta K) a / l
    kCCA   KY (Y'Y + eta I)^+ Y'K a / l = rho^2 (K^2 + eta K) a / l

The ``1/l`` factors put the dual metric on the same scale as ``C_x`` so
that a linear kernel reproduces the linear features exactly.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _solvers
from .data import CenteringStats, center_fit_apply
from .errors import DataError, NumericalError, RankWarning, UsageError
from .kernels import KernelCentering, KernelConfig, center_test, center_train, gram
from .numcore import DEFAULT, eig_sym, estimate_rank

METHODS = ("kpca", "kpls2", "kcca", "kopls")


@dataclass(frozen=True)
class KernelModel:
    """Fitted kernel extractor.

    ``dual`` holds the constraint-normalized coefficients ``A``;
    ``coef`` is what :func:`transform` multiplies the centered test Gram
    with (equal to ``dual`` except for deflation-based methods).  ``basis``
    stores the standardized samples the kernel is evaluated against.
    """

    method: str
    coef: np.ndarray
    dual: np.ndarray
    eigenvalues: np.ndarray
    V: np.ndarray | None = None
    eta: float = 0.0
    basis: np.ndarray | None = field(default=None, repr=False)
    kernel: KernelConfig | None = None
    centering: KernelCentering | None = field(default=None, repr=False)
    x_stats: CenteringStats | None = field(default=None, repr=False)
    y_stats: CenteringStats | None = field(default=None, repr=False)
    support: np.ndarray | None = None
    extras: dict = field(default_factory=dict, repr=False)

    @property
    def n_features(self) -> int:
        return self.coef.shape[1]

    @property
    def kernel_evals_per_sample(self) -> int:
        return 0 if self.basis is None else self.basis.shape[0]


def _check_pair(K, Y=None):
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise DataError("K must be a square Gram matrix")
    if Y is None:
        return K, None
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.shape[0] != K.shape[0]:
        raise DataError(f"K has {K.shape[0]} rows but Y has {Y.shape[0]}")
    return K, Y


def fit_kpca(K, n_f=None, rank_tol=DEFAULT.rank_tol) -> KernelModel:
    K, _ = _check_pair(K)
    l = K.shape[0]
    full = eig_sym(K)
    top = max(full.values[0], 0.0)
    cap = int(np.sum(full.values > rank_tol * top)) if top > 0 else 0
    n_f = _solvers.clamp_nf(n_f, cap, "rank of K")
    lam = full.values[:n_f]
    A = full.vectors[:, :n_f] / np.sqrt(lam)
    return KernelModel("kpca", A, A, lam / l)


def kpls2_dual(K, Y, n_f, rel_tol=1e-10):
    """Kernel PLS2 with score deflation of both K and Y.

    Returns constraint-normalized duals ``A`` (A'KA = I), the transform
    coefficients ``A (P'W)^-1``, Y-weights, covariances and raw scores.
    """
    l = K.shape[0]
    Kj, Yj = K.copy(), Y.copy()
    A, V, S, T = [], [], [], []
    That = np.zeros((l, 0))
    # Y'KY is bounded by |K|_2 |Y|_F^2
    floor = rel_tol * np.sqrt(np.linalg.norm(K, 2)) * np.linalg.norm(Y)
    for _ in range(n_f):
        M = Yj.T @ Kj @ Yj
        res = eig_sym(M, 1)
        mu, v = res.values[0], res.vectors[:, 0]
        if mu <= 0 or np.sqrt(mu) <= floor:
            break
        alpha = Yj @ v / np.sqrt(mu)
        t = Kj @ alpha
        a = alpha - That @ (That.T @ alpha)
        th = t / np.linalg.norm(t)
        Kj = deflate(Kj, th)
        Yj = Yj - np.outer(th, th @ Yj)
        That = np.column_stack([That, th])
        A.append(a); V.append(v); S.append(np.sqrt(mu) / l); T.append(t)
    if not A:
        raise NumericalError("K Y is numerically zero; no PLS direction")
    if len(A) < n_f:
        warnings.warn(f"kernel PLS2 stopped after {len(A)} of {n_f} directions",
                      RankWarning, stacklevel=2)
    A, T = np.column_stack(A), np.column_stack(T)
    return A, score_rotation(K, A, T), np.column_stack(V), np.array(S), T


def score_rotation(K, A, T):
    """Coefficients mapping centered test Grams to deflation scores.

    With loadings ``P = Phi' T diag(t't)^-1`` and weights ``W = Phi' A``
    the scores of any row are ``phi(x)' W (P'W)^-1``.
    """
    PtW = (T / np.sum(T * T, axis=0)).T @ K @ A
    return A @ np.linalg.inv(PtW)


def deflate(Kj, th):
    """``(I - t t') Kj (I - t t')`` for a unit score vector ``t``."""
    Kj = Kj - np.outer(th, th @ Kj)
    return Kj - np.outer(Kj @ th, th)


def fit_kpls2(K, Y, n_f=None, rank_tol=DEFAULT.rank_tol) -> KernelModel:
    K, Y = _check_pair(K, Y)
    n_f = _solvers.clamp_nf(n_f, estimate_rank(K, rank_tol), "rank of K")
    A, coef, V, S, _ = kpls2_dual(K, Y, n_f)
    return KernelModel("kpls2", coef, A, S, V)


def _dual_moments(K, Y, eta):
    if eta < 0:
        raise UsageError("eta must be non-negative")
    l = K.shape[0]
    Sxx = (K @ K + eta * K) / l
    Sxy = K @ Y / l
    Syy = (Y.T @ Y + eta * np.eye(Y.shape[1])) / l
    return Sxx, Sxy, Syy


def _whitened_dual(K, Y, eta, rank_tol):
    """Dual moments on the range of ``K`` with the input metric whitened.

    With ``K = Q diag(w) Q'`` and ``a = Q diag(d^-1/2) z`` where
    ``d = (w^2 + eta w)/l``, the input metric becomes the identity.  Rank is
    judged on ``K`` itself, not on ``K^2``, whose condition number is squared.
    Returns the whitened ``Sxy``, ``Syy`` and the map from ``z`` to ``a``.
    """
    if eta < 0:
        raise UsageError("eta must be non-negative")
    l = K.shape[0]
    w, Q = np.linalg.eigh(0.5 * (K + K.T))
    top = w[-1] if w.size else 0.0
    keep = w > rank_tol * max(top, 0.0)
    if not np.any(keep):
        raise NumericalError("Gram matrix has zero numerical rank")
    w, Q = w[keep], Q[:, keep]
    T = Q / np.sqrt((w * w + eta * w) / l)
    Sxy = (w[:, None] * (Q.T @ Y)) / np.sqrt((w * w + eta * w) / l)[:, None] / l
    Syy = (Y.T @ Y + eta * np.eye(Y.shape[1])) / l
    return Sxy, Syy, T


def fit_kcca(K, Y, n_f=None, eta=0.0, rank_tol=DEFAULT.rank_tol) -> KernelModel:
    """Kernel CCA against the raw targets; eigenvalues are correlations."""
    K, Y = _check_pair(K, Y)
    Sxy, Syy, T = _whitened_dual(K, Y, eta, rank_tol)
    Z, V, rho = _solvers.solve_cca(np.eye(T.shape[1]), Sxy, Syy, n_f, rank_tol)
    A = T @ Z
    return KernelModel("kcca", A, A, rho, V, eta)


def fit_kopls(K, Y, n_f=None, eta=0.0, rank_tol=DEFAULT.rank_tol) -> KernelModel:
    K, Y = _check_pair(K, Y)
    Sxy, _, T = _whitened_dual(K, Y, eta, rank_tol)
    Z, lam = _solvers.solve_opls(np.eye(T.shape[1]), Sxy, n_f, rank_tol)
    A = T @ Z
    return KernelModel("kopls", A, A, lam, None, eta)


def fit_on_gram(method, K, Y=None, n_f=None, eta=0.0) -> KernelModel:
    if method == "kpca":
        return fit_kpca(K, n_f)
    if Y is None:
        raise UsageError(f"{method} needs targets")
    if method == "kpls2":
        return fit_kpls2(K, Y, n_f)
    if method == "kcca":
        return fit_kcca(K, Y, n_f, eta)
    if method == "kopls":
        return fit_kopls(K, Y, n_f, eta)
    raise UsageError(f"unknown kernel method {method!r}; valid: {', '.join(METHODS)}")


def prepare(X, Y, kernel: KernelConfig, standardize=True):
    """Standardize inputs, center targets, resolve sigma, build centered Gram."""
    Xs, xs = center_fit_apply(X, standardize)
    Yc, ys = (None, None) if Y is None else center_fit_apply(Y, False)
    if Yc is not None and Yc.shape[0] != Xs.shape[0]:
        raise DataError("X and Y row counts differ")
    kernel = kernel.resolve(Xs)
    K, cstats = center_train(gram(kernel, Xs))
    return Xs, xs, Yc, ys, kernel, K, cstats


def fit(method, X, Y=None, kernel: KernelConfig | None = None, n_f=None, eta=0.0,
        standardize=True) -> KernelModel:
    """Fit a dense kernel extractor from raw data."""
    kernel = KernelConfig() if kernel is None else kernel
    Xs, xs, Yc, ys, kernel, K, cstats = prepare(X, Y, kernel, standardize)
    model = fit_on_gram(method, K, Yc, n_f, eta)
    return dataclasses.replace(model, basis=Xs, kernel=kernel, centering=cstats,
                               x_stats=xs, y_stats=ys)


def transform(model: KernelModel, X_new) -> np.ndarray:
    """Features of new rows: centered test Gram times the transform coefficients."""
    if model.basis is None:
        raise UsageError("model was fitted on a bare Gram matrix; no samples to evaluate")
    Xs = model.x_stats.apply(X_new)
    Kt = gram(model.kernel, Xs, model.basis)
    return center_test(Kt, model.centering) @ model.coef
