"""Linear PCA, PLS2, CCA and OPLS.

All fits take raw matrices, center them (inputs optionally standardized,
targets only centered) and keep the statistics so :func:`transform` can
be applied to new rows.  With ``C_x = X'X/l``, ``C_y = Y'Y/l`` and
``C_xy = X'Y/l`` the training projections satisfy::

    PCA   U'U = I                 PLS2  U'U = I (weights), |v_i| = 1
    CCA   U'C_xU = I, V'C_yV = I  OPLS  U'C_xU = I
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import _solvers
from .data import CenteringStats, center_fit_apply
from .errors import DataError, NumericalError, RankWarning, UsageError
from .numcore import eig_sym, estimate_rank

METHODS = ("pca", "pls2", "cca", "opls")


@dataclass(frozen=True)
class LinearModel:
    """Fitted linear extractor.

    ``U`` holds the projection vectors in (standardized) input
    coordinates.  ``rotation`` is what :func:`transform` applies; it
    equals ``U`` except for PLS2, where deflation makes the scores
    ``X W (P'W)^-1`` rather than ``X W``.
    """

    method: str
    U: np.ndarray
    rotation: np.ndarray
    eigenvalues: np.ndarray
    x_stats: CenteringStats
    V: np.ndarray | None = None
    y_stats: CenteringStats | None = None
    pre_projection: np.ndarray | None = None

    @property
    def n_features(self) -> int:
        return self.rotation.shape[1]


def _prep(X, Y, standardize):
    Xc, xs = center_fit_apply(X, standardize)
    if Y is None:
        return Xc, xs, None, None
    Yc, ys = center_fit_apply(Y, False)
    if Yc.shape[0] != Xc.shape[0]:
        raise DataError("X and Y row counts differ")
    return Xc, xs, Yc, ys


def pca_basis(Xc, dims: int | str = "auto", keep: float = 1 - 1e-9):
    """Orthonormal PCA basis: ``dims`` components or enough for ``keep`` variance."""
    l = Xc.shape[0]
    r = estimate_rank(Xc)
    if r == 0:
        raise NumericalError("input matrix has zero rank")
    res = eig_sym(Xc.T @ Xc / l, r)
    if dims == "auto":
        frac = np.cumsum(res.values) / res.values.sum()
        dims = int(np.searchsorted(frac, keep) + 1)
    dims = _solvers.clamp_nf(int(dims), r, "rank of X")
    return res.vectors[:, :dims], res.values[:dims]


def fit_pca(X, n_f=None, standardize=True) -> LinearModel:
    Xc, xs, _, _ = _prep(X, None, standardize)
    n_f = _solvers.clamp_nf(n_f, estimate_rank(Xc), "rank of X")
    res = eig_sym(Xc.T @ Xc / Xc.shape[0], n_f)
    return LinearModel("pca", res.vectors, res.vectors, res.values, xs)


def pls2_scores(Xc, Yc, n_f, rel_tol=1e-10):
    """NIPALS-style PLS2: returns weights W, Y-weights V, covariances, scores T, loadings P."""
    l = Xc.shape[0]
    Xj, Yj = Xc.copy(), Yc.copy()
    W, V, S, T, P = [], [], [], [], []
    # |X'Y|_2 <= |X|_F |Y|_F, so this bound is scale-free
    floor = rel_tol * np.linalg.norm(Xc) * np.linalg.norm(Yc)
    for _ in range(n_f):
        Sxy = Xj.T @ Yj
        u, s, vt = np.linalg.svd(Sxy, full_matrices=False)
        s1 = s[0] if s.size else 0.0
        if s1 <= floor or s1 <= 1e-300:
            break
        w, v = u[:, 0], vt[0]
        sign = np.sign(w[np.argmax(np.abs(w))]) or 1.0
        w, v = w * sign, v * sign
        t = Xj @ w
        tt = t @ t
        p = Xj.T @ t / tt
        Xj = Xj - np.outer(t, p)
        Yj = Yj - np.outer(t, Yj.T @ t / tt)
        W.append(w); V.append(v); S.append(s1 / l); T.append(t); P.append(p)
    if not W:
        raise NumericalError("cross-covariance is numerically zero; no PLS direction")
    if len(W) < n_f:
        warnings.warn(f"PLS2 stopped after {len(W)} of {n_f} directions "
                      "(cross-covariance vanished)", RankWarning, stacklevel=2)
    return (np.column_stack(W), np.column_stack(V), np.array(S),
            np.column_stack(T), np.column_stack(P))


def fit_pls2(X, Y, n_f=None, standardize=True) -> LinearModel:
    Xc, xs, Yc, ys = _prep(X, Y, standardize)
    n_f = _solvers.clamp_nf(n_f, estimate_rank(Xc), "rank of X")
    W, V, S, _, P = pls2_scores(Xc, Yc, n_f)
    R = W @ np.linalg.inv(P.T @ W)
    return LinearModel("pls2", W, R, S, xs, V, ys)


def _moments(Xc, Yc, ridge):
    l = Xc.shape[0]
    Cx = Xc.T @ Xc / l + ridge * np.eye(Xc.shape[1])
    Cy = Yc.T @ Yc / l + ridge * np.eye(Yc.shape[1])
    Cxy = Xc.T @ Yc / l
    return Cx, Cxy, Cy


def _fit_supervised(method, X, Y, n_f, pca_dims, ridge, standardize):
    if ridge < 0:
        raise UsageError("ridge must be non-negative")
    Xc, xs, Yc, ys = _prep(X, Y, standardize)
    P = None
    Xw = Xc
    if pca_dims is not None:
        P, _ = pca_basis(Xc, pca_dims)
        Xw = Xc @ P
    Cx, Cxy, Cy = _moments(Xw, Yc, ridge)
    if method == "opls":
        U, lam = _solvers.solve_opls(Cx, Cxy, n_f)
        V = None
    else:
        U, V, lam = _solvers.solve_cca(Cx, Cxy, Cy, n_f)
    if P is not None:
        U = P @ U
    return LinearModel(method, U, U, lam, xs, V, ys, P)


def fit_cca(X, Y, n_f=None, pca_dims=None, ridge=0.0, standardize=True) -> LinearModel:
    """Canonical correlation analysis; eigenvalues are canonical correlations.

    ``pca_dims`` (an int or ``"auto"``) runs the problem on a PCA
    pre-projection of the inputs; ``ridge`` loads the diagonals of
    ``C_x`` and ``C_y``.
    """
    return _fit_supervised("cca", X, Y, n_f, pca_dims, ridge, standardize)


def fit_opls(X, Y, n_f=None, pca_dims=None, ridge=0.0, standardize=True) -> LinearModel:
    """Orthonormalized PLS (``C_xy C_xy' u = lam C_x u``)."""
    return _fit_supervised("opls", X, Y, n_f, pca_dims, ridge, standardize)


def transform(model: LinearModel, X_new) -> np.ndarray:
    Xs = model.x_stats.apply(X_new)
    return Xs @ model.rotation


def fit(method, X, Y=None, n_f=None, standardize=True, **kw) -> LinearModel:
    if method == "pca":
        return fit_pca(X, n_f, standardize)
    if Y is None:
        raise UsageError(f"{method} needs targets")
    if method == "pls2":
        return fit_pls2(X, Y, n_f, standardize)
    if method == "cca":
        return fit_cca(X, Y, n_f, standardize=standardize, **kw)
    if method == "opls":
        return fit_opls(X, Y, n_f, standardize=standardize, **kw)
    raise UsageError(f"unknown linear method {method!r}; valid: {', '.join(METHODS)}")
