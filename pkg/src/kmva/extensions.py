"""Reduced-set, sparse and semisupervised kernel extractors.

Reduced-set fits (``rkpca``, ``rkcca``, ``rkopls``) restrict the dual to
``r`` basis rows, ``U = Phi_r' B``, while still using every training row
through ``K_rl``.  Only r x r accumulators are built, by streaming over
chunks of training rows, so no l x l matrix is ever formed.  The r x l
cross-Gram is centered against the training mean in feature space, which
only shifts each basis column by its mean; test rows therefore cost
exactly ``r`` kernel evaluations.

Sparse PLS (``sma``, ``smc``) picks one training sample per direction by
maximizing the alignment or covariance of its kernel column with the
targets.  ``fit_sskcca`` regularizes kernel CCA with a graph Laplacian
over labeled and unlabeled rows; ``fit_cluster_kernel_kmva`` feeds a
composite RBF/cluster kernel into the dense kernel fits.
"""

from __future__ import annotations

import dataclasses
import warnings

import numpy as np

from . import _solvers, mva_kernel
from .data import center_fit_apply
from .errors import DataError, NumericalError, RankWarning, UsageError
from .kernels import (KernelCentering, KernelConfig, center_train, cluster_kernel_fit, gram,
                      graph_laplacian, knn_graph)
from .mva_kernel import KernelModel, deflate, score_rotation
from .numcore import DEFAULT, eig_gen, estimate_rank

RK_METHODS = ("rkpca", "rkcca", "rkopls")
SPARSE_VARIANTS = ("sma", "smc")
CHUNK_ROWS = 1024


@dataclasses.dataclass
class ReducedMoments:
    """Streamed sufficient statistics of the centered r x l cross-Gram.

    ``KKt`` is ``K~ K~'``, ``KY`` is ``K~ Y`` and ``col_means`` the
    training mean of each basis column, where ``K~ = K_rl - mean 1'``.
    """

    KKt: np.ndarray
    KY: np.ndarray | None
    col_means: np.ndarray
    Krr: np.ndarray
    n_rows: int


def reduced_moments(kernel: KernelConfig, basis, X, Y=None, chunk=CHUNK_ROWS) -> ReducedMoments:
    r = basis.shape[0]
    l = X.shape[0]
    S = np.zeros((r, r))
    s = np.zeros(r)
    KY = None if Y is None else np.zeros((r, Y.shape[1]))
    for start in range(0, l, chunk):
        stop = min(start + chunk, l)
        Kc = gram(kernel, basis, X[start:stop])
        S += Kc @ Kc.T
        s += Kc.sum(axis=1)
        if Y is not None:
            KY += Kc @ Y[start:stop]
    mu = s / l
    KKt = S - l * np.outer(mu, mu)
    if Y is not None:
        KY = KY - np.outer(mu, Y.sum(axis=0))
    return ReducedMoments(0.5 * (KKt + KKt.T), KY, mu, gram(kernel, basis), l)


def _rk_solve(method, mom: ReducedMoments, Y, n_f, eta, rank_tol):
    l = mom.n_rows
    Sxx = (mom.KKt + eta * mom.Krr) / l
    if method == "rkpca":
        n_f = _solvers.clamp_nf(n_f, estimate_rank(mom.KKt, rank_tol), "rank of the reduced Gram")
        res = eig_gen(mom.KKt / l, mom.Krr, n_f, rank_tol)
        return res.vectors, np.maximum(res.values, 0.0), None
    Sxy = mom.KY / l
    if method == "rkopls":
        B, lam = _solvers.solve_opls(Sxx, Sxy, n_f, rank_tol)
        return B, lam, None
    Syy = (Y.T @ Y + eta * np.eye(Y.shape[1])) / l
    B, V, rho = _solvers.solve_cca(Sxx, Sxy, Syy, n_f, rank_tol)
    return B, rho, V


def fit_rk(method, X, Y=None, r=100, seed=0, n_f=None, eta=0.0,
           kernel: KernelConfig | None = None, standardize=True, chunk=CHUNK_ROWS,
           rank_tol=DEFAULT.rank_tol) -> KernelModel:
    """Reduced-set kPCA / kCCA / kOPLS on ``r`` randomly drawn basis rows.

    Solved problems (``K~`` = centered r x l cross-Gram)::

        rkpca   K~K~'b / l = lam K_rr b
        rkopls  K~YY'K~'b / l^2 = lam (K~K~' + eta K_rr) b / l
        rkcca   K~Y (Y'Y + eta I)^+ Y'K~'b / l = rho^2 (K~K~' + eta K_rr) b / l
    """
    if method not in RK_METHODS:
        raise UsageError(f"unknown reduced-set method {method!r}; valid: {', '.join(RK_METHODS)}")
    if eta < 0:
        raise UsageError("eta must be non-negative")
    Xs, xs = center_fit_apply(X, standardize)
    l = Xs.shape[0]
    if not 1 <= r <= l:
        raise UsageError(f"r must lie in [1, {l}], got {r}")
    Yc = ys = None
    if method != "rkpca":
        if Y is None:
            raise UsageError(f"{method} needs targets")
        Yc, ys = center_fit_apply(Y, False)
        if Yc.shape[0] != l:
            raise DataError("X and Y row counts differ")
    kernel = (KernelConfig() if kernel is None else kernel).resolve(Xs)
    idx = np.random.default_rng(seed).choice(l, r, replace=False)
    basis = Xs[idx]
    mom = reduced_moments(kernel, basis, Xs, Yc, chunk)
    B, vals, V = _rk_solve(method, mom, Yc, n_f, eta, rank_tol)
    return KernelModel(method, B, B, vals, V, eta, basis, kernel,
                       KernelCentering(mom.col_means, 0.0, mode="basis"), xs, ys, idx,
                       {"r": r, "seed": seed})


def sparse_objective(variant, Kj, Y, cand):
    """Squared objective of each single-sample candidate and its constraint norm.

    ``sma`` normalizes by ``e_i'K_j^2 e_i`` (alignment), ``smc`` by
    ``K_j[i, i]`` (covariance); the numerator is ``|Y'K_j e_i|^2``.
    """
    rows = Kj[cand]
    num = np.sum((rows @ Y) ** 2, axis=1)
    den = np.sum(rows * rows, axis=1) if variant == "sma" else Kj[cand, cand]
    scale = max(float(np.max(np.abs(np.diag(Kj)))), np.finfo(float).tiny)
    ok = den > 1e-12 * scale * (scale if variant == "sma" else 1.0)
    obj = np.zeros(len(cand))
    obj[ok] = num[ok] / den[ok]
    return obj, den


def fit_sparse_pls(variant, K, Y, n_f=None, p=None, seed=0) -> KernelModel:
    """Sparse kernel PLS with one training sample per direction.

    For each direction a pool of ``p`` not-yet-selected samples is drawn
    (all of them when ``p`` is ``None`` or at least the remaining count),
    the best single-index dual is kept, and ``K_j`` is deflated by the
    projector onto the complement of the accepted score.  ``eigenvalues``
    holds the attained objective ``|Y'K_j b|`` per direction.
    """
    if variant not in SPARSE_VARIANTS:
        raise UsageError(f"unknown sparse PLS variant {variant!r}; valid: sma, smc")
    K, Y = mva_kernel._check_pair(K, Y)
    l = K.shape[0]
    n_f = l if n_f is None else int(n_f)
    if not 1 <= n_f <= l:
        raise UsageError(f"n_f must lie in [1, {l}]")
    p = l if p is None else int(p)
    if not 1 <= p <= l:
        raise UsageError(f"pool size must lie in [1, {l}]")
    rng = np.random.default_rng(seed)
    Kj = K.copy()
    selected, objective, A, T = [], [], [], []
    That = np.zeros((l, 0))
    for _ in range(n_f):
        free = np.setdiff1d(np.arange(l), selected)
        cand = free if p >= free.size else np.sort(rng.choice(free, p, replace=False))
        obj, den = sparse_objective(variant, Kj, Y, cand)
        best = int(np.argmax(obj))
        if obj[best] <= 1e-24 * max(1.0, float(np.sum(Y * Y)) * float(np.max(np.abs(K)))):
            break
        i = int(cand[best])
        alpha = np.zeros(l)
        alpha[i] = 1.0 / np.sqrt(den[best])
        t = Kj @ alpha
        A.append(alpha - That @ (That.T @ alpha))
        T.append(t)
        th = t / np.linalg.norm(t)
        Kj = deflate(Kj, th)
        That = np.column_stack([That, th])
        selected.append(i)
        objective.append(np.sqrt(obj[best]))
    if not selected:
        raise NumericalError("all candidate objectives are zero; no sparse PLS direction")
    if len(selected) < n_f:
        warnings.warn(f"sparse PLS stopped after {len(selected)} of {n_f} directions",
                      RankWarning, stacklevel=2)
    A, T = np.column_stack(A), np.column_stack(T)
    return KernelModel(variant, score_rotation(K, A, T), A, np.array(objective),
                       support=np.array(selected), extras={"pool": p, "seed": seed})


def fit_sparse_pls_data(variant, X, Y, kernel: KernelConfig | None = None, n_f=None, p=None,
                        seed=0, standardize=True) -> KernelModel:
    """:func:`fit_sparse_pls` from raw data, keeping what transform needs."""
    kernel = KernelConfig() if kernel is None else kernel
    Xs, xs, Yc, ys, kernel, K, cstats = mva_kernel.prepare(X, Y, kernel, standardize)
    model = fit_sparse_pls(variant, K, Yc, n_f, p, seed)
    return dataclasses.replace(model, basis=Xs, kernel=kernel, centering=cstats,
                               x_stats=xs, y_stats=ys)


def _labeled_centering(K, n_lab):
    """Center an n x n Gram with the feature-space mean of the first rows."""
    col = K[:n_lab].mean(axis=0)
    g = float(col[:n_lab].mean())
    Kc = K - col[None, :] - col[:, None] + g
    return 0.5 * (Kc + Kc.T), KernelCentering(col, g, "double", np.arange(n_lab))


def _graph_reg(Kc, alpha, gamma, X, k, sigma):
    R = alpha * Kc
    if gamma > 0:
        L = graph_laplacian(knn_graph(X, k, sigma))
        R = R + gamma * Kc @ L @ Kc
    return R


def fit_sskcca(X_lab, Y_lab, X_unlab=None, alpha_x=1e-3, alpha_y=1e-3, gamma_x=1e-2,
               gamma_y=1e-2, kernel: KernelConfig | None = None, graph_k=7,
               graph_sigma=None, n_f=None, standardize=True,
               rank_tol=DEFAULT.rank_tol) -> KernelModel:
    """Kernel CCA with Tikhonov and graph-Laplacian regularization.

    Solves, for duals of length ``n = l + u`` on the input side::

        K_nl Ky (Ky Ky + R_y)^+ Ky K_ln a = rho^2 (K_nl K_ln + R_x) a
        R_x = alpha_x K_nn + gamma_x K_nn L_x K_nn

    The target kernel is linear over the centered labeled targets, and
    ``L_y`` is built from target-space neighbours of the labeled rows.
    Kernels are centered with the labeled mean.  With no unlabeled rows
    and zero regularization this is plain kernel CCA.
    """
    for name, v in (("alpha_x", alpha_x), ("alpha_y", alpha_y),
                    ("gamma_x", gamma_x), ("gamma_y", gamma_y)):
        if v < 0:
            raise UsageError(f"{name} must be non-negative")
    X_lab = np.atleast_2d(np.asarray(X_lab, dtype=float))
    Yc, ys = center_fit_apply(Y_lab, False)
    l = X_lab.shape[0]
    if Yc.shape[0] != l:
        raise DataError("labeled X and Y row counts differ")
    Xs_lab, xs = center_fit_apply(X_lab, standardize)
    parts = [Xs_lab]
    if X_unlab is not None and np.size(X_unlab):
        parts.append(xs.apply(X_unlab))
    Xn = np.vstack(parts)
    kernel = (KernelConfig() if kernel is None else kernel).resolve(Xn)
    Kn, cstats = _labeled_centering(gram(kernel, Xn), l)
    Ky = Yc @ Yc.T
    Rx = _graph_reg(Kn, alpha_x, gamma_x, Xn, graph_k, graph_sigma)
    Ry = _graph_reg(Ky, alpha_y, gamma_y, Yc, graph_k, graph_sigma)
    Knl = Kn[:, :l]
    # whiten both metrics through square-root factors so rank is judged on
    # the Grams themselves rather than their squares
    Tx = _solvers.whitener(np.vstack([Knl.T, _solvers.psd_root(Rx)]), rank_tol)
    Ty = _solvers.whitener(np.vstack([Ky, _solvers.psd_root(Ry)]), rank_tol)
    if Tx.shape[1] == 0 or Ty.shape[1] == 0:
        raise NumericalError("input or target Gram has zero numerical rank")
    Z, Vz, rho = _solvers.solve_cca(np.eye(Tx.shape[1]), Tx.T @ Knl @ Ky @ Ty,
                                    np.eye(Ty.shape[1]), n_f, rank_tol)
    A, V = Tx @ Z, Ty @ Vz
    rho = np.minimum(rho, 1.0 + 1e-6)
    return KernelModel("sskcca", A, A, rho, V, 0.0, Xn, kernel, cstats, xs, ys,
                       extras={"n_labeled": l, "alpha_x": alpha_x, "alpha_y": alpha_y,
                               "gamma_x": gamma_x, "gamma_y": gamma_y, "graph_k": graph_k})


def fit_cluster_kernel_kmva(method, X_lab, Y_lab, X_unlab=None, beta=0.5, Q=5, G=5, seed=0,
                            n_f=None, eta=0.0, sigma="median", standardize=True) -> KernelModel:
    """Dense kernel fit on the labeled rows with ``beta k_rbf + (1 - beta) k_cluster``.

    Standardization and the RBF bandwidth come from the labeled rows;
    the mixtures behind the cluster kernel see labeled and unlabeled rows.
    """
    Xs, xs = center_fit_apply(X_lab, standardize)
    Yc, ys = (None, None) if Y_lab is None else center_fit_apply(Y_lab, False)
    X_all = Xs if X_unlab is None or not np.size(X_unlab) else np.vstack([Xs, xs.apply(X_unlab)])
    cluster = cluster_kernel_fit(X_all, Q, G, seed)
    kernel = KernelConfig("composite", sigma, beta, Q, G, seed, cluster).resolve(Xs)
    K, cstats = center_train(gram(kernel, Xs))
    model = mva_kernel.fit_on_gram(method, K, Yc, n_f, eta)
    return dataclasses.replace(model, basis=Xs, kernel=kernel, centering=cstats,
                               x_stats=xs, y_stats=ys,
                               extras={"n_unlabeled": X_all.shape[0] - Xs.shape[0]})
