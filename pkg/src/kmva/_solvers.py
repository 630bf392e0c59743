"""OPLS/CCA reductions shared by the linear, kernel and reduced-set fits.

Both methods are written against three moment matrices:

    Sxx  input-side metric       (C_x, or (K^2 + eta K)/l in dual form)
    Sxy  input/target moments    (C_xy, or K Y / l)
    Syy  target metric           (C_y)

OPLS:  Sxy Sxy' u = lam Sxx u
CCA:   Sxy Syy^+ Sxy' u = rho^2 Sxx u,   v = Syy^+ Sxy' u / rho
"""

from __future__ import annotations

import warnings

import numpy as np

from .errors import NumericalError, RankWarning
from .numcore import DEFAULT, eig_gen, estimate_rank, pinv


def clamp_nf(n_f, cap: int, what: str) -> int:
    if cap < 1:
        raise NumericalError(f"{what} has zero rank; no features can be extracted")
    if n_f is None:
        return cap
    if n_f < 1:
        raise ValueError("n_f must be at least 1")
    if n_f > cap:
        warnings.warn(f"n_f={n_f} exceeds the maximum {cap} ({what}); clamped",
                      RankWarning, stacklevel=3)
        return cap
    return int(n_f)


def whitener(F, rank_tol=DEFAULT.rank_tol):
    """``T`` with ``T'(F'F)T = I``, spanning the range of ``F'F``.

    Rank is judged on the singular values of ``F`` rather than on the
    eigenvalues of ``F'F``, whose condition number is the square.
    """
    _, s, Wt = np.linalg.svd(np.asarray(F, dtype=float), full_matrices=False)
    if s.size == 0 or s[0] <= 0:
        return np.zeros((np.shape(F)[1], 0))
    keep = s > rank_tol * s[0]
    return Wt[keep].T / s[keep]


def psd_root(M):
    """Factor ``F`` with ``F'F = M`` for a symmetric PSD ``M`` (negative round-off dropped)."""
    w, Q = np.linalg.eigh(0.5 * (M + M.T))
    w = np.maximum(w, 0.0)
    return (Q * np.sqrt(w)).T


def solve_opls(Sxx, Sxy, n_f, rank_tol=DEFAULT.rank_tol):
    n_f = clamp_nf(n_f, estimate_rank(Sxy, rank_tol), "rank of the cross-covariance")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankWarning)
        res = eig_gen(Sxy @ Sxy.T, Sxx, n_f, rank_tol)
    if res.truncated:
        warnings.warn("input metric is rank-deficient; solved on its range",
                      RankWarning, stacklevel=2)
    return res.vectors, np.maximum(res.values, 0.0)


def solve_cca(Sxx, Sxy, Syy, n_f, rank_tol=DEFAULT.rank_tol):
    n_f = clamp_nf(n_f, estimate_rank(Sxy, rank_tol), "rank of the cross-covariance")
    Syy_pinv = pinv(Syy, rank_tol)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankWarning)
        res = eig_gen(Sxy @ Syy_pinv @ Sxy.T, Sxx, n_f, rank_tol)
    if res.truncated:
        warnings.warn("input metric is rank-deficient; solved on its range",
                      RankWarning, stacklevel=2)
    rho = np.sqrt(np.maximum(res.values, 0.0))
    U = res.vectors
    V = Syy_pinv @ Sxy.T @ U
    nz = rho > 0
    V[:, nz] /= rho[nz]
    V[:, ~nz] = 0.0
    return U, V, rho
