"""Kernel dependence measures: HSIC, the HSCA extractor and kernel generalized variance."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag

from .errors import DataError, NumericalError, RankWarning, UsageError
from .kernels import center_train
from .mva_kernel import KernelModel
from .numcore import DEFAULT, eig_gen, eig_sym

CLIP = 1.0 - 1e-9


@dataclass(frozen=True)
class DependenceReport:
    value: float
    estimator: str
    theta: float | None = None
    eta: float | None = None
    eigenvalues: np.ndarray | None = None


def _grams(Kx, Ky):
    Kx = np.asarray(Kx, dtype=float)
    Ky = np.asarray(Ky, dtype=float)
    for name, K in (("K_x", Kx), ("K_y", Ky)):
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise DataError(f"{name} must be a square Gram matrix")
    if Kx.shape != Ky.shape:
        raise DataError(f"Gram sizes differ: {Kx.shape[0]} vs {Ky.shape[0]}")
    return Kx, Ky


def hsic(Kx, Ky, centered=False) -> DependenceReport:
    """Biased HSIC, ``Tr(K~x K~y) / (l - 1)^2``.

    Grams are double-centered unless ``centered`` says they already are.
    """
    Kx, Ky = _grams(Kx, Ky)
    l = Kx.shape[0]
    if l < 2:
        raise DataError("HSIC needs at least two samples")
    if not centered:
        Kx, Ky = center_train(Kx)[0], center_train(Ky)[0]
    # trace of a product of symmetric matrices is the elementwise sum
    return DependenceReport(float(np.sum(Kx * Ky)) / (l - 1) ** 2, "HSIC")


def hsic_permutation_test(Kx, Ky, n_perm=200, seed=0):
    """HSIC with a permutation p-value ``(1 + #{null >= observed}) / (n_perm + 1)``.

    Returns ``(report, p_value, null)``; with ``n_perm = 0`` the p-value is None.
    """
    if n_perm < 0:
        raise UsageError("number of permutations must be non-negative")
    Kx, Ky = _grams(Kx, Ky)
    Kx, Ky = center_train(Kx)[0], center_train(Ky)[0]
    obs = hsic(Kx, Ky, centered=True)
    if n_perm == 0:
        return obs, None, np.empty(0)
    rng = np.random.default_rng(seed)
    l = Kx.shape[0]
    null = np.empty(n_perm)
    for i in range(n_perm):
        p = rng.permutation(l)
        null[i] = np.sum(Kx * Ky[np.ix_(p, p)]) / (l - 1) ** 2
    # relative slack so an exact tie with the observed value counts as >=
    count = int(np.sum(null >= obs.value - 1e-12 * abs(obs.value)))
    return obs, (1 + count) / (n_perm + 1), null


def fit_hsca(Kx, Ky, n_f=1, rank_tol=DEFAULT.rank_tol) -> KernelModel:
    """Greedy HSIC component analysis on centered Grams.

    Each direction maximizes ``a'Kx P Ky P Kx a / l^2`` subject to
    ``a'Kx P Kx a / l = 1``, where ``P`` projects out the features found so
    far (identity for the first one).  With ``Ky = YY'`` the first
    direction is the kernel OPLS one.  Stored duals act on the unprojected
    Gram, so features are ``K~ coef``.
    """
    Kx, Ky = _grams(Kx, Ky)
    if n_f < 1:
        raise UsageError("n_f must be at least 1")
    l = Kx.shape[0]
    coef, vals, F = [], [], np.zeros((l, 0))
    for j in range(n_f):
        Q = np.linalg.qr(F)[0] if F.shape[1] else F
        PK = Kx - Q @ (Q.T @ Kx)
        # features t = PK a live in the column space of PK; parametrize them
        # as t = sqrt(l) U z so the unit-scale constraint reads z'z = 1
        U, sv, Wt = np.linalg.svd(PK, full_matrices=False)
        keep = sv > rank_tol * sv[0] if sv.size and sv[0] > 0 else np.zeros(0, bool)
        U, sv, Wt = U[:, keep], sv[keep], Wt[keep]
        A = U.T @ Ky @ U / l
        if sv.size == 0 or np.max(np.abs(A), initial=0.0) <= 1e-14 * max(np.max(np.abs(Ky)), 1e-300):
            if j == 0:
                raise NumericalError("HSIC objective is identically zero (K_y = 0)")
            warnings.warn(f"HSCA stopped after {j} of {n_f} directions", RankWarning, stacklevel=2)
            break
        res = eig_sym(A, 1)
        if res.values[0] <= 0:
            if j == 0:
                raise NumericalError("no direction with positive HSIC objective")
            warnings.warn(f"HSCA stopped after {j} of {n_f} directions", RankWarning, stacklevel=2)
            break
        z = res.vectors[:, 0]
        t = np.sqrt(l) * (U @ z)
        a = np.sqrt(l) * (Wt.T @ (z / sv))
        # express the projected feature through the raw Gram: t = Kx a_eff
        a_eff = a.copy()
        if F.shape[1]:
            C = np.column_stack(coef)
            a_eff -= C @ np.linalg.lstsq(F, Kx @ a, rcond=None)[0]
        coef.append(a_eff)
        vals.append(res.values[0])
        F = np.column_stack([F, t])
    C = np.column_stack(coef)
    return KernelModel("hsca", C, C, np.array(vals))


def kgv(Kx, Ky, theta=0.5, eta=1e-2, rank_tol=DEFAULT.rank_tol) -> DependenceReport:
    """Kernel generalized variance ``-1/2 sum log(1 - lam_i^2)``.

    ``lam_i`` are the positive eigenvalues of::

        [0      KxKy] [a]       [theta Kx^2 + eta (1-theta) Kx          0         ] [a]
        [KyKx      0] [b] = lam [        0          theta Ky^2 + eta (1-theta) Ky] [b]

    Grams are double-centered first.  The eigenvalues stay below one only
    while the regularized blocks dominate ``Kx^2`` and ``Ky^2`` (for instance
    ``eta`` at least the largest Gram eigenvalue); any at or beyond
    ``1 - 1e-9`` are clipped with a warning.
    """
    if not 0.0 <= theta <= 1.0:
        raise UsageError("theta must lie in [0, 1]")
    if eta < 0 or (theta < 1.0 and eta <= 0):
        raise UsageError("eta must be positive when theta < 1")
    Kx, Ky = _grams(Kx, Ky)
    Kx, Ky = center_train(Kx)[0], center_train(Ky)[0]
    l = Kx.shape[0]
    C = Kx @ Ky
    Z = np.zeros((l, l))
    M = np.block([[Z, C], [C.T, Z]])
    D = block_diag(theta * Kx @ Kx + eta * (1 - theta) * Kx,
                   theta * Ky @ Ky + eta * (1 - theta) * Ky)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankWarning)
        res = eig_gen(M, 0.5 * (D + D.T), None, rank_tol)
    top = max(float(res.values[0]), 0.0) if res.values.size else 0.0
    lam = res.values[res.values > max(1e-12, rank_tol * top)]
    if lam.size and lam[0] >= CLIP:
        warnings.warn(f"kGV eigenvalue {lam[0]:.12g} clipped to {CLIP}", RankWarning, stacklevel=2)
        lam = np.minimum(lam, CLIP)
    value = -0.5 * float(np.sum(np.log1p(-lam ** 2)))
    return DependenceReport(value, "kGV", theta, eta, lam)
