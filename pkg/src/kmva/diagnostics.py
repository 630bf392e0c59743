"""Criteria each extractor optimizes, evaluated on a single training feature."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .extensions import RK_METHODS, reduced_moments
from .kernels import center_train, gram
from .mva_linear import LinearModel


@dataclass(frozen=True)
class FeatureCriteria:
    variance: float     # |t|^2 / (l |u|^2)
    covariance: float   # |Y't| / (l |u|)
    corr2: float        # squared multiple correlation of t with Y
    mse: float          # LS error of approximating Y from t, per entry


def criteria(t, u_norm2, Yc) -> FeatureCriteria:
    """Scale-free criteria of a centered feature ``t`` with projection norm ``|u|^2``."""
    t = np.asarray(t, dtype=float).ravel()
    Yc = np.asarray(Yc, dtype=float)
    l, m = Yc.shape
    tn = t / np.linalg.norm(t)
    yt = Yc.T @ tn
    P = Yc @ np.linalg.pinv(Yc)
    return FeatureCriteria(
        float(t @ t / (l * u_norm2)),
        float(np.linalg.norm(Yc.T @ t) / (l * np.sqrt(u_norm2))),
        float(tn @ P @ tn),
        float((np.sum(Yc * Yc) - yt @ yt) / (l * m)),
    )


def first_feature_criteria(model, X_train_features, Yc, K=None) -> FeatureCriteria:
    """Criteria of the first training feature; ``K`` is the centered Gram for kernel models."""
    t = np.asarray(X_train_features)[:, 0]
    if isinstance(model, LinearModel):
        u = model.U[:, 0]
        return criteria(t, float(u @ u), Yc)
    a = model.dual[:, 0]
    return criteria(K @ a, float(a @ K @ a), Yc)


def _dev(M, diag_only=False):
    M = np.atleast_2d(M)
    if diag_only:
        return float(np.max(np.abs(np.diag(M) - 1.0)))
    return float(np.max(np.abs(M - np.eye(M.shape[0]))))


def constraint_residual(model, X, Y=None, ridge=0.0) -> dict:
    """Largest deviation from each normalization constraint of a fitted model.

    ``X`` and ``Y`` are the raw training data the model was fitted on;
    ``ridge`` is the linear CCA/OPLS diagonal loading.  Keys name the
    checked matrix.
    """
    m = model.method
    Yc = None if Y is None or model.y_stats is None else model.y_stats.apply(Y)
    Xs = model.x_stats.apply(X)
    l = Xs.shape[0]
    out = {}
    if isinstance(model, LinearModel):
        U = model.U
        if m in ("pca", "pls2"):
            out["U'U"] = _dev(U.T @ U)
            if m == "pls2":
                out["|v|"] = _dev(model.V.T @ model.V, diag_only=True)
            return out
        Cx = Xs.T @ Xs / l + ridge * np.eye(Xs.shape[1])
        if model.pre_projection is not None:
            P = model.pre_projection
            Cx = P @ P.T @ Cx @ P @ P.T
        out["U'C_xU"] = _dev(U.T @ Cx @ U)
        if m == "cca" and Yc is not None:
            Cy = Yc.T @ Yc / l + ridge * np.eye(Yc.shape[1])
            out["V'C_yV"] = _dev(model.V.T @ Cy @ model.V)
        return out
    A = model.dual
    if m in RK_METHODS:
        mom = reduced_moments(model.kernel, model.basis, Xs, Yc)
        if m == "rkpca":
            out["B'K_rrB"] = _dev(A.T @ mom.Krr @ A)
            return out
        out["B'(K~K~'+eta K_rr)B/l"] = _dev(A.T @ (mom.KKt + model.eta * mom.Krr) @ A / l)
        if m == "rkcca":
            Cy = (Yc.T @ Yc + model.eta * np.eye(Yc.shape[1])) / l
            out["V'C_yV"] = _dev(model.V.T @ Cy @ model.V)
        return out
    K = center_train(gram(model.kernel, Xs))[0]
    if m in ("kpca", "kpls2", "smc"):
        out["A'KA"] = _dev(A.T @ K @ A)
    elif m in ("sma", "hsca"):
        T = K @ model.coef
        out["T'T" if m == "sma" else "T'T/l"] = _dev(T.T @ T / (1 if m == "sma" else l))
    elif m in ("kcca", "kopls"):
        # (KA)'(KA) avoids forming K^2, which squares the conditioning
        KA = K @ A
        out["A'(K^2+eta K)A/l"] = _dev((KA.T @ KA + model.eta * A.T @ KA) / l)
        if m == "kcca" and Yc is not None:
            Cy = (Yc.T @ Yc + model.eta * np.eye(Yc.shape[1])) / l
            out["V'C_yV"] = _dev(model.V.T @ Cy @ model.V)
    return out
