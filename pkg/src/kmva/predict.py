"""Least-squares head on extracted features, winner-takes-all decoding, metrics, CV."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DataError, KMVAError, UsageError

METRICS = ("OA", "MSE", "RMSE")


@dataclass(frozen=True)
class LSHead:
    """Linear map from (centered) features to targets.

    Scores are ``(Xp - x_mean) W + y_mean``; for classifiers ``classes``
    names the target columns so the argmax can be decoded.
    """

    W: np.ndarray
    lam: float
    x_mean: np.ndarray
    y_mean: np.ndarray
    classes: np.ndarray | None = None

    @property
    def is_classifier(self) -> bool:
        return self.classes is not None


def _as_2d(M, name):
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    if M.ndim != 2:
        raise DataError(f"{name} must be a matrix")
    return M


def fit_ls(Xp, Y, lam=0.0, classes=None, center=True) -> LSHead:
    """Ridge regression ``W = (Xp'Xp + lam I)^-1 Xp'Y``; ``lam = 0`` uses the pseudoinverse."""
    Xp, Y = _as_2d(Xp, "features"), _as_2d(Y, "targets")
    if Xp.shape[0] != Y.shape[0]:
        raise DataError(f"{Xp.shape[0]} feature rows but {Y.shape[0]} target rows")
    if lam < 0:
        raise UsageError("lambda must be non-negative")
    if classes is not None and len(classes) != Y.shape[1]:
        raise UsageError("class table length must equal the number of target columns")
    xm = Xp.mean(axis=0) if center else np.zeros(Xp.shape[1])
    ym = Y.mean(axis=0) if center else np.zeros(Y.shape[1])
    Xc, Yc = Xp - xm, Y - ym
    if lam == 0:
        W = np.linalg.pinv(Xc) @ Yc
    else:
        W = np.linalg.solve(Xc.T @ Xc + lam * np.eye(Xc.shape[1]), Xc.T @ Yc)
    return LSHead(W, float(lam), xm, ym, None if classes is None else np.asarray(classes))


def predict_scores(head: LSHead, Xp) -> np.ndarray:
    Xp = _as_2d(Xp, "features")
    if Xp.shape[1] != head.W.shape[0]:
        raise DataError(f"expected {head.W.shape[0]} feature columns, got {Xp.shape[1]}")
    return (Xp - head.x_mean) @ head.W + head.y_mean


def wta(scores) -> np.ndarray:
    """Index of the largest score per row; ties go to the lowest index."""
    return np.argmax(_as_2d(scores, "scores"), axis=1)


def predict_wta(head: LSHead, Xp) -> np.ndarray:
    if not head.is_classifier:
        raise UsageError("head was not fitted for classification")
    return head.classes[wta(predict_scores(head, Xp))]


@dataclass(frozen=True)
class EvalReport:
    """One metric with a per-class (OA) or per-output (MSE/RMSE) breakdown."""

    metric: str
    value: float
    breakdown: dict = field(default_factory=dict)
    std: float | None = None
    n: int = 0


def binomial_std(oa: float, n: int) -> float:
    """Standard deviation, in percent, of an accuracy of ``oa`` percent over ``n`` trials."""
    return float(np.sqrt(oa * (100.0 - oa) / n))


def evaluate(predictions, truth, kind="OA") -> EvalReport:
    if kind not in METRICS:
        raise UsageError(f"unknown metric {kind!r}; valid: {', '.join(METRICS)}")
    if kind == "OA":
        p, t = np.asarray(predictions), np.asarray(truth)
        if p.shape != t.shape or p.ndim != 1:
            raise DataError(f"length mismatch: {p.shape} predictions vs {t.shape} labels")
        if p.size == 0:
            raise DataError("nothing to evaluate")
        hit = p == t
        oa = 100.0 * hit.mean()
        per = {c: 100.0 * float(hit[t == c].mean()) for c in np.unique(t).tolist()}
        return EvalReport("OA", float(oa), per, binomial_std(oa, p.size), p.size)
    P, T = _as_2d(predictions, "predictions"), _as_2d(truth, "truth")
    if P.shape != T.shape:
        raise DataError(f"shape mismatch: {P.shape} predictions vs {T.shape} targets")
    if P.size == 0:
        raise DataError("nothing to evaluate")
    per = np.mean((P - T) ** 2, axis=0)
    mse = float(per.mean())
    if kind == "RMSE":
        return EvalReport("RMSE", float(np.sqrt(mse)), dict(enumerate(np.sqrt(per).tolist())),
                          n=P.shape[0])
    return EvalReport("MSE", mse, dict(enumerate(per.tolist())), n=P.shape[0])


class GridPointError(KMVAError):
    """A cross-validation closure failed; ``params`` names the grid point."""

    def __init__(self, params, cause):
        super().__init__(f"fit failed at grid point {params!r}: {cause}")
        self.params = params


@dataclass(frozen=True)
class CVResult:
    best: object
    best_score: float
    grid: list
    scores: np.ndarray   # (len(grid), n_folds)

    @property
    def mean_scores(self) -> np.ndarray:
        return self.scores.mean(axis=1)


def crossval_select(grid: Sequence, fit_eval: Callable, folds, maximize=True) -> CVResult:
    """Pick the grid point with the best mean validation score.

    ``fit_eval(params, train_idx, val_idx)`` returns a scalar score;
    ``folds`` is a list of ``(train_idx, val_idx)`` pairs.  Ties keep the
    earliest grid point.
    """
    grid = list(grid)
    folds = list(folds)
    if not grid:
        raise UsageError("parameter grid is empty")
    if not folds:
        raise UsageError("no folds given")
    scores = np.empty((len(grid), len(folds)))
    for g, params in enumerate(grid):
        for f, (tr, va) in enumerate(folds):
            try:
                scores[g, f] = float(fit_eval(params, tr, va))
            except Exception as exc:
                raise GridPointError(params, exc) from exc
    mean = scores.mean(axis=1)
    key = np.where(np.isnan(mean), -np.inf if maximize else np.inf, mean)
    best = int(np.argmax(key) if maximize else np.argmin(key))
    return CVResult(grid[best], float(mean[best]), grid, scores)
