"""Full-covariance Gaussian mixtures fitted by expectation-maximization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.special import logsumexp

from .errors import NumericalError

MAX_RESETS = 20


@dataclass(frozen=True)
class GaussianMixture:
    weights: np.ndarray       # (g,)
    means: np.ndarray         # (g, d)
    covariances: np.ndarray   # (g, d, d)
    log_likelihood: float = float("nan")
    n_iter: int = 0

    @property
    def n_components(self) -> int:
        return self.weights.size

    def _log_joint(self, X):
        X = np.asarray(X, dtype=float)
        n, d = X.shape
        out = np.empty((n, self.n_components))
        for k in range(self.n_components):
            L = linalg.cholesky(self.covariances[k], lower=True)
            z = linalg.solve_triangular(L, (X - self.means[k]).T, lower=True)
            logdet = 2.0 * np.log(np.diag(L)).sum()
            out[:, k] = (np.log(self.weights[k]) - 0.5 * (d * np.log(2 * np.pi) + logdet)
                         - 0.5 * np.sum(z * z, axis=0))
        return out

    def predict_proba(self, X) -> np.ndarray:
        lj = self._log_joint(X)
        return np.exp(lj - logsumexp(lj, axis=1, keepdims=True))

    def score(self, X) -> float:
        return float(np.mean(logsumexp(self._log_joint(X), axis=1)))


def _kmeanspp(X, g, rng):
    n = X.shape[0]
    centers = [X[rng.integers(n)]]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for _ in range(1, g):
        total = d2.sum()
        idx = rng.integers(n) if total <= 0 else rng.choice(n, p=d2 / total)
        centers.append(X[idx])
        d2 = np.minimum(d2, np.sum((X - X[idx]) ** 2, axis=1))
    return np.array(centers)


def fit_gmm(X, n_components: int, rng: np.random.Generator, max_iter: int = 200,
            tol: float = 1e-7, floor_rel: float = 1e-6) -> GaussianMixture:
    """EM with k-means++ seeding and a relative covariance floor.

    Components whose responsibility mass collapses are re-seeded on a
    random sample with the (floored) global covariance.
    """
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    g = n_components
    if n < g:
        raise NumericalError(f"{n} samples cannot support {g} mixture components")
    var = X.var(axis=0)
    floor = floor_rel * np.where(var > 0, var, 1.0)
    global_cov = np.cov(X.T, bias=True).reshape(d, d) + np.diag(floor)

    centers = _kmeanspp(X, g, rng)
    nearest = np.argmin(((X[:, None, :] - centers[None]) ** 2).sum(-1), axis=1)
    resp = np.zeros((n, g))
    resp[np.arange(n), nearest] = 1.0

    resets = 0
    prev = -np.inf
    model = None
    for it in range(1, max_iter + 1):
        Nk = resp.sum(axis=0)
        dead = Nk < max(1e-8 * n, 1e-12)
        if np.any(dead):
            resets += int(dead.sum())
            if resets > MAX_RESETS:
                raise NumericalError("EM keeps producing degenerate mixture components")
            for k in np.flatnonzero(dead):
                resp[:, k] = 0.0
                resp[rng.integers(n), k] = 1.0
            resp = resp / resp.sum(axis=1, keepdims=True)
            Nk = resp.sum(axis=0)
        weights = Nk / n
        means = (resp.T @ X) / Nk[:, None]
        covs = np.empty((g, d, d))
        for k in range(g):
            D = X - means[k]
            covs[k] = (resp[:, k, None] * D).T @ D / Nk[k] + np.diag(floor)
            if dead[k]:
                covs[k] = global_cov + np.diag(rng.uniform(0.5, 1.5, d) * floor)
        model = GaussianMixture(weights, means, covs)
        lj = model._log_joint(X)
        norm = logsumexp(lj, axis=1, keepdims=True)
        ll = float(norm.mean())
        resp = np.exp(lj - norm)
        if abs(ll - prev) < tol:
            break
        prev = ll
    return GaussianMixture(model.weights, model.means, model.covariances, ll, it)
