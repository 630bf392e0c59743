"""Dense eigen-solvers and linear-algebra helpers.

Every extractor in the package reduces to one of two problems::

    A v = lam v          (eig_sym)
    A v = lam B v        (eig_gen, B symmetric PSD)

The generalized problem is solved by whitening on the numerical range of
``B``, so rank-deficient covariance or Gram matrices are handled without
hidden diagonal loading.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import LinearOperator, cg

from .errors import ConvergenceError, NumericalError, RankWarning, UsageError


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 10000
    tolerance: float = 1e-10
    jitter: float = 0.0
    rank_tol: float = 1e-9

    def __post_init__(self):
        if self.tolerance <= 0:
            raise UsageError("tolerance must be positive")
        if self.jitter < 0:
            raise UsageError("jitter must be non-negative")
        if not 0 < self.rank_tol < 1:
            raise UsageError("rank_tol must lie in (0, 1)")


DEFAULT = SolverConfig()


@dataclass(frozen=True)
class EigResult:
    """Eigenpairs in descending order; ``vectors[:, i]`` pairs with ``values[i]``.

    ``truncated`` is set when fewer pairs than requested could be returned.
    """

    values: np.ndarray
    vectors: np.ndarray
    truncated: bool = False

    def __len__(self):
        return self.values.size


def _check_finite(*mats):
    for M in mats:
        if not np.all(np.isfinite(M)):
            raise NumericalError("matrix contains non-finite entries")


def _symmetrize(A, name="A"):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise UsageError(f"{name} must be square")
    _check_finite(A)
    return 0.5 * (A + A.T)


def fix_signs(V: np.ndarray) -> np.ndarray:
    """Flip columns so each one's largest-magnitude entry is positive."""
    V = np.array(V, dtype=float, copy=True)
    if V.size == 0:
        return V
    idx = np.argmax(np.abs(V), axis=0)
    s = np.sign(V[idx, np.arange(V.shape[1])])
    s[s == 0] = 1.0
    return V * s


def eig_sym(A, k: int | None = None) -> EigResult:
    """Top-``k`` eigenpairs of a symmetric matrix."""
    A = _symmetrize(A)
    n = A.shape[0]
    k = n if k is None else k
    if not 1 <= k <= n:
        raise UsageError(f"k must lie in [1, {n}], got {k}")
    w, V = linalg.eigh(A, subset_by_index=[n - k, n - 1])
    order = np.argsort(w)[::-1]
    return EigResult(w[order], fix_signs(V[:, order]))


def range_basis(B, rank_tol: float = DEFAULT.rank_tol):
    """Eigenvectors and eigenvalues of PSD ``B`` above ``rank_tol * max``."""
    B = _symmetrize(B, "B")
    w, Q = linalg.eigh(B)
    top = w.max(initial=0.0)
    if top <= 0:
        return np.zeros(0), np.zeros((B.shape[0], 0))
    keep = w > rank_tol * top
    return w[keep], Q[:, keep]


def eig_gen(A, B, k: int | None = None, rank_tol: float = DEFAULT.rank_tol,
            jitter: float = 0.0) -> EigResult:
    """Solve ``A v = lam B v`` with ``v' B v = 1``, restricted to range(B).

    At most ``rank(B)`` pairs are returned; ``truncated`` flags a shortfall.
    ``jitter`` adds ``jitter * trace(B) / n`` to the diagonal of ``B``.
    """
    A = _symmetrize(A)
    B = _symmetrize(B, "B")
    n = A.shape[0]
    if B.shape != A.shape:
        raise UsageError("A and B must have the same shape")
    k = n if k is None else k
    if k < 1:
        raise UsageError("k must be at least 1")
    if jitter > 0:
        B = B + jitter * np.trace(B) / n * np.eye(n)
    w, Q = range_basis(B, rank_tol)
    r = w.size
    if r == 0:
        warnings.warn("B has zero numerical rank; no eigenpairs", RankWarning, stacklevel=2)
        return EigResult(np.zeros(0), np.zeros((n, 0)), truncated=True)
    T = Q / np.sqrt(w)
    res = eig_sym(T.T @ A @ T, min(k, r))
    V = fix_signs(T @ res.vectors)
    truncated = k > r
    if truncated:
        warnings.warn(f"requested {k} pairs but rank(B) = {r}", RankWarning, stacklevel=2)
    return EigResult(res.values, V, truncated)


def _as_action(M):
    if callable(M):
        return M
    M = np.asarray(M, dtype=float)
    return lambda x: M @ x


def power_deflate(apply_A, apply_B, n: int, k: int = 1, cfg: SolverConfig = DEFAULT,
                  shift: float = 0.0, seed: int = 0) -> EigResult:
    """Generalized power iteration with Hotelling deflation.

    Only matrix-vector actions are needed; systems in ``B`` are solved by
    conjugate gradients.  Iterates on ``(A + shift B)`` so a positive
    ``shift`` makes the algebraically largest eigenvalues dominant.
    After each converged pair, ``A <- A - lam (B v)(B v)'``.
    """
    apply_A = _as_action(apply_A)
    apply_B = _as_action(apply_B)
    if not 1 <= k <= n:
        raise UsageError(f"k must lie in [1, {n}], got {k}")
    rng = np.random.default_rng(seed)
    B_op = LinearOperator((n, n), matvec=apply_B, dtype=float)

    def solve_B(y, x0):
        x, info = cg(B_op, y, x0=x0, rtol=1e-14, atol=0.0, maxiter=10 * n)
        return x

    found_vals, found_vecs, found_Bv = [], [], []

    def deflated_A(x):
        y = apply_A(x)
        for lam, Bv in zip(found_vals, found_Bv):
            y = y - lam * Bv * (Bv @ x)
        return y

    for _ in range(k):
        v = rng.standard_normal(n)
        Bv = apply_B(v)
        nrm = np.sqrt(max(v @ Bv, 0.0))
        if nrm == 0:
            raise NumericalError("start vector lies in the null space of B")
        v, Bv = v / nrm, Bv / nrm
        x = v.copy()
        residual = np.inf
        for _it in range(cfg.max_iterations):
            Av = deflated_A(v)
            lam = v @ Av
            r = Av - lam * Bv
            scale = np.linalg.norm(Av) + abs(lam) * np.linalg.norm(Bv)
            residual = np.linalg.norm(r) / scale if scale > 0 else 0.0
            if residual <= cfg.tolerance:
                break
            x = solve_B(Av + shift * Bv, x)
            Bx = apply_B(x)
            nrm = np.sqrt(max(x @ Bx, 0.0))
            if nrm == 0:
                # v is annihilated by the deflated pencil: eigenvalue 0
                lam, residual = 0.0, 0.0
                break
            v, Bv = x / nrm, Bx / nrm
        else:
            raise ConvergenceError(
                f"power iteration did not converge in {cfg.max_iterations} "
                f"iterations (relative residual {residual:.3e})", residual)
        found_vals.append(lam)
        found_vecs.append(v)
        found_Bv.append(Bv)
    V = fix_signs(np.column_stack(found_vecs))
    vals = np.array(found_vals)
    order = np.argsort(-vals, kind="stable")
    return EigResult(vals[order], V[:, order])


def pinv(M, rank_tol: float = DEFAULT.rank_tol) -> np.ndarray:
    """Moore-Penrose pseudoinverse; singular values <= rank_tol*max are dropped."""
    M = np.asarray(M, dtype=float)
    _check_finite(M)
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros(M.T.shape)
    keep = s > rank_tol * s[0]
    return (Vt[keep].T / s[keep]) @ U[:, keep].T


def estimate_rank(M, rank_tol: float = DEFAULT.rank_tol) -> int:
    M = np.asarray(M, dtype=float)
    _check_finite(M)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > rank_tol * s[0]))


def psd_rank(B, rank_tol: float = DEFAULT.rank_tol) -> int:
    """Numerical rank of a symmetric PSD matrix via its eigenvalues."""
    return range_basis(B, rank_tol)[0].size
