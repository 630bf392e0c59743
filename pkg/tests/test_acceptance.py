"""Exit-criteria suite.  Each test records one PASS/FAIL line, listed at the end of the run."""

import os
import time
import tracemalloc
import warnings
from pathlib import Path

import numpy as np
import pytest
from scipy.linalg import cholesky, solve_triangular

from conftest import (max_sign_free_diff, random_problem, random_spd, record_acceptance,
                      replay_against_brute_force)
from kmva import mva_kernel, mva_linear
from kmva.benchmark import BenchmarkConfig, run_benchmark, summarize
from kmva.data import center_fit_apply, encode_labels, load_delimited
from kmva.dependence import fit_hsca, hsic, kgv
from kmva.diagnostics import constraint_residual, first_feature_criteria
from kmva.extensions import fit_rk, fit_sparse_pls, fit_sskcca
from kmva.kernels import KernelConfig, center_train, gram, median_bandwidth
from kmva.numcore import eig_gen
from kmva.predict import fit_ls, predict_scores

pytestmark = pytest.mark.acceptance

ROOT = Path(__file__).resolve().parents[1]
LINEAR = KernelConfig("linear")
RBF = KernelConfig("rbf", 1.5)
PAIRS = (("pca", "kpca"), ("pls2", "kpls2"), ("cca", "kcca"), ("opls", "kopls"))


def finish(name, failures, t0, budget):
    elapsed = time.perf_counter() - t0
    if elapsed > budget:
        failures.append(f"took {elapsed:.1f}s, budget {budget}s")
    ok = not failures
    record_acceptance(name, ok, f"{elapsed:.2f}s" if ok else "; ".join(failures[:3]))
    assert ok, failures


def test_linear_kernel_equivalence():
    t0, failures = time.perf_counter(), []
    for seed in range(20):
        X, Y = random_problem(seed, 60, 4, 3)
        for lin, ker in PAIRS:
            lm = mva_linear.fit(lin, X, Y, 3)
            km = mva_kernel.fit(ker, X, Y, LINEAR, 3)
            diff = max_sign_free_diff(mva_kernel.transform(km, X), mva_linear.transform(lm, X))
            if diff > 1e-6:
                failures.append(f"{ker} seed {seed}: {diff:.2e}")
    finish("linear-kernel equivalence, 4 methods x 20 seeds", failures, t0, 10)


def test_constraints():
    t0, failures = time.perf_counter(), []
    kernel = KernelConfig("rbf", 2.0)
    for seed in range(5):
        X, Y = random_problem(100 + seed, 80, 5, 3)
        models = [mva_linear.fit(m, X, Y, 3) for m in mva_linear.METHODS]
        models += [mva_kernel.fit(m, X, Y, kernel, 3, eta)
                   for m in mva_kernel.METHODS for eta in (0.0, 1e-2)]
        models += [fit_rk(m, X, Y, r=20, n_f=3, eta=1e-2, kernel=kernel, seed=seed)
                   for m in ("rkpca", "rkcca", "rkopls")]
        for m in models:
            for key, dev in constraint_residual(m, X, Y).items():
                if dev > 1e-5:
                    failures.append(f"{m.method} seed {seed} {key}: {dev:.2e}")
    finish("optimization constraints, 8 dense methods + reduced-set variants", failures, t0, 30)


def test_first_feature_ordering():
    t0, failures = time.perf_counter(), []
    ds = load_delimited(ROOT / "data" / "toy3.csv", header="auto", label_col=-1)
    Y = encode_labels(ds.labels).matrix
    Yc = Y - Y.mean(0)
    crit = {}
    for m in mva_linear.METHODS:
        model = mva_linear.fit(m, ds.X, Y, 1)
        crit[m] = first_feature_criteria(model, mva_linear.transform(model, ds.X), Yc)
    Xs, _ = center_fit_apply(ds.X, True)
    K = center_train(gram(KernelConfig("rbf", median_bandwidth(Xs)), Xs))[0]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for m in mva_kernel.METHODS:
            model = mva_kernel.fit_on_gram(m, K, Yc, 1)
            crit[m] = first_feature_criteria(model, K @ model.coef, Yc, K)
    slack = 1e-8
    for family in (mva_linear.METHODS, mva_kernel.METHODS):
        pca, pls, cca, opls = family
        for other in family:
            c = crit[other]
            checks = (("variance", crit[pca].variance >= c.variance - slack),
                      ("covariance", crit[pls].covariance >= c.covariance - slack),
                      ("correlation", crit[cca].corr2 >= c.corr2 - slack),
                      ("LS error", crit[opls].mse <= c.mse + slack))
            failures += [f"{what} beaten by {other}" for what, ok in checks if not ok]
    finish("first-feature variance/covariance/correlation/MSE ordering on toy data",
           failures, t0, 20)


def test_reduction_identities():
    t0, failures = time.perf_counter(), []
    X, Y = random_problem(0, 40, 3, 2)
    dense_of = {"rkpca": "kpca", "rkcca": "kcca", "rkopls": "kopls"}
    for kernel, eta in ((LINEAR, 0.0), (RBF, 1e-2)):
        for rk, dense in dense_of.items():
            a = fit_rk(rk, X, Y, r=40, n_f=2, eta=eta, kernel=kernel).eigenvalues
            b = mva_kernel.fit(dense, X, Y, kernel, 2, eta).eigenvalues
            if np.max(np.abs(a - b) / np.abs(b)) > 1e-6:
                failures.append(f"{rk} ({kernel.family}, eta={eta}) vs {dense}")

    X, Y = random_problem(10, 30, 3, 2)
    ss = fit_sskcca(X, Y, None, 0.0, 0.0, 0.0, 0.0, kernel=RBF, n_f=2).eigenvalues
    if np.max(np.abs(ss - mva_kernel.fit("kcca", X, Y, RBF, 2, 0.0).eigenvalues)) > 1e-6:
        failures.append("ss-kCCA without unlabeled rows or penalties vs kCCA")

    X, Y = random_problem(3, 30, 3, 2)
    Xc, Yc = X - X.mean(0), Y - Y.mean(0)
    lam = kgv(gram(LINEAR, Xc), gram(LINEAR, Yc), theta=1.0, eta=0.0).eigenvalues
    rho = mva_kernel.fit_kcca(center_train(gram(LINEAR, Xc))[0], Yc, 2).eigenvalues
    if lam.shape != rho.shape or np.max(np.abs(lam - rho)) > 1e-6:
        failures.append("kGV(theta=1) spectrum vs kCCA")

    X, Y = random_problem(0, 40, 3, 2)
    K = center_train(gram(RBF, X))[0]
    Yc = Y - Y.mean(0)
    h = fit_hsca(K, Yc @ Yc.T, 1).eigenvalues[0]
    o = mva_kernel.fit_kopls(K, Yc, 1).eigenvalues[0]
    if abs(h - o) > 1e-8 * abs(o):
        failures.append(f"HSCA first direction vs kOPLS: {h!r} vs {o!r}")
    finish("reduction identities (reduced set at r=l, ss-kCCA, kGV, HSCA)", failures, t0, 30)


def test_brute_force_oracles():
    t0, failures = time.perf_counter(), []
    for seed in range(40):
        rng = np.random.default_rng(seed)
        l = 3 + seed % 10
        K = center_train(gram(RBF, rng.standard_normal((l, 2))))[0]
        Y = rng.standard_normal((l, 2))
        Y -= Y.mean(0)
        for variant in ("sma", "smc"):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                support = fit_sparse_pls(variant, K, Y, min(4, l - 1)).support.tolist()
            try:
                replay_against_brute_force(variant, K, Y, support)
            except AssertionError:
                failures.append(f"{variant} l={l} seed {seed}")

    for seed in range(20):
        rng = np.random.default_rng(seed)
        A = random_spd(rng, 10, 10.0) - 2 * np.eye(10)
        B = random_spd(rng, 10, 50.0)
        L = cholesky(B, lower=True)
        W = solve_triangular(L, solve_triangular(L, A, lower=True).T, lower=True)
        oracle = np.sort(np.linalg.eigvalsh(0.5 * (W + W.T)))[::-1]
        got = eig_gen(A, B).values
        if np.max(np.abs(got - oracle)) > 1e-8 * max(1.0, np.max(np.abs(oracle))):
            failures.append(f"GEV seed {seed}")

    for seed in range(10):
        rng = np.random.default_rng(seed)
        l = 2 + seed % 6
        Kx = gram(RBF, rng.standard_normal((l, 2)))
        Ky = gram(LINEAR, rng.standard_normal((l, 3)))
        a = sum(Kx[i, j] * Ky[i, j] for i in range(l) for j in range(l)) / l ** 2
        b = Kx.sum() * Ky.sum() / l ** 4
        c = sum(Kx[i, j] * Ky[i, q] for i in range(l) for j in range(l) for q in range(l)) / l ** 3
        ref = (a + b - 2 * c) * l ** 2 / (l - 1) ** 2
        if abs(hsic(Kx, Ky).value - ref) > 1e-12 * max(1.0, abs(ref)):
            failures.append(f"HSIC seed {seed}")
    finish("brute-force oracles (sparse PLS selection, GEV, HSIC)", failures, t0, 10)


def test_opls_end_to_end():
    t0, failures = time.perf_counter(), []
    for seed in range(5):
        X, Y = random_problem(200 + seed, 80, 6, 3)
        model = mva_linear.fit_opls(X, Y)
        F = mva_linear.transform(model, X)
        mse_f = np.mean((predict_scores(fit_ls(F, Y), F) - Y) ** 2)
        mse_x = np.mean((predict_scores(fit_ls(X, Y), X) - Y) ** 2)
        if model.n_features != 3 or abs(mse_f - mse_x) > 1e-8:
            failures.append(f"seed {seed}: {mse_f!r} vs {mse_x!r}")
    finish("OPLS features reach the full least-squares error", failures, t0, 5)


def sonar_path():
    env = os.environ.get("KMVA_SONAR")
    for p in ([Path(env)] if env else []) + [ROOT / "data" / "sonar.csv"]:
        if p.is_file():
            return p
    return None


def test_sonar_envelope():
    name = "sonar kPCA/kOPLS mean OA within 84.3 +- 10 over 10 seeds"
    path = sonar_path()
    if path is None:
        record_acceptance(name, "SKIP", "data/sonar.csv or $KMVA_SONAR not present")
        pytest.skip("sonar data not available")
    t0, failures = time.perf_counter(), []
    ds = load_delimited(path, header=False, label_col=-1)
    rows = run_benchmark({"sonar": ds}, BenchmarkConfig(methods=("kpca", "kopls"),
                                                        seeds=tuple(range(10))))
    for s in summarize(rows):
        if not abs(s["value"] - 84.3) <= 10.0:
            failures.append(f"{s['method']}: {s['value']:.2f}")
    finish(name, failures, t0, 300)


def test_scale_guard():
    t0, failures = time.perf_counter(), []
    l, r = 10000, 100
    rng = np.random.default_rng(0)
    X = rng.standard_normal((l, 5))
    Y = np.eye(3)[rng.integers(0, 3, l)]
    tracemalloc.start()
    try:
        m = fit_rk("rkopls", X, Y, r=r, eta=1e-3, kernel=KernelConfig("rbf", 2.0))
        peak = tracemalloc.get_traced_memory()[1]
    finally:
        tracemalloc.stop()
    if peak >= 16 * 2 ** 20:
        failures.append(f"peak traced memory {peak / 2 ** 20:.1f} MiB")
    if m.kernel_evals_per_sample != r:
        failures.append("test cost is not r kernel evaluations")
    finish("reduced-set fit at l=10000, r=100 without an l x l allocation", failures, t0, 60)
