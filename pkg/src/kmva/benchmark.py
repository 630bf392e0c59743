"""Classification benchmark: split, cross-validate free parameters, score the test set.

Protocol per (dataset, method, n_f, seed) cell: a stratified split with
60% of the rows (at most 500) for training, standardized inputs, an RBF
kernel at the median bandwidth, k-fold CV on the training rows for the
regularizer ``eta`` (relative to ``trace(K~)/l``) and, for unsupervised
and sparse extractors without a fixed ``n_f``, for the number of features.  The
head is least squares followed by winner-takes-all.
"""

from __future__ import annotations

import csv
import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .data import Dataset, center_fit_apply, kfold, split
from .errors import KMVAError
from .kernels import KernelConfig, gram
from .pipeline import ETA_METHODS, LINEAR, REDUCED, SPARSE, UNSUPERVISED, FitConfig, fit_classifier
from .predict import crossval_select, evaluate

ETA_GRID = (0.0, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1)
NF_GRID = (1, 2, 4, 8, 16, 32, 64, 128, 256)
COLUMNS = ("dataset", "method", "n_f", "seed", "metric", "value", "std", "n_test",
           "params", "status", "seconds")


@dataclass(frozen=True)
class BenchmarkConfig:
    methods: tuple = ("pca", "opls", "kpca", "kopls")
    nf_values: tuple = (None,)
    seeds: tuple = (0,)
    train_ratio: float = 0.6
    max_train: int = 500
    folds: int = 10
    sigma: float | str = "median"
    eta_grid: tuple = ETA_GRID
    nf_grid: tuple = NF_GRID
    r: int = 100
    lam: float = 0.0
    extra: dict = field(default_factory=dict)


def relative_trace(X, kernel: KernelConfig) -> float:
    """``trace(K~)/l`` of the centered training Gram, the unit of the eta grid."""
    Xs, _ = center_fit_apply(X, True)
    K = gram(kernel.resolve(Xs), Xs)
    return float(np.mean(np.diag(K)) - np.mean(K))


def _oa(cfg: FitConfig, X, labels, tr, va, lam):
    clf = fit_classifier(cfg, X[tr], labels[tr], lam)
    return evaluate(clf.predict(X[va]), labels[va]).value


def _candidates(method, n_f, X_train, bcfg: BenchmarkConfig):
    """Grid of FitConfig keyword sets for the cell, in tie-break order."""
    kernel = KernelConfig(sigma=bcfg.sigma)
    base = {"method": method, "n_f": n_f, "kernel": kernel, "r": bcfg.r}
    base.update(bcfg.extra.get(method, {}))
    if method in ETA_METHODS:
        return [dict(base, eta_rel=g) for g in bcfg.eta_grid]
    if (method in UNSUPERVISED or method in SPARSE) and n_f is None:
        cap = X_train.shape[1] if method in LINEAR else X_train.shape[0] - 1
        if method in REDUCED:
            cap = min(cap, bcfg.r)
        grid = [g for g in bcfg.nf_grid if g <= cap] or [cap]
        return [dict(base, n_f=g) for g in grid]
    return [base]


def _realize(params, X):
    params = dict(params)
    rel = params.pop("eta_rel", None)
    if rel is not None:
        params["eta"] = rel * relative_trace(X, params["kernel"]) if rel else 0.0
    return FitConfig(**params)


def run_cell(ds: Dataset, name, method, n_f, seed, bcfg: BenchmarkConfig) -> dict:
    t0 = time.perf_counter()
    row = {"dataset": name, "method": method, "n_f": "auto" if n_f is None else n_f,
           "seed": seed, "metric": "OA", "value": float("nan"), "std": float("nan"),
           "n_test": 0, "params": "", "status": "ok"}
    try:
        train, test = split(ds, bcfg.train_ratio, bcfg.max_train, seed)
        X, y = train.X, train.labels
        grid = _candidates(method, n_f, X, bcfg)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            if len(grid) > 1:
                folds = kfold(train.n_samples, bcfg.folds, seed)
                best = crossval_select(
                    grid, lambda p, tr, va: _oa(_realize(p, X[tr]), X, y, tr, va, bcfg.lam),
                    folds).best
            else:
                best = grid[0]
            clf = fit_classifier(_realize(best, X), X, y, bcfg.lam)
            rep = evaluate(clf.predict(test.X), test.labels)
        shown = {k: v for k, v in best.items() if k in ("eta_rel", "n_f")}
        row.update(value=rep.value, std=rep.std, n_test=rep.n,
                   params=";".join(f"{k}={v}" for k, v in shown.items()))
    except (KMVAError, np.linalg.LinAlgError, ValueError) as exc:
        row["status"] = f"error: {exc}"
    row["seconds"] = round(time.perf_counter() - t0, 3)
    return row


def run_benchmark(datasets: dict, bcfg: BenchmarkConfig) -> list[dict]:
    """All cells, one row each; failures are recorded and the run continues."""
    rows = []
    for name, ds in datasets.items():
        for n_f in bcfg.nf_values:
            for method in bcfg.methods:
                for seed in bcfg.seeds:
                    rows.append(run_cell(ds, name, method, n_f, seed, bcfg))
    return rows


def summarize(rows) -> list[dict]:
    """Mean OA and mean binomial std over seeds per (dataset, method, n_f)."""
    groups = {}
    for r in rows:
        groups.setdefault((r["dataset"], r["method"], r["n_f"]), []).append(r)
    out = []
    for (d, m, nf), rs in groups.items():
        ok = [r for r in rs if r["status"] == "ok"]
        vals = np.array([r["value"] for r in ok])
        out.append({"dataset": d, "method": m, "n_f": nf, "metric": "OA",
                    "value": float(vals.mean()) if ok else float("nan"),
                    "std": float(np.mean([r["std"] for r in ok])) if ok else float("nan"),
                    "seed_sd": float(vals.std(ddof=1)) if len(ok) > 1 else 0.0,
                    "n_ok": len(ok), "n_cells": len(rs)})
    return out


def write_rows(rows, fh, header_lines=(), columns=COLUMNS) -> None:
    for line in header_lines:
        fh.write(f"# {line}\n")
    w = csv.DictWriter(fh, fieldnames=list(columns), delimiter="\t", extrasaction="ignore",
                       lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)


def config_items(bcfg: BenchmarkConfig) -> dict:
    return asdict(bcfg)
