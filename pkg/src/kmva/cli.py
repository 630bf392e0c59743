"""Command-line interface: ``kmva <command> [options]``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
Every output starts with ``# key=value`` lines echoing the run
configuration, resolved defaults included.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import benchmark as bench
from . import manifest as mf
from . import modelio
from .data import center_fit_apply, encode_labels, kfold, load_delimited
from .dependence import hsic_permutation_test
from .diagnostics import constraint_residual
from .errors import DataError, KMVAError, NumericalError, UsageError
from .kernels import FAMILIES, KernelConfig, gram
from .pipeline import (ALL_METHODS, SPARSE, FitConfig, Predictor, fit_classifier, fit_extractor,
                       fit_regressor, transform)
from .predict import crossval_select, evaluate
from .toydata import three_arcs, write_csv

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3
DEFAULT_MANIFEST = Path(__file__).resolve().parents[2] / "data" / "manifest.json"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _sigma(text):
    if text == "median":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("sigma must be a number or 'median'") from None


def _label_col(text):
    if text.lower() == "none":
        return None
    try:
        return int(text)
    except ValueError:
        return text


def _floats(text):
    return [float(t) for t in text.split(",") if t.strip()]


def _add_data(p, required=True):
    p.add_argument("--data", required=required, help="comma or tab separated table")
    p.add_argument("--label-col", type=_label_col, default=-1,
                   help="label column index or name, or 'none' (default: last column)")
    p.add_argument("--targets", help="comma separated numeric target columns (regression)")


def _add_model_opts(p):
    p.add_argument("--method", required=True, help="one of: " + ", ".join(ALL_METHODS))
    p.add_argument("--nf", type=int, default=None, help="number of features (default: maximum)")
    p.add_argument("--kernel", default="rbf", help="one of: " + ", ".join(FAMILIES))
    p.add_argument("--sigma", type=_sigma, default="median")
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=0.5, help="composite kernel weight")
    p.add_argument("--Q", type=int, default=5, help="cluster kernel restarts")
    p.add_argument("--G", type=int, default=5, help="cluster kernel cluster counts")
    p.add_argument("--r", type=int, default=100, help="reduced-set basis size")
    p.add_argument("--variant", choices=SPARSE, help="sparse PLS variant (with --method spls)")
    p.add_argument("--pool", type=int, default=None, help="sparse PLS candidate pool size")
    p.add_argument("--ridge", type=float, default=0.0, help="linear CCA/OPLS diagonal loading")
    p.add_argument("--lambda", dest="lam", type=float, default=0.0, help="LS head ridge")
    p.add_argument("--unlabeled", help="extra unlabeled rows (sskcca, cluster kernels)")
    p.add_argument("--no-standardize", action="store_true")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="kmva", description="Linear and kernel multivariate feature extraction.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit an extractor plus least-squares head")
    _add_data(p)
    _add_model_opts(p)
    p.add_argument("--encoding", choices=modelio.ENCODINGS, default="decimal")
    p.add_argument("--out", required=True, help="model file")
    p.add_argument("--report", help="fit report file (default: stdout)")

    for name, text in (("transform", "extract features"), ("predict", "predict labels/targets")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--model", required=True)
        _add_data(p)
        p.add_argument("--out")

    p = sub.add_parser("eval", help="score predictions (OA with binomial std, MSE, RMSE)")
    p.add_argument("--model")
    _add_data(p, required=False)
    p.add_argument("--pred", help="predictions file (instead of --model/--data)")
    p.add_argument("--truth", help="ground-truth file (instead of --model/--data)")
    p.add_argument("--metric", choices=("OA", "MSE", "RMSE"), default=None)
    p.add_argument("--out")

    p = sub.add_parser("crossval", help="k-fold CV over eta / n_f / lambda grids")
    _add_data(p)
    _add_model_opts(p)
    p.add_argument("--eta-grid", type=_floats)
    p.add_argument("--nf-grid", type=lambda s: [int(v) for v in s.split(",") if v.strip()])
    p.add_argument("--lambda-grid", type=_floats)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--out")

    p = sub.add_parser("benchmark", help="split / CV / test benchmark, tidy output table")
    p.add_argument("--manifest", default=str(DEFAULT_MANIFEST))
    p.add_argument("--dataset", action="append", default=[],
                   help="NAME=PATH (label in last column); repeatable. Default: manifest sets")
    p.add_argument("--methods", default="pca,opls,kpca,kopls")
    p.add_argument("--nf", default="auto", help="comma separated n_f values or 'auto'")
    p.add_argument("--seeds", type=int, default=1, help="number of seeds (0..N-1)")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--sigma", type=_sigma, default="median")
    p.add_argument("--r", type=int, default=100)
    p.add_argument("--verify", action="store_true", help="check means against the manifest")
    p.add_argument("--out")

    p = sub.add_parser("toydata", help="write the three-arc toy dataset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--per-class", type=int, default=100)
    p.add_argument("--noise", type=float, default=0.15)
    p.add_argument("--out", required=True)

    p = sub.add_parser("hsic", help="HSIC between two tables, optional permutation p-value")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--kernel", default="rbf", choices=("linear", "rbf"))
    p.add_argument("--sigma", type=_sigma, default="median")
    p.add_argument("--permutations", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    return ap


@contextlib.contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


def _header(fh, config: dict):
    for k, v in config.items():
        if isinstance(v, (list, tuple, dict)):
            v = json.dumps(v)
        fh.write(f"# {k}={v}\n")


def _run_config(args, **resolved) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    cfg.update(resolved)
    return cfg


def _table(fh, columns, rows):
    fh.write("\t".join(columns) + "\n")
    for r in rows:
        fh.write("\t".join(_fmt(v) for v in r) + "\n")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _load(args, path=None, label_col=None):
    path = path or args.data
    targets = None
    if getattr(args, "targets", None):
        targets = [_label_col(t) for t in args.targets.split(",")]
        label_col = None
    elif label_col is None:
        label_col = getattr(args, "label_col", None)
    return load_delimited(path, header="auto", label_col=label_col, target_cols=targets)


def _fit_config(args) -> FitConfig:
    method = args.method
    if method == "spls":
        if args.variant is None:
            raise UsageError("--method spls needs --variant sma|smc")
        method = args.variant
    elif args.variant is not None and method not in SPARSE:
        raise UsageError("--variant only applies to sparse PLS")
    if method not in ALL_METHODS:
        raise UsageError(f"unknown method {method!r}; valid: {', '.join(ALL_METHODS + ('spls',))}")
    kernel = KernelConfig(args.kernel, args.sigma, args.beta if args.kernel == "composite" else None,
                          args.Q, args.G, args.seed)
    return FitConfig(method, args.nf, kernel, args.eta, args.r, args.pool, args.seed,
                     not args.no_standardize, ridge=args.ridge)


def _fit(cfg: FitConfig, ds, lam, X_unlab=None):
    """Predictor for labeled/targeted data, bare extractor for unsupervised fits without either."""
    if ds.Y is not None:
        return fit_regressor(cfg, ds.X, ds.Y, lam, X_unlab)
    if ds.labels is not None:
        return fit_classifier(cfg, ds.X, ds.labels, lam, X_unlab)
    if cfg.supervised:
        raise DataError(f"{cfg.method} needs labels (--label-col) or targets (--targets)")
    return fit_extractor(cfg, ds.X, None, X_unlab)


def _extractor(model):
    return model.extractor if isinstance(model, Predictor) else model


def cmd_fit(args):
    cfg = _fit_config(args)
    ds = _load(args)
    X_unlab = None
    if args.unlabeled:
        X_unlab = load_delimited(args.unlabeled, header="auto", label_col=None).X
    t0 = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        model = _fit(cfg, ds, args.lam, X_unlab)
    seconds = time.perf_counter() - t0
    ext = _extractor(model)
    target = ds.Y if ds.Y is not None else (
        None if ds.labels is None else encode_labels(ds.labels).matrix)
    residuals = {}
    if ext.method != "sskcca":
        residuals = constraint_residual(ext, ds.X, target if cfg.supervised else None, cfg.ridge)
    resolved = {"method_resolved": ext.method, "n_features": int(np.shape(ext.eigenvalues)[0]),
                "seconds": round(seconds, 6)}
    kernel = getattr(ext, "kernel", None)
    if kernel is not None and not isinstance(kernel.sigma, str):
        resolved["sigma_resolved"] = kernel.sigma
    for w in caught:
        sys.stderr.write(f"warning: {w.message}\n")
    run = _run_config(args, **resolved)
    modelio.save(model, args.out, args.encoding, run)
    with _output(args.report) as fh:
        _header(fh, run)
        for k, v in residuals.items():
            fh.write(f"# constraint {k}={v!r}\n")
        _table(fh, ("feature", "eigenvalue"),
               [(i + 1, v) for i, v in enumerate(np.atleast_1d(ext.eigenvalues))])
    return EXIT_OK


def _model_and_data(args, need_head=True):
    model = modelio.load(args.model)
    if need_head and not isinstance(model, Predictor):
        raise UsageError("model file holds a bare extractor (fitted without labels); "
                         "it supports transform only")
    return model, _load(args)


def cmd_transform(args):
    model, ds = _model_and_data(args, need_head=False)
    ext = _extractor(model)
    F = transform(ext, ds.X)
    with _output(args.out) as fh:
        _header(fh, _run_config(args, method=ext.method))
        _table(fh, [f"f{j + 1}" for j in range(F.shape[1])], F.tolist())
    return EXIT_OK


def cmd_predict(args):
    model, ds = _model_and_data(args)
    pred = model.predict(ds.X)
    with _output(args.out) as fh:
        _header(fh, _run_config(args, method=model.extractor.method))
        if model.is_classifier:
            _table(fh, ("label",), [(p,) for p in pred.tolist()])
        else:
            _table(fh, [f"y{j + 1}" for j in range(pred.shape[1])], pred.tolist())
    return EXIT_OK


def read_table(path):
    """Read a kmva output table (or any delimited file with a header row).

    Returns the ``label`` column when there is one, else the numeric matrix.
    """
    try:
        text = Path(path).read_text()
    except FileNotFoundError:
        raise DataError(f"{path}: no such file") from None
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if len(lines) < 2:
        raise DataError(f"{path}: needs a header row and at least one data row")
    sep = "\t" if "\t" in lines[0] else ","
    names = [t.strip() for t in lines[0].split(sep)]
    rows = [[t.strip() for t in ln.split(sep)] for ln in lines[1:]]
    for i, r in enumerate(rows, 2):
        if len(r) != len(names):
            raise DataError(f"{path}: ragged row {i}")
    if "label" in names:
        j = names.index("label")
        labels = [r[j] for r in rows]
        if all(t.lstrip("-").isdigit() for t in labels):
            return np.array([int(t) for t in labels])
        return np.array(labels)
    try:
        return np.array([[float(t) for t in r] for r in rows])
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


def cmd_eval(args):
    if args.pred and args.truth:
        pred, truth = read_table(args.pred), read_table(args.truth)
        numeric = pred.ndim == 2
    elif args.model and args.data:
        model, ds = _model_and_data(args)
        pred = model.predict(ds.X)
        numeric = not model.is_classifier
        truth = ds.Y if numeric else ds.labels
        if truth is None:
            raise DataError("data file has no labels or targets to compare against")
    else:
        raise UsageError("eval needs --pred and --truth, or --model and --data")
    metric = args.metric or ("MSE" if numeric else "OA")
    if metric == "OA" and numeric:
        raise UsageError("OA needs class labels")
    rep = evaluate(pred, truth, metric)
    with _output(args.out) as fh:
        _header(fh, _run_config(args, metric_resolved=metric))
        cols = ("metric", "value", "std", "n") if metric == "OA" else ("metric", "value", "n")
        row = (rep.metric, rep.value, rep.std, rep.n) if metric == "OA" else (
            rep.metric, rep.value, rep.n)
        _table(fh, cols, [row])
    return EXIT_OK


def cmd_crossval(args):
    cfg = _fit_config(args)
    ds = _load(args)
    eta_grid = args.eta_grid or [cfg.eta]
    nf_grid = args.nf_grid or [cfg.n_f]
    lam_grid = args.lambda_grid or [args.lam]
    grid = [(e, n, lam) for e in eta_grid for n in nf_grid for lam in lam_grid]
    folds = kfold(ds.n_samples, args.folds, args.seed)
    classify = ds.Y is None

    def score(params, tr, va):
        e, n, lam = params
        c = FitConfig(cfg.method, n, cfg.kernel, e, cfg.r, cfg.pool, cfg.seed, cfg.standardize,
                      ridge=cfg.ridge)
        model = _fit(c, ds.subset(tr), lam)
        if classify:
            return evaluate(model.predict(ds.X[va]), ds.labels[va]).value
        return -evaluate(model.predict(ds.X[va]), ds.Y[va], "MSE").value

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = crossval_select(grid, score, folds)
    metric = "OA" if classify else "MSE"
    sign = 1 if classify else -1
    with _output(args.out) as fh:
        _header(fh, _run_config(args, best_eta=res.best[0], best_nf=res.best[1],
                                best_lambda=res.best[2], metric=metric))
        _table(fh, ("eta", "n_f", "lambda", "mean", "sd"),
               [(g[0], "max" if g[1] is None else g[1], g[2], sign * res.mean_scores[i],
                 float(np.std(res.scores[i], ddof=1)))
                for i, g in enumerate(res.grid)])
    return EXIT_OK


def _benchmark_sets(args):
    sets = {}
    if args.dataset:
        for item in args.dataset:
            if "=" not in item:
                raise UsageError(f"--dataset expects NAME=PATH, got {item!r}")
            name, path = item.split("=", 1)
            sets[name] = load_delimited(path, header="auto", label_col=-1)
        return sets, None
    manifest = mf.load_manifest(args.manifest)
    root = Path(args.manifest).resolve().parent.parent
    for entry in manifest["datasets"]:
        try:
            sets[entry["name"]] = mf.load_entry(entry, root)
        except DataError as exc:
            if entry["source"] == "bundled":
                raise
            sys.stderr.write(f"skipping {entry['name']}: {exc}\n")
    return sets, manifest


def cmd_benchmark(args):
    nf = tuple(None if v.strip() == "auto" else int(v) for v in args.nf.split(","))
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    for m in methods:
        if m not in ALL_METHODS:
            raise UsageError(f"unknown method {m!r}; valid: {', '.join(ALL_METHODS)}")
    if args.seeds < 1:
        raise UsageError("--seeds must be at least 1")
    sets, manifest = _benchmark_sets(args)
    if not sets:
        raise DataError("no datasets available")
    bcfg = bench.BenchmarkConfig(methods=methods, nf_values=nf, seeds=tuple(range(args.seeds)),
                                 folds=args.folds, sigma=args.sigma, r=args.r)
    rows = bench.run_benchmark(sets, bcfg)
    summary = bench.summarize(rows)
    code = EXIT_OK
    with _output(args.out) as fh:
        run = _run_config(args, datasets=",".join(sets))
        bench.write_rows(rows, fh, [f"{k}={v}" for k, v in run.items()])
        fh.write("# summary\n")
        for s in summary:
            fh.write("# " + "\t".join(f"{k}={_fmt(v)}" for k, v in s.items()) + "\n")
        if args.verify:
            if manifest is None:
                raise UsageError("--verify needs the manifest datasets")
            rep = mf.verify_manifest(manifest, summary, datasets=set(sets))
            fh.write(f"# verify passed={rep.passed} checked={rep.checked}\n")
            for f in rep.failures:
                fh.write("# verify failure " + json.dumps(f) + "\n")
            code = EXIT_OK if rep.passed else EXIT_NUMERICAL
    return code


def cmd_toydata(args):
    ds = three_arcs(args.per_class, args.noise, args.seed)
    write_csv(ds, args.out)
    return EXIT_OK


def cmd_hsic(args):
    X = load_delimited(args.x, header="auto").X
    Y = load_delimited(args.y, header="auto").X
    if X.shape[0] != Y.shape[0]:
        raise DataError(f"row counts differ: {X.shape[0]} vs {Y.shape[0]}")
    grams, resolved = [], {}
    for name, M in (("x", X), ("y", Y)):
        Ms, _ = center_fit_apply(M, True)
        k = KernelConfig(args.kernel, args.sigma).resolve(Ms)
        if args.kernel == "rbf":
            resolved[f"sigma_{name}"] = k.sigma
        grams.append(gram(k, Ms))
    rep, p, _ = hsic_permutation_test(grams[0], grams[1], args.permutations, args.seed)
    with _output(args.out) as fh:
        _header(fh, _run_config(args, **resolved))
        if p is None:
            _table(fh, ("statistic", "value"), [("HSIC", rep.value)])
        else:
            _table(fh, ("statistic", "value", "p_value"), [("HSIC", rep.value, p)])
    return EXIT_OK


COMMANDS = {"fit": cmd_fit, "transform": cmd_transform, "predict": cmd_predict,
            "eval": cmd_eval, "crossval": cmd_crossval, "benchmark": cmd_benchmark,
            "toydata": cmd_toydata, "hsic": cmd_hsic}


def exit_code(exc: BaseException) -> int:
    while exc is not None:
        if isinstance(exc, UsageError):
            return EXIT_USAGE
        if isinstance(exc, (DataError, OSError)):
            return EXIT_DATA
        if isinstance(exc, (NumericalError, np.linalg.LinAlgError, ArithmeticError)):
            return EXIT_NUMERICAL
        exc = exc.__cause__
    return EXIT_USAGE


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (KMVAError, OSError, np.linalg.LinAlgError, ValueError) as exc:
        sys.stderr.write(f"kmva {args.command}: error: {exc}\n")
        return exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
