"""Run the classification benchmark over a set of delimited files (label in the last column)."""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict, dataclass, field

from kmva.benchmark import BenchmarkConfig, run_benchmark, summarize, write_rows
from kmva.data import load_delimited


@dataclass
class Config:
    datasets: dict = field(default_factory=lambda: {"toy3": "data/toy3.csv"})
    methods: tuple = ("pca", "opls", "kpca", "kopls")
    seeds: int = 5
    folds: int = 10


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("datasets", nargs="*", help="NAME=PATH pairs")
    ap.add_argument("--methods", default=",".join(Config.methods))
    ap.add_argument("--seeds", type=int, default=Config.seeds)
    ap.add_argument("--folds", type=int, default=Config.folds)
    a = ap.parse_args()
    cfg = Config(methods=tuple(a.methods.split(",")), seeds=a.seeds, folds=a.folds)
    if a.datasets:
        cfg.datasets = dict(item.split("=", 1) for item in a.datasets)
    sets = {name: load_delimited(path, header="auto", label_col=-1)
            for name, path in cfg.datasets.items()}
    bcfg = BenchmarkConfig(methods=cfg.methods, seeds=tuple(range(cfg.seeds)), folds=cfg.folds)
    rows = run_benchmark(sets, bcfg)
    write_rows(rows, sys.stdout, [f"{k}={v}" for k, v in asdict(cfg).items()])
    for s in summarize(rows):
        print(f"# {s['dataset']} {s['method']}: mean OA {s['value']:.2f} "
              f"(seed sd {s['seed_sd']:.2f}, {s['n_ok']}/{s['n_cells']} ok)")


if __name__ == "__main__":
    main()
