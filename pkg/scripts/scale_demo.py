"""Time and trace memory of reduced-set fits as the training size grows."""

from __future__ import annotations

import argparse
import time
import tracemalloc
from dataclasses import asdict, dataclass

import numpy as np

from kmva.extensions import fit_rk
from kmva.kernels import KernelConfig


@dataclass
class Config:
    sizes: tuple = (1000, 5000, 10000, 50000)
    r: int = 100
    d: int = 5
    classes: int = 3
    sigma: float = 2.0
    eta: float = 1e-3
    method: str = "rkopls"
    seed: int = 0


def run(cfg: Config):
    rng = np.random.default_rng(cfg.seed)
    for l in cfg.sizes:
        X = rng.standard_normal((l, cfg.d))
        Y = np.eye(cfg.classes)[rng.integers(0, cfg.classes, l)]
        tracemalloc.start()
        t0 = time.perf_counter()
        fit_rk(cfg.method, X, Y, r=cfg.r, eta=cfg.eta, kernel=KernelConfig("rbf", cfg.sigma))
        seconds = time.perf_counter() - t0
        peak = tracemalloc.get_traced_memory()[1]
        tracemalloc.stop()
        yield l, seconds, peak / 2 ** 20, l * l * 8 / 2 ** 20


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default=",".join(map(str, Config.sizes)))
    ap.add_argument("--r", type=int, default=Config.r)
    ap.add_argument("--method", default=Config.method, choices=("rkpca", "rkcca", "rkopls"))
    a = ap.parse_args()
    cfg = Config(sizes=tuple(int(s) for s in a.sizes.split(",")), r=a.r, method=a.method)
    print(f"# {asdict(cfg)}")
    print("l\tseconds\tpeak_MiB\tdense_gram_MiB")
    for l, s, peak, dense in run(cfg):
        print(f"{l}\t{s:.3f}\t{peak:.1f}\t{dense:.0f}")


if __name__ == "__main__":
    main()
