"""Three overlapping noisy sine fragments, a small two-dimensional classification set."""

from __future__ import annotations

import numpy as np

from .data import Dataset
from .errors import UsageError

# (t_start, t_stop, vertical offset) per class; points are (t, sin t + offset)
ARCS = (
    (0.0, np.pi, 0.0),
    (0.5 * np.pi, 1.5 * np.pi, 0.5),
    (np.pi, 2.0 * np.pi, 1.0),
)


def three_arcs(n_per_class: int = 100, noise: float = 0.15, seed: int = 0) -> Dataset:
    """Sample ``n_per_class`` points per arc with isotropic Gaussian noise.

    Labels are 0, 1, 2; rows are grouped by class.
    """
    if n_per_class < 2:
        raise UsageError("need at least two samples per class")
    if noise < 0:
        raise UsageError("noise must be non-negative")
    rng = np.random.default_rng(seed)
    X, labels = [], []
    for k, (t0, t1, off) in enumerate(ARCS):
        t = rng.uniform(t0, t1, n_per_class)
        pts = np.column_stack([t, np.sin(t) + off])
        X.append(pts + noise * rng.standard_normal(pts.shape))
        labels.append(np.full(n_per_class, k))
    return Dataset(np.vstack(X), labels=np.concatenate(labels))


def write_csv(ds: Dataset, path) -> None:
    """Write ``x1,x2,...,label`` rows with a header line."""
    d = ds.n_features
    with open(path, "w") as fh:
        fh.write(",".join([f"x{j + 1}" for j in range(d)] + ["label"]) + "\n")
        for row, lab in zip(ds.X, ds.labels):
            fh.write(",".join(repr(float(v)) for v in row) + f",{lab}\n")
