"""Dataset ingestion, centering, label coding and splitting."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError, UsageError


@dataclass(frozen=True)
class Dataset:
    """Input matrix with optional numeric targets and/or class labels.

    ``X`` is ``l x d``. ``Y`` holds real-valued targets (``l x m``) and
    ``labels`` holds one class identifier per row; either may be ``None``.
    """

    X: np.ndarray
    Y: np.ndarray | None = None
    labels: np.ndarray | None = None
    ids: np.ndarray | None = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[1] < 1:
            raise DataError("X must be a 2-d matrix with at least one column")
        if not np.all(np.isfinite(X)):
            raise DataError("X contains non-finite values")
        object.__setattr__(self, "X", X)
        l = X.shape[0]
        if self.Y is not None:
            Y = np.asarray(self.Y, dtype=float)
            if Y.ndim == 1:
                Y = Y[:, None]
            if Y.shape[0] != l:
                raise DataError(f"X has {l} rows but Y has {Y.shape[0]}")
            object.__setattr__(self, "Y", Y)
        if self.labels is not None:
            lab = np.asarray(self.labels)
            if lab.shape != (l,):
                raise DataError(f"X has {l} rows but {lab.size} labels were given")
            object.__setattr__(self, "labels", lab)
        if self.ids is not None and len(self.ids) != l:
            raise DataError("ids length does not match the number of rows")

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(
            self.X[idx],
            None if self.Y is None else self.Y[idx],
            None if self.labels is None else self.labels[idx],
            None if self.ids is None else np.asarray(self.ids)[idx],
        )


def _parse_label(token: str):
    try:
        return int(token)
    except ValueError:
        return token


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def _read_rows(path: Path, delimiter: str | None):
    text = path.read_text()
    if not text.strip():
        raise DataError(f"{path}: empty file")
    if delimiter is None:
        first = next(line for line in text.splitlines() if line.strip())
        delimiter = "\t" if "\t" in first else ","
    rows = [
        (lineno, [tok.strip() for tok in row])
        for lineno, row in enumerate(csv.reader(text.splitlines(), delimiter=delimiter), 1)
        if row and any(tok.strip() for tok in row)
    ]
    return rows


def load_delimited(
    path,
    delimiter: str | None = None,
    header: bool | str = False,
    label_col: int | str | None = None,
    label_file=None,
    target_cols: Sequence[int | str] | None = None,
) -> Dataset:
    """Read a comma/tab separated numeric table.

    ``label_col`` may be an index (negative allowed) or, with ``header``,
    a column name.  ``header="auto"`` treats the first row as names when
    none of its fields parses as a number.  Labels may alternatively come from ``label_file``
    (one per line).  ``target_cols`` selects numeric target columns that
    go to ``Y`` instead of ``X``.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    rows = _read_rows(path, delimiter)
    if header == "auto":
        header = not any(_is_number(tok) for tok in rows[0][1])
    names = None
    if header:
        names = rows[0][1]
        rows = rows[1:]
    if not rows:
        raise DataError(f"{path}: no data rows")
    width = len(rows[0][1])
    for lineno, toks in rows:
        if len(toks) != width:
            raise DataError(f"{path}:{lineno}: ragged row ({len(toks)} fields, expected {width})")

    def resolve(col):
        if isinstance(col, str):
            if names is None or col not in names:
                raise UsageError(f"unknown column {col!r}")
            return names.index(col)
        if not -width <= col < width:
            raise UsageError(f"column index {col} out of range for {width} columns")
        return col % width

    lab_idx = None if label_col is None else resolve(label_col)
    tgt_idx = [] if target_cols is None else [resolve(c) for c in target_cols]
    feat_idx = [j for j in range(width) if j != lab_idx and j not in tgt_idx]
    if not feat_idx:
        raise DataError(f"{path}: no feature columns left")

    def parse(cols):
        out = np.empty((len(rows), len(cols)))
        for i, (lineno, toks) in enumerate(rows):
            for k, j in enumerate(cols):
                try:
                    out[i, k] = float(toks[j])
                except ValueError:
                    raise DataError(
                        f"{path}:{lineno}: column {j + 1}: cannot parse {toks[j]!r} as a number"
                    ) from None
                if not np.isfinite(out[i, k]):
                    raise DataError(f"{path}:{lineno}: column {j + 1}: non-finite value")
        return out

    X = parse(feat_idx)
    Y = parse(tgt_idx) if tgt_idx else None
    labels = None
    if lab_idx is not None:
        labels = np.array([_parse_label(toks[lab_idx]) for _, toks in rows], dtype=object)
    elif label_file is not None:
        lines = [s.strip() for s in Path(label_file).read_text().splitlines() if s.strip()]
        if len(lines) != len(rows):
            raise DataError(f"{label_file}: {len(lines)} labels for {len(rows)} rows")
        labels = np.array([_parse_label(s) for s in lines], dtype=object)
    if labels is not None:
        labels = _tighten(labels)
    return Dataset(X, Y, labels)


def _tighten(labels: np.ndarray) -> np.ndarray:
    if all(isinstance(v, (int, np.integer)) for v in labels):
        return labels.astype(int)
    return labels.astype(str)


@dataclass(frozen=True)
class LabelEncoding:
    """Ordered class table plus the ``l x c`` 1-of-c indicator matrix."""

    classes: np.ndarray
    matrix: np.ndarray

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def encode(self, labels) -> np.ndarray:
        lookup = {c: k for k, c in enumerate(self.classes.tolist())}
        out = np.zeros((len(labels), len(self.classes)))
        for i, lab in enumerate(np.asarray(labels).tolist()):
            if lab not in lookup:
                raise DataError(f"unknown class {lab!r}")
            out[i, lookup[lab]] = 1.0
        return out

    def decode(self, indices) -> np.ndarray:
        return self.classes[np.asarray(indices, dtype=int)]


def encode_labels(labels, classes=None) -> LabelEncoding:
    """1-of-c coding; class order is first appearance unless given."""
    labels = np.asarray(labels)
    if classes is None:
        seen = {}
        for lab in labels.tolist():
            seen.setdefault(lab, None)
        classes = list(seen)
    classes = np.asarray(list(classes))
    if len(classes) < 2:
        raise DataError("at least two distinct classes are required")
    enc = LabelEncoding(classes, np.empty((0, len(classes))))
    return LabelEncoding(classes, enc.encode(labels))


@dataclass(frozen=True)
class CenteringStats:
    mean: np.ndarray
    scale: np.ndarray

    def apply(self, M) -> np.ndarray:
        M = np.asarray(M, dtype=float)
        if M.ndim == 1:
            M = M[:, None]
        if M.shape[1] != self.mean.size:
            raise DataError(f"expected {self.mean.size} columns, got {M.shape[1]}")
        return (M - self.mean) / self.scale

    @classmethod
    def identity(cls, dim: int) -> "CenteringStats":
        return cls(np.zeros(dim), np.ones(dim))


def center_fit_apply(M, standardize: bool = False, tol: float = 1e-12):
    """Center columns (and optionally scale to unit sample variance).

    Constant columns keep scale 1 so the column count never changes.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    if M.shape[0] < 2:
        raise DataError("need at least two rows to center")
    mean = M.mean(axis=0)
    scale = np.ones(M.shape[1])
    if standardize:
        std = M.std(axis=0, ddof=1)
        ok = std > tol * np.maximum(1.0, np.abs(mean))
        scale[ok] = std[ok]
    stats = CenteringStats(mean, scale)
    return stats.apply(M), stats


def _allocate(counts: np.ndarray, n_take: int) -> np.ndarray:
    # largest-remainder allocation of n_take over strata
    exact = counts * n_take / counts.sum()
    take = np.floor(exact).astype(int)
    rest = n_take - take.sum()
    order = np.argsort(-(exact - take), kind="stable")
    take[order[:rest]] += 1
    return np.minimum(take, counts)


def split(
    ds: Dataset,
    ratio: float | None = None,
    max_train: int | None = None,
    seed: int = 0,
    stratify: bool = True,
):
    """Random train/test partition, stratified by class when labels exist.

    With both ``ratio`` and ``max_train`` the training size is
    ``min(round(ratio * l), max_train)``.
    """
    l = ds.n_samples
    if ratio is None and max_train is None:
        raise UsageError("give ratio and/or max_train")
    n_train = l
    if ratio is not None:
        if not 0.0 < ratio < 1.0:
            raise UsageError(f"ratio must lie in (0, 1), got {ratio}")
        n_train = int(round(ratio * l))
    if max_train is not None:
        if max_train < 2:
            raise UsageError("max_train must be at least 2")
        n_train = min(n_train, max_train)
    if not 0 < n_train < l:
        raise DataError(f"split of {l} rows leaves an empty side (n_train={n_train})")
    rng = np.random.default_rng(seed)
    if stratify and ds.labels is not None:
        classes, inverse = np.unique(ds.labels.astype(str), return_inverse=True)
        counts = np.bincount(inverse, minlength=len(classes))
        take = _allocate(counts, n_train)
        train = []
        for k in range(len(classes)):
            members = rng.permutation(np.flatnonzero(inverse == k))
            train.extend(members[: take[k]].tolist())
        train = np.sort(np.array(train, dtype=int))
    else:
        train = np.sort(rng.permutation(l)[:n_train])
    mask = np.zeros(l, dtype=bool)
    mask[train] = True
    test = np.flatnonzero(~mask)
    return ds.subset(train), ds.subset(test)


def kfold(ds_or_n, k: int, seed: int = 0):
    """List of ``(train_idx, val_idx)`` pairs; fold sizes differ by at most one."""
    l = ds_or_n if isinstance(ds_or_n, (int, np.integer)) else ds_or_n.n_samples
    if k < 2:
        raise UsageError(f"k must be at least 2, got {k}")
    if k > l:
        raise UsageError(f"k={k} exceeds the number of rows {l}")
    perm = np.random.default_rng(seed).permutation(l)
    folds = np.array_split(perm, k)
    out = []
    for i, val in enumerate(folds):
        train = np.concatenate([f for j, f in enumerate(folds) if j != i])
        out.append((np.sort(train), np.sort(val)))
    return out
