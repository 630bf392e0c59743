"""Benchmark manifest: dataset descriptions with tagged expected-result envelopes.

The manifest is JSON::

    {"datasets": [{"name", "source": "bundled"|"user", "path", "l", "d", "c",
                   "label_col", "header", "download"?, "drop_feature_cols"?,
                   "expected": [{"method", "n_f", "metric", "value",
                                 "tolerance", "provenance"}]}]}

Every expected value must carry a non-empty provenance tag.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset, load_delimited
from .errors import DataError

SOURCES = ("bundled", "user")


def validate(manifest: dict) -> dict:
    if not isinstance(manifest, dict) or not isinstance(manifest.get("datasets"), list):
        raise DataError("manifest needs a 'datasets' list")
    for ds in manifest["datasets"]:
        name = ds.get("name", "?")
        for key in ("name", "source", "path", "l", "d", "c", "expected"):
            if key not in ds:
                raise DataError(f"dataset {name!r}: missing {key!r}")
        if ds["source"] not in SOURCES:
            raise DataError(f"dataset {name!r}: source must be one of {', '.join(SOURCES)}")
        for i, row in enumerate(ds["expected"]):
            for key in ("method", "metric", "value", "tolerance"):
                if key not in row:
                    raise DataError(f"dataset {name!r}, expected[{i}]: missing {key!r}")
            if not str(row.get("provenance") or "").strip():
                raise DataError(f"dataset {name!r}, expected[{i}]: value has no provenance tag")
            if row["tolerance"] < 0:
                raise DataError(f"dataset {name!r}, expected[{i}]: negative tolerance")
    return manifest


def load_manifest(path) -> dict:
    return validate(json.loads(Path(path).read_text()))


def dataset_path(entry: dict, root) -> Path:
    p = Path(entry["path"])
    return p if p.is_absolute() else Path(root) / p


def load_entry(entry: dict, root):
    """Load a manifest dataset; user-supplied files that are absent raise DataError."""
    path = dataset_path(entry, root)
    if not path.exists():
        hint = f" ({entry['download']})" if entry.get("download") else ""
        raise DataError(f"{entry['name']}: {path} not found{hint}")
    ds = load_delimited(path, header=bool(entry.get("header", False)),
                        label_col=entry.get("label_col", -1))
    drop = entry.get("drop_feature_cols") or []
    if drop:
        keep = [j for j in range(ds.n_features) if j not in set(drop)]
        ds = Dataset(ds.X[:, keep], ds.Y, ds.labels)
    return ds


@dataclass(frozen=True)
class VerifyReport:
    passed: bool
    checked: int
    failures: list = field(default_factory=list)


def _nf_key(v):
    return "auto" if v is None else str(v)


def verify_manifest(manifest: dict, results, datasets=None) -> VerifyReport:
    """Compare summarized results against each envelope.

    ``results`` rows need dataset, method, n_f, metric and value.  Only
    datasets named in ``datasets`` (default: all) are checked; any
    expected row without a matching result raises DataError.
    """
    validate(manifest)
    index = {(r["dataset"], r["method"], _nf_key(r.get("n_f")), r["metric"]): r["value"]
             for r in results}
    failures, checked, missing = [], 0, []
    for ds in manifest["datasets"]:
        if datasets is not None and ds["name"] not in datasets:
            continue
        for row in ds["expected"]:
            key = (ds["name"], row["method"], _nf_key(row.get("n_f")), row["metric"])
            if key not in index:
                missing.append(key)
                continue
            checked += 1
            got = float(index[key])
            delta = got - row["value"]
            if not np.isfinite(got) or abs(delta) > row["tolerance"]:
                failures.append({"dataset": key[0], "method": key[1], "n_f": key[2],
                                 "metric": key[3], "expected": row["value"], "got": got,
                                 "delta": delta, "tolerance": row["tolerance"]})
    if missing:
        raise DataError("results lack manifest rows: " + ", ".join("/".join(k) for k in missing))
    return VerifyReport(not failures, checked, failures)
