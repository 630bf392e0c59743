"""JSON model files (format version 1).

Arrays are stored either as decimal lists (shortest round-trip float
repr, so reloading is exact) or as base64 blocks of little-endian
IEEE-754 doubles.  Unknown versions are refused.
"""

from __future__ import annotations

import base64
import json
from pathlib import Path

import numpy as np

from .data import CenteringStats, LabelEncoding
from .errors import DataError, UsageError
from .gmm import GaussianMixture
from .kernels import ClusterModel, KernelCentering, KernelConfig
from .mva_kernel import KernelModel
from .mva_linear import LinearModel
from .pipeline import Predictor
from .predict import LSHead

FORMAT = "kmva-model"
VERSION = 1
ENCODINGS = ("decimal", "binary")


def _enc(a, encoding):
    if a is None:
        return None
    a = np.asarray(a)
    if a.dtype.kind in "iu":
        return {"shape": list(a.shape), "int": a.ravel().tolist()}
    a = np.ascontiguousarray(a, dtype="<f8")
    if encoding == "binary":
        return {"shape": list(a.shape), "b64": base64.b64encode(a.tobytes()).decode("ascii")}
    return {"shape": list(a.shape), "data": a.ravel().tolist()}


def _dec(obj):
    if obj is None:
        return None
    shape = tuple(obj["shape"])
    if "int" in obj:
        return np.asarray(obj["int"], dtype=int).reshape(shape)
    if "b64" in obj:
        return np.frombuffer(base64.b64decode(obj["b64"]), dtype="<f8").astype(float).reshape(shape)
    return np.asarray(obj["data"], dtype=float).reshape(shape)


def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v


def _stats(s: CenteringStats | None, e):
    return None if s is None else {"mean": _enc(s.mean, e), "scale": _enc(s.scale, e)}


def _unstats(d):
    return None if d is None else CenteringStats(_dec(d["mean"]), _dec(d["scale"]))


def _kernel(k: KernelConfig | None, e):
    if k is None:
        return None
    out = {"family": k.family, "sigma": k.sigma, "beta": k.beta, "Q": k.Q, "G": k.G,
           "seed": k.seed, "cluster": None}
    if k.cluster is not None:
        out["cluster"] = {"Q": k.cluster.Q, "G": k.cluster.G, "mixtures": [
            {"weights": _enc(m.weights, e), "means": _enc(m.means, e),
             "covariances": _enc(m.covariances, e)} for m in k.cluster.mixtures]}
    return out


def _unkernel(d):
    if d is None:
        return None
    cluster = None
    if d["cluster"] is not None:
        c = d["cluster"]
        cluster = ClusterModel(tuple(GaussianMixture(_dec(m["weights"]), _dec(m["means"]),
                                                     _dec(m["covariances"]))
                                     for m in c["mixtures"]), c["Q"], c["G"])
    return KernelConfig(d["family"], d["sigma"], d["beta"], d["Q"], d["G"], d["seed"], cluster)


def _extractor(m, e):
    if isinstance(m, LinearModel):
        return {"kind": "linear", "method": m.method, "U": _enc(m.U, e),
                "rotation": _enc(m.rotation, e), "eigenvalues": _enc(m.eigenvalues, e),
                "x_stats": _stats(m.x_stats, e), "V": _enc(m.V, e),
                "y_stats": _stats(m.y_stats, e), "pre_projection": _enc(m.pre_projection, e)}
    if isinstance(m, KernelModel):
        c = m.centering
        cent = None if c is None else {"col_means": _enc(c.col_means, e),
                                       "grand_mean": c.grand_mean, "mode": c.mode,
                                       "ref_idx": _enc(c.ref_idx, e)}
        return {"kind": "kernel", "method": m.method, "coef": _enc(m.coef, e),
                "dual": _enc(m.dual, e), "eigenvalues": _enc(m.eigenvalues, e),
                "V": _enc(m.V, e), "eta": m.eta, "basis": _enc(m.basis, e),
                "kernel": _kernel(m.kernel, e), "centering": cent,
                "x_stats": _stats(m.x_stats, e), "y_stats": _stats(m.y_stats, e),
                "support": _enc(m.support, e), "extras": _plain(m.extras)}
    raise UsageError(f"cannot serialize {type(m).__name__}")


def _unextractor(d):
    if d["kind"] == "linear":
        return LinearModel(d["method"], _dec(d["U"]), _dec(d["rotation"]),
                           _dec(d["eigenvalues"]), _unstats(d["x_stats"]), _dec(d["V"]),
                           _unstats(d["y_stats"]), _dec(d["pre_projection"]))
    if d["kind"] == "kernel":
        c = d["centering"]
        cent = None if c is None else KernelCentering(_dec(c["col_means"]), c["grand_mean"],
                                                      c["mode"], _dec(c["ref_idx"]))
        return KernelModel(d["method"], _dec(d["coef"]), _dec(d["dual"]), _dec(d["eigenvalues"]),
                           _dec(d["V"]), d["eta"], _dec(d["basis"]), _unkernel(d["kernel"]), cent,
                           _unstats(d["x_stats"]), _unstats(d["y_stats"]), _dec(d["support"]),
                           d["extras"])
    raise DataError(f"unknown extractor kind {d['kind']!r}")


def to_dict(model, encoding="decimal", run_config: dict | None = None) -> dict:
    if encoding not in ENCODINGS:
        raise UsageError(f"encoding must be one of {', '.join(ENCODINGS)}")
    out = {"format": FORMAT, "version": VERSION, "encoding": encoding,
           "run_config": _plain(run_config or {})}
    if isinstance(model, Predictor):
        h = model.head
        out["extractor"] = _extractor(model.extractor, encoding)
        out["head"] = {"W": _enc(h.W, encoding), "lambda": h.lam,
                       "x_mean": _enc(h.x_mean, encoding), "y_mean": _enc(h.y_mean, encoding)}
        out["classes"] = None if model.encoding is None else _plain(model.encoding.classes)
    else:
        out["extractor"] = _extractor(model, encoding)
    return out


def from_dict(d: dict):
    if d.get("format") != FORMAT:
        raise DataError("not a model file")
    if d.get("version") != VERSION:
        raise DataError(f"unsupported model file version {d.get('version')!r} (expected {VERSION})")
    ext = _unextractor(d["extractor"])
    if "head" not in d:
        return ext
    h = d["head"]
    classes = None if d["classes"] is None else np.asarray(d["classes"])
    head = LSHead(_dec(h["W"]), h["lambda"], _dec(h["x_mean"]), _dec(h["y_mean"]), classes)
    enc = None if classes is None else LabelEncoding(classes, np.empty((0, classes.size)))
    return Predictor(ext, head, enc)


def save(model, path, encoding="decimal", run_config: dict | None = None) -> None:
    Path(path).write_text(json.dumps(to_dict(model, encoding, run_config)))


def load(path):
    try:
        d = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise DataError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not valid JSON ({exc})") from None
    return from_dict(d)


def run_config_of(path) -> dict:
    return json.loads(Path(path).read_text()).get("run_config", {})
