import json

import numpy as np
import pytest

from conftest import random_problem
from kmva import modelio
from kmva.errors import DataError, UsageError
from kmva.kernels import KernelConfig
from kmva.pipeline import FitConfig, fit_classifier, fit_extractor, fit_regressor, transform
from kmva.toydata import three_arcs

CONFIGS = [
    FitConfig("pca", 2),
    FitConfig("cca", 2, pca_dims=3),
    FitConfig("kopls", 2, KernelConfig("rbf", 1.3), eta=1e-2),
    FitConfig("rkcca", 2, KernelConfig("rbf", 1.3), r=12, eta=1e-2),
    FitConfig("sma", 3, KernelConfig("rbf", 1.3)),
    FitConfig("hsca", 2, KernelConfig("rbf", 1.3)),
]


@pytest.mark.parametrize("cfg", CONFIGS, ids=lambda c: c.method)
def test_binary_round_trip_is_bit_identical(cfg, tmp_path):
    X, Y = random_problem(0, 50)
    m = fit_extractor(cfg, X, Y)
    path = tmp_path / "m.json"
    modelio.save(m, path, "binary")
    Z = np.random.default_rng(1).standard_normal((7, 4))
    np.testing.assert_array_equal(transform(modelio.load(path), Z), transform(m, Z))


@pytest.mark.parametrize("cfg", CONFIGS, ids=lambda c: c.method)
def test_decimal_round_trip(cfg, tmp_path):
    X, Y = random_problem(0, 50)
    m = fit_extractor(cfg, X, Y)
    path = tmp_path / "m.json"
    modelio.save(m, path)
    Z = np.random.default_rng(1).standard_normal((7, 4))
    assert np.max(np.abs(transform(modelio.load(path), Z) - transform(m, Z))) <= 1e-12


def test_predictor_round_trip(tmp_path):
    ds = three_arcs(20, seed=3)
    labels = np.array(["p", "q", "r"])[ds.labels]
    p = fit_classifier(FitConfig("opls", 2), ds.X, labels)
    modelio.save(p, tmp_path / "p.json", "binary", run_config={"method": "opls", "n_f": 2})
    q = modelio.load(tmp_path / "p.json")
    assert q.is_classifier
    np.testing.assert_array_equal(q.predict(ds.X), p.predict(ds.X))
    assert modelio.run_config_of(tmp_path / "p.json") == {"method": "opls", "n_f": 2}


def test_regressor_round_trip(tmp_path):
    X, Y = random_problem(2, 40)
    p = fit_regressor(FitConfig("kpls2", 2, KernelConfig("rbf", 2.0)), X, Y)
    modelio.save(p, tmp_path / "r.json", "binary")
    q = modelio.load(tmp_path / "r.json")
    assert not q.is_classifier
    np.testing.assert_array_equal(q.predict(X), p.predict(X))


def test_cluster_kernel_model(tmp_path):
    rng = np.random.default_rng(4)
    X = np.vstack([rng.normal(-3, 0.4, (20, 2)), rng.normal(3, 0.4, (20, 2))])
    labels = np.repeat([0, 1], 20)
    cfg = FitConfig("kopls", 1, KernelConfig("composite", 1.0, beta=0.5, Q=2, G=2), eta=1e-2)
    p = fit_classifier(cfg, X, labels, X_unlab=rng.standard_normal((10, 2)))
    modelio.save(p, tmp_path / "c.json", "binary")
    np.testing.assert_array_equal(modelio.load(tmp_path / "c.json").scores(X), p.scores(X))


def test_wrong_version_refused(tmp_path):
    X, _ = random_problem(0, 20)
    d = modelio.to_dict(fit_extractor(FitConfig("pca", 1), X))
    d["version"] = 2
    (tmp_path / "v.json").write_text(json.dumps(d))
    with pytest.raises(DataError, match="version"):
        modelio.load(tmp_path / "v.json")


def test_bad_files(tmp_path):
    with pytest.raises(DataError):
        modelio.load(tmp_path / "missing.json")
    (tmp_path / "junk.json").write_text("{not json")
    with pytest.raises(DataError):
        modelio.load(tmp_path / "junk.json")
    (tmp_path / "other.json").write_text('{"format": "something-else"}')
    with pytest.raises(DataError):
        modelio.load(tmp_path / "other.json")
    with pytest.raises(UsageError):
        modelio.to_dict(object())
    X, _ = random_problem(0, 20)
    with pytest.raises(UsageError):
        modelio.to_dict(fit_extractor(FitConfig("pca", 1), X), encoding="hex")
