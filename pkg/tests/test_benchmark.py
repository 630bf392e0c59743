import copy
import io
from pathlib import Path

import numpy as np
import pytest

from kmva.benchmark import BenchmarkConfig, run_benchmark, run_cell, summarize, write_rows
from kmva.data import Dataset
from kmva.errors import DataError
from kmva.manifest import load_manifest, verify_manifest
from kmva.toydata import three_arcs

MANIFEST = Path(__file__).resolve().parents[1] / "data" / "manifest.json"
FAST = dict(folds=3, eta_grid=(0.0, 1e-3, 1e-1), nf_grid=(1, 2, 4))


@pytest.fixture(scope="module")
def toy():
    return three_arcs(40, seed=2)


def test_rows_per_feature_count(toy):
    bcfg = BenchmarkConfig(nf_values=(1, None), **FAST)
    rows = run_benchmark({"toy": toy}, bcfg)
    assert len(rows) == 2 * 4
    assert [r["n_f"] for r in rows] == [1] * 4 + ["auto"] * 4
    assert all(r["status"] == "ok" and r["n_test"] == 48 for r in rows)
    buf = io.StringIO()
    write_rows(rows, buf, ["seeds=0"])
    lines = buf.getvalue().splitlines()
    assert lines[0] == "# seeds=0" and len(lines) == 2 + 8


def test_opls_equals_cca_at_class_count_minus_one(toy):
    bcfg = BenchmarkConfig(methods=("cca", "opls"), nf_values=(2,), seeds=(0, 1), **FAST)
    rows = run_benchmark({"toy": toy}, bcfg)
    by = {(r["method"], r["seed"]): r["value"] for r in rows}
    for s in (0, 1):
        assert by["cca", s] == by["opls", s]


def test_reproducible(toy):
    bcfg = BenchmarkConfig(methods=("kopls",), **FAST)
    a = run_cell(toy, "toy", "kopls", None, 3, bcfg)
    b = run_cell(toy, "toy", "kopls", None, 3, bcfg)
    assert a["value"] == b["value"] and a["params"] == b["params"]


def test_failures_are_recorded():
    bad = Dataset(np.ones((20, 2)), labels=np.arange(20) % 2)
    row = run_cell(bad, "flat", "kpca", 1, 0, BenchmarkConfig(**FAST))
    assert row["status"].startswith("error")


def test_summary_means():
    rows = [{"dataset": "d", "method": "m", "n_f": 1, "value": v, "std": s, "status": "ok"}
            for v, s in ((80.0, 4.0), (90.0, 2.0))]
    rows.append({"dataset": "d", "method": "m", "n_f": 1, "value": np.nan, "std": np.nan,
                 "status": "error: x"})
    (s,) = summarize(rows)
    assert (s["value"], s["std"], s["n_ok"], s["n_cells"]) == (85.0, 3.0, 2, 3)


class TestVerify:
    @pytest.fixture
    def manifest(self):
        return load_manifest(MANIFEST)

    def results(self, manifest, shift=0.0):
        return [{"dataset": "toy3", "method": e["method"], "n_f": e["n_f"], "metric": "OA",
                 "value": e["value"] + shift} for e in manifest["datasets"][0]["expected"]]

    def test_pass(self, manifest):
        rep = verify_manifest(manifest, self.results(manifest, 1.0), {"toy3"})
        assert rep.passed and rep.checked == 4

    def test_fail(self, manifest):
        rep = verify_manifest(manifest, self.results(manifest, 3.0), {"toy3"})
        assert not rep.passed and len(rep.failures) == 4
        assert rep.failures[0]["delta"] == pytest.approx(3.0)

    def test_untagged_rows_ignored(self, manifest):
        res = self.results(manifest) + [{"dataset": "toy3", "method": "kcca", "n_f": None,
                                         "metric": "OA", "value": 0.0}]
        assert verify_manifest(manifest, res, {"toy3"}).passed

    def test_missing_rows(self, manifest):
        with pytest.raises(DataError, match="lack"):
            verify_manifest(manifest, self.results(manifest)[:2], {"toy3"})

    def test_invalid_manifest(self, manifest):
        broken = copy.deepcopy(manifest)
        del broken["datasets"][0]["expected"][0]["tolerance"]
        with pytest.raises(DataError):
            verify_manifest(broken, [], {"toy3"})
