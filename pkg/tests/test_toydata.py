import numpy as np
import pytest

from kmva.errors import UsageError
from kmva.toydata import ARCS, three_arcs, write_csv


def test_noiseless_points_lie_on_arcs():
    ds = three_arcs(50, noise=0.0, seed=1)
    for k, (t0, t1, off) in enumerate(ARCS):
        P = ds.X[ds.labels == k]
        assert np.all((P[:, 0] >= t0) & (P[:, 0] <= t1))
        np.testing.assert_allclose(P[:, 1], np.sin(P[:, 0]) + off, atol=1e-15)


def test_classes_overlap():
    ds = three_arcs(60, seed=0)
    D = ((ds.X[:, None, :] - ds.X[None, :, :]) ** 2).sum(-1)
    np.fill_diagonal(D, np.inf)
    loo_error = np.mean(ds.labels[np.argmin(D, axis=1)] != ds.labels)
    assert 0.0 < loo_error < 0.5


def test_shape_and_balance():
    ds = three_arcs(40)
    assert ds.X.shape == (120, 2)
    assert np.bincount(ds.labels).tolist() == [40, 40, 40]


def test_same_seed_same_file(tmp_path):
    write_csv(three_arcs(seed=5), tmp_path / "a.csv")
    write_csv(three_arcs(seed=5), tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    write_csv(three_arcs(seed=6), tmp_path / "c.csv")
    assert (tmp_path / "a.csv").read_bytes() != (tmp_path / "c.csv").read_bytes()


def test_errors():
    with pytest.raises(UsageError):
        three_arcs(1)
    with pytest.raises(UsageError):
        three_arcs(10, noise=-0.1)
