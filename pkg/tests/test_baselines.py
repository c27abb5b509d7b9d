import math

import numpy as np
import pytest

from wpcclean import baselines as B
from wpcclean.errors import TooFewPoints, WpcError
from wpcclean.scada_io import MATANG, Dataset


def _ds(X):
    X = np.asarray(X, float)
    return Dataset(X[:, 0], X[:, 1], MATANG)


def lof_by_definition(X: np.ndarray, k: int) -> np.ndarray:
    n = len(X)
    d = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2))
    nbrs = []
    kdist = np.empty(n)
    for i in range(n):
        order = [j for j in np.argsort(d[i], kind="stable") if j != i][:k]
        nbrs.append(order)
        kdist[i] = d[i, order[-1]]
    lrd = np.empty(n)
    for i in range(n):
        reach = [max(kdist[o], d[i, o]) for o in nbrs[i]]
        lrd[i] = 1.0 / (sum(reach) / k)
    return np.array([sum(lrd[o] for o in nbrs[i]) / k / lrd[i] for i in range(n)])


def test_config_validation():
    with pytest.raises(WpcError):
        B.BaselineConfig(lof_k=0)
    with pytest.raises(WpcError):
        B.BaselineConfig(lof_fraction=1.0)
    with pytest.raises(WpcError):
        B.BaselineConfig(kmeans_k=0)


def test_normalised_features():
    X = B.normalized_features(_ds([[0, 100], [10, 300], [5, 200]]))
    assert X.tolist() == [[0, 0], [1, 1], [0.5, 0.5]]
    flat = B.normalized_features(_ds([[2, 1], [2, 5]]))
    assert flat[:, 0].tolist() == [0, 0]


def test_lof_matches_the_definition(rng):
    X = rng.random((150, 2))
    for k in (3, 10, 40):
        assert np.allclose(B.lof_scores(X, k), lof_by_definition(X, k), rtol=1e-6)


def test_lof_far_point_is_the_single_flag():
    grid = np.stack(np.meshgrid(np.arange(10.0), np.arange(10.0)), -1).reshape(-1, 2)
    X = np.vstack([grid, [[30.0, 30.0]]])
    flags = B.lof_clean(_ds(X), B.BaselineConfig(lof_k=5, lof_fraction=1 / len(X)))
    assert np.flatnonzero(flags).tolist() == [100]


@pytest.mark.parametrize("n,fraction", [(1000, 0.1), (1001, 0.1), (333, 0.25), (400, 0.07)])
def test_lof_flags_exactly_the_fraction(n, fraction, rng):
    X = rng.random((n, 2)) * [25, 1500]
    flags = B.lof_clean(_ds(X), B.BaselineConfig(lof_k=20, lof_fraction=fraction))
    assert flags.sum() == math.ceil(round(fraction * n, 9))


def test_lof_ties_keep_input_order():
    scores = np.array([1.0, 2.0, 2.0, 2.0, 0.5])
    assert B.top_fraction(scores, 0.4).tolist() == [False, True, True, False, False]


def test_lof_duplicates_are_finite(rng):
    X = np.vstack([np.zeros((30, 2)), rng.random((30, 2))])
    scores = B.lof_scores(X, 5)
    assert np.isfinite(scores).all()


def test_lof_too_few_points():
    with pytest.raises(TooFewPoints):
        B.lof_clean(_ds(np.ones((300, 2)) * [1, 2]), B.BaselineConfig(lof_k=300))


def test_kmeans_identical_points_have_no_flags():
    flags = B.kmeans_clean(_ds(np.ones((50, 2))), B.BaselineConfig(kmeans_k=1))
    assert not flags.any()


def test_kmeans_flags_a_distant_point(rng):
    a = rng.normal([5, 200], [0.05, 5], (60, 2))
    b = rng.normal([15, 1200], [0.05, 5], (60, 2))
    X = np.vstack([a, b, [[10, 4000]]])
    flags = B.kmeans_clean(_ds(X), B.BaselineConfig(kmeans_k=2, seed=3))
    assert flags[-1]


def test_kmeans_rule_matches_distance_statistics(rng):
    X = rng.random((300, 2))
    flags = B.kmeans_clean(_ds(X), B.BaselineConfig(kmeans_k=4, seed=1))
    Xn = B.normalized_features(_ds(X))
    C, assign = B.kmeans(Xn, 4, seed=1)
    for j in range(4):
        members = np.flatnonzero(assign == j)
        d = np.array([math.dist(Xn[i], C[j]) for i in members])
        want = d > d.mean() + 2 * d.std()
        assert flags[members].tolist() == want.tolist()


def test_kmeans_converges_to_a_fixed_point(rng):
    X = rng.random((400, 2))
    C, assign = B.kmeans(X, 5, seed=2)
    # each centroid is the mean of its members and each point sits with its nearest centroid
    for j in range(5):
        assert np.allclose(C[j], X[assign == j].mean(axis=0), atol=1e-6)
    nearest = ((X[:, None] - C[None]) ** 2).sum(axis=2).argmin(axis=1)
    assert np.array_equal(nearest, assign)


def test_baselines_are_deterministic(rng):
    X = rng.random((800, 2)) * [25, 1500]
    cfg = B.BaselineConfig(lof_k=30, seed=4)
    assert np.array_equal(B.kmeans_clean(_ds(X), cfg), B.kmeans_clean(_ds(X), cfg))
    assert np.array_equal(B.lof_clean(_ds(X), cfg), B.lof_clean(_ds(X), cfg))


def test_kmeans_too_few_points():
    with pytest.raises(TooFewPoints):
        B.kmeans_clean(_ds(np.ones((5, 2))), B.BaselineConfig(kmeans_k=13))
