import numpy as np
import pytest
from sklearn.base import clone
from sklearn.cluster import KMeans

from veq.environments import make_env
from veq.function_sets import (
    AGGREGATION, POLYTOPE, FunctionSet, KMeansAggregation, farthest_point_init, kmeans_aggregation,
    lloyd, span_probe, value_polytope_set,
)
from veq.mdp import evaluate_exact


def test_aggregation_is_partition():
    mdp = make_env("four_rooms")
    fs = kmeans_aggregation(mdp.coords, 20, rng_seed=0)
    assert fs.kind == AGGREGATION and fs.basis.shape == (104, 20)
    np.testing.assert_array_equal(fs.basis.sum(axis=1), 1.0)
    assert (fs.basis.sum(axis=0) > 0).all()
    np.testing.assert_array_equal(fs.labels, fs.metadata["labels"])


def test_singleton_clusters_at_full_size():
    mdp = make_env("catch")
    fs = kmeans_aggregation(mdp.coords, mdp.n_states, rng_seed=0)
    np.testing.assert_array_equal(fs.basis.sum(axis=0), 1.0)


def test_too_many_clusters():
    with pytest.raises(ValueError):
        kmeans_aggregation(np.zeros((5, 2)), 2)


def test_lloyd_matches_sklearn_oracle():
    # same initial centers, single init: both should reach the same partition
    rng = np.random.default_rng(0)
    x = np.vstack([rng.normal(loc, 0.3, size=(40, 2)) for loc in ([0, 0], [3, 0], [0, 3], [3, 3])])
    init = farthest_point_init(x, 4, random_state=1)
    labels, centers, _ = lloyd(x, init, max_iter=100)
    ref = KMeans(n_clusters=4, init=init, n_init=1, max_iter=100, tol=0.0).fit(x)
    np.testing.assert_array_equal(labels, ref.labels_)
    np.testing.assert_allclose(centers, ref.cluster_centers_, atol=1e-10)


def test_lloyd_inertia_monotone():
    x = make_env("catch").coords
    _, _, hist = lloyd(x, farthest_point_init(x, 30, 2), max_iter=50)
    assert all(b <= a + 1e-9 for a, b in zip(hist, hist[1:]))


def test_estimator_api():
    km = KMeansAggregation(n_clusters=5, random_state=0)
    assert clone(km).get_params() == km.get_params()
    x = make_env("four_rooms").coords
    out = km.fit_transform(x)
    assert out.shape == (104, 5)
    np.testing.assert_array_equal(km.predict(x), km.labels_)


def test_polytope_columns_are_policy_values():
    mdp = make_env("toy")
    fs = value_polytope_set(mdp, 4, rng_seed=3)
    assert fs.kind == POLYTOPE and fs.dim == 4
    for j, pi in enumerate(fs.metadata["policies"]):
        np.testing.assert_allclose(fs.basis[:, j], evaluate_exact(mdp, pi))


def test_span_probe_in_span():
    fs = FunctionSet(np.random.default_rng(0).normal(size=(6, 3)), POLYTOPE)
    values, coef = span_probe(fs, 20, rng_seed=1)
    assert values.shape == (6, 20) and np.all(np.abs(coef) <= 1)
    np.testing.assert_allclose(values, fs.basis @ coef)


def test_function_set_csv_roundtrip(tmp_path):
    fs = kmeans_aggregation(make_env("four_rooms").coords, 8, rng_seed=0)
    path = tmp_path / "v.csv"
    fs.to_csv(path)
    assert path.read_text().startswith("state,phi_0,phi_1")
    back = FunctionSet.from_csv(path, kind=AGGREGATION)
    np.testing.assert_array_equal(back.basis, fs.basis)


def test_aggregation_kind_requires_partition():
    with pytest.raises(ValueError):
        FunctionSet(np.array([[1.0, 1.0], [0.0, 1.0]]), AGGREGATION)
