"""Function sets V used as value-equivalence targets.

Two constructions are provided: indicator features of a k-means state
aggregation, and exact values of randomly sampled deterministic policies
(points of the value polytope).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_random_state

from .mdp import evaluate_exact, sample_deterministic_policies

AGGREGATION = "aggregation_basis"
POLYTOPE = "value_polytope"


@dataclass(frozen=True, eq=False)
class FunctionSet:
    """Matrix of functions over states; column ``j`` is the j-th function."""

    basis: np.ndarray
    kind: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        basis = np.array(self.basis, dtype=float)
        if basis.ndim == 1:
            basis = basis[:, None]
        if basis.ndim != 2 or basis.shape[1] < 1:
            raise ValueError("a function set needs at least one column")
        if self.kind == AGGREGATION:
            if not np.all((basis == 0) | (basis == 1)) or not np.all(basis.sum(axis=1) == 1):
                raise ValueError("aggregation basis must be a partition indicator matrix")
        basis.setflags(write=False)
        object.__setattr__(self, "basis", basis)

    @property
    def n_states(self):
        return self.basis.shape[0]

    @property
    def dim(self):
        return self.basis.shape[1]

    @property
    def labels(self):
        """Cluster index of every state (aggregation bases only)."""
        if self.kind != AGGREGATION:
            raise AttributeError("only aggregation bases have cluster labels")
        return np.argmax(self.basis, axis=1)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["state"] + [f"phi_{j}" for j in range(self.dim)])
            for s, row in enumerate(self.basis):
                writer.writerow([s] + [format(x, ".17g") for x in row])

    @classmethod
    def from_csv(cls, path, kind=POLYTOPE):
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header[0] != "state":
                raise ValueError(f"unexpected header {header}")
            rows = [[float(x) for x in row[1:]] for row in reader]
        return cls(np.array(rows), kind)


def _squared_distances(x, centers):
    return ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def farthest_point_init(x, n_clusters, random_state=None):
    """k-means++ style seeding: a random first center, then farthest points.

    The first center is drawn uniformly from the rows of ``x``; each further
    center is the point farthest from the chosen ones (lowest index on ties).
    """
    rng = check_random_state(random_state)
    chosen = [int(rng.randint(len(x)))]
    d2 = _squared_distances(x, x[chosen])[:, 0]
    for _ in range(1, n_clusters):
        nxt = int(np.argmax(d2))
        chosen.append(nxt)
        d2 = np.minimum(d2, _squared_distances(x, x[[nxt]])[:, 0])
    return x[chosen].copy()


def lloyd(x, centers, max_iter=100):
    """Lloyd iterations until assignments stabilise.

    Returns ``(labels, centers, inertia_history)``. Ties go to the lowest
    center index; an emptied cluster keeps its previous center.
    """
    centers = np.array(centers, dtype=float)
    labels = None
    history = []
    for _ in range(max_iter):
        d2 = _squared_distances(x, centers)
        new_labels = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(len(x)), new_labels].sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(len(centers)):
            members = x[labels == j]
            if len(members):
                centers[j] = members.mean(axis=0)
    return labels, centers, history


class KMeansAggregation(TransformerMixin, BaseEstimator):
    """State aggregation by k-means over state coordinates.

    ``fit`` clusters the coordinate rows; ``transform`` maps coordinates to
    the 0/1 indicator matrix of their nearest center.

    Parameters
    ----------
    n_clusters : int
        Number of aggregated states ``d``.
    max_iter : int
        Maximum number of Lloyd iterations.
    random_state : int, RandomState or None
        Seed for the first center of the farthest-point initialisation.
    """

    def __init__(self, n_clusters=10, max_iter=100, random_state=None):
        self.n_clusters = n_clusters
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        n_distinct = len(np.unique(X, axis=0))
        if not 1 <= self.n_clusters <= n_distinct:
            raise ValueError(
                f"n_clusters={self.n_clusters} must lie in [1, {n_distinct}] "
                "(number of distinct points)"
            )
        init = farthest_point_init(X, self.n_clusters, self.random_state)
        self.init_centers_ = init
        self.labels_, self.cluster_centers_, self.inertia_history_ = lloyd(
            X, init, self.max_iter
        )
        self.inertia_ = self.inertia_history_[-1]
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self)
        X = check_array(X, dtype=float)
        return np.argmin(_squared_distances(X, self.cluster_centers_), axis=1)

    def transform(self, X):
        labels = self.predict(X)
        out = np.zeros((len(labels), self.n_clusters))
        out[np.arange(len(labels)), labels] = 1.0
        return out


def kmeans_aggregation(coords, d, rng_seed=None, max_iter=100):
    """Indicator basis of a ``d``-cluster k-means partition of ``coords``."""
    km = KMeansAggregation(n_clusters=d, max_iter=max_iter, random_state=rng_seed).fit(coords)
    basis = km.transform(coords)
    return FunctionSet(
        basis, AGGREGATION,
        {"labels": km.predict(coords), "centers": km.cluster_centers_, "seed": rng_seed},
    )


def value_polytope_set(mdp, n_policies, rng_seed=None):
    """Exact values of ``n_policies`` random deterministic policies on ``mdp``."""
    policies = sample_deterministic_policies(n_policies, mdp.n_states, mdp.n_actions, rng_seed)
    basis = np.column_stack([evaluate_exact(mdp, pi) for pi in policies])
    return FunctionSet(basis, POLYTOPE, {"policies": policies, "seed": rng_seed})


def span_probe(vset, n_combos, rng_seed=None):
    """Random linear combinations of the columns, coefficients in [-1, 1].

    Returns ``(values, coefficients)`` where ``values[:, i]`` is the i-th
    combination.
    """
    rng = np.random.default_rng(rng_seed)
    coef = rng.uniform(-1.0, 1.0, size=(vset.dim, n_combos))
    return vset.basis @ coef, coef
