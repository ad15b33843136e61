"""Rank-constrained tabular models and their MLE / value-equivalence training.

Each action's transition matrix is ``P^a = D^a K^a`` with ``D^a`` of shape
``(n_states, k)`` and ``K^a`` of shape ``(k, n_states)``, both row-softmaxes
of free logits. Rewards are fitted in closed form and frozen while the
transition logits are trained with Adam on full-batch gradients computed
from the dataset's sufficient statistics.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .function_sets import FunctionSet


def row_softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_backward(probs, grad_probs):
    """Gradient w.r.t. logits given ``probs = row_softmax(logits)``."""
    inner = np.sum(grad_probs * probs, axis=-1, keepdims=True)
    return probs * (grad_probs - inner)


class FactorizedModel:
    """Learnable model with rank-``k`` row-stochastic transitions.

    Parameters
    ----------
    logits_d : ndarray of shape (n_actions, n_states, k)
    logits_k : ndarray of shape (n_actions, k, n_states)
    reward : ndarray of shape (n_states, n_actions)
    gamma : float
    """

    def __init__(self, logits_d, logits_k, reward, gamma):
        self.logits_d = np.array(logits_d, dtype=float)
        self.logits_k = np.array(logits_k, dtype=float)
        self.reward = np.array(reward, dtype=float)
        self.gamma = float(gamma)
        n_actions, n_states, k = self.logits_d.shape
        if self.logits_k.shape != (n_actions, k, n_states):
            raise ValueError(
                f"logits_k shape {self.logits_k.shape} incompatible with "
                f"logits_d shape {self.logits_d.shape}"
            )
        if self.reward.shape != (n_states, n_actions):
            raise ValueError("reward table must have shape (n_states, n_actions)")

    @property
    def n_actions(self):
        return self.logits_d.shape[0]

    @property
    def n_states(self):
        return self.logits_d.shape[1]

    @property
    def rank(self):
        return self.logits_d.shape[2]

    @property
    def D(self):
        return row_softmax(self.logits_d)

    @property
    def K(self):
        return row_softmax(self.logits_k)

    @property
    def transition(self):
        return self.D @ self.K

    def params(self):
        return [self.logits_d, self.logits_k]

    def copy(self):
        return FactorizedModel(self.logits_d, self.logits_k, self.reward, self.gamma)


def init_model(n_states, n_actions, k, rng_seed=None, gamma=0.99):
    """Logits drawn from Uniform([-1, 1]); reward table zero."""
    if k < 1:
        raise ValueError("rank k must be at least 1")
    rng = np.random.default_rng(rng_seed)
    logits_d = rng.uniform(-1.0, 1.0, size=(n_actions, n_states, k))
    logits_k = rng.uniform(-1.0, 1.0, size=(n_actions, k, n_states))
    return FactorizedModel(logits_d, logits_k, np.zeros((n_states, n_actions)), gamma)


def zero_model(n_states, n_actions, k, gamma=0.99):
    """All-zero logits: every row of D, K and P is uniform."""
    return FactorizedModel(
        np.zeros((n_actions, n_states, k)),
        np.zeros((n_actions, k, n_states)),
        np.zeros((n_states, n_actions)),
        gamma,
    )


def fit_reward(dataset):
    """Empirical mean reward per (s, a); unvisited cells get 0."""
    return dataset.mean_reward.copy()


def _factor_grads(model, grad_d, grad_k, d=None, k=None):
    d = model.D if d is None else d
    k = model.K if k is None else k
    return [softmax_backward(d, grad_d), softmax_backward(k, grad_k)]


class MleObjective:
    """Negative log-likelihood ``-sum N(s,a,s2) log P^a[s, s2]``.

    Only the nonzero counts enter, so the model is evaluated at those entries
    and the gradient is pushed through a block-diagonal sparse matrix.
    """

    name = "mle"

    def __init__(self, dataset):
        n_a, n_s = dataset.n_actions, dataset.n_states
        a, s, s2 = np.nonzero(dataset.counts)
        rows = a * n_s + s
        cols = a * n_s + s2
        self._pattern = sp.csr_matrix(
            (dataset.counts[a, s, s2], (rows, cols)), shape=(n_a * n_s, n_a * n_s)
        )
        self._pattern.sort_indices()
        coo = self._pattern.tocoo()
        self._rows, self._cols = coo.row, coo.col
        self._counts = self._pattern.data.copy()
        self.shape = (n_a, n_s)

    def loss_and_grad(self, model):
        n_a, n_s = self.shape
        d = model.D
        k = model.K
        d_flat = d.reshape(n_a * n_s, -1)
        kt_flat = np.transpose(k, (0, 2, 1)).reshape(n_a * n_s, -1)
        p = np.einsum("nj,nj->n", d_flat[self._rows], kt_flat[self._cols])
        loss = -float(np.dot(self._counts, np.log(p)))
        g = self._pattern.copy()
        g.data = -self._counts / p
        grad_d = (g @ kt_flat).reshape(d.shape)
        grad_kt = (g.T @ d_flat).reshape(n_a, n_s, -1)
        grads = _factor_grads(model, grad_d, np.transpose(grad_kt, (0, 2, 1)), d, k)
        return loss, grads


class VeObjective:
    """Squared value-equivalence residual for the action policies.

    For each visited (s, a) and column v of ``V``::

        e = (R_bar - R_model)[s, a] + gamma * (P_bar^a[s] - P_model^a[s]) @ v

    and the loss is ``sum w[s, a] * e**2`` with ``w`` the visited indicator
    (or the visit count when ``weight_by_counts``).
    """

    name = "ve"

    def __init__(self, dataset, vset, weight_by_counts=False):
        basis = vset.basis if isinstance(vset, FunctionSet) else np.asarray(vset, dtype=float)
        if basis.ndim == 1:
            basis = basis[:, None]
        if basis.shape[1] == 0:
            raise ValueError("the function set V is empty")
        if basis.shape[0] != dataset.n_states:
            raise ValueError("function set and dataset disagree on n_states")
        self.basis = basis
        self.mean_reward = dataset.mean_reward
        self.target_pv = dataset.empirical_transition @ basis
        visits = dataset.visits.T
        self.weights = (visits if weight_by_counts else (visits > 0).astype(float))[:, :, None]

    def residual(self, model):
        model_pv = model.D @ (model.K @ self.basis)
        reward_gap = (self.mean_reward - model.reward).T[:, :, None]
        return reward_gap + model.gamma * (self.target_pv - model_pv)

    def loss_and_grad(self, model):
        d = model.D
        k = model.K
        kv = k @ self.basis
        reward_gap = (self.mean_reward - model.reward).T[:, :, None]
        err = reward_gap + model.gamma * (self.target_pv - d @ kv)
        loss = float(np.sum(self.weights * err**2))
        h = -2.0 * model.gamma * self.weights * err
        grad_d = h @ np.transpose(kv, (0, 2, 1))
        grad_k = (np.transpose(d, (0, 2, 1)) @ h) @ self.basis.T
        return loss, _factor_grads(model, grad_d, grad_k, d, k)


def mle_loss_and_grad(model, dataset):
    """MLE loss and gradients w.r.t. ``[logits_d, logits_k]``."""
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    return MleObjective(dataset).loss_and_grad(model)


def ve_loss_and_grad(model, dataset, vset, weight_by_counts=False):
    """VE loss and gradients w.r.t. ``[logits_d, logits_k]``."""
    return VeObjective(dataset, vset, weight_by_counts).loss_and_grad(model)


class Adam:
    """Adam optimizer updating a list of arrays in place."""

    def __init__(self, lr=5e-5, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = None
        self.v = None

    def step(self, params, grads):
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= (self.lr / bc1) * m / (np.sqrt(v / bc2) + self.eps)


@dataclass
class TrainReport:
    final_loss: float
    grad_norm: float
    steps: int
    initial_loss: float
    loss_history: list = field(default_factory=list)
    wall_time: float = 0.0
    converged: bool = False


class TrainingError(RuntimeError):
    pass


def _check_rows(model, tol=1e-10):
    for name, m in (("D", model.D), ("K", model.K)):
        if np.max(np.abs(m.sum(axis=-1) - 1.0)) > tol:
            raise TrainingError(f"{name} lost row-stochasticity")


def train(model, objective, adam=None, max_steps=50_000, grad_tol=1e-7, log_every=1000):
    """Full-batch Adam on ``objective``; mutates ``model`` in place.

    Stops after ``max_steps`` updates or once the gradient's max-norm falls
    below ``grad_tol``.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    adam = Adam() if adam is None else adam
    params = model.params()
    start = time.perf_counter()
    loss, grads = objective.loss_and_grad(model)
    if not math.isfinite(loss):
        raise TrainingError(f"non-finite initial loss {loss}")
    initial = loss
    history = [(0, loss)]
    gnorm = max(float(np.max(np.abs(g))) for g in grads)
    steps = 0
    converged = False
    while steps < max_steps:
        if gnorm < grad_tol:
            converged = True
            break
        adam.step(params, grads)
        steps += 1
        loss, grads = objective.loss_and_grad(model)
        if not math.isfinite(loss):
            raise TrainingError(f"non-finite loss {loss} at step {steps}")
        gnorm = max(float(np.max(np.abs(g))) for g in grads)
        if steps % log_every == 0:
            history.append((steps, loss))
            _check_rows(model)
    if history[-1][0] != steps:
        history.append((steps, loss))
    return TrainReport(
        final_loss=loss, grad_norm=gnorm, steps=steps, initial_loss=initial,
        loss_history=history, wall_time=time.perf_counter() - start,
        converged=converged or gnorm < grad_tol,
    )


class ModelLearner(BaseEstimator):
    """Estimator wrapper: learn a rank-``rank`` model from a dataset.

    Parameters
    ----------
    method : {"mle", "ve"}
    rank : int
        Inner dimension ``k`` of every ``D^a K^a`` factorisation.
    lr, max_steps, grad_tol : optimisation settings.
    weight_by_counts : bool
        Weight VE residuals by visit counts instead of one term per cell.
    gamma : float
    random_state : int or None
        Seed of the logit initialisation.
    """

    def __init__(self, method="ve", rank=10, lr=5e-5, max_steps=50_000, grad_tol=1e-7,
                 weight_by_counts=False, gamma=0.99, random_state=None):
        self.method = method
        self.rank = rank
        self.lr = lr
        self.max_steps = max_steps
        self.grad_tol = grad_tol
        self.weight_by_counts = weight_by_counts
        self.gamma = gamma
        self.random_state = random_state

    def _objective(self, dataset, function_set):
        if self.method == "mle":
            return MleObjective(dataset)
        if self.method == "ve":
            if function_set is None:
                raise ValueError("method='ve' needs a function set")
            return VeObjective(dataset, function_set, self.weight_by_counts)
        raise ValueError(f"unknown method {self.method!r}")

    def fit(self, dataset, function_set=None):
        if len(dataset) == 0:
            raise ValueError("dataset is empty")
        model = init_model(dataset.n_states, dataset.n_actions, self.rank,
                           self.random_state, self.gamma)
        model.reward = fit_reward(dataset)
        objective = self._objective(dataset, function_set)
        self.report_ = train(model, objective, Adam(lr=self.lr), self.max_steps, self.grad_tol)
        self.model_ = model
        return self

    def predict_proba(self, X):
        """Next-state distributions for rows ``X[i] = (s, a)``."""
        check_is_fitted(self)
        X = np.asarray(X, dtype=int).reshape(-1, 2)
        m = self.model_
        return np.einsum("nk,nkt->nt", m.D[X[:, 1], X[:, 0]], m.K[X[:, 1]])

    def score(self, dataset, function_set=None):
        """Negative training objective on ``dataset`` (higher is better)."""
        check_is_fitted(self)
        loss, _ = self._objective(dataset, function_set).loss_and_grad(self.model_)
        return -loss


def _write_matrix(path, mat):
    with open(path, "w") as fh:
        for row in np.atleast_2d(mat):
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def _read_matrix(path):
    with open(path) as fh:
        return np.array([[float(x) for x in line.split(",")] for line in fh if line.strip()])


def save_model(model, directory, **manifest):
    """Write a CSV bundle: logits per action, reward table and a manifest."""
    os.makedirs(directory, exist_ok=True)
    for a in range(model.n_actions):
        _write_matrix(os.path.join(directory, f"F_D_{a}.csv"), model.logits_d[a])
        _write_matrix(os.path.join(directory, f"F_K_{a}.csv"), model.logits_k[a])
    _write_matrix(os.path.join(directory, "reward.csv"), model.reward)
    info = {
        "n_states": model.n_states, "n_actions": model.n_actions,
        "rank": model.rank, "gamma": repr(model.gamma),
    }
    info.update(manifest)
    with open(os.path.join(directory, "manifest.txt"), "w") as fh:
        for key, value in info.items():
            fh.write(f"{key}={value}\n")


def read_manifest(directory):
    out = {}
    with open(os.path.join(directory, "manifest.txt")) as fh:
        for line in fh:
            if "=" in line:
                key, value = line.rstrip("\n").split("=", 1)
                out[key] = value
    return out


def load_model(directory):
    info = read_manifest(directory)
    n_actions = int(info["n_actions"])
    logits_d = np.stack([_read_matrix(os.path.join(directory, f"F_D_{a}.csv")) for a in range(n_actions)])
    logits_k = np.stack([_read_matrix(os.path.join(directory, f"F_K_{a}.csv")) for a in range(n_actions)])
    reward = _read_matrix(os.path.join(directory, "reward.csv"))
    return FactorizedModel(logits_d, logits_k, reward.reshape(int(info["n_states"]), n_actions),
                           float(info["gamma"]))
