"""Exact tabular MDP machinery: Bellman operators, evaluation and value iteration.

Value functions are plain ``(n_states,)`` float arrays. Anything exposing
``reward`` of shape ``(n_states, n_actions)``, ``transition`` of shape
``(n_actions, n_states, n_states)`` and ``gamma`` can be planned on; both
:class:`TabularMdp` and :class:`veq.model.FactorizedModel` satisfy this.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

ROW_TOL = 1e-12


class ModelView(Protocol):
    """Read-only (reward, transition, gamma) view used by all planning code."""

    @property
    def reward(self) -> np.ndarray: ...

    @property
    def transition(self) -> np.ndarray: ...

    @property
    def gamma(self) -> float: ...


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver exhausts its iteration budget."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


def _check_stochastic(arr, name, tol=ROW_TOL):
    if np.any(arr < 0):
        raise ValueError(f"{name} has negative entries")
    err = np.max(np.abs(arr.sum(axis=-1) - 1.0))
    if err > tol:
        raise ValueError(f"{name} rows must sum to 1 (max error {err:.2e})")


@dataclass(frozen=True, eq=False)
class TabularMdp:
    """Ground-truth finite MDP.

    Parameters
    ----------
    reward : ndarray of shape (n_states, n_actions)
        Expected reward r(s, a).
    transition : ndarray of shape (n_actions, n_states, n_states)
        ``transition[a, s, s2] = p(s2 | s, a)``.
    gamma : float
        Discount in [0, 1).
    start : ndarray of shape (n_states,), optional
        Start distribution used for data collection. Uniform when omitted.
    coords : ndarray of shape (n_states, n_dims), optional
        Coordinate embedding of each state (used for state aggregation).
    name : str
        Identifier used in result files.
    """

    reward: np.ndarray
    transition: np.ndarray
    gamma: float
    start: np.ndarray | None = None
    coords: np.ndarray | None = None
    name: str = "mdp"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        reward = np.array(self.reward, dtype=float)
        transition = np.array(self.transition, dtype=float)
        if reward.ndim != 2 or transition.ndim != 3:
            raise ValueError("reward must be 2-D and transition 3-D")
        n_states, n_actions = reward.shape
        if transition.shape != (n_actions, n_states, n_states):
            raise ValueError(
                f"transition shape {transition.shape} does not match reward "
                f"shape {reward.shape}"
            )
        if not np.all(np.isfinite(reward)):
            raise ValueError("reward entries must be finite")
        _check_stochastic(transition, "transition")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        start = self.start
        if start is None:
            start = np.full(n_states, 1.0 / n_states)
        start = np.array(start, dtype=float)
        if start.shape != (n_states,):
            raise ValueError("start distribution has the wrong length")
        _check_stochastic(start, "start", tol=1e-9)
        for arr in (reward, transition, start):
            arr.setflags(write=False)
        object.__setattr__(self, "reward", reward)
        object.__setattr__(self, "transition", transition)
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "gamma", float(self.gamma))
        if self.coords is not None:
            coords = np.array(self.coords, dtype=float)
            if coords.shape[0] != n_states:
                raise ValueError("coords must have one row per state")
            coords.setflags(write=False)
            object.__setattr__(self, "coords", coords)

    @property
    def n_states(self):
        return self.reward.shape[0]

    @property
    def n_actions(self):
        return self.reward.shape[1]


@dataclass(frozen=True, eq=False)
class TabularPolicy:
    """Stochastic policy table ``probs[s, a] = pi(a | s)``."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        if probs.ndim != 2:
            raise ValueError("policy table must be 2-D (n_states, n_actions)")
        _check_stochastic(probs, "policy")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_actions(cls, actions, n_actions):
        actions = np.asarray(actions, dtype=int)
        probs = np.zeros((actions.size, n_actions))
        probs[np.arange(actions.size), actions] = 1.0
        return cls(probs)

    @classmethod
    def uniform(cls, n_states, n_actions):
        return cls(np.full((n_states, n_actions), 1.0 / n_actions))

    @property
    def n_states(self):
        return self.probs.shape[0]

    @property
    def n_actions(self):
        return self.probs.shape[1]

    @property
    def actions(self):
        """Most likely action per state (lowest index on ties)."""
        return np.argmax(self.probs, axis=1)

    def __eq__(self, other):
        if not isinstance(other, TabularPolicy):
            return NotImplemented
        return self.probs.shape == other.probs.shape and bool(
            np.array_equal(self.probs, other.probs)
        )

    __hash__ = None


def _check_dims(model, policy=None, v=None):
    n_states, n_actions = model.reward.shape
    if policy is not None and policy.probs.shape != (n_states, n_actions):
        raise ValueError(
            f"policy shape {policy.probs.shape} does not match model "
            f"({n_states}, {n_actions})"
        )
    if v is not None and v.shape[0] != n_states:
        raise ValueError(f"value vector has length {v.shape[0]}, expected {n_states}")


def policy_matrices(model, policy):
    """Return ``(r_pi, P_pi)`` for a model view and policy."""
    _check_dims(model, policy)
    r_pi = np.sum(policy.probs * model.reward, axis=1)
    p_pi = np.einsum("sa,ast->st", policy.probs, model.transition)
    return r_pi, p_pi


def action_values(model, v):
    """``q[s, a] = r(s, a) + gamma * sum_s2 p(s2 | s, a) v(s2)``."""
    v = np.asarray(v, dtype=float)
    _check_dims(model, v=v)
    return model.reward + model.gamma * (model.transition @ v).T


def bellman_apply(model, policy, v):
    """Apply the policy Bellman operator ``T_pi`` to ``v``.

    ``v`` may be a single vector of shape ``(n_states,)`` or a matrix of
    shape ``(n_states, d)`` whose columns are transformed independently.
    """
    v = np.asarray(v, dtype=float)
    _check_dims(model, policy, v)
    r_pi, p_pi = policy_matrices(model, policy)
    if v.ndim == 2:
        return r_pi[:, None] + model.gamma * (p_pi @ v)
    return r_pi + model.gamma * (p_pi @ v)


def evaluate_exact(model, policy):
    """Solve ``(I - gamma P_pi) v = r_pi`` for the value of ``policy``."""
    r_pi, p_pi = policy_matrices(model, policy)
    a = np.eye(len(r_pi)) - model.gamma * p_pi
    try:
        return np.linalg.solve(a, r_pi)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError("policy evaluation system is singular") from exc


def greedy_policy(model, v):
    q = action_values(model, v)
    return TabularPolicy.from_actions(np.argmax(q, axis=1), model.reward.shape[1])


def value_iteration(model, tol=1e-8, max_iters=100_000, v0=None):
    """Optimal-value iteration on a model view.

    Returns the value estimate and its greedy policy (ties broken towards the
    lowest action index). Stops once ``||T v - v||_inf < tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n_states = model.reward.shape[0]
    v = np.zeros(n_states) if v0 is None else np.array(v0, dtype=float)
    residual = np.inf
    for _ in range(max_iters):
        v_new = action_values(model, v).max(axis=1)
        residual = np.max(np.abs(v_new - v))
        v = v_new
        if residual < tol:
            return v, greedy_policy(model, v)
    raise ConvergenceError(f"value iteration did not converge in {max_iters} iterations", residual)


def sample_deterministic_policies(n, n_states, n_actions, rng_seed=None):
    """Draw ``n`` deterministic policies, one uniform action per state."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(rng_seed)
    actions = rng.integers(0, n_actions, size=(n, n_states))
    return [TabularPolicy.from_actions(row, n_actions) for row in actions]


def action_policies(n_actions, n_states=1) -> Sequence[TabularPolicy]:
    """The policies ``pi^a`` that pick action ``a`` in every state."""
    if n_actions < 1:
        raise ValueError("n_actions must be at least 1")
    return [
        TabularPolicy.from_actions(np.full(n_states, a), n_actions)
        for a in range(n_actions)
    ]
