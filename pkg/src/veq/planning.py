"""Policy construction from a learned model and exact evaluation on the true MDP."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .environments import sample_next_states
from .mdp import TabularPolicy, action_values, evaluate_exact, value_iteration


@dataclass(frozen=True)
class LstdConfig:
    """Approximate policy iteration settings.

    ``n_chains`` parallel on-policy walkers share the ``samples_per_policy``
    budget. ``expected_next_state`` replaces the sampled model next state by
    the model's expected feature vector. ``use_true_env`` toggles whether the
    visited states come from the true environment (default) or from
    imagined rollouts in the model itself.
    """

    samples_per_policy: int = 10_000
    n_iterations: int = 40
    ridge: float = 1e-6
    rng_seed: int = 0
    n_chains: int = 100
    expected_next_state: bool = False
    use_true_env: bool = True

    def __post_init__(self):
        if self.samples_per_policy < 1 or self.n_iterations < 1 or self.n_chains < 1:
            raise ValueError("LSTD sample and iteration counts must be positive")
        if self.ridge < 0:
            raise ValueError("ridge must be non-negative")


@dataclass
class ExperimentResult:
    env: str
    method: str
    strategy: str
    rank: int
    dim_v: int
    seed: int
    mean_value: float
    final_loss: float = float("nan")
    steps: int = 0
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.env or not self.method or not self.strategy:
            raise ValueError("result identifiers must be non-empty")

    FIELDS = ("env", "method", "strategy", "rank", "dim_v", "seed", "mean_value", "final_loss", "steps")

    def row(self):
        return [
            self.env, self.method, self.strategy, str(self.rank), str(self.dim_v),
            str(self.seed), f"{self.mean_value:.10g}", f"{self.final_loss:.10g}", str(self.steps),
        ]


def plan_value_iteration(model, tol=1e-8, max_iters=100_000):
    """Greedy policy of the model's optimal value function."""
    _, policy = value_iteration(model, tol=tol, max_iters=max_iters)
    return policy


def _rollout_states(true_mdp, policy, cfg, rng):
    """On-policy (s, a) pairs from ``n_chains`` walkers in the true MDP."""
    n_chains = min(cfg.n_chains, cfg.samples_per_policy)
    length = -(-cfg.samples_per_policy // n_chains)
    n_states = true_mdp.n_states
    s = rng.choice(n_states, size=n_chains, p=true_mdp.start)
    pol_cdf = np.cumsum(policy.probs, axis=1)
    states, actions = [], []
    for _ in range(length):
        a = np.minimum((pol_cdf[s] <= rng.random(n_chains)[:, None]).sum(axis=1), policy.n_actions - 1)
        states.append(s)
        actions.append(a)
        s = sample_next_states(true_mdp.transition[a, s], rng.random(n_chains))
    states = np.concatenate(states)[: cfg.samples_per_policy]
    actions = np.concatenate(actions)[: cfg.samples_per_policy]
    return states, actions


def lstd_weights(features, next_features, rewards, gamma, ridge):
    """Solve ``A w = b`` with ``A = sum phi (phi - gamma phi')^T + ridge I``."""
    a = features.T @ (features - gamma * next_features) + ridge * np.eye(features.shape[1])
    b = features.T @ rewards
    try:
        return np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("LSTD system is singular; increase the ridge") from exc


def lstd_evaluate(model, policy, vset, cfg, true_mdp, rng=None):
    """LSTD weights for ``policy`` on tuples whose outcomes come from ``model``.

    States and actions are collected by acting with ``policy`` in
    ``true_mdp``; rewards are replaced by ``model.reward[s, a]`` and next
    states by draws from the model's transition row.
    """
    rng = np.random.default_rng(cfg.rng_seed) if rng is None else rng
    phi = vset.basis if hasattr(vset, "basis") else np.asarray(vset, dtype=float)
    p_model = model.transition
    source = true_mdp if cfg.use_true_env else _ModelEnv(model, true_mdp.start)
    states, actions = _rollout_states(source, policy, cfg, rng)
    rewards = model.reward[states, actions]
    if cfg.expected_next_state:
        next_features = p_model[actions, states] @ phi
    else:
        next_states = sample_next_states(p_model[actions, states], rng.random(len(states)))
        next_features = phi[next_states]
    return lstd_weights(phi[states], next_features, rewards, model.gamma, cfg.ridge)


class _ModelEnv:
    def __init__(self, model, start):
        self.transition = model.transition
        self.start = start
        self.n_states = model.n_states


def policy_iteration_lstd(model, vset, cfg, true_mdp, return_history=False):
    """Approximate policy iteration: LSTD evaluation then model-greedy improvement.

    Starts from the uniform policy; greedy ties go to the lowest action.
    """
    rng = np.random.default_rng(cfg.rng_seed)
    phi = vset.basis if hasattr(vset, "basis") else np.asarray(vset, dtype=float)
    policy = TabularPolicy.uniform(model.n_states, model.n_actions)
    history = []
    for _ in range(cfg.n_iterations):
        w = lstd_evaluate(model, policy, phi, cfg, true_mdp, rng)
        q = action_values(model, phi @ w)
        policy = TabularPolicy.from_actions(np.argmax(q, axis=1), model.n_actions)
        history.append(w)
    if return_history:
        return policy, history
    return policy


def evaluate_policy_mean(true_mdp, policy):
    """Average exact value of ``policy`` over all states of ``true_mdp``."""
    return float(np.mean(evaluate_exact(true_mdp, policy)))


def evaluate_policy_rollouts(true_mdp, policy, n_episodes=20, horizon=1000, rng_seed=0):
    """Monte-Carlo discounted return from uniformly drawn start states."""
    rng = np.random.default_rng(rng_seed)
    s = rng.integers(0, true_mdp.n_states, size=n_episodes)
    pol_cdf = np.cumsum(policy.probs, axis=1)
    total = np.zeros(n_episodes)
    disc = 1.0
    for _ in range(horizon):
        a = np.minimum((pol_cdf[s] <= rng.random(n_episodes)[:, None]).sum(axis=1), policy.n_actions - 1)
        total += disc * true_mdp.reward[s, a]
        s = sample_next_states(true_mdp.transition[a, s], rng.random(n_episodes))
        disc *= true_mdp.gamma
    return float(total.mean())
