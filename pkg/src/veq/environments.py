"""Ground-truth environments and uniform-random experience collection."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .mdp import TabularMdp

# Classic 11x11 four-rooms interior surrounded by a wall ('#'); 104 open cells.
FOUR_ROOMS_LAYOUT = """\
#############
#     #     #
#     #     #
#           #
#     #     #
#     #     #
## ####     #
#     ### ###
#     #     #
#     #     #
#           #
#     #     #
#############"""

# up, down, left, right as (d_row, d_col)
MOVES = np.array([(-1, 0), (1, 0), (0, -1), (0, 1)])
CATCH_MOVES = (-1, 0, 1)


@dataclass(frozen=True)
class GridSpec:
    """Parameters of a grid environment.

    For ``four_rooms`` the default 11x11 layout is used when ``layout`` is
    None; otherwise ``layout`` is an ASCII map with '#' for walls.
    ``goal`` is ``"top_right"`` or ``"top_left"`` (or an explicit (row, col)).
    """

    env_kind: str = "four_rooms"
    width: int = 11
    height: int = 11
    slip_prob: float = 0.1
    reward_value: float = 1.0
    gamma: float = 0.99
    goal: str | tuple = "top_right"
    layout: str | None = None

    def __post_init__(self):
        if self.env_kind not in ("four_rooms", "catch"):
            raise ValueError(f"unknown env_kind {self.env_kind!r}")
        if self.width < 2 or self.height < 2:
            raise ValueError("width and height must be at least 2")
        if not 0.0 <= self.slip_prob <= 1.0:
            raise ValueError("slip_prob must lie in [0, 1]")


def _four_rooms_grid(spec):
    if spec.layout is not None:
        lines = spec.layout.strip("\n").splitlines()
        return np.array([[c != "#" for c in line] for line in lines])
    if (spec.width, spec.height) == (11, 11):
        lines = FOUR_ROOMS_LAYOUT.splitlines()
        return np.array([[c != "#" for c in line] for line in lines])
    return _generated_four_rooms(spec.width, spec.height)


def _generated_four_rooms(width, height):
    if width < 5 or height < 5:
        raise ValueError("four rooms needs an interior of at least 5x5")
    open_ = np.zeros((height + 2, width + 2), dtype=bool)
    open_[1:-1, 1:-1] = True
    wall_c = (width + 1) // 2 + 1
    wall_r = (height + 1) // 2 + 1
    open_[1:-1, wall_c] = False
    open_[wall_r, 1:wall_c] = False
    open_[wall_r + 1, wall_c + 1:-1] = False
    # one doorway per wall segment
    open_[(1 + wall_r) // 2, wall_c] = True
    open_[(wall_r + height + 1) // 2 + 1, wall_c] = True
    open_[wall_r, (1 + wall_c) // 2] = True
    open_[wall_r + 1, (wall_c + width + 1) // 2 + 1] = True
    return open_


def build_four_rooms(spec=GridSpec()):
    """Four-rooms gridworld with slippery moves and a rewarding corner.

    The agent moves in the intended direction with probability
    ``1 - slip_prob`` and in each of the three other directions with
    probability ``slip_prob / 3``. Bumping into a wall leaves it in place.
    Entering the goal cell pays ``reward_value`` and sends the agent to the
    start distribution (uniform over non-goal cells).

    State ``i`` is the i-th open cell in row-major order; ``coords[i]`` is its
    ``(col, row)`` position.
    """
    if spec.env_kind != "four_rooms":
        raise ValueError("spec is not a four_rooms spec")
    open_ = _four_rooms_grid(spec)
    cells = np.argwhere(open_)
    index = {tuple(rc): i for i, rc in enumerate(cells)}
    n = len(cells)
    if isinstance(spec.goal, str):
        top = cells[:, 0].min()
        row_cells = cells[cells[:, 0] == top]
        goal_rc = row_cells[np.argmax(row_cells[:, 1])] if spec.goal == "top_right" else row_cells[np.argmin(row_cells[:, 1])]
    else:
        goal_rc = np.asarray(spec.goal)
    goal = index[tuple(goal_rc)]
    start = np.full(n, 1.0 / (n - 1))
    start[goal] = 0.0

    transition = np.zeros((4, n, n))
    reward = np.zeros((n, 4))
    for s, (r, c) in enumerate(cells):
        dest = []
        for dr, dc in MOVES:
            rc = (r + dr, c + dc)
            dest.append(index.get(rc, s))
        for a in range(4):
            for m in range(4):
                p = 1.0 - spec.slip_prob if m == a else spec.slip_prob / 3.0
                if p == 0.0:
                    continue
                if dest[m] == goal:
                    reward[s, a] += p * spec.reward_value
                    transition[a, s] += p * start
                else:
                    transition[a, s, dest[m]] += p
    coords = np.column_stack([cells[:, 1], cells[:, 0]]).astype(float)
    return TabularMdp(
        reward, transition, spec.gamma, start=start, coords=coords,
        name="four_rooms", meta={"goal": goal, "cells": cells},
    )


class CatchIndex:
    """Bijection between Catch states and ``(paddle, ball_col, ball_row)``."""

    def __init__(self, width, height):
        self.width = width
        self.height = height

    @property
    def n_states(self):
        return self.width * self.width * self.height

    def to_index(self, paddle, ball_col, ball_row):
        return (paddle * self.width + ball_col) * self.height + ball_row

    def from_index(self, s):
        rest, ball_row = divmod(s, self.height)
        paddle, ball_col = divmod(rest, self.width)
        return paddle, ball_col, ball_row


def build_catch(spec=GridSpec(env_kind="catch", width=5, height=10)):
    """Catch: a paddle on the bottom row intercepts a falling ball.

    Actions are left / stay / right. The ball falls one row per step; the
    step that brings it onto the bottom row pays ``reward_value`` when the
    paddle is in the ball's column. From the bottom row the ball respawns in
    a uniformly random top-row column. Paddle moves are clipped at the edges.
    """
    if spec.env_kind != "catch":
        raise ValueError("spec is not a catch spec")
    w, h = spec.width, spec.height
    idx = CatchIndex(w, h)
    n = idx.n_states
    transition = np.zeros((3, n, n))
    reward = np.zeros((n, 3))
    coords = np.zeros((n, 4))
    start = np.zeros(n)
    for s in range(n):
        paddle, col, row = idx.from_index(s)
        coords[s] = (paddle, h - 1, col, row)
        if row == 0:
            start[s] = 1.0
        for a, move in enumerate(CATCH_MOVES):
            new_paddle = min(max(paddle + move, 0), w - 1)
            if row == h - 1:
                for new_col in range(w):
                    transition[a, s, idx.to_index(new_paddle, new_col, 0)] += 1.0 / w
            else:
                transition[a, s, idx.to_index(new_paddle, col, row + 1)] = 1.0
                if row + 1 == h - 1 and new_paddle == col:
                    reward[s, a] = spec.reward_value
    start /= start.sum()
    return TabularMdp(
        reward, transition, spec.gamma, start=start, coords=coords,
        name="catch", meta={"index": idx},
    )


def build_toy_mdp(p_a=(0.6, 0.4, 0.0), p_b=(0.4, 0.2, 0.4), gamma=0.99):
    """The 3-state, 2-action MDP where every entry into state 0 pays 1.

    From state 0, action ``j`` moves according to ``p_a`` / ``p_b``; states 1
    and 2 always return to state 0. ``reward[s, a]`` is the probability of
    entering state 0.
    """
    rows = np.array([p_a, p_b], dtype=float)
    transition = np.zeros((2, 3, 3))
    transition[:, 0, :] = rows
    transition[:, 1:, 0] = 1.0
    reward = transition[:, :, 0].T.copy()
    return TabularMdp(reward, transition, gamma, name="toy")


def make_env(name, **kwargs):
    """Build an environment by name: ``four_rooms``, ``catch`` or ``toy``."""
    if name == "toy":
        return build_toy_mdp(**kwargs)
    if name == "catch":
        kwargs.setdefault("width", 5)
        kwargs.setdefault("height", 10)
        return build_catch(GridSpec(env_kind="catch", **kwargs))
    if name == "four_rooms":
        return build_four_rooms(GridSpec(env_kind="four_rooms", **kwargs))
    raise ValueError(f"unknown environment {name!r}")


class TransitionDataset:
    """Experience tuples ``(s, a, r, s_next)`` with sufficient statistics.

    ``counts[a, s, s2]`` counts transitions, ``visits[s, a]`` their row sums,
    ``mean_reward[s, a]`` the empirical mean reward (0 where unvisited) and
    ``empirical_transition[a, s]`` the empirical next-state distribution
    (all-zero rows where unvisited).
    """

    def __init__(self, states, actions, rewards, next_states, n_states, n_actions):
        self.states = np.asarray(states, dtype=int)
        self.actions = np.asarray(actions, dtype=int)
        self.rewards = np.asarray(rewards, dtype=float)
        self.next_states = np.asarray(next_states, dtype=int)
        self.n_states = int(n_states)
        self.n_actions = int(n_actions)
        n = len(self.states)
        if not (len(self.actions) == len(self.rewards) == len(self.next_states) == n):
            raise ValueError("tuple columns have different lengths")
        for col, hi, name in (
            (self.states, n_states, "s"),
            (self.next_states, n_states, "s_next"),
            (self.actions, n_actions, "a"),
        ):
            if n and (col.min() < 0 or col.max() >= hi):
                raise ValueError(f"column {name} out of range [0, {hi})")

    def __len__(self):
        return len(self.states)

    @cached_property
    def counts(self):
        counts = np.zeros((self.n_actions, self.n_states, self.n_states))
        np.add.at(counts, (self.actions, self.states, self.next_states), 1.0)
        return counts

    @cached_property
    def visits(self):
        return self.counts.sum(axis=2).T

    @property
    def visited(self):
        return self.visits > 0

    @cached_property
    def mean_reward(self):
        sums = np.zeros((self.n_states, self.n_actions))
        np.add.at(sums, (self.states, self.actions), self.rewards)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.visited, sums / np.maximum(self.visits, 1), 0.0)

    @cached_property
    def empirical_transition(self):
        n_sa = self.visits.T[:, :, None]
        return np.where(n_sa > 0, self.counts / np.maximum(n_sa, 1), 0.0)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["s", "a", "r", "s_next"])
            for row in zip(self.states, self.actions, self.rewards, self.next_states):
                writer.writerow([int(row[0]), int(row[1]), repr(float(row[2])), int(row[3])])

    @classmethod
    def from_csv(cls, path, n_states, n_actions):
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != ["s", "a", "r", "s_next"]:
                raise ValueError(f"unexpected dataset header {header}")
            rows = list(reader)
        cols = list(zip(*rows)) if rows else [(), (), (), ()]
        return cls(
            [int(x) for x in cols[0]],
            [int(x) for x in cols[1]],
            [float(x) for x in cols[2]],
            [int(x) for x in cols[3]],
            n_states,
            n_actions,
        )


def sample_next_states(transition_rows, u):
    """Inverse-CDF sampling: one next state per row given uniforms ``u``."""
    cdf = np.cumsum(transition_rows, axis=1)
    out = (cdf <= u[:, None] * cdf[:, -1:]).sum(axis=1)
    return np.minimum(out, transition_rows.shape[1] - 1)


def collect_dataset(mdp, n_samples, rng_seed=None):
    """Roll out a uniform-random policy from the start distribution.

    A single trajectory of ``n_samples`` steps is recorded. Rewards are the
    MDP's expected rewards r(s, a).
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    rng = np.random.default_rng(rng_seed)
    n_states, n_actions = mdp.n_states, mdp.n_actions
    cdf = np.cumsum(mdp.transition, axis=2)
    actions = rng.integers(0, n_actions, size=n_samples)
    u = rng.random(n_samples)
    s = int(rng.choice(n_states, p=mdp.start))
    states = np.empty(n_samples, dtype=int)
    next_states = np.empty(n_samples, dtype=int)
    for i in range(n_samples):
        states[i] = s
        row = cdf[actions[i], s]
        s = min(int(np.searchsorted(row, u[i] * row[-1], side="right")), n_states - 1)
        next_states[i] = s
    rewards = mdp.reward[states, actions]
    return TransitionDataset(states, actions, rewards, next_states, n_states, n_actions)
