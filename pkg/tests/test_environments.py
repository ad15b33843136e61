import numpy as np
import pytest

from veq.environments import (
    FOUR_ROOMS_LAYOUT, CatchIndex, GridSpec, TransitionDataset, build_catch, build_four_rooms,
    build_toy_mdp, collect_dataset, make_env, sample_next_states,
)


def test_four_rooms_default_layout():
    mdp = make_env("four_rooms")
    assert mdp.n_states == FOUR_ROOMS_LAYOUT.count(" ") == 104
    assert mdp.n_actions == 4
    np.testing.assert_allclose(mdp.transition.sum(axis=2), 1.0, atol=1e-12)
    assert mdp.coords.shape == (104, 2)


def test_four_rooms_generated_size():
    mdp = make_env("four_rooms", width=9, height=9)
    assert mdp.n_states == 68


def test_four_rooms_goal_reward():
    mdp = make_env("four_rooms")
    goal = mdp.meta["goal"]
    r, c = mdp.meta["cells"][goal]
    assert r == mdp.meta["cells"][:, 0].min()
    assert mdp.start[goal] == 0.0
    # nothing ever lands in the goal: entering it resets to the start distribution
    np.testing.assert_array_equal(mdp.transition[:, :, goal], 0.0)
    assert mdp.reward.max() == pytest.approx(0.9 + 0.1 / 3)


def test_four_rooms_wall_bump_stays():
    mdp = make_env("four_rooms", slip_prob=0.0)
    # the top-left open cell has walls above and to its left
    assert np.sum(mdp.transition[:, 0, 0] == 1.0) == 2


def test_catch_size_and_dynamics():
    mdp = make_env("catch")
    assert mdp.n_states == 250 and mdp.n_actions == 3
    idx = CatchIndex(5, 10)
    s = idx.to_index(paddle=0, ball_col=2, ball_row=3)
    assert idx.from_index(s) == (0, 2, 3)
    # moving left at the edge is clipped; ball moves down one row
    nxt = mdp.transition[0, s]
    assert nxt[idx.to_index(0, 2, 4)] == 1.0


def test_catch_reward_on_catch():
    mdp = make_env("catch")
    idx = CatchIndex(5, 10)
    s = idx.to_index(paddle=2, ball_col=2, ball_row=8)
    assert mdp.reward[s, 1] == 1.0
    assert mdp.reward[s, 0] == 0.0
    bottom = idx.to_index(paddle=2, ball_col=2, ball_row=9)
    top_row = [idx.to_index(2, c, 0) for c in range(5)]
    np.testing.assert_allclose(mdp.transition[1, bottom, top_row], 0.2)


def test_toy_mdp_matches_definition():
    mdp = build_toy_mdp()
    np.testing.assert_allclose(mdp.transition[0, 0], [0.6, 0.4, 0.0])
    np.testing.assert_allclose(mdp.transition[1, 0], [0.4, 0.2, 0.4])
    np.testing.assert_allclose(mdp.transition[:, 1:, 0], 1.0)
    np.testing.assert_allclose(mdp.reward[0], [0.6, 0.4])
    np.testing.assert_allclose(mdp.reward[1:], 1.0)


def test_unknown_env():
    with pytest.raises(ValueError):
        make_env("maze")


def test_sample_next_states_skips_zero_mass():
    rows = np.array([[0.0, 1.0, 0.0], [0.5, 0.0, 0.5]])
    out = sample_next_states(rows, np.array([0.0, 0.0]))
    np.testing.assert_array_equal(out, [1, 0])
    out = sample_next_states(rows, np.array([0.999, 0.6]))
    np.testing.assert_array_equal(out, [1, 2])


def test_collect_dataset_statistics():
    mdp = build_toy_mdp()
    ds = collect_dataset(mdp, 50_000, rng_seed=0)
    assert len(ds) == 50_000
    assert ds.counts.sum() == 50_000
    np.testing.assert_array_equal(ds.visits, ds.counts.sum(axis=2).T)
    np.testing.assert_allclose(ds.empirical_transition[0, 0], [0.6, 0.4, 0.0], atol=0.02)
    np.testing.assert_allclose(ds.mean_reward, mdp.reward, atol=1e-12)


def test_collect_dataset_is_seeded():
    mdp = make_env("catch")
    a = collect_dataset(mdp, 1000, rng_seed=5)
    b = collect_dataset(mdp, 1000, rng_seed=5)
    np.testing.assert_array_equal(a.next_states, b.next_states)


def test_dataset_validation():
    with pytest.raises(ValueError):
        TransitionDataset([0], [2], [0.0], [0], n_states=1, n_actions=2)
    with pytest.raises(ValueError):
        TransitionDataset([0], [0], [0.0], [3], n_states=2, n_actions=1)


def test_unvisited_rows_are_zero():
    ds = TransitionDataset([0, 0], [0, 0], [1.0, 0.0], [1, 1], n_states=2, n_actions=2)
    assert not ds.visited[1].any() and not ds.visited[0, 1]
    np.testing.assert_array_equal(ds.empirical_transition[1], 0.0)
    assert ds.mean_reward[0, 0] == 0.5


def test_dataset_csv_roundtrip(tmp_path):
    ds = collect_dataset(build_toy_mdp(), 200, rng_seed=1)
    path = tmp_path / "ds.csv"
    ds.to_csv(path)
    assert path.read_text().splitlines()[0] == "s,a,r,s_next"
    back = TransitionDataset.from_csv(path, 3, 2)
    np.testing.assert_array_equal(back.counts, ds.counts)
    np.testing.assert_array_equal(back.rewards, ds.rewards)
