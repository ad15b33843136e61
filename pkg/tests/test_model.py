import numpy as np
import pytest
from sklearn.base import clone

from veq.environments import TransitionDataset, build_toy_mdp, collect_dataset, make_env
from veq.function_sets import FunctionSet, POLYTOPE, value_polytope_set
from veq.model import (
    Adam, FactorizedModel, MleObjective, ModelLearner, TrainingError, VeObjective, fit_reward,
    init_model, load_model, row_softmax, save_model, train, zero_model,
)
from veq.theory import finite_difference_grad, max_relative_error

from conftest import random_mdp


@pytest.fixture
def toy_data():
    mdp = random_mdp(5, 2, 0.9, seed=4)
    ds = collect_dataset(mdp, 3000, rng_seed=0)
    vset = FunctionSet(np.random.default_rng(1).normal(size=(5, 3)), POLYTOPE)
    return mdp, ds, vset


def test_row_softmax_stable():
    p = row_softmax(np.array([[1000.0, 1000.0], [-1000.0, 0.0]]))
    np.testing.assert_allclose(p, [[0.5, 0.5], [0.0, 1.0]])


def test_factorized_rows_stochastic():
    model = init_model(7, 3, 2, rng_seed=0)
    assert model.transition.shape == (3, 7, 7)
    np.testing.assert_allclose(model.transition.sum(axis=2), 1.0, atol=1e-12)
    assert model.rank == 2
    np.testing.assert_allclose(zero_model(4, 2, 3).transition, 0.25)


def test_init_seeded():
    a, b = init_model(5, 2, 3, rng_seed=9), init_model(5, 2, 3, rng_seed=9)
    np.testing.assert_array_equal(a.logits_d, b.logits_d)
    assert np.all(np.abs(a.logits_k) <= 1.0)


@pytest.mark.parametrize("method", ["mle", "ve"])
def test_gradients_match_finite_differences(toy_data, method):
    _, ds, vset = toy_data
    model = init_model(5, 2, 3, rng_seed=2, gamma=0.9)
    model.reward = fit_reward(ds)
    obj = MleObjective(ds) if method == "mle" else VeObjective(ds, vset)
    _, grads = obj.loss_and_grad(model)

    numeric = finite_difference_grad(lambda: obj.loss_and_grad(model)[0], model.params())
    assert max_relative_error(grads, numeric) < 1e-4


def test_ve_loss_additive_over_columns(toy_data):
    _, ds, vset = toy_data
    model = init_model(5, 2, 3, rng_seed=3, gamma=0.9)
    model.reward = fit_reward(ds)
    whole, _ = VeObjective(ds, vset).loss_and_grad(model)
    parts = sum(VeObjective(ds, FunctionSet(vset.basis[:, [j]], POLYTOPE)).loss_and_grad(model)[0]
                for j in range(3))
    assert whole == pytest.approx(parts, rel=1e-12)


def test_ve_loss_zero_at_empirical_model(toy_data):
    _, ds, vset = toy_data
    # full-rank model that reproduces the empirical rows: D = P_hat, K = I
    logits_d = np.log(np.clip(ds.empirical_transition, 1e-300, None))
    logits_k = np.broadcast_to(np.where(np.eye(5) > 0, 0.0, -800.0), (2, 5, 5)).copy()
    model = FactorizedModel(logits_d, logits_k, fit_reward(ds), 0.9)
    loss, _ = VeObjective(ds, vset).loss_and_grad(model)
    assert loss < 1e-20


def test_mle_loss_matches_dense(toy_data):
    _, ds, _ = toy_data
    model = init_model(5, 2, 2, rng_seed=5)
    loss, _ = MleObjective(ds).loss_and_grad(model)
    dense = -np.sum(ds.counts * np.log(model.transition))
    assert loss == pytest.approx(dense, rel=1e-12)


def test_mle_ignores_unvisited_rows():
    ds = TransitionDataset([0, 0], [0, 0], [0.0, 0.0], [1, 1], n_states=3, n_actions=2)
    model = init_model(3, 2, 2, rng_seed=0)
    _, (gd, _) = MleObjective(ds).loss_and_grad(model)
    assert np.all(gd[1] == 0) and np.all(gd[0, 1:] == 0)


def test_training_decreases_loss(toy_data):
    _, ds, vset = toy_data
    for obj in (MleObjective(ds), VeObjective(ds, vset)):
        model = init_model(5, 2, 3, rng_seed=0, gamma=0.9)
        model.reward = fit_reward(ds)
        report = train(model, obj, Adam(lr=1e-2), max_steps=300)
        assert report.final_loss < report.initial_loss
        assert report.steps == 300
        np.testing.assert_allclose(model.transition.sum(axis=2), 1.0, atol=1e-10)


def test_training_rejects_nan(toy_data):
    _, ds, _ = toy_data

    class Broken:
        def loss_and_grad(self, model):
            return float("nan"), [np.zeros_like(p) for p in model.params()]

    with pytest.raises(TrainingError):
        train(init_model(5, 2, 2, rng_seed=0), Broken(), max_steps=5)


def test_full_rank_mle_recovers_empirical_rows():
    mdp = build_toy_mdp()
    ds = collect_dataset(mdp, 20_000, rng_seed=0)
    learner = ModelLearner(method="mle", rank=3, lr=5e-2, max_steps=3000, random_state=0).fit(ds)
    visited = ds.visited.T
    np.testing.assert_allclose(learner.model_.transition[visited], ds.empirical_transition[visited], atol=0.01)


def test_learner_estimator_api(toy_data):
    _, ds, vset = toy_data
    learner = ModelLearner(method="ve", rank=2, lr=1e-2, max_steps=50, random_state=0)
    assert clone(learner).get_params() == learner.get_params()
    with pytest.raises(ValueError):
        ModelLearner(method="ve").fit(ds)
    learner.fit(ds, vset)
    proba = learner.predict_proba([[0, 1], [4, 0]])
    np.testing.assert_allclose(proba.sum(axis=1), 1.0)
    np.testing.assert_allclose(proba[0], learner.model_.transition[1, 0])
    assert learner.score(ds, vset) == pytest.approx(-learner.report_.final_loss)
    with pytest.raises(ValueError):
        ModelLearner(method="bogus").fit(ds)


def test_checkpoint_roundtrip_bit_exact(tmp_path, toy_data):
    _, ds, vset = toy_data
    model = init_model(5, 2, 3, rng_seed=1, gamma=0.9)
    model.reward = fit_reward(ds)
    train(model, VeObjective(ds, vset), Adam(lr=1e-2), max_steps=20)
    save_model(model, tmp_path / "ck", method="ve")
    back = load_model(tmp_path / "ck")
    np.testing.assert_array_equal(back.logits_d, model.logits_d)
    np.testing.assert_array_equal(back.logits_k, model.logits_k)
    np.testing.assert_array_equal(back.reward, model.reward)
    assert back.gamma == model.gamma
    assert sorted(p.name for p in (tmp_path / "ck").iterdir())[:2] == ["F_D_0.csv", "F_D_1.csv"]
