"""Value-equivalent versus maximum-likelihood model learning for tabular RL."""

from .environments import (
    CatchIndex, GridSpec, TransitionDataset, build_catch, build_four_rooms, build_toy_mdp,
    collect_dataset, make_env,
)
from .experiment import ExperimentConfig, run_single, run_sweep
from .function_sets import FunctionSet, KMeansAggregation, kmeans_aggregation, span_probe, value_polytope_set
from .mdp import (
    ConvergenceError, TabularMdp, TabularPolicy, bellman_apply, evaluate_exact, greedy_policy,
    value_iteration,
)
from .model import (
    Adam, FactorizedModel, MleObjective, ModelLearner, TrainReport, VeObjective, fit_reward,
    init_model, load_model, save_model, train,
)
from .planning import ExperimentResult, LstdConfig, lstd_evaluate, plan_value_iteration, policy_iteration_lstd

__version__ = "0.1.0"
