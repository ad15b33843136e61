"""Experiment pipeline: collect, fit, plan, evaluate; plus seeded sweeps."""

from __future__ import annotations

import csv
import itertools
import logging
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from functools import lru_cache

import numpy as np

from .environments import collect_dataset, make_env
from .function_sets import kmeans_aggregation, value_polytope_set
from .mdp import value_iteration
from .model import Adam, MleObjective, VeObjective, fit_reward, init_model, train
from .planning import (
    ExperimentResult,
    LstdConfig,
    evaluate_policy_mean,
    plan_value_iteration,
    policy_iteration_lstd,
)

log = logging.getLogger(__name__)

METHODS = ("mle", "ve")
STRATEGIES = ("basis", "value_polytope")
PLANNERS = ("auto", "value_iteration", "lstd_pi")


@dataclass
class ExperimentConfig:
    """Every knob of a run or sweep.

    ``lr`` and ``max_steps`` default to a desk-scale budget (see README);
    ``planner='auto'`` uses value iteration for the value-polytope strategy
    and LSTD policy iteration for the basis strategy.
    """

    env: str = "catch"
    width: int = 0
    height: int = 0
    slip_prob: float = 0.1
    goal: str = "top_right"
    methods: tuple = METHODS
    strategy: str = "value_polytope"
    ranks: tuple = (10,)
    dim_vs: tuple = (10,)
    n_samples: int = 100_000
    gamma: float = 0.99
    lr: float = 3e-2
    max_steps: int = 2000
    grad_tol: float = 1e-7
    weight_by_counts: bool = False
    seeds: tuple = tuple(range(10))
    planner: str = "auto"
    lstd_samples: int = 10_000
    lstd_iterations: int = 40
    lstd_ridge: float = 1e-6
    lstd_chains: int = 100
    expected_next_state: bool = False
    jobs: int = 0
    out: str = "results.csv"

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("methods", "ranks", "dim_vs", "seeds"):
            value = getattr(self, name)
            if isinstance(value, (str, int)):
                value = (value,)
            setattr(self, name, tuple(value))
            if not getattr(self, name):
                raise ValueError(f"{name} must not be empty")
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ValueError(f"unknown methods {sorted(bad)}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        if self.planner not in PLANNERS:
            raise ValueError(f"planner must be one of {PLANNERS}")
        if min(self.ranks) < 1 or min(self.dim_vs) < 1:
            raise ValueError("ranks and dim_v values must be positive")
        if self.n_samples < 1 or self.max_steps < 1 or self.lr <= 0:
            raise ValueError("n_samples, max_steps and lr must be positive")

    @property
    def resolved_planner(self):
        if self.planner != "auto":
            return self.planner
        return "value_iteration" if self.strategy == "value_polytope" else "lstd_pi"

    def env_kwargs(self):
        kwargs = {"gamma": self.gamma}
        if self.env in ("catch", "four_rooms"):
            if self.width:
                kwargs["width"] = self.width
            if self.height:
                kwargs["height"] = self.height
        if self.env == "four_rooms":
            kwargs["slip_prob"] = self.slip_prob
            kwargs["goal"] = self.goal
        return kwargs

    def lstd_config(self, seed):
        return LstdConfig(
            samples_per_policy=self.lstd_samples, n_iterations=self.lstd_iterations,
            ridge=self.lstd_ridge, rng_seed=seed, n_chains=self.lstd_chains,
            expected_next_state=self.expected_next_state,
        )

    # -- flat key=value serialisation --

    def to_text(self):
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{f.name}={value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text, **overrides):
        values = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"malformed config line: {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            values[key] = value
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_mapping(values)

    @classmethod
    def from_mapping(cls, values):
        kinds = {f.name: f for f in fields(cls)}
        defaults = cls()
        parsed = {}
        for key, value in values.items():
            if key not in kinds:
                raise ValueError(f"unknown config key {key!r}")
            parsed[key] = _coerce(getattr(defaults, key), value)
        return cls(**parsed)


def _coerce(default, value):
    if not isinstance(value, str):
        return value
    if isinstance(default, bool):
        if value.lower() not in ("1", "0", "true", "false", "yes", "no"):
            raise ValueError(f"not a boolean: {value!r}")
        return value.lower() in ("1", "true", "yes")
    if isinstance(default, tuple):
        items = [v.strip() for v in value.split(",") if v.strip()]
        if default and isinstance(default[0], int):
            return tuple(_int_or_range(items))
        return tuple(items)
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    return value


def _int_or_range(items):
    out = []
    for item in items:
        if ":" in item:
            lo, hi = item.split(":")
            out.extend(range(int(lo), int(hi)))
        else:
            out.append(int(item))
    return out


def _env_key(config):
    return (config.env, tuple(sorted(config.env_kwargs().items())))


@lru_cache(maxsize=8)
def _cached_env(key):
    name, kwargs = key
    return make_env(name, **dict(kwargs))


@lru_cache(maxsize=32)
def _cached_dataset(key, n_samples, seed):
    return collect_dataset(_cached_env(key), n_samples, seed)


@lru_cache(maxsize=64)
def _cached_vset(key, strategy, dim_v, seed):
    mdp = _cached_env(key)
    if strategy == "value_polytope":
        return value_polytope_set(mdp, dim_v, seed)
    if mdp.coords is None:
        raise ValueError(f"environment {mdp.name} has no state coordinates")
    return kmeans_aggregation(mdp.coords, dim_v, seed)


class StageError(RuntimeError):
    def __init__(self, stage, exc):
        super().__init__(f"[{stage}] {type(exc).__name__}: {exc}")
        self.stage = stage


def fit_model(config, method, rank, dataset, vset, seed):
    model = init_model(dataset.n_states, dataset.n_actions, rank, seed, config.gamma)
    model.reward = fit_reward(dataset)
    if method == "mle":
        objective = MleObjective(dataset)
    else:
        objective = VeObjective(dataset, vset, config.weight_by_counts)
    report = train(model, objective, Adam(lr=config.lr), config.max_steps, config.grad_tol)
    return model, report


def plan(config, model, vset, mdp, seed):
    if config.resolved_planner == "value_iteration":
        return plan_value_iteration(model)
    return policy_iteration_lstd(model, vset, config.lstd_config(seed), mdp)


def run_single(config, method=None, rank=None, dim_v=None, seed=None):
    """One (method, rank, dim_v, seed) cell of the pipeline."""
    method = config.methods[0] if method is None else method
    rank = config.ranks[0] if rank is None else rank
    dim_v = config.dim_vs[0] if dim_v is None else dim_v
    seed = config.seeds[0] if seed is None else seed
    key = _env_key(config)
    stage = "collect"
    try:
        mdp = _cached_env(key)
        dataset = _cached_dataset(key, config.n_samples, seed)
        stage = "function_set"
        vset = _cached_vset(key, config.strategy, dim_v, seed)
        stage = "train"
        model, report = fit_model(config, method, rank, dataset, vset, seed)
        stage = "plan"
        policy = plan(config, model, vset, mdp, seed)
        stage = "evaluate"
        value = evaluate_policy_mean(mdp, policy)
    except Exception as exc:
        raise StageError(stage, exc) from exc
    return ExperimentResult(
        env=config.env, method=method, strategy=config.strategy, rank=rank,
        dim_v=dim_v, seed=seed, mean_value=value, final_loss=report.final_loss,
        steps=report.steps, diagnostics={"wall_time": report.wall_time, "policy": policy},
    )


def optimal_mean_value(config):
    v, _ = value_iteration(_cached_env(_env_key(config)))
    return float(np.mean(v))


def sweep_cells(config):
    return list(itertools.product(config.methods, config.ranks, config.dim_vs, config.seeds))


def _run_cell(args):
    config, cell = args
    try:
        return run_single(config, *cell).row()
    except StageError as exc:
        method, rank, dim_v, seed = cell
        log.warning("cell %s failed: %s", cell, exc)
        return [config.env, method, config.strategy, str(rank), str(dim_v), str(seed),
                "nan", "nan", "0"]


def effective_jobs(config):
    if os.environ.get("VEQ_DETERMINISTIC") == "1":
        return 1
    return config.jobs if config.jobs > 0 else (os.cpu_count() or 1)


def run_sweep(config, out=None, summary=True):
    """Run the full grid and write result rows (in grid order) to ``out``.

    Returns the list of row lists. Seeds are grouped so each worker reuses its
    cached dataset and function set.
    """
    cells = sweep_cells(config)
    order = sorted(range(len(cells)), key=lambda i: (cells[i][3], cells[i][2], i))
    jobs = effective_jobs(config)
    tasks = [(config, cells[i]) for i in order]
    if jobs == 1:
        results = [_run_cell(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    rows = [None] * len(cells)
    for i, row in zip(order, results):
        rows[i] = row
    out = config.out if out is None else out
    if out:
        write_rows(out, rows)
        if summary:
            base, _ = os.path.splitext(out)
            write_summary(base + "_summary.csv", rows)
            write_plot_slices(base, rows)
    return rows


def write_rows(path, rows, append=False):
    exists = append and os.path.exists(path) and os.path.getsize(path) > 0
    with open(path, "a" if append else "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if not exists:
            writer.writerow(ExperimentResult.FIELDS)
        writer.writerows(rows)


def read_rows(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return list(reader)


def summarize(rows):
    """Mean and population stddev of ``mean_value`` per (method, rank, dim_v)."""
    groups = {}
    for row in rows:
        if isinstance(row, list):
            row = dict(zip(ExperimentResult.FIELDS, row))
        key = (row["env"], row["method"], row["strategy"], int(row["rank"]), int(row["dim_v"]))
        value = float(row["mean_value"])
        if not np.isnan(value):
            groups.setdefault(key, []).append(value)
    out = {}
    for key, vals in groups.items():
        out[key] = (statistics.fmean(vals), statistics.pstdev(vals), len(vals))
    return out


def write_summary(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["env", "method", "strategy", "rank", "dim_v", "mean", "sd", "n"])
        for key, (mean, sd, n) in sorted(summarize(rows).items()):
            writer.writerow(list(map(str, key)) + [f"{mean:.10g}", f"{sd:.10g}", n])


def write_plot_slices(base, rows):
    """Aggregate CSVs ``x,mean_mle,sd_mle,mean_ve,sd_ve`` for both slice kinds."""
    stats = summarize(rows)
    ranks = sorted({k[3] for k in stats})
    dims = sorted({k[4] for k in stats})
    if not stats:
        return []
    env, _, strategy, _, _ = next(iter(stats))

    def cell(method, rank, dim):
        return stats.get((env, method, strategy, rank, dim), (float("nan"), float("nan"), 0))

    paths = []
    for dim in dims:
        path = f"{base}_fixedV_dim{dim}.csv"
        _write_slice(path, [(r, cell("mle", r, dim), cell("ve", r, dim)) for r in ranks])
        paths.append(path)
    for rank in ranks:
        path = f"{base}_fixedmodel_rank{rank}.csv"
        _write_slice(path, [(d, cell("mle", rank, d), cell("ve", rank, d)) for d in dims])
        paths.append(path)
    return paths


def _write_slice(path, entries):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "mean_mle", "sd_mle", "mean_ve", "sd_ve"])
        for x, mle, ve in entries:
            writer.writerow([x, f"{mle[0]:.10g}", f"{mle[1]:.10g}", f"{ve[0]:.10g}", f"{ve[1]:.10g}"])
