"""Command-line driver: ``veq <subcommand> [flags]``.

Flags override keys read from ``--config`` (a flat ``key=value`` file whose
keys are the fields of :class:`veq.experiment.ExperimentConfig`).
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

import numpy as np

from . import experiment as ex
from .environments import TransitionDataset, collect_dataset
from .function_sets import FunctionSet
from .mdp import TabularPolicy, value_iteration
from .model import (
    Adam, MleObjective, VeObjective, fit_reward, init_model, load_model, read_manifest,
    save_model, train,
)
from .planning import ExperimentResult, evaluate_policy_mean, plan_value_iteration, policy_iteration_lstd
from .theory import run_all_checks

SINGLE = ("collect", "train", "plan", "eval", "run")


def _csv_list(cast):
    def parse(text):
        try:
            return tuple(cast(x) for x in text.split(",") if x.strip())
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc
    return parse


def _common(parser):
    g = parser.add_argument_group("experiment")
    g.add_argument("--config", help="flat key=value config file")
    g.add_argument("--env", choices=["catch", "four_rooms", "toy"])
    g.add_argument("--width", type=int)
    g.add_argument("--height", type=int)
    g.add_argument("--method", type=_csv_list(str), help="mle, ve or mle,ve")
    g.add_argument("--strategy", choices=ex.STRATEGIES)
    g.add_argument("--rank", type=_csv_list(int), help="comma-separated ranks")
    g.add_argument("--dim-v", type=_csv_list(int), help="comma-separated dim V values")
    g.add_argument("--samples", type=int)
    g.add_argument("--seed", type=int, help="seed base")
    g.add_argument("--seeds", type=int, help="number of seeds, seed base upward")
    g.add_argument("--gamma", type=float)
    g.add_argument("--lr", type=float)
    g.add_argument("--max-steps", type=int)
    g.add_argument("--planner", choices=ex.PLANNERS)
    g.add_argument("--jobs", type=int)
    g.add_argument("--out")


def build_parser():
    parser = argparse.ArgumentParser(prog="veq", description="Value-equivalent vs MLE model learning.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("collect", help="sample a dataset CSV from an environment")
    _common(p)

    p = sub.add_parser("train", help="fit a model to a dataset CSV")
    _common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--function-set", help="CSV basis; default builds one per --strategy")

    p = sub.add_parser("plan", help="policy CSV from a checkpoint")
    _common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--function-set")

    p = sub.add_parser("eval", help="exact mean value of a policy CSV")
    _common(p)
    p.add_argument("--policy", required=True)

    p = sub.add_parser("run", help="full pipeline for one cell")
    _common(p)

    p = sub.add_parser("sweep", help="grid over method x rank x dim_v x seed")
    _common(p)

    p = sub.add_parser("verify", help="theory checks and gradient suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quick", action="store_true", help="fewer seeds in the sampled example")
    p.add_argument("--corrupt-gradient", action="store_true", help="fault injection: perturb analytic gradients")
    return parser


def config_from_args(args):
    text = ""
    if args.config:
        with open(args.config) as fh:
            text = fh.read()
    base = ex.ExperimentConfig.from_text(text)
    overrides = {
        "env": args.env, "width": args.width, "height": args.height,
        "methods": args.method, "strategy": args.strategy, "ranks": args.rank,
        "dim_vs": args.dim_v, "n_samples": args.samples, "gamma": args.gamma,
        "lr": args.lr, "max_steps": args.max_steps, "planner": args.planner,
        "jobs": args.jobs, "out": args.out,
    }
    values = {k: v for k, v in overrides.items() if v is not None}
    if args.seed is not None or args.seeds is not None:
        start = args.seed if args.seed is not None else base.seeds[0]
        count = args.seeds if args.seeds is not None else (1 if args.command in SINGLE else len(base.seeds))
        values["seeds"] = tuple(range(start, start + count))
    merged = {**{f: getattr(base, f) for f in base.__dataclass_fields__}, **values}
    return ex.ExperimentConfig(**merged)


def _function_set(config, path, dim_v, seed):
    if path:
        return FunctionSet.from_csv(path)
    return ex._cached_vset(ex._env_key(config), config.strategy, dim_v, seed)


def cmd_collect(config, args):
    mdp = ex._cached_env(ex._env_key(config))
    ds = collect_dataset(mdp, config.n_samples, config.seeds[0])
    out = args.out or "dataset.csv"
    ds.to_csv(out)
    print(f"wrote {len(ds)} transitions to {out}")
    return 0


def cmd_train(config, args):
    mdp = ex._cached_env(ex._env_key(config))
    ds = TransitionDataset.from_csv(args.dataset, mdp.n_states, mdp.n_actions)
    method, rank, dim_v, seed = config.methods[0], config.ranks[0], config.dim_vs[0], config.seeds[0]
    model = init_model(ds.n_states, ds.n_actions, rank, seed, config.gamma)
    model.reward = fit_reward(ds)
    if method == "mle":
        objective = MleObjective(ds)
    else:
        objective = VeObjective(ds, _function_set(config, args.function_set, dim_v, seed), config.weight_by_counts)
    report = train(model, objective, Adam(lr=config.lr), config.max_steps, config.grad_tol)
    out = args.out or "checkpoint"
    save_model(model, out, env=config.env, method=method, strategy=config.strategy,
               dim_v=dim_v, seed=seed)
    with open(os.path.join(out, "train_report.txt"), "w") as fh:
        for key in ("initial_loss", "final_loss", "grad_norm", "steps", "converged", "wall_time"):
            value = getattr(report, key)
            fh.write(f"{key}={repr(value) if isinstance(value, float) else value}\n")
    print(f"final_loss={report.final_loss:.10g} steps={report.steps} grad_norm={report.grad_norm:.3g}")
    return 0


def cmd_plan(config, args):
    model = load_model(args.checkpoint)
    info = read_manifest(args.checkpoint)
    if config.resolved_planner == "value_iteration":
        policy = plan_value_iteration(model)
    else:
        seed = int(info.get("seed", config.seeds[0]))
        dim_v = int(info.get("dim_v", config.dim_vs[0]))
        mdp = ex._cached_env(ex._env_key(config))
        vset = _function_set(config, args.function_set, dim_v, seed)
        policy = policy_iteration_lstd(model, vset, config.lstd_config(seed), mdp)
    out = args.out or "policy.csv"
    write_policy(out, policy)
    print(f"wrote policy for {model.n_states} states to {out}")
    return 0


def write_policy(path, policy):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["s", "action"])
        writer.writerows(enumerate(policy.actions.tolist()))


def read_policy(path, n_states, n_actions):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if len(rows) != n_states:
        raise ValueError(f"policy has {len(rows)} rows, environment has {n_states} states")
    actions = np.empty(n_states, dtype=int)
    for row in rows:
        actions[int(row["s"])] = int(row["action"])
    return TabularPolicy.from_actions(actions, n_actions)


def cmd_eval(config, args):
    mdp = ex._cached_env(ex._env_key(config))
    policy = read_policy(args.policy, mdp.n_states, mdp.n_actions)
    value = evaluate_policy_mean(mdp, policy)
    v_star, _ = value_iteration(mdp)
    print(f"mean_value={value:.10g} optimal_mean_value={float(np.mean(v_star)):.10g}")
    return 0


def cmd_run(config, args):
    try:
        result = ex.run_single(config)
    except ex.StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    row = result.row()
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(ExperimentResult.FIELDS)
    writer.writerow(row)
    if args.out:
        ex.write_rows(args.out, [row], append=True)
    return 0


def cmd_sweep(config, args):
    rows = ex.run_sweep(config)
    failed = sum(r[6] == "nan" for r in rows)
    print(f"wrote {len(rows)} rows to {config.out} ({failed} failed)")
    stats = ex.summarize(rows)
    print(f"{'method':<6} {'rank':>5} {'dim_v':>6} {'mean':>10} {'sd':>8}")
    for (_, method, _, rank, dim_v), (mean, sd, _) in sorted(stats.items()):
        print(f"{method:<6} {rank:>5} {dim_v:>6} {mean:>10.4f} {sd:>8.4f}")
    return 1 if failed else 0


def cmd_verify(args):
    reports = run_all_checks(args.seed, corrupt_gradient=args.corrupt_gradient, quick=args.quick)
    for report in reports:
        print(report.line())
    failed = [r.name for r in reports if not r.passed]
    print(f"{len(reports) - len(failed)}/{len(reports)} checks passed")
    return 1 if failed else 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "verify":
        return cmd_verify(args)
    try:
        config = config_from_args(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    handler = {
        "collect": cmd_collect, "train": cmd_train, "plan": cmd_plan,
        "eval": cmd_eval, "run": cmd_run, "sweep": cmd_sweep,
    }[args.command]
    try:
        return handler(config, args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
