"""Process-pool-friendly runners for the heavy acceptance criteria.

Training configurations used here stay on the documented config surface:
`bootstrap=False` regresses Q onto the backfilled step returns instead of
adding the bootstrap term on top of them (the returns already carry the
discounted future reward), and `updates_per_episode` trades wall-clock for
sample reuse. Both knobs are plain Hyperparameters fields.
"""

from __future__ import annotations

import time

from optistack.agent import Hyperparameters, run_training
from optistack.baseline import run_discrete_dqn
from optistack.materials import default_catalog
from optistack.rewards import DEFAULT_REWARD_PARAMS
from optistack.tasks import builtin_task

ACCEPTANCE_TRAIN_KW = dict(bootstrap=False, updates_per_episode=4,
                           replay_stats_every=0)


def mpdqn_run(task_id: str, seed: int, episodes: int, mu: float | None = None,
              **overrides) -> dict:
    """One full training run, reduced to the facts the criteria assert on."""
    catalog = default_catalog()
    task = builtin_task(task_id)
    if mu is not None:
        task = task.with_mu(mu)
    kw = dict(ACCEPTANCE_TRAIN_KW)
    kw.update(overrides)
    hyper = Hyperparameters(episodes=episodes, seed=seed, **kw)
    started = time.perf_counter()
    result = run_training(task, catalog, DEFAULT_REWARD_PARAMS, hyper)
    wall = time.perf_counter() - started
    return {
        "task_id": task_id,
        "seed": seed,
        "mu": task.mu,
        "episodes": episodes,
        "sim_calls": result.sim_calls,
        "wall_time_s": wall,
        "best_reward": result.best.reward,
        "best_unconstrained_reward": result.best.unconstrained_reward,
        "best_layers": [[m, t] for m, t in result.best.layers],
        "top_thicknesses": [d.total_thickness() for d in result.top_designs],
        "top_rewards": [d.reward for d in result.top_designs],
    }


def baseline_run(task_id: str, seed: int, episodes: int = 200, steps: int = 250) -> dict:
    catalog = default_catalog()
    task = builtin_task(task_id)
    started = time.perf_counter()
    result = run_discrete_dqn(task, catalog, DEFAULT_REWARD_PARAMS,
                              episodes=episodes, steps=steps, seed=seed)
    wall = time.perf_counter() - started
    return {
        "task_id": task_id,
        "seed": seed,
        "sim_calls": result.sim_calls,
        "wall_time_s": wall,
        "best_reward": result.best.reward,
    }
