"""Interpretation tools for trained value functions.

What-if analysis replays the greedy policy with a single substituted action
and compares the realized discounted return against the Q estimate for that
action. Convexity tracking asks, per step, whether the material Q values are
discretely convex when ordered by refractive index or by optical path length.
Running statistics use Welford's single-pass update.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .env import ParameterizedAction, finalize_episode
from .errors import InvalidInputError, NotReadyError
from .materials import MaterialCatalog
from .optics import Stack, reflectivity_vector
from .rewards import RewardParams, objective_f, reward
from .tasks import TaskSpec

CONVEXITY_TOL = 1e-9


@dataclass
class WelfordStats:
    """Single-pass running mean and variance."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def update(self, x: float) -> "WelfordStats":
        if not math.isfinite(x):
            raise InvalidInputError(f"non-finite observation {x}")
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)
        return self

    @property
    def variance(self) -> float:
        """Sample variance; 0 for fewer than two observations."""
        if self.count < 2:
            return 0.0
        return self.m2 / (self.count - 1)

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


def welford_update(stats: WelfordStats, x: float) -> WelfordStats:
    return stats.update(x)


def _is_convex_sequence(values: np.ndarray) -> bool:
    second = values[2:] - 2.0 * values[1:-1] + values[:-2]
    return bool(np.all(second >= -CONVEXITY_TOL))


def convexity_ratios(step_triples) -> dict:
    """Fraction of steps whose Q values are convex over each characteristic.

    ``step_triples`` is an iterable of (q_values, n_values, p_values) arrays,
    one per step, each of length |N|. A step counts as convex when the Q
    sequence sorted by the characteristic has all second differences
    >= -1e-9. With fewer than three materials convexity holds trivially; the
    result is flagged.
    """
    total = 0
    hits = {"n": 0, "p": 0, "both": 0}
    trivial = False
    for q, n_vals, p_vals in step_triples:
        q = np.asarray(q, dtype=float)
        if len(q) < 3:
            trivial = True
            convex_n = convex_p = True
        else:
            convex_n = _is_convex_sequence(q[np.argsort(n_vals, kind="stable")])
            convex_p = _is_convex_sequence(q[np.argsort(p_vals, kind="stable")])
        total += 1
        hits["n"] += convex_n
        hits["p"] += convex_p
        hits["both"] += convex_n and convex_p
    if total == 0:
        return {"ratio_n": 0.0, "ratio_p": 0.0, "ratio_both": 0.0, "trivial": trivial}
    return {
        "ratio_n": hits["n"] / total,
        "ratio_p": hits["p"] / total,
        "ratio_both": hits["both"] / total,
        "trivial": trivial,
    }


def empirical_random_convexity(n_materials: int, samples: int = 100_000,
                               rng: np.random.Generator | None = None) -> float:
    """Chance that i.i.d. uniform Q values look convex under a fixed ordering.

    This is the no-information baseline drawn as a rule on convexity charts;
    measured empirically rather than asserted combinatorially.
    """
    if n_materials < 3:
        return 1.0
    rng = rng if rng is not None else np.random.default_rng(0)
    draws = rng.random((samples, n_materials))
    second = draws[:, 2:] - 2.0 * draws[:, 1:-1] + draws[:, :-2]
    return float(np.mean(np.all(second >= -CONVEXITY_TOL, axis=1)))


@dataclass
class WhatIfRecord:
    layer: int
    action: ParameterizedAction
    q_estimate: float
    optical_path_nm: float | None
    step_return: float
    final_reward: float
    final_objective: float
    layers: tuple[tuple[int, float], ...]

    def to_dict(self) -> dict:
        return {
            "layer": self.layer,
            "action": self.action.to_dict(),
            "q_estimate": self.q_estimate,
            "optical_path_nm": self.optical_path_nm,
            "step_return": self.step_return,
            "final_reward": self.final_reward,
            "final_objective": self.final_objective,
            "layers": [[int(m), float(t)] for m, t in self.layers],
        }


def _rollout_returns(bundle, task: TaskSpec, catalog: MaterialCatalog,
                     reward_params: RewardParams, gamma: float,
                     substitute_layer=None, substitute_action=None):
    from .agent import greedy_rollout  # agent imports this module lazily as well

    env, actions = greedy_rollout(bundle, task, catalog, substitute_layer, substitute_action)
    if substitute_layer is not None and len(actions) <= substitute_layer:
        raise InvalidInputError(
            f"greedy policy terminates after {len(actions)} steps; layer "
            f"{substitute_layer} is never reached"
        )
    r_vec = reflectivity_vector(Stack(layers=env.layers()), catalog, task.grid)
    f_val = objective_f(r_vec, task, [t for _, t in env.layers()])
    final_reward = reward(f_val, reward_params)
    returns = finalize_episode(env.trace, final_reward, gamma)
    return env, actions, returns, final_reward, f_val


def what_if(bundle, task: TaskSpec, catalog: MaterialCatalog, layer: int,
            alternative: ParameterizedAction, reward_params: RewardParams,
            gamma: float = 0.95) -> WhatIfRecord:
    """Swap the greedy action at ``layer`` and report estimate vs. outcome.

    Rolls the greedy policy to ``layer``, takes ``alternative`` there, then
    resumes the greedy policy to termination; simulates the final design once
    and backfills returns. Side-effect free on the bundle.
    """
    from .agent import greedy_rollout, q_value_of

    if not (0 <= layer < task.layer_budget):
        raise InvalidInputError(f"layer {layer} outside [0, {task.layer_budget})")
    # State actually reached at `layer` under the unperturbed policy.
    probe_env, probe_actions = greedy_rollout(bundle, task, catalog)
    if len(probe_actions) <= layer:
        raise InvalidInputError(
            f"greedy policy terminates after {len(probe_actions)} steps; layer "
            f"{layer} is never reached"
        )
    state_at_layer = probe_env.trace.steps[layer].state
    q_est = q_value_of(bundle, state_at_layer, alternative)

    env, actions, returns, final_reward, f_val = _rollout_returns(
        bundle, task, catalog, reward_params, gamma, layer, alternative
    )
    if alternative.is_terminate:
        path = None
    else:
        n_real = catalog.reference_index(alternative.material_id)
        path = float(n_real * alternative.thickness_nm)
    return WhatIfRecord(
        layer=layer,
        action=alternative,
        q_estimate=q_est,
        optical_path_nm=path,
        step_return=float(returns[layer]),
        final_reward=final_reward,
        final_objective=f_val,
        layers=env.layers(),
    )


def whatif_table(bundle, task: TaskSpec, catalog: MaterialCatalog,
                 reward_params: RewardParams, gamma: float = 0.95,
                 include_terminate: bool = False) -> list[WhatIfRecord]:
    """Every (material, reached layer) substitution, row-major by material.

    Thickness for material k at layer i is the actor's proposal in the state
    the unperturbed policy reaches at step i.
    """
    from .agent import actor_thicknesses, greedy_rollout

    probe_env, probe_actions = greedy_rollout(bundle, task, catalog)
    reached = len([a for a in probe_actions if not a.is_terminate])
    records = []
    for k, mat_id in enumerate(task.material_ids):
        for layer in range(reached):
            state = probe_env.trace.steps[layer].state
            proposals = actor_thicknesses(bundle, state)
            action = ParameterizedAction.place(mat_id, float(proposals[k]))
            records.append(what_if(bundle, task, catalog, layer, action,
                                   reward_params, gamma))
    if include_terminate:
        for layer in range(reached):
            records.append(what_if(bundle, task, catalog, layer,
                                   ParameterizedAction.terminate(),
                                   reward_params, gamma))
    return records


def write_whatif_csv(records, catalog: MaterialCatalog, path: str | Path) -> None:
    """CSV mirroring the three quantities of the what-if table."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["material", "re_n", "layer", "q_estimate", "p_nm", "return"])
        for rec in records:
            if rec.action.is_terminate:
                writer.writerow(["terminate", "", rec.layer + 1,
                                 f"{rec.q_estimate:.6f}", "", f"{rec.step_return:.6f}"])
            else:
                n_real = catalog.reference_index(rec.action.material_id)
                writer.writerow([
                    rec.action.material_id, f"{n_real:.3f}", rec.layer + 1,
                    f"{rec.q_estimate:.6f}", f"{rec.optical_path_nm:.3f}",
                    f"{rec.step_return:.6f}",
                ])


def replay_loss_stats(bundle, memory, hyper) -> tuple[float, float]:
    """Mean and sample std of current squared TD errors over the whole memory.

    Recomputed from scratch under the present policy/target parameters; no
    parameters are touched.
    """
    from .agent import _taken_action_inputs, compute_targets

    batch = memory.transitions()
    if not batch:
        raise NotReadyError("replay memory is empty")
    states = np.stack([t.state for t in batch])
    a_idx = np.array([t.action_index for t in batch])
    a_t = np.array([t.thickness_norm for t in batch])
    y = compute_targets(bundle, batch, hyper)
    x = _taken_action_inputs(states, a_idx, a_t, bundle.n_materials)
    q = bundle.q_net(x)[np.arange(len(batch)), a_idx]
    losses = (y - q) ** 2
    std = float(np.std(losses, ddof=1)) if len(losses) > 1 else 0.0
    return float(np.mean(losses)), std
