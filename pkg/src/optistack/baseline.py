"""Discretized Q-learning baseline: fixed-depth stack, grid thicknesses.

The comparison algorithm operates on a pre-defined stack of exactly L layers
whose thicknesses live on a 0.1 nm grid from 0 to 150 nm. Each step mutates a
single attribute of one layer (thickness up/down one grid step, or swap the
material for one of the others), simulates the full design, and learns from
the immediate transformed reward with a standard deep Q-network update.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .agent import BestDesign, ReplayMemory, Transition, _update_top
from .errors import TrainingError
from .materials import MaterialCatalog
from .nn import AdamState, mlp_with_hidden, optimize_step, polyak_update
from .optics import CountingSimulator, Stack
from .rewards import RewardParams, objective_f, reward, unconstrained_objective
from .tasks import TaskSpec

GRID_STEP_NM = 0.1
GRID_MAX_NM = 150.0
GRID_POINTS = int(round(GRID_MAX_NM / GRID_STEP_NM)) + 1  # 0.0 .. 150.0 inclusive

BASELINE_EPSILON_DECAY = 0.997
BASELINE_EPSILON_FLOOR = 0.05


@dataclass
class DiscreteDesign:
    """Fixed-depth design: one material id and one grid index per layer."""

    material_ids: np.ndarray     # (L,) ints drawn from the task's material set
    thickness_idx: np.ndarray    # (L,) ints in [0, GRID_POINTS)

    def thicknesses_nm(self) -> np.ndarray:
        return self.thickness_idx * GRID_STEP_NM

    def stack(self) -> Stack:
        return Stack(layers=tuple(
            (int(m), float(i) * GRID_STEP_NM)
            for m, i in zip(self.material_ids, self.thickness_idx)
        ))

    def copy(self) -> "DiscreteDesign":
        return DiscreteDesign(self.material_ids.copy(), self.thickness_idx.copy())


def action_space_size(layer_budget: int, n_materials: int) -> int:
    """Per layer: thickness +/- one grid step plus |N|-1 material swaps."""
    return layer_budget * (2 + n_materials - 1)


def _encode(design: DiscreteDesign, ref_indexes: dict[int, float], t_max: float) -> np.ndarray:
    idx = np.array([ref_indexes[int(m)] for m in design.material_ids])
    return np.concatenate([idx, design.thicknesses_nm() / t_max])


def _apply_action(design: DiscreteDesign, action: int, material_ids: tuple[int, ...]) -> DiscreteDesign:
    n = len(material_ids)
    per_layer = 2 + (n - 1)
    layer, kind = divmod(action, per_layer)
    out = design.copy()
    if kind == 0:
        out.thickness_idx[layer] = min(out.thickness_idx[layer] + 1, GRID_POINTS - 1)
    elif kind == 1:
        out.thickness_idx[layer] = max(out.thickness_idx[layer] - 1, 0)
    else:
        current = int(out.material_ids[layer])
        others = [m for m in material_ids if m != current]
        out.material_ids[layer] = others[kind - 2]
    return out


@dataclass
class BaselineResult:
    task_id: str
    algo: str
    episodes: int
    steps_per_episode: int
    sim_calls: int
    best: BestDesign
    top_designs: list[BestDesign]
    metrics: list[dict]
    q_net: object
    target_q: object
    hyper: dict
    reward_params: RewardParams
    wall_time_s: float

    def checkpoint_nets(self) -> dict:
        nets = {"qnet": self.q_net, "target_qnet": self.target_q}
        return {"checkpoint_best": nets, "checkpoint_last": nets}


def run_discrete_dqn(task: TaskSpec, catalog: MaterialCatalog,
                     reward_params: RewardParams, episodes: int = 200,
                     steps: int = 250, seed: int = 0, gamma: float = 0.95,
                     lr: float = 0.001, batch_size: int = 128,
                     tau: float = 0.01, target_update_period: int = 10,
                     callbacks=()) -> BaselineResult:
    """Train the discrete baseline; one simulator call per step."""
    if callable(callbacks):
        callbacks = (callbacks,)
    rng = np.random.default_rng(seed)
    n_actions = action_space_size(task.layer_budget, task.n_materials)
    state_dim = 2 * task.layer_budget
    q_net = mlp_with_hidden(state_dim, n_actions, output_activation="identity",
                            seed=seed, rng=rng)
    target_q = q_net.copy()
    opt = AdamState(q_net, lr=lr)
    memory = ReplayMemory(capacity=5000, threshold=500, prioritized=False)
    sim = CountingSimulator(catalog)
    ref = {m: catalog.reference_index(m) for m in task.material_ids}

    # One random but fixed initial stack per run; every episode restarts from it.
    initial = DiscreteDesign(
        material_ids=rng.choice(task.material_ids, size=task.layer_budget),
        thickness_idx=rng.integers(0, GRID_POINTS, size=task.layer_budget),
    )

    best: BestDesign | None = None
    top: list[BestDesign] = []
    metrics: list[dict] = []
    started = time.perf_counter()
    epsilon = 1.0

    for e in range(episodes):
        epsilon = max(BASELINE_EPSILON_FLOOR, BASELINE_EPSILON_DECAY ** e)
        design = initial.copy()
        state = _encode(design, ref, task.t_max)
        episode_best = -np.inf
        last_reward = 0.0
        q_loss = None
        for s in range(steps):
            if rng.random() < epsilon:
                action = int(rng.integers(n_actions))
            else:
                action = int(np.argmax(q_net(state)))
            design = _apply_action(design, action, task.material_ids)
            next_state = _encode(design, ref, task.t_max)
            r_vec = sim(design.stack(), task.grid)
            f_val = objective_f(r_vec, task, design.thicknesses_nm())
            r = reward(f_val, reward_params)
            terminal = s == steps - 1
            memory.add(Transition(state, action, 0.0, r, next_state, terminal))
            state = next_state
            last_reward = r
            episode_best = max(episode_best, r)

            if best is None or r > best.reward or len(top) < 10 or r > top[-1].reward:
                candidate = BestDesign(
                    layers=tuple(design.stack().layers), reward=r,
                    unconstrained_reward=reward(unconstrained_objective(r_vec, task),
                                                reward_params),
                    objective=f_val, episode=e,
                )
                if best is None or r > best.reward:
                    best = candidate
                top = _update_top(top, candidate, 10)

            if memory.ready:
                idx, batch = memory.sample(batch_size, rng)
                q_loss = _dqn_update(q_net, target_q, opt, batch, gamma)
        if (e + 1) % target_update_period == 0:
            polyak_update(target_q, q_net, tau)

        record = {
            "episode": e,
            "epsilon": epsilon,
            "steps": steps,
            "reward": last_reward,
            "episode_best_reward": float(episode_best),
            "best_reward": best.reward,
            "q_loss": q_loss,
            "replay_size": len(memory),
            "sim_calls": sim.calls,
        }
        metrics.append(record)
        for cb in callbacks:
            cb(record)

    return BaselineResult(
        task_id=task.id, algo="dqn_discrete", episodes=episodes,
        steps_per_episode=steps, sim_calls=sim.calls, best=best,
        top_designs=top, metrics=metrics, q_net=q_net, target_q=target_q,
        hyper={"episodes": episodes, "steps": steps, "seed": seed, "gamma": gamma,
               "lr": lr, "batch_size": batch_size, "tau": tau,
               "target_update_period": target_update_period,
               "epsilon_decay": BASELINE_EPSILON_DECAY,
               "epsilon_floor": BASELINE_EPSILON_FLOOR},
        reward_params=reward_params, wall_time_s=time.perf_counter() - started,
    )


def _dqn_update(q_net, target_q, opt, batch, gamma) -> float:
    states = np.stack([t.state for t in batch])
    actions = np.array([t.action_index for t in batch])
    rewards = np.array([t.reward for t in batch])
    next_states = np.stack([t.next_state for t in batch])
    terminal = np.array([t.terminal for t in batch])
    y = rewards + gamma * target_q(next_states).max(axis=1) * (~terminal)
    out, cache = q_net.forward(states)
    rows = np.arange(len(batch))
    td = y - out[rows, actions]
    loss = float(np.sum(td ** 2))
    if not np.isfinite(loss):
        raise TrainingError(f"non-finite baseline loss {loss}")
    grad = np.zeros_like(out)
    grad[rows, actions] = -2.0 * td
    grads, _ = q_net.backward(cache, grad)
    optimize_step(q_net, grads, opt)
    return loss
