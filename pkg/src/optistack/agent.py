"""Parameterized-action Q-learner with a multi-pass value network.

Two networks cooperate: an actor proposes one thickness per material for the
current state, and a value network scores every (material, proposed
thickness) pair plus the terminate option. The value network sees the state
concatenated with a material-slot thickness vector; each Q estimate comes
from a separate pass in which only its own material's slot is populated, so
Q_k cannot leak information from proposals j != k.

Training follows the episodic loop: epsilon-greedy rollouts, a single
simulator call per episode, discounted backfill of the terminal reward,
loss-prioritized replay, and soft target-network updates.
"""

from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass, field, asdict

import numpy as np

from .env import (
    DesignEnv,
    ParameterizedAction,
    finalize_episode,
)
from .errors import InvalidInputError, NotReadyError, TrainingError, UsageError
from .materials import MaterialCatalog
from .nn import AdamState, Mlp, mlp_with_hidden, optimize_step, polyak_update
from .optics import CountingSimulator, Stack
from .rewards import RewardParams, objective_f, reward, unconstrained_objective
from .tasks import TaskSpec


@dataclass
class Hyperparameters:
    """Training configuration; defaults follow the reference setup."""

    episodes: int = 10_000
    gamma: float = 0.95
    lr: float = 0.001
    batch_size: int = 128
    tau: float = 0.01
    target_update_period: int = 10
    epsilon_decay: float = 0.997
    epsilon_final: float | None = None  # default: solve (1 - eps)^L = 0.3
    replay_capacity: int = 5000
    replay_threshold: int = 500
    seed: int = 0
    updates_per_episode: int = 1
    bootstrap: bool = True
    forbid_repeat_materials: bool = False
    prioritized_replay: bool = True
    running_reward_window: int = 100
    replay_stats_every: int = 25  # 0 disables the replay-wide loss recomputation
    top_k: int = 10
    # Floor on the squash-head derivative inside the actor ascent; lets a
    # proposal pinned against a thickness bound come back once the value
    # landscape turns. 0 restores the exact gradient.
    actor_saturation_floor: float = 0.0

    def __post_init__(self):
        if not (0 <= self.gamma <= 1):
            raise InvalidInputError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.lr <= 0 or self.batch_size < 1 or self.episodes < 0:
            raise InvalidInputError("lr must be > 0, batch_size >= 1, episodes >= 0")
        if not (0 <= self.tau <= 1):
            raise InvalidInputError(f"tau must lie in [0, 1], got {self.tau}")
        if not (0 < self.epsilon_decay <= 1):
            raise InvalidInputError(f"epsilon decay must lie in (0, 1], got {self.epsilon_decay}")
        if self.replay_threshold > self.replay_capacity:
            raise InvalidInputError("replay threshold cannot exceed capacity")

    def resolved_epsilon_final(self, layer_budget: int) -> float:
        if self.epsilon_final is not None:
            return self.epsilon_final
        return default_epsilon_final(layer_budget)

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(doc: dict) -> "Hyperparameters":
        known = {f for f in Hyperparameters.__dataclass_fields__}
        return Hyperparameters(**{k: v for k, v in doc.items() if k in known})


def default_epsilon_final(layer_budget: int) -> float:
    """Floor such that a fully greedy episode happens ~3 times in 10."""
    return 1.0 - 0.3 ** (1.0 / layer_budget)


def epsilon_schedule(episode: int, layer_budget: int, decay: float = 0.997,
                     epsilon_final: float | None = None) -> float:
    if episode < 0:
        raise InvalidInputError(f"episode must be >= 0, got {episode}")
    floor = default_epsilon_final(layer_budget) if epsilon_final is None else epsilon_final
    return max(floor, decay ** episode)


@dataclass
class Transition:
    """One replay entry; the action is stored network-ready.

    ``action_index`` is the position within the task's material list, or
    n_materials for terminate; ``thickness_norm`` is t / t_max (0 for
    terminate). ``reward`` is the backfilled discounted step return.
    """

    state: np.ndarray
    action_index: int
    thickness_norm: float
    reward: float
    next_state: np.ndarray
    terminal: bool
    last_loss: float = 0.0


class ReplayMemory:
    """FIFO ring buffer with loss-softmax prioritized sampling."""

    def __init__(self, capacity: int = 5000, threshold: int = 500, prioritized: bool = True):
        if threshold > capacity:
            raise InvalidInputError("threshold cannot exceed capacity")
        self.capacity = capacity
        self.threshold = threshold
        self.prioritized = prioritized
        self._buffer: list[Transition] = []
        self._losses = np.zeros(capacity)  # parallel to _buffer for fast softmax
        self._cursor = 0

    def __len__(self):
        return len(self._buffer)

    @property
    def ready(self) -> bool:
        return len(self._buffer) >= self.threshold

    def add(self, transition: Transition) -> None:
        # Unseen transitions take the current maximum priority so they are
        # sampled at least as eagerly as the worst-estimated existing one.
        if self._buffer:
            transition.last_loss = float(self._losses[: len(self._buffer)].max())
        else:
            transition.last_loss = 1.0
        if len(self._buffer) < self.capacity:
            self._losses[len(self._buffer)] = transition.last_loss
            self._buffer.append(transition)
        else:
            self._buffer[self._cursor] = transition
            self._losses[self._cursor] = transition.last_loss
            self._cursor = (self._cursor + 1) % self.capacity

    def transitions(self) -> list[Transition]:
        return list(self._buffer)

    def probabilities(self) -> np.ndarray:
        """Sampling distribution: softmax of stored losses (max-subtracted)."""
        losses = self._losses[: len(self._buffer)]
        if not self.prioritized:
            return np.full(len(losses), 1.0 / len(losses))
        ex = np.exp(losses - losses.max())
        return ex / ex.sum()

    def sample(self, batch_size: int, rng: np.random.Generator):
        """Draw ``batch_size`` transitions with replacement; (indices, batch)."""
        if not self.ready:
            raise NotReadyError(
                f"replay holds {len(self._buffer)} transitions; needs {self.threshold}"
            )
        idx = rng.choice(len(self._buffer), size=batch_size, replace=True,
                         p=self.probabilities())
        return idx, [self._buffer[i] for i in idx]

    def update_losses(self, indices, losses) -> None:
        for i, loss in zip(indices, losses):
            self._buffer[int(i)].last_loss = float(loss)
            self._losses[int(i)] = float(loss)


def sample_batch(memory: ReplayMemory, batch_size: int, rng: np.random.Generator):
    return memory.sample(batch_size, rng)


class NetworkBundle:
    """Actor + value network and their target copies for one task."""

    def __init__(self, task: TaskSpec, catalog: MaterialCatalog,
                 lr: float = 0.001, rng: np.random.Generator | None = None, seed: int = 0):
        rng = rng if rng is not None else np.random.default_rng(seed)
        self.task = task
        self.material_ids = tuple(task.material_ids)
        self.ref_indexes = np.array([catalog.reference_index(m) for m in self.material_ids])
        self.t_min = task.t_min
        self.t_max = task.t_max
        n = task.n_materials
        state_dim = 2 * task.layer_budget
        self.actor = mlp_with_hidden(state_dim, n, output_activation="sigmoid",
                                     seed=seed, rng=rng)
        self.q_net = mlp_with_hidden(state_dim + n, n + 1, output_activation="identity",
                                     seed=seed, rng=rng)
        self.target_actor = self.actor.copy()
        self.target_q = self.q_net.copy()
        self.actor_opt = AdamState(self.actor, lr=lr)
        self.q_opt = AdamState(self.q_net, lr=lr)

    @property
    def n_materials(self) -> int:
        return len(self.material_ids)

    def thickness_nm_from_unit(self, unit: np.ndarray) -> np.ndarray:
        return self.t_min + (self.t_max - self.t_min) * unit

    def snapshot(self) -> "NetworkBundle":
        clone = NetworkBundle.__new__(NetworkBundle)
        clone.task = self.task
        clone.material_ids = self.material_ids
        clone.ref_indexes = self.ref_indexes.copy()
        clone.t_min = self.t_min
        clone.t_max = self.t_max
        clone.actor = self.actor.copy()
        clone.q_net = self.q_net.copy()
        clone.target_actor = self.target_actor.copy()
        clone.target_q = self.target_q.copy()
        clone.actor_opt = None
        clone.q_opt = None
        return clone

    def update_targets(self, tau: float) -> None:
        polyak_update(self.target_actor, self.actor, tau)
        polyak_update(self.target_q, self.q_net, tau)


def _multipass_inputs(states: np.ndarray, t_norm: np.ndarray) -> np.ndarray:
    """All (N+1) value-network passes per state: one-hot thickness slots, then zeros."""
    b, n = t_norm.shape
    rep = np.repeat(states, n + 1, axis=0)
    params = np.zeros((b * (n + 1), n))
    rows = np.arange(b * (n + 1))
    cols = rows % (n + 1)
    place = cols < n
    params[rows[place], cols[place]] = t_norm[rows[place] // (n + 1), cols[place]]
    return np.concatenate([rep, params], axis=1)


def _multipass_q(net: Mlp, states: np.ndarray, t_norm: np.ndarray) -> np.ndarray:
    """(B, N+1) Q matrix: entry k read from the pass that carries slot k."""
    b, n = t_norm.shape
    out = net(_multipass_inputs(states, t_norm))
    rows = np.arange(b * (n + 1))
    return out[rows, rows % (n + 1)].reshape(b, n + 1)


def _taken_action_inputs(states: np.ndarray, action_index: np.ndarray,
                         t_norm: np.ndarray, n_materials: int) -> np.ndarray:
    b = states.shape[0]
    params = np.zeros((b, n_materials))
    place = action_index < n_materials
    params[np.where(place)[0], action_index[place]] = t_norm[place]
    return np.concatenate([states, params], axis=1)


def actor_thicknesses(bundle: NetworkBundle, state, use_target: bool = False) -> np.ndarray:
    """Proposed thickness (nm) for each material, were it placed next."""
    vec = state.vector() if hasattr(state, "vector") else np.asarray(state, dtype=float)
    net = bundle.target_actor if use_target else bundle.actor
    return bundle.thickness_nm_from_unit(net(vec))


def q_values(bundle: NetworkBundle, state, thicknesses_nm, use_target: bool = False) -> np.ndarray:
    """Q estimates for the N place actions (at the given thicknesses) plus terminate."""
    vec = state.vector() if hasattr(state, "vector") else np.asarray(state, dtype=float)
    t_norm = np.asarray(thicknesses_nm, dtype=float) / bundle.t_max
    if t_norm.shape != (bundle.n_materials,):
        raise InvalidInputError(f"need one thickness per material, got {t_norm.shape}")
    net = bundle.target_q if use_target else bundle.q_net
    return _multipass_q(net, vec[None, :], t_norm[None, :])[0]


def q_value_of(bundle: NetworkBundle, state, action: ParameterizedAction) -> float:
    """Q estimate of one concrete action (its own thickness, not the actor's)."""
    vec = state.vector() if hasattr(state, "vector") else np.asarray(state, dtype=float)
    n = bundle.n_materials
    params = np.zeros(n)
    if action.is_terminate:
        out_index = n
    else:
        out_index = bundle.material_ids.index(action.material_id)
        params[out_index] = action.thickness_nm / bundle.t_max
    out = bundle.q_net(np.concatenate([vec, params]))
    return float(out[out_index])


def select_action(bundle: NetworkBundle, state, epsilon: float, rng: np.random.Generator,
                  qvals: np.ndarray | None = None, thicknesses: np.ndarray | None = None,
                  forbidden_index: int | None = None) -> ParameterizedAction:
    """Epsilon-greedy selection over the N+1 discrete options.

    Random branch: uniform over the allowed options, uniform thickness for a
    place. Greedy branch: argmax of the Q vector, the place thickness being
    the actor's proposal; ties resolve to the lowest index.
    """
    if not (0 <= epsilon <= 1):
        raise InvalidInputError(f"epsilon must lie in [0, 1], got {epsilon}")
    n = bundle.n_materials
    if rng.random() < epsilon:
        options = [k for k in range(n + 1) if k != forbidden_index]
        k = int(options[rng.integers(len(options))])
        if k == n:
            return ParameterizedAction.terminate()
        return ParameterizedAction.place(
            bundle.material_ids[k], rng.uniform(bundle.t_min, bundle.t_max)
        )
    th = actor_thicknesses(bundle, state) if thicknesses is None else thicknesses
    q = q_values(bundle, state, th) if qvals is None else qvals
    if forbidden_index is not None:
        q = q.copy()
        q[forbidden_index] = -np.inf
    k = int(np.argmax(q))
    if k == n:
        return ParameterizedAction.terminate()
    return ParameterizedAction.place(bundle.material_ids[k], float(th[k]))


def encode_action(action: ParameterizedAction, task: TaskSpec) -> tuple[int, float]:
    if action.is_terminate:
        return task.n_materials, 0.0
    return task.material_ids.index(action.material_id), action.thickness_nm / task.t_max


def compute_targets(bundle: NetworkBundle, batch: list[Transition], hyper: Hyperparameters):
    """Bellman targets y from the target networks; terminal next-states do not
    bootstrap (they admit no further action)."""
    rewards = np.array([t.reward for t in batch])
    if not hyper.bootstrap:
        return rewards
    terminal = np.array([t.terminal for t in batch])
    if terminal.all():
        return rewards
    next_states = np.stack([t.next_state for t in batch])
    unit = bundle.target_actor(next_states)
    t_norm = bundle.thickness_nm_from_unit(unit) / bundle.t_max
    q_next = _multipass_q(bundle.target_q, next_states, t_norm)
    return rewards + hyper.gamma * q_next.max(axis=1) * (~terminal)


def train_on_batch(bundle: NetworkBundle, batch: list[Transition], hyper: Hyperparameters):
    """One gradient step on the value network, then one on the actor.

    Returns (q_loss, actor_objective, refreshed_losses): the squared-error sum
    being descended, the summed Q mass the actor is ascending, and the
    per-transition squared TD errors measured immediately after this batch's
    parameter updates (same targets y; the target networks do not move here),
    which become the transitions' new replay priorities.
    """
    n = bundle.n_materials
    states = np.stack([t.state for t in batch])
    a_idx = np.array([t.action_index for t in batch])
    a_t = np.array([t.thickness_norm for t in batch])
    y = compute_targets(bundle, batch, hyper)

    # Value-network step on the taken actions.
    x = _taken_action_inputs(states, a_idx, a_t, n)
    q_out, cache = bundle.q_net.forward(x)
    rows = np.arange(len(batch))
    q_pred = q_out[rows, a_idx]
    td = y - q_pred
    q_loss = float(np.sum(td ** 2))
    if not math.isfinite(q_loss):
        raise TrainingError(f"non-finite Q loss {q_loss}")
    grad_out = np.zeros_like(q_out)
    grad_out[rows, a_idx] = -2.0 * td
    grads, _ = bundle.q_net.backward(cache, grad_out)
    optimize_step(bundle.q_net, grads, bundle.q_opt)

    # Actor step: ascend the summed Q of every material pass evaluated at the
    # actor's own proposals, with the (just updated) value network frozen.
    unit, actor_cache = bundle.actor.forward(states)
    t_norm = bundle.thickness_nm_from_unit(unit) / bundle.t_max
    b = len(batch)
    rep = np.repeat(states, n, axis=0)
    params = np.zeros((b * n, n))
    rws = np.arange(b * n)
    cols = rws % n
    params[rws, cols] = t_norm.ravel()
    xa = np.concatenate([rep, params], axis=1)
    qa, f_cache = bundle.q_net.forward(xa)
    actor_objective = float(qa[rws, cols].sum())
    if not math.isfinite(actor_objective):
        raise TrainingError(f"non-finite actor objective {actor_objective}")
    pick = np.zeros_like(qa)
    pick[rws, cols] = 1.0
    grad_in = bundle.q_net.input_gradient(f_cache, pick)
    d_tnorm = grad_in[rws, 2 * bundle.task.layer_budget + cols].reshape(b, n)
    d_unit = d_tnorm * (bundle.t_max - bundle.t_min) / bundle.t_max
    a_grads, _ = bundle.actor.backward(actor_cache, d_unit,
                                       squash_derivative_floor=hyper.actor_saturation_floor)
    neg = ([-g for g in a_grads[0]], [-g for g in a_grads[1]])
    optimize_step(bundle.actor, neg, bundle.actor_opt)

    # Refresh priorities against the post-update value network.
    q_post = bundle.q_net(x)[rows, a_idx]
    refreshed = (y - q_post) ** 2
    return q_loss, actor_objective, refreshed


@dataclass
class BestDesign:
    layers: tuple[tuple[int, float], ...]
    reward: float
    unconstrained_reward: float
    objective: float
    episode: int
    reflectivity: np.ndarray | None = None

    def total_thickness(self) -> float:
        return float(sum(t for _, t in self.layers))

    def to_dict(self) -> dict:
        doc = {
            "layers": [[int(m), float(t)] for m, t in self.layers],
            "reward": self.reward,
            "unconstrained_reward": self.unconstrained_reward,
            "objective": self.objective,
            "episode": self.episode,
            "total_thickness_nm": self.total_thickness(),
        }
        if self.reflectivity is not None:
            doc["reflectivity"] = [float(v) for v in self.reflectivity]
        return doc


@dataclass
class RunResult:
    task_id: str
    algo: str
    episodes: int
    sim_calls: int
    best: BestDesign
    top_designs: list[BestDesign]
    metrics: list[dict]
    bundle: NetworkBundle
    best_bundle: NetworkBundle
    memory: ReplayMemory
    reward_params: RewardParams
    hyper: Hyperparameters
    wall_time_s: float

    def checkpoint_nets(self) -> dict:
        def nets(b: NetworkBundle) -> dict:
            return {"actor": b.actor, "qnet": b.q_net,
                    "target_actor": b.target_actor, "target_qnet": b.target_q}
        return {"checkpoint_best": nets(self.best_bundle),
                "checkpoint_last": nets(self.bundle)}


def _update_top(top: list[BestDesign], candidate: BestDesign, k: int) -> list[BestDesign]:
    """Keep the k best distinct designs, ranked by their (constrained) reward."""
    for i, existing in enumerate(top):
        if existing.layers == candidate.layers:
            if candidate.reward > existing.reward:
                top[i] = candidate
            break
    else:
        top.append(candidate)
    top.sort(key=lambda d: -d.reward)
    return top[:k]


def run_training(task: TaskSpec, catalog: MaterialCatalog, reward_params: RewardParams,
                 hyper: Hyperparameters, callbacks=(), snapshot_cb=None) -> RunResult:
    """Full training loop; exactly one simulator call per episode.

    ``callbacks`` receive the per-episode metric record; ``snapshot_cb``, when
    given, receives (bundle, episode) after each episode so a host can publish
    read-only parameter snapshots.
    """
    from .analysis import WelfordStats, convexity_ratios  # lazy: analysis also imports agent

    if callable(callbacks):
        callbacks = (callbacks,)
    rng = np.random.default_rng(hyper.seed)
    bundle = NetworkBundle(task, catalog, lr=hyper.lr, rng=rng, seed=hyper.seed)
    memory = ReplayMemory(hyper.replay_capacity, hyper.replay_threshold,
                          hyper.prioritized_replay)
    env = DesignEnv(task, catalog)
    sim = CountingSimulator(catalog)
    eps_final = hyper.resolved_epsilon_final(task.layer_budget)
    n = task.n_materials
    best: BestDesign | None = None
    best_bundle = None
    top: list[BestDesign] = []
    recent = deque(maxlen=hyper.running_reward_window)
    welford = {key: WelfordStats() for key in ("n", "p", "both")}
    metrics: list[dict] = []
    started = time.perf_counter()

    for e in range(hyper.episodes):
        eps = epsilon_schedule(e, task.layer_budget, hyper.epsilon_decay, eps_final)
        state = env.reset()
        step_triples = []
        prev_index: int | None = None
        while not env.done:
            th_nm = actor_thicknesses(bundle, state)
            q_vec = q_values(bundle, state, th_nm)
            forbid = prev_index if hyper.forbid_repeat_materials else None
            action = select_action(bundle, state, eps, rng, qvals=q_vec,
                                   thicknesses=th_nm, forbidden_index=forbid)
            step_triples.append((q_vec[:n], bundle.ref_indexes,
                                 bundle.ref_indexes * th_nm))
            if not action.is_terminate:
                prev_index = task.material_ids.index(action.material_id)
            state, _ = env.step(action)

        layers = env.layers()
        r_vec = sim(Stack(layers=layers), task.grid)
        f_val = objective_f(r_vec, task, [t for _, t in layers])
        f_unc = unconstrained_objective(r_vec, task)
        ep_reward = reward(f_val, reward_params)
        ep_reward_unc = reward(f_unc, reward_params)
        returns = finalize_episode(env.trace, ep_reward, hyper.gamma)
        for i, st in enumerate(env.trace.steps):
            a_idx, t_norm = encode_action(st.action, task)
            memory.add(Transition(st.state.vector(), a_idx, t_norm, float(returns[i]),
                                  st.next_state.vector(), st.terminal))

        q_loss = actor_obj = None
        training_fault = None
        if memory.ready:
            for _ in range(hyper.updates_per_episode):
                idx, batch = memory.sample(hyper.batch_size, rng)
                try:
                    q_loss, actor_obj, refreshed = train_on_batch(bundle, batch, hyper)
                except TrainingError as exc:
                    training_fault = str(exc)
                    break
                memory.update_losses(idx, refreshed)
        if (e + 1) % hyper.target_update_period == 0:
            bundle.update_targets(hyper.tau)

        if best is None or ep_reward > best.reward:
            best = BestDesign(layers, ep_reward, ep_reward_unc, f_val, e,
                              reflectivity=r_vec)
            best_bundle = bundle.snapshot()
        if len(top) < hyper.top_k or ep_reward > top[-1].reward:
            slim = BestDesign(layers, ep_reward, ep_reward_unc, f_val, e)
            top = _update_top(top, slim, hyper.top_k)

        ratios = convexity_ratios(step_triples)
        for key in ("n", "p", "both"):
            welford[key].update(ratios[f"ratio_{key}"])
        recent.append(ep_reward)

        record = {
            "episode": e,
            "epsilon": eps,
            "steps": len(env.trace),
            "reward": ep_reward,
            "unconstrained_reward": ep_reward_unc,
            "objective": f_val,
            "running_reward": float(np.mean(recent)),
            "best_reward": best.reward,
            "total_thickness_nm": float(sum(t for _, t in layers)),
            "q_loss": q_loss,
            "actor_objective": actor_obj,
            "replay_size": len(memory),
            "sim_calls": sim.calls,
            "convex_ratio_n": ratios["ratio_n"],
            "convex_ratio_p": ratios["ratio_p"],
            "convex_ratio_both": ratios["ratio_both"],
            "convex_trivial": ratios["trivial"],
            "welford_n_mean": welford["n"].mean,
            "welford_n_std": welford["n"].std,
            "welford_p_mean": welford["p"].mean,
            "welford_p_std": welford["p"].std,
            "welford_both_mean": welford["both"].mean,
            "welford_both_std": welford["both"].std,
        }
        if training_fault is not None:
            record["training_fault"] = training_fault
        if hyper.replay_stats_every and memory.ready \
                and (e + 1) % hyper.replay_stats_every == 0:
            from .analysis import replay_loss_stats
            loss_mean, loss_std = replay_loss_stats(bundle, memory, hyper)
            record["replay_loss_mean"] = loss_mean
            record["replay_loss_std"] = loss_std
        else:
            record["replay_loss_mean"] = None
            record["replay_loss_std"] = None
        metrics.append(record)
        for cb in callbacks:
            cb(record)
        if snapshot_cb is not None:
            snapshot_cb(bundle, e)

    assert sim.calls == hyper.episodes, "episode loop must simulate exactly once each"
    return RunResult(
        task_id=task.id, algo="mpdqn", episodes=hyper.episodes, sim_calls=sim.calls,
        best=best, top_designs=top, metrics=metrics, bundle=bundle,
        best_bundle=best_bundle if best_bundle is not None else bundle.snapshot(),
        memory=memory, reward_params=reward_params, hyper=hyper,
        wall_time_s=time.perf_counter() - started,
    )


def greedy_rollout(bundle: NetworkBundle, task: TaskSpec, catalog: MaterialCatalog,
                   substitute_layer: int | None = None,
                   substitute_action: ParameterizedAction | None = None):
    """Deterministic epsilon=0 rollout, optionally swapping one step's action.

    Returns (env, actions): the finished environment (trace populated) and the
    action list actually taken.
    """
    env = DesignEnv(task, catalog)
    state = env.reset()
    actions: list[ParameterizedAction] = []
    rng = np.random.default_rng(0)  # never consumed at epsilon 0
    while not env.done:
        if substitute_layer is not None and env.state.cursor == substitute_layer \
                and len(actions) == substitute_layer:
            action = substitute_action
        else:
            action = select_action(bundle, state, 0.0, rng)
        actions.append(action)
        state, _ = env.step(action)
    return env, actions
