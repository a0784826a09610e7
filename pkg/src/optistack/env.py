"""Episodic design environment over parameterized actions.

A state is the pair of fixed-length vectors (refractive indexes, normalized
thicknesses) with zeros in the not-yet-placed slots. Actions either place a
layer (material id plus a continuous thickness) or terminate the episode.
Transitions are deterministic; the only reward arrives at episode end and is
propagated backwards as discounted step returns.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, UsageError
from .materials import MaterialCatalog
from .tasks import TaskSpec

TERMINATE = "terminate"
PLACE = "place"


@dataclass(frozen=True)
class ParameterizedAction:
    """PLACE(material, thickness_nm) or TERMINATE."""

    kind: str
    material_id: int | None = None
    thickness_nm: float | None = None

    @staticmethod
    def place(material_id: int, thickness_nm: float) -> "ParameterizedAction":
        return ParameterizedAction(PLACE, material_id, float(thickness_nm))

    @staticmethod
    def terminate() -> "ParameterizedAction":
        return ParameterizedAction(TERMINATE)

    @property
    def is_terminate(self) -> bool:
        return self.kind == TERMINATE

    def to_dict(self) -> dict:
        if self.is_terminate:
            return {"kind": TERMINATE}
        return {"kind": PLACE, "material_id": self.material_id, "thickness_nm": self.thickness_nm}


@dataclass(frozen=True)
class DesignState:
    """Fixed 2L encoding of a partial stack: indexes then normalized thicknesses."""

    index_vec: np.ndarray
    thickness_vec: np.ndarray
    cursor: int

    def vector(self) -> np.ndarray:
        return np.concatenate([self.index_vec, self.thickness_vec])

    @property
    def budget(self) -> int:
        return len(self.index_vec)


def reset(task: TaskSpec) -> DesignState:
    """All-zero state at step 0."""
    L = task.layer_budget
    return DesignState(np.zeros(L), np.zeros(L), 0)


def _validate_action(action: ParameterizedAction, task: TaskSpec):
    if action.is_terminate:
        return
    if action.material_id not in task.material_ids:
        raise InvalidInputError(f"material {action.material_id} not in task set")
    if not (task.t_min <= action.thickness_nm <= task.t_max):
        raise InvalidInputError(
            f"thickness {action.thickness_nm} outside [{task.t_min}, {task.t_max}]"
        )


def step(
    state: DesignState,
    action: ParameterizedAction,
    task: TaskSpec,
    catalog: MaterialCatalog,
) -> tuple[DesignState, bool]:
    """Apply one action; returns (next_state, terminal)."""
    if state.cursor >= task.layer_budget:
        raise UsageError("state is already terminal (layer budget reached)")
    if action.is_terminate:
        return state, True
    _validate_action(action, task)
    idx = state.index_vec.copy()
    thick = state.thickness_vec.copy()
    idx[state.cursor] = catalog.reference_index(action.material_id)
    thick[state.cursor] = action.thickness_nm / task.t_max
    nxt = DesignState(idx, thick, state.cursor + 1)
    return nxt, nxt.cursor >= task.layer_budget


@dataclass
class EpisodeStep:
    state: DesignState
    action: ParameterizedAction
    next_state: DesignState
    terminal: bool


@dataclass
class EpisodeTrace:
    steps: list[EpisodeStep] = field(default_factory=list)
    final_reward: float | None = None
    returns: np.ndarray | None = None

    def __len__(self):
        return len(self.steps)

    @property
    def complete(self) -> bool:
        return bool(self.steps) and self.steps[-1].terminal


def finalize_episode(trace: EpisodeTrace, final_reward: float, gamma: float) -> np.ndarray:
    """Backfill discounted step returns from the single terminal reward."""
    if not trace.complete:
        raise UsageError("cannot finalize an incomplete episode")
    returns = discounted_backfill(final_reward, len(trace), gamma)
    trace.final_reward = final_reward
    trace.returns = returns
    return returns


def discounted_backfill(final_reward: float, length: int, gamma: float) -> np.ndarray:
    if length < 1:
        raise UsageError("episode must contain at least one transition")
    out = np.empty(length)
    out[-1] = final_reward
    for i in range(length - 2, -1, -1):
        out[i] = gamma * out[i + 1]
    return out


class DesignEnv:
    """Single-owner episode bookkeeping around the pure transition function."""

    def __init__(self, task: TaskSpec, catalog: MaterialCatalog):
        self.task = task
        self.catalog = catalog
        self.state = reset(task)
        self.trace = EpisodeTrace()
        self.done = False
        self._layers: list[tuple[int, float]] = []

    def reset(self) -> DesignState:
        self.state = reset(self.task)
        self.trace = EpisodeTrace()
        self.done = False
        self._layers = []
        return self.state

    def step(self, action: ParameterizedAction) -> tuple[DesignState, bool]:
        if self.done:
            raise UsageError("step() called after the episode terminated")
        nxt, terminal = step(self.state, action, self.task, self.catalog)
        self.trace.steps.append(EpisodeStep(self.state, action, nxt, terminal))
        if not action.is_terminate:
            self._layers.append((action.material_id, action.thickness_nm))
        self.state = nxt
        self.done = terminal
        return nxt, terminal

    def layers(self) -> tuple[tuple[int, float], ...]:
        return tuple(self._layers)


def state_space_size(layer_budget: int, n_thickness: int, n_materials: int) -> int:
    """Exact count of reachable designs, assuming distinct adjacent materials.

    sum over stack depths l of |T|^l * |N| * (|N| - 1)^(l-1), evaluated in
    big-integer arithmetic.
    """
    if layer_budget < 1 or n_thickness < 1:
        raise InvalidInputError("layer budget and |T| must be >= 1")
    if n_materials < 2:
        raise InvalidInputError("|N| must be >= 2")
    total = 0
    for depth in range(1, layer_budget + 1):
        total += (n_thickness ** depth) * n_materials * (n_materials - 1) ** (depth - 1)
    return total


def scientific_3sig(value: int) -> str:
    """Render a big integer as e.g. '2.24e29' (3 significant digits)."""
    if value == 0:
        return "0.00e0"
    digits = len(str(value))
    exponent = digits - 1
    mantissa = round(value / 10 ** exponent, 2)
    if mantissa >= 10:
        mantissa /= 10
        exponent += 1
    return f"{mantissa:.2f}e{exponent}"
