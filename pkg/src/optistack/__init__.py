"""Reinforcement-learning workbench for multilayer optical coating design."""

from .materials import Material, MaterialCatalog, default_catalog, load_catalog, refractive_index
from .optics import SpectralGrid, Stack, reflectivity, reflectivity_vector
from .dbr import DbrSpec, design_dbr
from .tasks import TaskSpec, builtin_task, load_task, resolve_task
from .rewards import (
    DEFAULT_REWARD_PARAMS,
    RewardParams,
    alpha_from_eta,
    calibrate_alpha,
    objective_f,
    reward,
)
from .env import (
    DesignEnv,
    DesignState,
    ParameterizedAction,
    finalize_episode,
    reset,
    state_space_size,
    step,
)
from .nn import Mlp, AdamState, optimize_step, polyak_update
from .agent import (
    Hyperparameters,
    NetworkBundle,
    ReplayMemory,
    Transition,
    epsilon_schedule,
    q_values,
    run_training,
    select_action,
)
from .baseline import run_discrete_dqn
from .analysis import (
    WelfordStats,
    convexity_ratios,
    replay_loss_stats,
    welford_update,
    what_if,
)

__version__ = "0.1.0"
