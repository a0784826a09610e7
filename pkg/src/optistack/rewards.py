"""Constrained design objective and its exponential reward transform.

The raw objective is the negative mean squared error between achieved and
target reflectivity, minus a Lagrangian thickness penalty. Because the
squared error flattens out for near-optimal designs, rewards are computed as
r = exp(alpha * F): alpha is calibrated so the empirical mean error of random
designs maps to a chosen reward floor, which spreads near-optimal designs
over most of the (0, 1] reward range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CalibrationError, InvalidInputError
from .materials import MaterialCatalog
from .optics import Stack, reflectivity_vector
from .tasks import TaskSpec


@dataclass(frozen=True)
class RewardParams:
    """Scale factor alpha plus the calibration inputs that produced it."""

    alpha: float
    beta1: float = 0.01
    beta2: float = 1.0
    eta: float | None = None

    def __post_init__(self):
        if self.alpha <= 0:
            raise CalibrationError(f"alpha must be > 0, got {self.alpha}")
        if not (0 < self.beta1 < self.beta2):
            raise CalibrationError(f"need 0 < beta1 < beta2, got {self.beta1}, {self.beta2}")

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta1": self.beta1, "beta2": self.beta2, "eta": self.eta}

    @staticmethod
    def from_dict(doc: dict) -> "RewardParams":
        return RewardParams(
            alpha=doc["alpha"], beta1=doc.get("beta1", 0.01),
            beta2=doc.get("beta2", 1.0), eta=doc.get("eta"),
        )


# Appendix-style default: eta = 0.25 with bounds (0.01, 1.0) gives alpha = 18.42.
DEFAULT_REWARD_PARAMS = RewardParams(alpha=-math.log(0.01) / 0.25, beta1=0.01, beta2=1.0, eta=0.25)


def objective_f(reflectivity: np.ndarray, task: TaskSpec, thicknesses_nm=()) -> float:
    """Constrained objective F <= 0 for an achieved reflectivity vector.

    F = -mean((R - T)^2) - (mu / l) * sum(t_l / t_max) over the l placed
    layers; thicknesses enter normalized by t_max so the penalty is
    commensurate with the unit-scale error term. An empty stack carries no
    penalty.
    """
    r = np.asarray(reflectivity, dtype=float)
    if r.shape != task.target.shape:
        raise InvalidInputError(
            f"reflectivity length {r.shape} does not match target {task.target.shape}"
        )
    mse = float(np.mean((r - task.target) ** 2))
    t = np.asarray(thicknesses_nm, dtype=float)
    if task.mu > 0 and t.size > 0:
        penalty = task.mu * float(np.sum(t / task.t_max)) / t.size
    else:
        penalty = 0.0
    return -mse - penalty


def unconstrained_objective(reflectivity: np.ndarray, task: TaskSpec) -> float:
    """F with the thickness penalty dropped (mu = 0)."""
    r = np.asarray(reflectivity, dtype=float)
    if r.shape != task.target.shape:
        raise InvalidInputError("reflectivity length does not match target")
    return -float(np.mean((r - task.target) ** 2))


def reward(f_value: float, params: RewardParams) -> float:
    """Exponentially transformed reward r = exp(alpha * F), in (0, beta2]."""
    return float(math.exp(params.alpha * f_value))


def alpha_from_eta(eta: float, beta1: float = 0.01, beta2: float = 1.0) -> float:
    """Scale factor mapping F = -eta onto reward beta1 (and F = 0 onto beta2)."""
    if eta <= 0:
        raise CalibrationError(f"eta must be > 0, got {eta}")
    if not (0 < beta1 < beta2):
        raise CalibrationError(f"need 0 < beta1 < beta2, got {beta1}, {beta2}")
    alpha = -math.log(beta1 / beta2) / eta
    if alpha <= 0:
        raise CalibrationError(f"calibration produced alpha={alpha}; bounds must differ")
    return alpha


def random_stack(task: TaskSpec, rng: np.random.Generator) -> Stack:
    """Full-depth stack with uniform materials and uniform thicknesses."""
    ids = rng.choice(task.material_ids, size=task.layer_budget)
    ts = rng.uniform(task.t_min, task.t_max, size=task.layer_budget)
    return Stack(layers=tuple((int(m), float(t)) for m, t in zip(ids, ts)))


def calibrate_alpha(
    task: TaskSpec,
    catalog: MaterialCatalog,
    sample_count: int = 1000,
    beta1: float = 0.01,
    beta2: float = 1.0,
    rng_seed: int = 0,
) -> RewardParams:
    """Estimate eta = mean(-F) over random designs and derive alpha from it.

    Sampling is uniform over the task's materials and thickness range at full
    layer budget; the task's own mu enters the objective. Deterministic for a
    given seed.
    """
    if sample_count < 1:
        raise InvalidInputError(f"sample_count must be >= 1, got {sample_count}")
    rng = np.random.default_rng(rng_seed)
    total = 0.0
    for _ in range(sample_count):
        stack = random_stack(task, rng)
        r_vec = reflectivity_vector(stack, catalog, task.grid)
        total += -objective_f(r_vec, task, [t for _, t in stack.layers])
    eta = total / sample_count
    if eta == 0:
        raise CalibrationError("every sampled design was perfect; eta = 0 is uncalibratable")
    return RewardParams(alpha=alpha_from_eta(eta, beta1, beta2), beta1=beta1, beta2=beta2, eta=eta)
