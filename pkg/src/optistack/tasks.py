"""Design tasks: target reflectivity over a spectral grid plus constraints."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, InvalidInputError
from .optics import SpectralGrid

BUILTIN_TASK_IDS = ("task1", "task2", "task3")


@dataclass(frozen=True)
class TaskSpec:
    """One inverse-design problem.

    ``target`` holds T at every (angle, wavelength) pair in the grid's
    flattened order. ``spec_band``, when present, is a lower-bound
    reflectivity curve used for pass/fail display only.
    """

    id: str
    grid: SpectralGrid
    target: np.ndarray
    layer_budget: int
    material_ids: tuple[int, ...]
    mu: float = 0.0
    t_min: float = 1.0
    t_max: float = 150.0
    spec_band: np.ndarray | None = None

    def __post_init__(self):
        if self.layer_budget < 1:
            raise ConfigurationError(f"{self.id}: layer budget must be >= 1")
        if len(self.target) != len(self.grid):
            raise ConfigurationError(
                f"{self.id}: target length {len(self.target)} != grid size {len(self.grid)}"
            )
        if np.any(self.target < 0) or np.any(self.target > 1):
            raise ConfigurationError(f"{self.id}: target values must lie in [0, 1]")
        if self.mu < 0:
            raise ConfigurationError(f"{self.id}: mu must be >= 0")
        if not (0 < self.t_min <= self.t_max):
            raise ConfigurationError(f"{self.id}: need 0 < t_min <= t_max")
        if len(self.material_ids) < 2:
            raise ConfigurationError(f"{self.id}: need at least 2 materials")

    @property
    def n_materials(self) -> int:
        return len(self.material_ids)

    def with_mu(self, mu: float) -> "TaskSpec":
        return TaskSpec(
            id=self.id, grid=self.grid, target=self.target,
            layer_budget=self.layer_budget, material_ids=self.material_ids,
            mu=mu, t_min=self.t_min, t_max=self.t_max, spec_band=self.spec_band,
        )


def _formula_target(formula: dict, lam: np.ndarray) -> np.ndarray:
    kind = formula.get("kind")
    if kind == "linear":
        t = formula["slope"] * lam + formula["intercept"]
    elif kind == "tanh_edge":
        width = formula.get("width", 1.0)
        t = 0.5 * (1.0 - np.tanh((lam - formula["edge"]) / width))
    elif kind == "constant":
        t = np.full(lam.shape, float(formula["value"]))
    else:
        raise ConfigurationError(f"unknown target formula kind {kind!r}")
    return np.clip(t, 0.0, 1.0)


def task_from_dict(doc: dict) -> TaskSpec:
    g = doc["grid"]
    if "wavelengths" in g:
        grid = SpectralGrid(tuple(g["wavelengths"]), tuple(g.get("angles", (0.0,))))
    else:
        grid = SpectralGrid.from_ranges(
            g["lambda_start"], g["lambda_end"], g.get("lambda_step", 1.0),
            g.get("phi_start", 0.0), g.get("phi_end", 0.0), g.get("phi_step", 1.0),
        )
    lam, _ = grid.flattened()
    target_doc = doc["target"]
    if isinstance(target_doc, list):
        target = np.asarray(target_doc, dtype=float)
    else:
        target = _formula_target(target_doc, lam)
    band_doc = doc.get("spec_band")
    if band_doc is None:
        band = None
    elif isinstance(band_doc, list):
        band = np.asarray(band_doc, dtype=float)
    else:
        band = _formula_target(band_doc, lam)
    return TaskSpec(
        id=doc["id"],
        grid=grid,
        target=target,
        layer_budget=int(doc["layer_budget"]),
        material_ids=tuple(int(m) for m in doc["material_ids"]),
        mu=float(doc.get("mu", 0.0)),
        t_min=float(doc.get("t_min", 1.0)),
        t_max=float(doc.get("t_max", 150.0)),
        spec_band=band,
    )


def load_task(path: str | Path) -> TaskSpec:
    with open(path) as fh:
        return task_from_dict(json.load(fh))


def builtin_task(task_id: str) -> TaskSpec:
    if task_id not in BUILTIN_TASK_IDS:
        raise InvalidInputError(f"unknown built-in task {task_id!r}; have {BUILTIN_TASK_IDS}")
    ref = resources.files("optistack").joinpath(f"data/tasks/{task_id}.json")
    return task_from_dict(json.loads(ref.read_text()))


def resolve_task(name_or_path: str) -> TaskSpec:
    """Accepts a built-in task id or a path to a task JSON file."""
    if name_or_path in BUILTIN_TASK_IDS:
        return builtin_task(name_or_path)
    p = Path(name_or_path)
    if p.exists():
        return load_task(p)
    raise InvalidInputError(f"task {name_or_path!r} is neither a built-in id nor a file")


def task_to_dict(task: TaskSpec) -> dict:
    """Fully explicit serialization (targets as arrays) for run configs."""
    doc = {
        "id": task.id,
        "grid": {
            "wavelengths": [float(w) for w in task.grid.wavelengths],
            "angles": [float(a) for a in task.grid.angles],
        },
        "target": [float(t) for t in task.target],
        "layer_budget": task.layer_budget,
        "material_ids": list(task.material_ids),
        "mu": task.mu,
        "t_min": task.t_min,
        "t_max": task.t_max,
    }
    if task.spec_band is not None:
        doc["spec_band"] = [float(b) for b in task.spec_band]
    return doc


def task_summary(task: TaskSpec) -> dict:
    return {
        "id": task.id,
        "layer_budget": task.layer_budget,
        "material_ids": list(task.material_ids),
        "mu": task.mu,
        "t_min": task.t_min,
        "t_max": task.t_max,
        "wavelengths": [task.grid.wavelengths[0], task.grid.wavelengths[-1]],
        "angles": [task.grid.angles[0], task.grid.angles[-1]],
        "grid_size": len(task.grid),
        "has_spec_band": task.spec_band is not None,
    }
