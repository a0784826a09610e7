"""Filesystem persistence for training runs.

Each run owns one directory containing the full configuration, an
append-only metrics journal (one JSON record per episode), the best design,
and network checkpoints. Status transitions are journaled so a restarted
service can list every run it ever finished.
"""

from __future__ import annotations

import json
import os
import time
import uuid
from pathlib import Path

import numpy as np

from .agent import Hyperparameters, NetworkBundle, RunResult
from .errors import ConfigurationError, InvalidInputError
from .materials import MaterialCatalog
from .nn import load_checkpoint, save_checkpoint
from .rewards import RewardParams
from .tasks import TaskSpec, task_from_dict, task_to_dict

DATA_DIR_ENV = "OPTISTACK_DATA_DIR"
_NET_NAMES = ("actor", "qnet", "target_actor", "target_qnet")
STATUSES = ("queued", "running", "finished", "failed")


def _jsonable(value):
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON serializable: {type(value)}")


def default_data_dir() -> Path:
    return Path(os.environ.get(DATA_DIR_ENV, "optistack_runs"))


class RunDir:
    """Handle to one run's directory."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self.run_id = self.path.name

    # -- config ------------------------------------------------------------
    def write_config(self, task: TaskSpec, hyper: Hyperparameters,
                     reward_params: RewardParams, algo: str, extra: dict | None = None):
        doc = {
            "run_id": self.run_id,
            "algo": algo,
            "task": task_to_dict(task),
            "hyper": hyper.to_dict(),
            "reward": reward_params.to_dict(),
            "seed": hyper.seed,
        }
        if extra:
            doc.update(extra)
        (self.path / "config.json").write_text(json.dumps(doc, indent=2, default=_jsonable))

    def read_config(self) -> dict:
        return json.loads((self.path / "config.json").read_text())

    def task(self) -> TaskSpec:
        return task_from_dict(self.read_config()["task"])

    def hyper(self) -> Hyperparameters:
        return Hyperparameters.from_dict(self.read_config()["hyper"])

    def reward_params(self) -> RewardParams:
        return RewardParams.from_dict(self.read_config()["reward"])

    # -- status journal ------------------------------------------------------
    def write_status(self, status: str, **fields):
        if status not in STATUSES:
            raise InvalidInputError(f"unknown status {status!r}")
        doc = {"run_id": self.run_id, "status": status}
        doc.update(fields)
        (self.path / "status.json").write_text(json.dumps(doc, indent=2, default=_jsonable))
        with open(self.path / "journal.log", "a") as fh:
            fh.write(json.dumps({"ts": time.time(), **doc}, default=_jsonable) + "\n")

    def read_status(self) -> dict:
        p = self.path / "status.json"
        if not p.exists():
            return {"run_id": self.run_id, "status": "queued"}
        return json.loads(p.read_text())

    # -- metrics -------------------------------------------------------------
    def append_metric(self, record: dict):
        with open(self.path / "metrics.jsonl", "a") as fh:
            fh.write(json.dumps(record, default=_jsonable) + "\n")

    def read_metrics(self, after: int = -1) -> list[dict]:
        p = self.path / "metrics.jsonl"
        if not p.exists():
            return []
        out = []
        with open(p) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                if rec.get("episode", -1) > after:
                    out.append(rec)
        return out

    # -- artifacts -----------------------------------------------------------
    def save_result(self, result):
        best_doc = result.best.to_dict()
        best_doc["task_id"] = result.task_id
        best_doc["top_designs"] = [d.to_dict() for d in result.top_designs]
        (self.path / "best_design.json").write_text(
            json.dumps(best_doc, indent=2, default=_jsonable))
        for which, nets in result.checkpoint_nets().items():
            directory = self.path / which
            for name, net in nets.items():
                save_checkpoint(net, directory, name)

    def read_best(self) -> dict:
        p = self.path / "best_design.json"
        if not p.exists():
            raise ConfigurationError(f"run {self.run_id} has no best design yet")
        return json.loads(p.read_text())

    def load_bundle(self, catalog: MaterialCatalog, which: str = "best") -> NetworkBundle:
        directory = self.path / f"checkpoint_{which}"
        if not directory.exists():
            raise ConfigurationError(f"run {self.run_id} has no checkpoint_{which}")
        task = self.task()
        bundle = NetworkBundle.__new__(NetworkBundle)
        bundle.task = task
        bundle.material_ids = tuple(task.material_ids)
        bundle.ref_indexes = np.array(
            [catalog.reference_index(m) for m in task.material_ids])
        bundle.t_min = task.t_min
        bundle.t_max = task.t_max
        bundle.actor = load_checkpoint(directory, "actor")
        bundle.q_net = load_checkpoint(directory, "qnet")
        bundle.target_actor = load_checkpoint(directory, "target_actor")
        bundle.target_q = load_checkpoint(directory, "target_qnet")
        bundle.actor_opt = None
        bundle.q_opt = None
        return bundle


class RunStore:
    """Registry of run directories beneath one root."""

    def __init__(self, root: str | Path | None = None):
        self.root = Path(root) if root is not None else default_data_dir()
        self.root.mkdir(parents=True, exist_ok=True)

    def create(self, run_id: str | None = None) -> RunDir:
        run_id = run_id or uuid.uuid4().hex[:12]
        path = self.root / run_id
        if path.exists():
            raise InvalidInputError(f"run {run_id} already exists")
        path.mkdir(parents=True)
        return RunDir(path)

    def get(self, run_id: str) -> RunDir:
        path = self.root / run_id
        if not path.is_dir():
            raise InvalidInputError(f"no run named {run_id}")
        return RunDir(path)

    def list(self) -> list[dict]:
        out = []
        for child in sorted(self.root.iterdir()):
            if child.is_dir() and (child / "config.json").exists():
                out.append(RunDir(child).read_status())
        return out


def execute_run(run_dir: RunDir, task: TaskSpec, catalog: MaterialCatalog,
                reward_params: RewardParams, hyper: Hyperparameters,
                algo: str = "mpdqn", snapshot_cb=None,
                baseline_steps: int = 250, extra_config: dict | None = None):
    """Run training to completion inside ``run_dir``, journaling throughout."""
    from .agent import run_training
    from .baseline import run_discrete_dqn

    extra = dict(extra_config or {})
    if algo == "dqn_discrete":
        extra.setdefault("baseline_steps", baseline_steps)
    run_dir.write_config(task, hyper, reward_params, algo, extra=extra)
    run_dir.write_status("running", episode=0)

    def on_episode(record):
        run_dir.append_metric(record)

    try:
        if algo == "mpdqn":
            result = run_training(task, catalog, reward_params, hyper,
                                  callbacks=(on_episode,), snapshot_cb=snapshot_cb)
        elif algo == "dqn_discrete":
            result = run_discrete_dqn(
                task, catalog, reward_params, episodes=hyper.episodes,
                steps=baseline_steps, seed=hyper.seed, gamma=hyper.gamma,
                lr=hyper.lr, batch_size=hyper.batch_size, tau=hyper.tau,
                target_update_period=hyper.target_update_period,
                callbacks=(on_episode,))
        else:
            raise InvalidInputError(f"unknown algo {algo!r}")
    except Exception as exc:
        run_dir.write_status("failed", error=str(exc))
        raise
    run_dir.save_result(result)
    run_dir.write_status("finished", episode=result.episodes,
                         best_reward=result.best.reward, sim_calls=result.sim_calls,
                         wall_time_s=result.wall_time_s)
    return result
