"""HTTP service hosting simulation, training jobs, and what-if queries.

Training executes on a single background worker thread; request handlers
exchange data with it only through the on-disk run store and immutable
parameter snapshots published after each episode, so metric reads never block
on training progress.
"""

from __future__ import annotations

import hashlib
import json
import queue
import threading
from pathlib import Path
from typing import Any

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .agent import Hyperparameters, actor_thicknesses, q_values
from .analysis import what_if, whatif_table
from .dbr import design_dbr
from .env import DesignEnv, ParameterizedAction
from .errors import InvalidInputError, OptistackError
from .materials import catalog_to_dict, default_catalog, load_catalog
from .optics import Stack, reflectivity_vector
from .rewards import (
    DEFAULT_REWARD_PARAMS,
    RewardParams,
    calibrate_alpha,
    objective_f,
    reward,
    unconstrained_objective,
)
from .runstore import RunStore, execute_run
from .tasks import BUILTIN_TASK_IDS, builtin_task, task_from_dict, task_to_dict, task_summary


class SimulateBody(BaseModel):
    task: Any
    stack: dict
    alpha: float | None = None


class DbrBody(BaseModel):
    n1: float
    n2: float
    band_edge: float
    periods: int = 4


class RunBody(BaseModel):
    task: Any
    episodes: int = 1000
    seed: int = 0
    algo: str = "mpdqn"
    mu: float | None = None
    alpha: float | None = None
    calibrate: bool = False
    calibration_samples: int = 1000
    steps: int = 250
    replay_stats_every: int = 25
    updates_per_episode: int = 1
    bootstrap: bool = True
    forbid_repeat_materials: bool = False
    run_id: str | None = None


class WhatIfBody(BaseModel):
    run_id: str
    layer: int | None = None
    material: int | None = None
    thickness: float | None = None
    terminate: bool = False
    table: bool = False
    include_terminate: bool = False
    checkpoint: str = "best"


class QValuesBody(BaseModel):
    run_id: str
    layers: list[list[float]] = []
    checkpoint: str = "best"


class TrainingWorker(threading.Thread):
    """Owns all mutable training state; one job at a time."""

    def __init__(self, store: RunStore, catalog, snapshots, snapshots_lock):
        super().__init__(daemon=True)
        self.store = store
        self.catalog = catalog
        self.snapshots = snapshots
        self.snapshots_lock = snapshots_lock
        self.jobs: queue.Queue = queue.Queue()

    def submit(self, job: dict):
        self.jobs.put(job)

    def run(self):
        while True:
            job = self.jobs.get()
            if job is None:
                return
            run_dir = self.store.get(job["run_id"])

            def publish(bundle, episode, run_id=job["run_id"]):
                snap = bundle.snapshot()
                with self.snapshots_lock:
                    self.snapshots[run_id] = (episode, snap)

            try:
                execute_run(run_dir, job["task"], self.catalog, job["reward_params"],
                            job["hyper"], algo=job["algo"], snapshot_cb=publish,
                            baseline_steps=job.get("baseline_steps", 250))
            except Exception:
                pass  # status journaled as failed by execute_run


def _resolve_task_doc(doc, mu=None):
    if isinstance(doc, str):
        task = builtin_task(doc)
    elif isinstance(doc, dict):
        task = task_from_dict(doc)
    else:
        raise InvalidInputError("task must be a built-in id or an inline task object")
    if mu is not None:
        task = task.with_mu(mu)
    return task


def create_app(data_dir=None, catalog_path=None, start_worker: bool = True) -> FastAPI:
    app = FastAPI(title="optistack", version="0.1.0")
    catalog = load_catalog(catalog_path) if catalog_path else default_catalog()
    store = RunStore(data_dir)
    snapshots: dict[str, tuple] = {}
    snapshots_lock = threading.Lock()
    worker = TrainingWorker(store, catalog, snapshots, snapshots_lock)
    if start_worker:
        worker.start()
    sim_cache: dict[str, list[float]] = {}

    app.state.store = store
    app.state.catalog = catalog
    app.state.worker = worker
    app.state.snapshots = snapshots

    @app.exception_handler(OptistackError)
    async def domain_error(_, exc: OptistackError):
        return JSONResponse(status_code=400,
                            content={"error": type(exc).__name__, "detail": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def validation_error(_, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"error": "ValidationError", "detail": exc.errors()})

    @app.get("/api/tasks")
    def list_tasks():
        out = []
        for task_id in BUILTIN_TASK_IDS:
            task = builtin_task(task_id)
            doc = task_summary(task)
            doc.update(task_to_dict(task))
            out.append(doc)
        return out

    @app.get("/api/materials")
    def materials():
        return catalog_to_dict(catalog)

    @app.post("/api/simulate")
    def simulate(body: SimulateBody):
        task = _resolve_task_doc(body.task)
        stack = Stack.from_dict(body.stack)
        key = hashlib.sha256(json.dumps(
            [list(task.grid.wavelengths), list(task.grid.angles), stack.to_dict()],
            sort_keys=True).encode()).hexdigest()
        if key in sim_cache:
            r_list = sim_cache[key]
        else:
            r_list = [float(v) for v in reflectivity_vector(stack, catalog, task.grid)]
            sim_cache[key] = r_list
        r_vec = np.asarray(r_list)
        f_val = objective_f(r_vec, task, [t for _, t in stack.layers])
        f_unc = unconstrained_objective(r_vec, task)
        params = RewardParams(alpha=body.alpha) if body.alpha else DEFAULT_REWARD_PARAMS
        return {
            "reflectivity": r_list,
            "objective": f_val,
            "unconstrained_objective": f_unc,
            "reward": reward(f_val, params),
            "unconstrained_reward": reward(f_unc, params),
            "total_thickness_nm": stack.total_thickness(),
        }

    @app.post("/api/dbr")
    def dbr(body: DbrBody):
        spec, stack = design_dbr(body.n1, body.n2, body.band_edge, body.periods, catalog)
        doc = spec.to_dict()
        doc["stack"] = stack.to_dict()
        return doc

    @app.post("/api/runs")
    def start_run(body: RunBody):
        task = _resolve_task_doc(body.task, mu=body.mu)
        if body.calibrate:
            params = calibrate_alpha(task, catalog, sample_count=body.calibration_samples,
                                     rng_seed=body.seed)
        elif body.alpha:
            params = RewardParams(alpha=body.alpha)
        else:
            params = DEFAULT_REWARD_PARAMS
        hyper = Hyperparameters(
            episodes=body.episodes, seed=body.seed,
            replay_stats_every=body.replay_stats_every,
            updates_per_episode=body.updates_per_episode,
            bootstrap=body.bootstrap,
            forbid_repeat_materials=body.forbid_repeat_materials,
        )
        run_dir = store.create(body.run_id)
        run_dir.write_config(task, hyper, params, body.algo)
        run_dir.write_status("queued")
        worker.submit({"run_id": run_dir.run_id, "task": task, "hyper": hyper,
                       "reward_params": params, "algo": body.algo,
                       "baseline_steps": body.steps})
        return {"run_id": run_dir.run_id, "status": "queued"}

    @app.get("/api/runs")
    def list_runs():
        return store.list()

    def _run_dir(run_id: str):
        try:
            return store.get(run_id)
        except InvalidInputError:
            raise HTTPException(status_code=404,
                                detail={"error": "NotFound", "run_id": run_id})

    @app.get("/api/runs/{run_id}")
    def run_detail(run_id: str):
        run_dir = _run_dir(run_id)
        doc = run_dir.read_status()
        config = run_dir.read_config()
        doc["algo"] = config.get("algo")
        doc["task_id"] = config.get("task", {}).get("id")
        doc["episodes"] = config.get("hyper", {}).get("episodes")
        doc["seed"] = config.get("seed")
        doc["alpha"] = config.get("reward", {}).get("alpha")
        return doc

    @app.get("/api/runs/{run_id}/metrics")
    def run_metrics(run_id: str, after: int = -1):
        run_dir = _run_dir(run_id)
        records = run_dir.read_metrics(after=after)
        cursor = records[-1]["episode"] if records else after
        return {"run_id": run_id, "after": after, "cursor": cursor, "records": records}

    @app.get("/api/runs/{run_id}/best")
    def run_best(run_id: str):
        run_dir = _run_dir(run_id)
        return run_dir.read_best()

    def _bundle_for(run_id: str, checkpoint: str):
        run_dir = _run_dir(run_id)
        status = run_dir.read_status().get("status")
        if status == "finished":
            return run_dir.load_bundle(catalog, which=checkpoint), run_dir
        with snapshots_lock:
            snap = snapshots.get(run_id)
        if snap is None:
            raise HTTPException(status_code=409, detail={
                "error": "NotReady", "detail": f"run {run_id} has no snapshot yet"})
        return snap[1], run_dir

    @app.post("/api/whatif")
    def whatif(body: WhatIfBody):
        bundle, run_dir = _bundle_for(body.run_id, body.checkpoint)
        task = run_dir.task()
        params = run_dir.reward_params()
        gamma = run_dir.hyper().gamma
        if body.table:
            records = whatif_table(bundle, task, catalog, params, gamma,
                                   include_terminate=body.include_terminate)
            return {"run_id": body.run_id,
                    "material_ids": list(task.material_ids),
                    "layer_budget": task.layer_budget,
                    "records": [r.to_dict() for r in records]}
        if body.layer is None:
            raise InvalidInputError("layer is required unless table=true")
        if body.terminate:
            action = ParameterizedAction.terminate()
        else:
            if body.material is None or body.thickness is None:
                raise InvalidInputError("material and thickness are required for a place action")
            action = ParameterizedAction.place(body.material, body.thickness)
        record = what_if(bundle, task, catalog, body.layer, action, params, gamma)
        return record.to_dict()

    @app.post("/api/qvalues")
    def qvalues(body: QValuesBody):
        bundle, run_dir = _bundle_for(body.run_id, body.checkpoint)
        task = run_dir.task()
        env = DesignEnv(task, catalog)
        state = env.reset()
        for mat, t in body.layers:
            state, terminal = env.step(ParameterizedAction.place(int(mat), float(t)))
            if terminal:
                raise InvalidInputError("state is terminal; no further action applies")
        proposals = actor_thicknesses(bundle, state)
        q_vec = q_values(bundle, state, proposals)
        return {
            "run_id": body.run_id,
            "material_ids": list(task.material_ids),
            "actor_thicknesses_nm": [float(t) for t in proposals],
            "q_values": [float(q) for q in q_vec],
            "cursor": env.state.cursor,
        }

    webui = Path(__file__).parent / "webui"
    if (webui / "index.html").exists():
        app.mount("/", StaticFiles(directory=webui, html=True), name="ui")
    else:
        @app.get("/")
        def root():
            return {"service": "optistack", "ui": "not built",
                    "endpoints": "/api/tasks /api/materials /api/simulate /api/dbr "
                                 "/api/runs /api/whatif /api/qvalues"}

    return app
