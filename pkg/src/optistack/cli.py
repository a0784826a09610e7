"""Command-line entry points: simulation, design, training, analysis, serving."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .agent import Hyperparameters
from .analysis import what_if, whatif_table, write_whatif_csv
from .dbr import design_dbr
from .env import ParameterizedAction, state_space_size, scientific_3sig
from .errors import OptistackError
from .materials import default_catalog, load_catalog
from .optics import Stack, reflectivity_vector
from .rewards import DEFAULT_REWARD_PARAMS, RewardParams, calibrate_alpha, objective_f, reward
from .runstore import RunDir, RunStore, execute_run
from .tasks import resolve_task, task_summary

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


def _load_catalog(args):
    if getattr(args, "catalog", None):
        return load_catalog(args.catalog)
    return default_catalog()


def _reward_params(args, task, catalog) -> RewardParams:
    if getattr(args, "calibrate", False):
        return calibrate_alpha(task, catalog, sample_count=args.calibration_samples,
                               rng_seed=args.seed)
    if getattr(args, "alpha", None) is not None:
        return RewardParams(alpha=args.alpha)
    return DEFAULT_REWARD_PARAMS


def cmd_simulate(args) -> int:
    catalog = _load_catalog(args)
    task = resolve_task(args.task)
    stack = Stack.from_dict(json.loads(Path(args.stack).read_text()))
    r_vec = reflectivity_vector(stack, catalog, task.grid)
    f_val = objective_f(r_vec, task, [t for _, t in stack.layers])
    params = _reward_params(args, task, catalog)
    lam, phi = task.grid.flattened()

    def emit(fh):
        writer = csv.writer(fh)
        writer.writerow(["wavelength_nm", "angle_deg", "reflectivity", "target"])
        for w, p, r, t in zip(lam, phi, r_vec, task.target):
            writer.writerow([f"{w:g}", f"{p:g}", f"{r:.9f}", f"{t:.9f}"])

    if args.out:
        with open(args.out, "w", newline="") as fh:
            emit(fh)
    else:
        emit(sys.stdout)
    print(json.dumps({"objective": f_val, "reward": reward(f_val, params)}),
          file=sys.stderr)
    return EXIT_OK


def cmd_dbr(args) -> int:
    catalog = _load_catalog(args)
    spec, stack = design_dbr(args.n1, args.n2, args.band_edge, args.periods, catalog)
    doc = spec.to_dict()
    doc["stack"] = stack.to_dict()
    text = json.dumps(doc, indent=2)
    if args.out:
        Path(args.out).write_text(json.dumps(stack.to_dict(), indent=2))
    print(text)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    catalog = _load_catalog(args)
    task = resolve_task(args.task)
    if args.mu is not None:
        task = task.with_mu(args.mu)
    params = calibrate_alpha(task, catalog, sample_count=args.samples,
                             beta1=args.beta1, beta2=args.beta2, rng_seed=args.seed)
    print(json.dumps(params.to_dict(), indent=2))
    return EXIT_OK


def cmd_state_count(args) -> int:
    count = state_space_size(args.layers, args.thicknesses, args.materials)
    print(json.dumps({"exact": str(count), "scientific": scientific_3sig(count)}))
    return EXIT_OK


def _run_common(args, algo: str) -> int:
    catalog = _load_catalog(args)
    task = resolve_task(args.task)
    if args.mu is not None:
        task = task.with_mu(args.mu)
    params = _reward_params(args, task, catalog)
    hyper = Hyperparameters(episodes=args.episodes, seed=args.seed,
                            replay_stats_every=args.replay_stats_every,
                            updates_per_episode=args.updates_per_episode,
                            bootstrap=not args.no_bootstrap,
                            forbid_repeat_materials=args.forbid_repeat_materials)
    store = RunStore(args.data_dir)
    run_dir = store.create(args.run_id)
    result = execute_run(run_dir, task, catalog, params, hyper, algo=algo,
                         baseline_steps=getattr(args, "steps", 250))
    print(json.dumps({
        "run_id": run_dir.run_id,
        "best_reward": result.best.reward,
        "best_unconstrained_reward": result.best.unconstrained_reward,
        "best_layers": [[m, t] for m, t in result.best.layers],
        "sim_calls": result.sim_calls,
        "wall_time_s": result.wall_time_s,
        "out": str(run_dir.path),
    }, indent=2))
    return EXIT_OK


def cmd_train(args) -> int:
    return _run_common(args, "mpdqn")


def cmd_baseline(args) -> int:
    return _run_common(args, "dqn_discrete")


def cmd_whatif(args) -> int:
    catalog = _load_catalog(args)
    store = RunStore(args.data_dir)
    run_dir = store.get(args.run)
    task = run_dir.task()
    bundle = run_dir.load_bundle(catalog, which=args.checkpoint)
    params = run_dir.reward_params()
    gamma = run_dir.hyper().gamma
    if args.terminate:
        action = ParameterizedAction.terminate()
    else:
        if args.material is None or args.thickness is None:
            raise OptistackError("--material and --thickness are required unless --terminate")
        action = ParameterizedAction.place(args.material, args.thickness)
    record = what_if(bundle, task, catalog, args.layer, action, params, gamma)
    print(json.dumps(record.to_dict(), indent=2))
    return EXIT_OK


def cmd_analyze(args) -> int:
    catalog = _load_catalog(args)
    store = RunStore(args.data_dir)
    run_dir = store.get(args.run)
    task = run_dir.task()
    bundle = run_dir.load_bundle(catalog, which=args.checkpoint)
    params = run_dir.reward_params()
    gamma = run_dir.hyper().gamma
    records = whatif_table(bundle, task, catalog, params, gamma,
                           include_terminate=args.include_terminate)
    out = Path(args.out) if args.out else run_dir.path / "whatif_table.csv"
    write_whatif_csv(records, catalog, out)
    metrics = run_dir.read_metrics()
    last = metrics[-1] if metrics else {}
    print(json.dumps({
        "run_id": run_dir.run_id,
        "whatif_rows": len(records),
        "whatif_csv": str(out),
        "episodes": len(metrics),
        "final_welford": {
            k: last.get(k) for k in (
                "welford_n_mean", "welford_n_std", "welford_p_mean",
                "welford_p_std", "welford_both_mean", "welford_both_std")
        },
        "best_reward": (run_dir.read_best().get("reward")
                        if (run_dir.path / "best_design.json").exists() else None),
    }, indent=2))
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    host, _, port = args.bind.rpartition(":")
    app = create_app(data_dir=args.data_dir,
                     catalog_path=getattr(args, "catalog", None))
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="optistack",
        description="Design multilayer optical coatings with parameterized-action RL.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_task=True):
        p.add_argument("--catalog", help="material catalog JSON (default: built-in)")
        p.add_argument("--seed", type=int, default=0)
        if with_task:
            p.add_argument("--task", required=True,
                           help="built-in id (task1..task3) or task JSON path")

    p = sub.add_parser("simulate", help="reflectivity of a stack over a task grid")
    add_common(p)
    p.add_argument("--stack", required=True, help="stack JSON path")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--calibrate", action="store_true")
    p.add_argument("--calibration-samples", type=int, default=1000)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("dbr", help="design a quarter-wave reflector")
    p.add_argument("--n1", type=float, required=True)
    p.add_argument("--n2", type=float, required=True)
    p.add_argument("--band-edge", type=float, required=True)
    p.add_argument("--periods", type=int, default=4)
    p.add_argument("--catalog")
    p.add_argument("--out", help="write the stack JSON here")
    p.set_defaults(func=cmd_dbr)

    p = sub.add_parser("calibrate-alpha", help="estimate the reward scale from random designs")
    add_common(p)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--beta1", type=float, default=0.01)
    p.add_argument("--beta2", type=float, default=1.0)
    p.add_argument("--mu", type=float, default=None)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("state-count", help="size of the reachable design space")
    p.add_argument("--layers", type=int, required=True)
    p.add_argument("--thicknesses", type=int, required=True)
    p.add_argument("--materials", type=int, required=True)
    p.set_defaults(func=cmd_state_count)

    for name, fn in (("train", cmd_train), ("baseline-dqn", cmd_baseline)):
        p = sub.add_parser(name, help=f"run {name} on a task")
        add_common(p)
        p.add_argument("--episodes", type=int, default=10_000 if name == "train" else 200)
        p.add_argument("--mu", type=float, default=None)
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--calibrate", action="store_true")
        p.add_argument("--calibration-samples", type=int, default=1000)
        p.add_argument("--data-dir", default=None, help="run store root "
                       "(default: $OPTISTACK_DATA_DIR or ./optistack_runs)")
        p.add_argument("--run-id", default=None)
        p.add_argument("--replay-stats-every", type=int, default=25)
        p.add_argument("--updates-per-episode", type=int, default=1)
        p.add_argument("--no-bootstrap", action="store_true")
        p.add_argument("--forbid-repeat-materials", action="store_true")
        if name == "baseline-dqn":
            p.add_argument("--steps", type=int, default=250)
        p.set_defaults(func=fn)

    p = sub.add_parser("whatif", help="swap one layer's action and compare outcomes")
    p.add_argument("--run", required=True)
    p.add_argument("--layer", type=int, required=True)
    p.add_argument("--material", type=int)
    p.add_argument("--thickness", type=float)
    p.add_argument("--terminate", action="store_true")
    p.add_argument("--checkpoint", choices=("best", "last"), default="best")
    p.add_argument("--catalog")
    p.add_argument("--data-dir", default=None)
    p.set_defaults(func=cmd_whatif)

    p = sub.add_parser("analyze", help="what-if table and run summary")
    p.add_argument("--run", required=True)
    p.add_argument("--checkpoint", choices=("best", "last"), default="best")
    p.add_argument("--include-terminate", action="store_true")
    p.add_argument("--out", help="CSV path (default: <run>/whatif_table.csv)")
    p.add_argument("--catalog")
    p.add_argument("--data-dir", default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--bind", default="127.0.0.1:8000")
    p.add_argument("--data-dir", default=None)
    p.add_argument("--catalog")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except OptistackError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # runtime failure distinct from usage problems
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
