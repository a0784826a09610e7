"""Design the analytic quarter-wave reflector and score it on the edge-filter task.

Run:  python demos/02_dbr_design.py
Writes demos/out/dbr.png
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from optistack import builtin_task, default_catalog, design_dbr, reflectivity_vector
from optistack.rewards import DEFAULT_REWARD_PARAMS, objective_f, reward

catalog = default_catalog()
task = builtin_task("task2")  # reflect below 550 nm, transmit above

# The stopband should end at 550 nm; the solver places its center accordingly.
spec, stack = design_dbr(n1=1.457, n2=2.327, band_edge=550.0, periods=4, catalog=catalog)
print(f"center wavelength  {spec.lambda0:8.2f} nm")
print(f"stopband width     {spec.delta_lambda:8.2f} nm")
print(f"low-index layers   {spec.t1:8.2f} nm of n={spec.n1}")
print(f"high-index layers  {spec.t2:8.2f} nm of n={spec.n2}")
print(f"total thickness    {stack.total_thickness():8.2f} nm over {len(stack)} layers")

r_vec = reflectivity_vector(stack, catalog, task.grid)
f_val = objective_f(r_vec, task, [t for _, t in stack.layers])
print(f"objective on task2 {f_val:8.4f}  ->  reward {reward(f_val, DEFAULT_REWARD_PARAMS):.4f}")

lam, _ = task.grid.flattened()
fig, ax = plt.subplots(figsize=(8, 4.5))
ax.plot(lam, task.target, "k--", label="target")
ax.plot(lam, r_vec, label="quarter-wave reflector")
ax.axvline(spec.lambda0, color="gray", lw=0.8)
ax.axvline(spec.band_edge, color="gray", lw=0.8)
ax.set_xlabel("wavelength [nm]")
ax.set_ylabel("reflectivity")
ax.legend()
out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)
fig.savefig(out / "dbr.png", dpi=120, bbox_inches="tight")
print("wrote", out / "dbr.png")
