"""Walk through the optical simulator: Fresnel, quarter-wave, and a full stack.

Run:  python demos/01_transfer_matrix_basics.py
Writes demos/out/tmm_basics.png
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from optistack import SpectralGrid, Stack, default_catalog, reflectivity, reflectivity_vector

catalog = default_catalog()

# A bare air/glass interface reflects 4% at normal incidence, straight from
# the Fresnel formula ((1 - 1.5) / (1 + 1.5))^2.
bare = Stack(ambient_index=1.0, substrate_index=1.5)
print("bare air/glass interface:", reflectivity(bare, catalog, 550.0, 0.0, "s"))

# A single quarter-wave layer of the lowest-index catalog material reduces
# the reflection of a glass-like substrate at its design wavelength.
lam0 = 550.0
coated = Stack(layers=((1, lam0 / (4 * 1.457)),), ambient_index=1.0, substrate_index=1.52)
print("quarter-wave coated glass at 550 nm:",
      reflectivity(coated, catalog, lam0, 0.0, "s"))

# Reflectivity of a random 8-layer stack across the visible range, unpolarized,
# at three incidence angles.
rng = np.random.default_rng(7)
layers = tuple((int(rng.integers(1, 5)), float(rng.uniform(20, 140))) for _ in range(8))
stack = Stack(layers=layers)
print("random stack:", [(m, round(t, 1)) for m, t in layers])

fig, ax = plt.subplots(figsize=(8, 4.5))
wavelengths = tuple(np.arange(400.0, 701.0))
for phi in (0.0, 30.0, 60.0):
    grid = SpectralGrid(wavelengths=wavelengths, angles=(phi,))
    ax.plot(wavelengths, reflectivity_vector(stack, catalog, grid),
            label=f"{phi:.0f} deg incidence")
ax.set_xlabel("wavelength [nm]")
ax.set_ylabel("unpolarized reflectivity")
ax.set_ylim(0, 1)
ax.legend()
ax.set_title("8-layer stack under oblique illumination")
out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)
fig.savefig(out / "tmm_basics.png", dpi=120, bbox_inches="tight")
print("wrote", out / "tmm_basics.png")
