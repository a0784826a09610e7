"""Coherent transfer-matrix simulation of planar multilayer stacks.

The characteristic-matrix formalism is used: every layer contributes a 2x2
matrix built from its phase thickness and tilted admittance, the product of
which links the ambient and substrate half-spaces. Complex indexes and
complex refraction angles are supported, so absorbing layers and
total-internal-reflection regimes fall out of the same arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .materials import Material, MaterialCatalog, refractive_index

_BRANCH_TOL = 1e-12


@dataclass(frozen=True)
class SpectralGrid:
    """Discrete wavelengths (nm) and incidence angles (degrees)."""

    wavelengths: tuple[float, ...]
    angles: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        if not self.wavelengths or not self.angles:
            raise InvalidInputError("grid must contain wavelengths and angles")
        if any(w <= 0 for w in self.wavelengths):
            raise InvalidInputError("wavelengths must be > 0")
        if any(not (0 <= a < 90) for a in self.angles):
            raise InvalidInputError("angles must lie in [0, 90)")

    def __len__(self):
        return len(self.wavelengths) * len(self.angles)

    def flattened(self) -> tuple[np.ndarray, np.ndarray]:
        """(lambda, phi) pairs in row-major order: angle outer, wavelength inner."""
        lam = np.asarray(self.wavelengths, dtype=float)
        phi = np.asarray(self.angles, dtype=float)
        return np.tile(lam, len(phi)), np.repeat(phi, len(lam))

    @staticmethod
    def from_ranges(lam_start, lam_end, lam_step=1.0, phi_start=0.0, phi_end=0.0, phi_step=1.0):
        wl = np.arange(lam_start, lam_end + lam_step / 2, lam_step)
        if phi_end <= phi_start:
            ang = np.array([phi_start])
        else:
            ang = np.arange(phi_start, phi_end + phi_step / 2, phi_step)
        return SpectralGrid(tuple(float(w) for w in wl), tuple(float(a) for a in ang))


@dataclass(frozen=True)
class Stack:
    """Ordered coating layers between semi-infinite ambient and substrate.

    Layers are (material_id, thickness_nm) pairs, first layer adjacent to the
    ambient. Thicknesses must be non-negative; range limits such as the task's
    [t_min, t_max] are enforced by the design environment, not here, so that
    degenerate test stacks (zero-thickness layers) remain expressible.
    """

    layers: tuple[tuple[int, float], ...] = ()
    ambient_index: complex = 1.0 + 0.0j
    substrate_index: complex = 1.0 + 0.0j

    def __post_init__(self):
        for mat_id, t in self.layers:
            if t < 0:
                raise InvalidInputError(f"negative thickness {t} for material {mat_id}")

    def __len__(self):
        return len(self.layers)

    def total_thickness(self) -> float:
        return float(sum(t for _, t in self.layers))

    def to_dict(self) -> dict:
        return {
            "layers": [[int(m), float(t)] for m, t in self.layers],
            "ambient": [self.ambient_index.real, self.ambient_index.imag],
            "substrate": [self.substrate_index.real, self.substrate_index.imag],
        }

    @staticmethod
    def from_dict(doc: dict) -> "Stack":
        amb = doc.get("ambient", [1.0, 0.0])
        sub = doc.get("substrate", [1.0, 0.0])
        return Stack(
            layers=tuple((int(m), float(t)) for m, t in doc.get("layers", [])),
            ambient_index=complex(amb[0], amb[1]),
            substrate_index=complex(sub[0], sub[1]),
        )


def _material_index_array(material: Material, lam: np.ndarray) -> np.ndarray:
    if material.n_const is not None:
        return np.full(lam.shape, complex(material.n_const))
    wl = np.array([w for w, _ in material.dispersion])
    ns = np.array([n for _, n in material.dispersion], dtype=complex)
    return np.interp(lam, wl, ns.real) + 1j * np.interp(lam, wl, ns.imag)


def _forward_cosine(n: np.ndarray, sin0: np.ndarray) -> np.ndarray:
    """Complex propagation cosine in a medium of index ``n``.

    The branch is chosen so the wave decays (Im(n cos) >= 0) or, in the
    lossless case, propagates forward (Re(n cos) > 0).
    """
    cos_t = np.sqrt(1.0 - (sin0 / n) ** 2 + 0j)
    ncos = n * cos_t
    flip = (ncos.imag < -_BRANCH_TOL) | (
        (np.abs(ncos.imag) <= _BRANCH_TOL) & (ncos.real < 0)
    )
    return np.where(flip, -cos_t, cos_t)


def _admittance(n: np.ndarray, cos_t: np.ndarray, polarization: str) -> np.ndarray:
    if polarization == "s":
        return n * cos_t
    if polarization == "p":
        return cos_t / n
    raise InvalidInputError(f"polarization must be 's' or 'p', got {polarization!r}")


def _reflectance_flat(
    stack: Stack,
    catalog: MaterialCatalog,
    lam: np.ndarray,
    phi_deg: np.ndarray,
    polarization: str,
) -> np.ndarray:
    """Power reflectance at each (lambda, phi) pair of the flattened grid."""
    n0 = complex(stack.ambient_index)
    n_sub = complex(stack.substrate_index)
    theta0 = np.radians(phi_deg)
    # Transverse wavevector invariant (Snell): n0 sin(theta0), shared by all layers.
    sin0 = n0 * np.sin(theta0)
    cos0 = np.cos(theta0).astype(complex)

    m11 = np.ones(lam.shape, dtype=complex)
    m12 = np.zeros(lam.shape, dtype=complex)
    m21 = np.zeros(lam.shape, dtype=complex)
    m22 = np.ones(lam.shape, dtype=complex)
    for mat_id, thickness in stack.layers:
        n_j = _material_index_array(catalog.get(mat_id), lam)
        cos_j = _forward_cosine(n_j, sin0)
        q_j = _admittance(n_j, cos_j, polarization)
        delta = 2.0 * np.pi * n_j * thickness * cos_j / lam
        c, s = np.cos(delta), np.sin(delta)
        a11, a12, a21, a22 = c, 1j * s / q_j, 1j * q_j * s, c
        m11, m12, m21, m22 = (
            m11 * a11 + m12 * a21,
            m11 * a12 + m12 * a22,
            m21 * a11 + m22 * a21,
            m21 * a12 + m22 * a22,
        )

    q_in = _admittance(np.full(lam.shape, n0), cos0, polarization)
    cos_sub = _forward_cosine(np.full(lam.shape, n_sub), sin0)
    q_sub = _admittance(np.full(lam.shape, n_sub), cos_sub, polarization)

    top = (m11 + m12 * q_sub) * q_in
    bottom = m21 + m22 * q_sub
    r = (top - bottom) / (top + bottom)
    # Clip float roundoff; passive media cannot exceed unit reflectance.
    return np.clip(np.abs(r) ** 2, 0.0, 1.0)


def reflectivity(
    stack: Stack,
    catalog: MaterialCatalog,
    wavelength_nm: float,
    angle_deg: float = 0.0,
    polarization: str = "s",
) -> float:
    """Power reflectance of the stack for one wavelength/angle/polarization."""
    if wavelength_nm <= 0:
        raise InvalidInputError(f"wavelength must be > 0, got {wavelength_nm}")
    if not (0 <= angle_deg < 90):
        raise InvalidInputError(f"angle must lie in [0, 90), got {angle_deg}")
    lam = np.array([float(wavelength_nm)])
    phi = np.array([float(angle_deg)])
    return float(_reflectance_flat(stack, catalog, lam, phi, polarization)[0])


def reflectivity_vector(stack: Stack, catalog: MaterialCatalog, grid: SpectralGrid) -> np.ndarray:
    """Unpolarized reflectance over the whole grid, angle-major ordering.

    Entry k corresponds to (phi = angles[k // |lambda|], lambda = wavelengths[k % |lambda|])
    and equals the mean of the s- and p-polarized reflectances there.
    """
    lam, phi = grid.flattened()
    r_s = _reflectance_flat(stack, catalog, lam, phi, "s")
    r_p = _reflectance_flat(stack, catalog, lam, phi, "p")
    return 0.5 * (r_s + r_p)


class CountingSimulator:
    """Wraps reflectivity_vector and counts grid evaluations.

    The training loop is contractually allowed one call per episode; tests
    assert the count.
    """

    def __init__(self, catalog: MaterialCatalog):
        self.catalog = catalog
        self.calls = 0

    def __call__(self, stack: Stack, grid: SpectralGrid) -> np.ndarray:
        self.calls += 1
        return reflectivity_vector(stack, self.catalog, grid)
