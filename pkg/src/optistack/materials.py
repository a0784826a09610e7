"""Material catalog: constant or tabulated complex refractive indexes."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, InvalidInputError


@dataclass(frozen=True)
class Material:
    """A coating material, identified by a small integer id.

    ``dispersion`` is either a single complex index (non-dispersive) or a
    table of (wavelength_nm, complex index) samples with strictly increasing
    wavelengths. Imaginary parts use the absorbing convention (>= 0).
    """

    id: int
    name: str
    n_const: complex | None = None
    dispersion: tuple[tuple[float, complex], ...] | None = None

    def __post_init__(self):
        if (self.n_const is None) == (self.dispersion is None):
            raise ConfigurationError(
                f"material {self.id!r}: give exactly one of n_const or dispersion"
            )
        if self.dispersion is not None and len(self.dispersion) == 0:
            raise ConfigurationError(f"material {self.id!r}: empty dispersion table")
        for n in self._indexes():
            if n.real <= 0:
                raise ConfigurationError(f"material {self.id!r}: Re(n) must be > 0, got {n}")
            if n.imag < 0:
                raise ConfigurationError(f"material {self.id!r}: Im(n) must be >= 0, got {n}")
        if self.dispersion is not None:
            wl = [w for w, _ in self.dispersion]
            if any(b <= a for a, b in zip(wl, wl[1:])):
                raise ConfigurationError(
                    f"material {self.id!r}: dispersion wavelengths must strictly increase"
                )

    def _indexes(self):
        if self.n_const is not None:
            return [complex(self.n_const)]
        return [complex(n) for _, n in self.dispersion]


def refractive_index(material: Material, wavelength_nm: float) -> complex:
    """Complex refractive index of ``material`` at ``wavelength_nm``.

    Tabulated materials are interpolated piecewise-linearly (real and
    imaginary parts separately); wavelengths outside the table clamp to the
    nearest endpoint.
    """
    if wavelength_nm <= 0:
        raise InvalidInputError(f"wavelength must be > 0, got {wavelength_nm}")
    if material.n_const is not None:
        return complex(material.n_const)
    table = material.dispersion
    if not table:
        raise ConfigurationError(f"material {material.id!r}: empty dispersion table")
    wl = np.array([w for w, _ in table])
    ns = np.array([n for _, n in table], dtype=complex)
    re = float(np.interp(wavelength_nm, wl, ns.real))
    im = float(np.interp(wavelength_nm, wl, ns.imag))
    return complex(re, im)


@dataclass(frozen=True)
class MaterialCatalog:
    """Ordered set of available materials plus the encoding wavelength."""

    materials: tuple[Material, ...]
    reference_wavelength: float = 550.0

    def __post_init__(self):
        if len(self.materials) < 2:
            raise ConfigurationError("catalog needs at least 2 materials")
        ids = [m.id for m in self.materials]
        if ids != list(range(1, len(ids) + 1)):
            raise ConfigurationError(f"material ids must be contiguous from 1, got {ids}")

    def __len__(self):
        return len(self.materials)

    def get(self, material_id: int) -> Material:
        try:
            mat = self.materials[material_id - 1]
        except IndexError:
            raise InvalidInputError(f"unknown material id {material_id}") from None
        return mat

    def index_at(self, material_id: int, wavelength_nm: float) -> complex:
        return refractive_index(self.get(material_id), wavelength_nm)

    def reference_index(self, material_id: int) -> float:
        """Real part of the index at the reference wavelength (state encoding)."""
        return self.index_at(material_id, self.reference_wavelength).real


# The four constant-index materials used throughout the built-in tasks.
DEFAULT_INDEXES = (1.457, 1.645, 1.860, 2.327)


def default_catalog() -> MaterialCatalog:
    mats = tuple(
        Material(id=i + 1, name=f"material_{i + 1}", n_const=complex(n, 0.0))
        for i, n in enumerate(DEFAULT_INDEXES)
    )
    return MaterialCatalog(materials=mats)


def catalog_from_dict(doc: dict) -> MaterialCatalog:
    mats = []
    for entry in doc.get("materials", []):
        if "n_const" in entry:
            re, im = entry["n_const"]
            mats.append(Material(id=entry["id"], name=entry["name"], n_const=complex(re, im)))
        elif "dispersion" in entry:
            table = tuple((row[0], complex(row[1], row[2])) for row in entry["dispersion"])
            mats.append(Material(id=entry["id"], name=entry["name"], dispersion=table))
        else:
            raise ConfigurationError(f"material entry {entry.get('id')} has no index data")
    return MaterialCatalog(
        materials=tuple(mats),
        reference_wavelength=float(doc.get("reference_wavelength", 550.0)),
    )


def catalog_to_dict(catalog: MaterialCatalog) -> dict:
    entries = []
    for m in catalog.materials:
        entry: dict = {"id": m.id, "name": m.name}
        if m.n_const is not None:
            entry["n_const"] = [m.n_const.real, m.n_const.imag]
        else:
            entry["dispersion"] = [[w, n.real, n.imag] for w, n in m.dispersion]
        entries.append(entry)
    return {"reference_wavelength": catalog.reference_wavelength, "materials": entries}


def load_catalog(path: str | Path) -> MaterialCatalog:
    with open(path) as fh:
        return catalog_from_dict(json.load(fh))
