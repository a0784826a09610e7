"""Analytic distributed-Bragg-reflector designer.

A quarter-wave stack of two alternating indexes reflects a stopband whose
width follows from the index contrast. Given the desired upper edge of the
stopband, the center wavelength solves the linear system

    delta_lambda = (4 / pi) * lambda0 * arcsin(|n2 - n1| / (n2 + n1))
    lambda0 + delta_lambda = band_edge

after which first-order constructive interference fixes the two layer
thicknesses through n1 t1 = n2 t2 = lambda0 / 4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidInputError
from .materials import MaterialCatalog, default_catalog
from .optics import Stack


@dataclass(frozen=True)
class DbrSpec:
    n1: float
    n2: float
    band_edge: float
    lambda0: float
    delta_lambda: float
    t1: float
    t2: float
    periods: int

    def to_dict(self) -> dict:
        return {
            "n1": self.n1,
            "n2": self.n2,
            "band_edge": self.band_edge,
            "lambda0": self.lambda0,
            "delta_lambda": self.delta_lambda,
            "t1": self.t1,
            "t2": self.t2,
            "periods": self.periods,
            "total_thickness": self.periods * (self.t1 + self.t2),
        }


def _matching_material_id(catalog: MaterialCatalog, n: float) -> int:
    for mat in catalog.materials:
        ref = mat.n_const
        if ref is not None and abs(ref.real - n) < 1e-9 and abs(ref.imag) < 1e-9:
            return mat.id
    raise InvalidInputError(
        f"no catalog material with constant index {n}; add one or pass a custom catalog"
    )


def design_dbr(
    n1: float,
    n2: float,
    band_edge: float,
    periods: int,
    catalog: MaterialCatalog | None = None,
) -> tuple[DbrSpec, Stack]:
    """Quarter-wave reflector whose stopband ends at ``band_edge`` (nm).

    Returns the analytic parameters and a simulatable stack of
    ``periods`` low/high bilayers (low-index layer first) referencing
    materials of ``catalog`` (default catalog if omitted). Ambient and
    substrate are air.
    """
    if not (0 < n1 < n2):
        raise InvalidInputError(f"need 0 < n1 < n2, got n1={n1}, n2={n2}")
    if band_edge <= 0:
        raise InvalidInputError(f"band_edge must be > 0, got {band_edge}")
    if periods < 1:
        raise InvalidInputError(f"periods must be >= 1, got {periods}")

    width_factor = (4.0 / math.pi) * math.asin(abs(n2 - n1) / (n2 + n1))
    lambda0 = band_edge / (1.0 + width_factor)
    delta_lambda = band_edge - lambda0
    t1 = lambda0 / (4.0 * n1)
    t2 = lambda0 / (4.0 * n2)
    spec = DbrSpec(
        n1=n1, n2=n2, band_edge=band_edge, lambda0=lambda0,
        delta_lambda=delta_lambda, t1=t1, t2=t2, periods=periods,
    )

    catalog = catalog or default_catalog()
    id_low = _matching_material_id(catalog, n1)
    id_high = _matching_material_id(catalog, n2)
    layers = tuple((id_low, t1) if i % 2 == 0 else (id_high, t2) for i in range(2 * periods))
    return spec, Stack(layers=layers)
