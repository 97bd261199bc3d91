"""Shared cell builders for the test suite."""
from __future__ import annotations

import pytest

from ewcell.geometry import CellGeometry, Electrode, GridSpec, PolarizationParams


def parallel_plate_cell(dv: float = 1.0, sigma: float = 50.0) -> CellGeometry:
    """21x11x11 cell with full-cross-section plates at both x ends."""
    grid = GridSpec(21, 11, 11, 0.01)
    return CellGeometry(
        grid=grid,
        conductivity=sigma,
        electrodes=[
            Electrode(kind="anode", box=(0, 1, 0, 10, 0, 10), metal_potential=dv),
            Electrode(kind="cathode", box=(19, 20, 0, 10, 0, 10),
                      metal_potential=0.0),
        ],
    )


def bipolar_cell(dv: float = 1.0, e_r: float = 0.1, k_a: float = 0.0,
                 k_c: float = 0.0, sigma: float = 50.0) -> CellGeometry:
    """Mirror-symmetric cell: centered bipolar plate between full plates.

    22 grid points along x put the mirror plane at x = 10.5 h, where the
    bipolar section divide sits (split index 10).
    """
    grid = GridSpec(22, 13, 13, 0.01)
    return CellGeometry(
        grid=grid,
        conductivity=sigma,
        electrodes=[
            Electrode(kind="anode", box=(0, 1, 0, 12, 0, 12), metal_potential=dv),
            Electrode(kind="cathode", box=(20, 21, 0, 12, 0, 12),
                      metal_potential=0.0),
            Electrode(kind="bipolar", box=(9, 12, 3, 9, 3, 9), split_index=10,
                      polarization=PolarizationParams(e_r=e_r, k_a=k_a, k_c=k_c)),
        ],
    )


@pytest.fixture
def plate_cell() -> CellGeometry:
    return parallel_plate_cell()
