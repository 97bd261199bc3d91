"""Discretized rectangular cell domain.

Geometry types for the electrowinning cell (grid, electrodes, polarization
parameters), occupancy/tangency classification of grid points, surface
element enumeration, and trilinear field sampling.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

ANODE = "anode"
CATHODE = "cathode"
BIPOLAR = "bipolar"
ELECTRODE_KINDS = (ANODE, CATHODE, BIPOLAR)

# Mask point classifications.
ELECTROLYTE = 0
INTERFACE = 1
INTERIOR = 2

NO_OWNER = -1


class GeometryError(ValueError):
    """Raised when a cell geometry violates a structural invariant."""


class OutsideDomain(Exception):
    """Signals that a sample position lies outside the grid bounds."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid: nx, ny, nz points per axis, spacing h in meters."""

    nx: int
    ny: int
    nz: int
    h: float

    def __post_init__(self) -> None:
        for n in (self.nx, self.ny, self.nz):
            if not isinstance(n, (int, np.integer)) or n < 2:
                raise GeometryError("grid point counts must be integers >= 2")
        if not (self.h > 0 and np.isfinite(self.h)):
            raise GeometryError("grid spacing h must be positive and finite")

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def extent(self) -> Tuple[float, float, float]:
        """Physical extent per axis, (n - 1) * h."""
        return ((self.nx - 1) * self.h, (self.ny - 1) * self.h, (self.nz - 1) * self.h)


@dataclass(frozen=True)
class PolarizationParams:
    """Linear polarization curve: jump magnitude e_r [V] and slopes [ohm m^2]."""

    e_r: float = 0.0
    k_a: float = 0.0
    k_c: float = 0.0

    def __post_init__(self) -> None:
        for v in (self.e_r, self.k_a, self.k_c):
            if not np.isfinite(v) or v < 0:
                raise GeometryError("polarization parameters must be finite and >= 0")


@dataclass
class Electrode:
    """Axis-aligned box electrode given by inclusive grid-index ranges.

    ``split_index`` applies to bipolar electrodes only and places the
    anodic/cathodic section divide at x0 = (split_index + 1/2) * h; points
    with i <= split_index belong to the cathodic (-x) section.
    ``metal_potential`` is a parameter for energized electrodes and evolving
    state for floating ones.
    """

    kind: str
    box: Tuple[int, int, int, int, int, int]
    polarization: PolarizationParams = field(default_factory=PolarizationParams)
    metal_potential: float = 0.0
    split_index: Optional[int] = None
    floating: Optional[bool] = None

    def __post_init__(self) -> None:
        if self.kind not in ELECTRODE_KINDS:
            raise GeometryError("unknown electrode kind %r" % (self.kind,))
        if self.floating is None:
            self.floating = self.kind == BIPOLAR
        self.box = tuple(int(v) for v in self.box)
        if len(self.box) != 6:
            raise GeometryError("electrode box must have 6 indices")
        i1, i2, j1, j2, k1, k2 = self.box
        if not (i1 < i2 and j1 < j2 and k1 < k2):
            raise GeometryError("electrode box must span >= 1 interval per axis")
        if self.kind == BIPOLAR:
            if self.split_index is None:
                self.split_index = (i1 + i2) // 2
            if not (i1 <= self.split_index < i2):
                raise GeometryError("bipolar split index must satisfy i1 <= split < i2")
        if not np.isfinite(self.metal_potential):
            raise GeometryError("metal potential must be finite")

    @property
    def lo(self) -> Tuple[int, int, int]:
        return (self.box[0], self.box[2], self.box[4])

    @property
    def hi(self) -> Tuple[int, int, int]:
        return (self.box[1], self.box[3], self.box[5])

    def contains_index(self, i: int, j: int, k: int) -> bool:
        i1, i2, j1, j2, k1, k2 = self.box
        return i1 <= i <= i2 and j1 <= j <= j2 and k1 <= k <= k2

    def section_at(self, i: int) -> str:
        """Anodic or cathodic role of the surface point at x-index i."""
        if self.kind == ANODE:
            return "anodic"
        if self.kind == CATHODE:
            return "cathodic"
        return "cathodic" if i <= self.split_index else "anodic"


@dataclass
class CellGeometry:
    """Grid, electrolyte conductivity [1/(ohm m)], and electrode list."""

    grid: GridSpec
    conductivity: float
    electrodes: List[Electrode] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not (self.conductivity > 0 and np.isfinite(self.conductivity)):
            raise GeometryError("conductivity must be positive and finite")
        self.validate()

    def validate(self) -> None:
        for idx, e in enumerate(self.electrodes):
            i1, i2, j1, j2, k1, k2 = e.box
            if not (0 <= i1 and i2 < self.grid.nx and 0 <= j1 and j2 < self.grid.ny
                    and 0 <= k1 and k2 < self.grid.nz):
                raise GeometryError("electrode %d extends outside the grid" % idx)
        for a in range(len(self.electrodes)):
            for b in range(a + 1, len(self.electrodes)):
                _check_separation(self.electrodes[a], self.electrodes[b], a, b)

    def energized(self, kind: str) -> List[int]:
        return [i for i, e in enumerate(self.electrodes)
                if e.kind == kind and not e.floating]

    def floating_ids(self) -> List[int]:
        return [i for i, e in enumerate(self.electrodes) if e.floating]


def _axis_range(e: Electrode, axis: int) -> Tuple[int, int]:
    return (e.box[2 * axis], e.box[2 * axis + 1])


def _check_separation(a: Electrode, b: Electrode, ia: int, ib: int) -> None:
    # Along every axis where the boxes overlap in the other two axes, the
    # boxes must be separated by at least two grid intervals of electrolyte
    # so that interface stencils never reach another electrode.
    for axis in range(3):
        others = [ax for ax in range(3) if ax != axis]
        overlap = all(
            _axis_range(a, ax)[0] <= _axis_range(b, ax)[1]
            and _axis_range(b, ax)[0] <= _axis_range(a, ax)[1]
            for ax in others
        )
        if not overlap:
            continue
        alo, ahi = _axis_range(a, axis)
        blo, bhi = _axis_range(b, axis)
        if not (blo - ahi >= 2 or alo - bhi >= 2):
            raise GeometryError(
                "electrodes %d and %d overlap or are separated by fewer than "
                "2 grid intervals along axis %d" % (ia, ib, axis)
            )


@dataclass
class Mask3D:
    """Per-point classification: electrolyte, interface, or electrode interior."""

    kind: np.ndarray   # uint8, one of ELECTROLYTE / INTERFACE / INTERIOR
    owner: np.ndarray  # int32 electrode index, NO_OWNER for electrolyte


def build_occupancy_mask(cell: CellGeometry) -> Mask3D:
    """Classify every grid point; box boundary points are interface points."""
    cell.validate()
    kind = np.full(cell.grid.shape, ELECTROLYTE, dtype=np.uint8)
    owner = np.full(cell.grid.shape, NO_OWNER, dtype=np.int32)
    for eid, e in enumerate(cell.electrodes):
        i1, i2, j1, j2, k1, k2 = e.box
        kind[i1:i2 + 1, j1:j2 + 1, k1:k2 + 1] = INTERFACE
        owner[i1:i2 + 1, j1:j2 + 1, k1:k2 + 1] = eid
        if i2 - i1 >= 2 and j2 - j1 >= 2 and k2 - k1 >= 2:
            kind[i1 + 1:i2, j1 + 1:j2, k1 + 1:k2] = INTERIOR
    return Mask3D(kind=kind, owner=owner)


_AXIS_UNIT = np.eye(3, dtype=int)


@dataclass(frozen=True)
class SurfaceElement:
    """One surface quadrature element: grid point, outward normal, area weight.

    The element area is area_factor * h^2; weights are 1 for face-interior
    points, 1/2 on face edges and 1/4 on face corners so the weighted sum
    reproduces the exact face area.
    """

    point: Tuple[int, int, int]
    normal: Tuple[int, int, int]
    area_factor: float


def iter_faces(e: Electrode, grid: GridSpec):
    """Yield (axis, side, plane_index, tangent) for the six box faces.

    side is -1 for the low face and +1 for the high face; tangent is True
    when the face lies in a cell-wall plane.
    """
    n = grid.shape
    for axis in range(3):
        lo, hi = _axis_range(e, axis)
        yield axis, -1, lo, lo == 0
        yield axis, +1, hi, hi == n[axis] - 1


def surface_elements(e: Electrode, grid: GridSpec) -> List[SurfaceElement]:
    """Quadrature elements over all faces not tangent to a cell wall.

    Points shared by two non-tangent faces emit one element per face.
    """
    elements: List[SurfaceElement] = []
    for axis, side, plane, tangent in iter_faces(e, grid):
        if tangent:
            continue
        normal = tuple(side * _AXIS_UNIT[axis])
        u_axis, v_axis = [ax for ax in range(3) if ax != axis]
        ulo, uhi = _axis_range(e, u_axis)
        vlo, vhi = _axis_range(e, v_axis)
        for u in range(ulo, uhi + 1):
            for v in range(vlo, vhi + 1):
                w = 1.0
                if u in (ulo, uhi):
                    w *= 0.5
                if v in (vlo, vhi):
                    w *= 0.5
                idx = [0, 0, 0]
                idx[axis] = plane
                idx[u_axis] = u
                idx[v_axis] = v
                elements.append(SurfaceElement(tuple(idx), normal, w))
    return elements


def sample_trilinear(values: np.ndarray, h: float, pos: Sequence[float]):
    """Trilinear blend of the 8 grid values surrounding a physical position.

    ``values`` has shape (nx, ny, nz) for scalars or (nx, ny, nz, 3) for
    vectors. Raises OutsideDomain when the position leaves the grid.
    """
    nx, ny, nz = values.shape[:3]
    u = np.asarray(pos, dtype=float) / h
    dims = (nx, ny, nz)
    eps = 1e-9
    for ax in range(3):
        if not (-eps <= u[ax] <= dims[ax] - 1 + eps):
            raise OutsideDomain(pos)
    base = [min(max(int(np.floor(u[ax])), 0), dims[ax] - 2) for ax in range(3)]
    f = [u[ax] - base[ax] for ax in range(3)]
    i, j, k = base
    fx, fy, fz = (min(max(t, 0.0), 1.0) for t in f)
    c00 = values[i, j, k] * (1 - fx) + values[i + 1, j, k] * fx
    c10 = values[i, j + 1, k] * (1 - fx) + values[i + 1, j + 1, k] * fx
    c01 = values[i, j, k + 1] * (1 - fx) + values[i + 1, j, k + 1] * fx
    c11 = values[i, j + 1, k + 1] * (1 - fx) + values[i + 1, j + 1, k + 1] * fx
    c0 = c00 * (1 - fy) + c10 * fy
    c1 = c01 * (1 - fy) + c11 * fy
    return c0 * (1 - fz) + c1 * fz


def electrode_physical_box(e: Electrode, h: float) -> Tuple[float, ...]:
    i1, i2, j1, j2, k1, k2 = e.box
    return (i1 * h, i2 * h, j1 * h, j2 * h, k1 * h, k2 * h)


def point_inside_electrode(cell: CellGeometry, pos: Sequence[float]) -> Optional[int]:
    """Electrode index whose open physical box strictly contains pos, else None."""
    x, y, z = float(pos[0]), float(pos[1]), float(pos[2])
    h = cell.grid.h
    for eid, e in enumerate(cell.electrodes):
        x1, x2, y1, y2, z1, z2 = electrode_physical_box(e, h)
        if x1 < x < x2 and y1 < y < y2 and z1 < z < z2:
            return eid
    return None
