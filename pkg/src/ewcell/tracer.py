"""Streamline generation for the current-density field.

Surface-uniform seed placement on electrode faces, adaptive fourth-order
Runge-Kutta integration of the normalized field direction, automatic
selection of the integration sense, and truncation rules (step underflow,
zigzag suppression, electrode entry, arc-length caps, domain exit, vertex
budget).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .geometry import (
    BIPOLAR,
    CellGeometry,
    Electrode,
    GridSpec,
    OutsideDomain,
    point_inside_electrode,
    sample_trilinear,
)
from .solver import SolverState, compute_current_field

BELOW_D_MIN = "belowDMin"
ZIGZAG = "zigzag"
ENTERED_ELECTRODE = "enteredElectrode"
ARC_LIMIT = "arcLimit"
LEFT_DOMAIN = "leftDomain"
VERTEX_LIMIT = "vertexLimit"

FORWARD = "forward"
BACKWARD = "backward"

# Seeds where |J| falls below this fraction of the field maximum are skipped:
# the integration direction is undefined on a null field.
ZERO_FIELD_FRACTION = 1e-12


class NotSolvedError(RuntimeError):
    """Raised when tracing is requested before any solver iteration ran."""


@dataclass
class TraceConfig:
    """Integration and seeding controls; lengths in meters.

    Arc caps of 0 mean unlimited.
    """

    tol: float
    d_min: float
    d_max: float
    safety: float = 0.9
    direction_probe: float = 0.2
    seed_density: float = 0.02
    max_arc_unipolar: float = 0.0
    max_arc_bipolar: float = 0.0
    max_vertices: int = 10000

    def __post_init__(self) -> None:
        if not (0 < self.d_min < self.d_max):
            raise ValueError("require 0 < d_min < d_max")
        if not (self.tol > 0):
            raise ValueError("tol must be positive")
        if not (0 < self.safety < 1):
            raise ValueError("safety factor must lie in (0, 1)")
        if not (0 < self.direction_probe < 1):
            raise ValueError("direction probe must lie in (0, 1)")
        if not (self.seed_density > 0):
            raise ValueError("seed density must be positive")
        if self.max_vertices < 1:
            raise ValueError("max_vertices must be >= 1")
        if self.max_arc_unipolar < 0 or self.max_arc_bipolar < 0:
            raise ValueError("arc caps must be >= 0")

    @classmethod
    def for_grid(cls, grid: GridSpec, **overrides) -> "TraceConfig":
        """Defaults scaled to the grid spacing: tol = 1e-4 h, steps in
        [0.05 h, h] (the upper bound keeps per-step color error below one
        cell)."""
        h = grid.h
        values = dict(tol=1e-4 * h, d_min=0.05 * h, d_max=h)
        values.update(overrides)
        return cls(**values)


@dataclass
class Streamline:
    """Polyline tangent to the field, with per-vertex field samples."""

    source_electrode: int
    positions: np.ndarray   # (n, 3) [m]
    tangents: np.ndarray    # (n, 3) unit field directions
    magnitudes: np.ndarray  # (n,) |J| [A/m^2]
    potentials: np.ndarray  # (n,) [V]
    termination_reason: str

    def __len__(self) -> int:
        return len(self.positions)


# ---------------------------------------------------------------------------
# Seeding.
# ---------------------------------------------------------------------------

def seed_counts(I: float, J: float, K: float, rho_s: float,
                clamp_min: int = 3) -> Tuple[int, int, int]:
    """Per-edge seed counts for a box of I x J x K grid units.

    Closed-form positive root of the uniform-surface-density condition:
    rho_8 is the density at the 8-corner minimum, rho_min the smallest
    density with real roots. Counts are rounded to nearest and clamped
    below; densities below rho_min clamp the square-root operand at zero.
    """
    if min(I, J, K) <= 0 or rho_s <= 0:
        raise ValueError("box dims and seed density must be positive")
    S = I * J + J * K + I * K
    rho8 = 4.0 / S
    rho_min = rho8 - ((I + J + K) / S) ** 2
    operand = max(rho_s - rho_min, 0.0)
    base = (I + J + K) * rho8 / 4.0 + math.sqrt(operand)
    counts = tuple(max(clamp_min, int(base * dim + 0.5)) for dim in (I, J, K))
    return counts


def seed_total(n_i: int, n_j: int, n_k: int) -> int:
    """Seed count of the box lattice: 8 vertices, edge interiors, face interiors."""
    a, b, c = n_i - 2, n_j - 2, n_k - 2
    return 8 + 4 * (a + b + c) + 2 * (a * b + b * c + a * c)


def generate_seeds(e: Electrode, grid: GridSpec, rho_s: float,
                   clamp_min: int = 3) -> List[np.ndarray]:
    """Seed positions on the electrode surface, no duplicates.

    Emission order: face interiors, then edge interiors, then the 8 box
    vertices, so shared lattice points are emitted exactly once.
    """
    h = grid.h
    i1, i2, j1, j2, k1, k2 = e.box
    dims = (i2 - i1, j2 - j1, k2 - k1)
    n = seed_counts(*dims, rho_s, clamp_min=clamp_min)
    axes = [np.linspace(lo * h, hi * h, n[ax])
            for ax, (lo, hi) in enumerate(((i1, i2), (j1, j2), (k1, k2)))]

    seeds: List[np.ndarray] = []
    # Face interiors: both faces normal to each axis.
    for ax in range(3):
        u_ax, v_ax = [a for a in range(3) if a != ax]
        for w in (axes[ax][0], axes[ax][-1]):
            for u in axes[u_ax][1:-1]:
                for v in axes[v_ax][1:-1]:
                    p = np.empty(3)
                    p[ax] = w
                    p[u_ax] = u
                    p[v_ax] = v
                    seeds.append(p)
    # Edge interiors: four edges parallel to each axis.
    for ax in range(3):
        u_ax, v_ax = [a for a in range(3) if a != ax]
        for u in (axes[u_ax][0], axes[u_ax][-1]):
            for v in (axes[v_ax][0], axes[v_ax][-1]):
                for w in axes[ax][1:-1]:
                    p = np.empty(3)
                    p[ax] = w
                    p[u_ax] = u
                    p[v_ax] = v
                    seeds.append(p)
    # The 8 vertices.
    for x in (axes[0][0], axes[0][-1]):
        for y in (axes[1][0], axes[1][-1]):
            for z in (axes[2][0], axes[2][-1]):
                seeds.append(np.array([x, y, z]))
    return seeds


# ---------------------------------------------------------------------------
# Integration.
# ---------------------------------------------------------------------------

def _unit(v: np.ndarray) -> Tuple[np.ndarray, float]:
    mag = float(np.linalg.norm(v))
    if mag == 0.0:
        return np.zeros(3), 0.0
    return v / mag, mag


def make_field_sampler(j_field: np.ndarray, h: float) -> Callable[[np.ndarray], np.ndarray]:
    """Raw vector sampler over a gridded field; raises OutsideDomain."""
    def sampler(pos: np.ndarray) -> np.ndarray:
        return np.asarray(sample_trilinear(j_field, h, pos), dtype=float)
    return sampler


def integration_direction(seed: np.ndarray, sampler: Callable, cell: CellGeometry,
                          delta: float, h: float) -> str:
    """Probe one fraction of a cell along the field; inside an electrode
    means the field points into the metal, so integrate against it."""
    direction, mag = _unit(sampler(seed))
    if mag == 0.0:
        raise ValueError("integration direction undefined on a null field")
    probe = seed + delta * h * direction
    try:
        inside = point_inside_electrode(cell, probe) is not None
    except OutsideDomain:
        inside = False
    return BACKWARD if inside else FORWARD


def rk4_step(f: Callable[[np.ndarray], np.ndarray], x: np.ndarray,
             d: float) -> Tuple[np.ndarray, np.ndarray]:
    """Classic RK4 step of signed length d on the unit direction field f.

    Returns the new position and the local error estimate
    (k4 - d*f(x_next)) / 6; raises OutsideDomain when any sample leaves the
    grid.
    """
    k1 = d * f(x)
    k2 = d * f(x + 0.5 * k1)
    k3 = d * f(x + 0.5 * k2)
    k4 = d * f(x + k3)
    x_next = x + (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    delta = (k4 - d * f(x_next)) / 6.0
    return x_next, delta


def adapt_step(d: float, err_norm: float, tol: float, safety: float,
               d_min: float, d_max: float) -> Tuple[float, bool]:
    """Fifth-root step controller.

    Returns (next step, accept). Zero error opens the step to d_max; error
    above tol rejects the step and retries with the shrunken estimate. The
    caller terminates the line when the next step falls below d_min.
    """
    if err_norm == 0.0:
        return d_max, True
    d_star = (safety * tol / err_norm) ** 0.2 * d
    if err_norm > tol:
        return d_star, False
    return min(d_star, d_max), True


def trace_field(sampler: Callable[[np.ndarray], np.ndarray],
                seed: np.ndarray,
                config: TraceConfig,
                direction: str = FORWARD,
                cell: Optional[CellGeometry] = None,
                potential: Optional[Callable[[np.ndarray], float]] = None,
                max_arc: float = 0.0,
                source_electrode: int = -1) -> Streamline:
    """Integrate one streamline from a seed over a raw field sampler.

    The sampler returns the (unnormalized) field vector and raises
    OutsideDomain past the grid; electrode-entry tests are skipped when no
    cell is given.
    """
    sgn = -1.0 if direction == BACKWARD else 1.0

    def f(x: np.ndarray) -> np.ndarray:
        return _unit(sampler(x))[0]

    def vertex(x: np.ndarray):
        t, mag = _unit(sampler(x))
        v = potential(x) if potential is not None else 0.0
        return t, mag, float(v)

    positions: List[np.ndarray] = []
    tangents: List[np.ndarray] = []
    magnitudes: List[float] = []
    potentials: List[float] = []

    def emit(x, t, mag, v):
        positions.append(np.asarray(x, dtype=float))
        tangents.append(t)
        magnitudes.append(mag)
        potentials.append(v)

    def done(reason: str) -> Streamline:
        return Streamline(
            source_electrode=source_electrode,
            positions=np.array(positions).reshape(len(positions), 3),
            tangents=np.array(tangents).reshape(len(positions), 3),
            magnitudes=np.array(magnitudes),
            potentials=np.array(potentials),
            termination_reason=reason,
        )

    x = np.asarray(seed, dtype=float)
    t, mag, v = vertex(x)
    emit(x, t, mag, v)
    if mag == 0.0:
        return done(BELOW_D_MIN)

    d = config.d_max
    arc = 0.0
    while True:
        if len(positions) >= config.max_vertices:
            return done(VERTEX_LIMIT)
        try:
            x_next, delta = rk4_step(f, x, sgn * d)
        except OutsideDomain:
            return done(LEFT_DOMAIN)
        d_new, accept = adapt_step(d, float(np.linalg.norm(delta)), config.tol,
                                   config.safety, config.d_min, config.d_max)
        if not accept:
            if d_new < config.d_min:
                return done(BELOW_D_MIN)
            d = d_new
            continue
        t_next, mag_next, v_next = vertex(x_next)
        if mag_next == 0.0:
            return done(BELOW_D_MIN)
        if float(np.dot(tangents[-1], t_next)) < 0.0:
            return done(ZIGZAG)
        if cell is not None and point_inside_electrode(cell, x_next) is not None:
            return done(ENTERED_ELECTRODE)
        arc += float(np.linalg.norm(x_next - x))
        emit(x_next, t_next, mag_next, v_next)
        x = x_next
        if max_arc > 0.0 and arc > max_arc:
            return done(ARC_LIMIT)
        if d_new < config.d_min:
            return done(BELOW_D_MIN)
        d = d_new


def trace_streamline(seed: np.ndarray, direction: str, j_field: np.ndarray,
                     v_field: np.ndarray, cell: CellGeometry,
                     config: TraceConfig, source_electrode: int = -1) -> Streamline:
    """Trace one streamline through gridded J and V fields."""
    h = cell.grid.h
    sampler = make_field_sampler(j_field, h)
    e = cell.electrodes[source_electrode] if source_electrode >= 0 else None
    if e is not None and e.kind == BIPOLAR:
        max_arc = config.max_arc_bipolar
    else:
        max_arc = config.max_arc_unipolar
    return trace_field(
        sampler, seed, config, direction=direction, cell=cell,
        potential=lambda p: float(sample_trilinear(v_field, h, p)),
        max_arc=max_arc, source_electrode=source_electrode,
    )


def trace_all(cell: CellGeometry, state: SolverState, config: TraceConfig,
              j_field: Optional[np.ndarray] = None) -> Dict[int, List[Streamline]]:
    """Seed and trace every electrode; lines grouped by source electrode."""
    if state.iteration_count < 1:
        raise NotSolvedError("cell not solved: run the solver before tracing")
    if j_field is None:
        j_field = compute_current_field(cell, state)
    h = cell.grid.h
    sampler = make_field_sampler(j_field, h)
    threshold = ZERO_FIELD_FRACTION * float(np.linalg.norm(j_field, axis=-1).max())
    groups: Dict[int, List[Streamline]] = {}
    for eid, e in enumerate(cell.electrodes):
        lines: List[Streamline] = []
        for seed in generate_seeds(e, cell.grid, config.seed_density):
            try:
                mag = float(np.linalg.norm(sampler(seed)))
            except OutsideDomain:
                continue
            if mag <= threshold:
                continue
            direction = integration_direction(seed, sampler, cell,
                                              config.direction_probe, h)
            lines.append(trace_streamline(seed, direction, j_field, state.V,
                                          cell, config, source_electrode=eid))
        groups[eid] = lines
    return groups
