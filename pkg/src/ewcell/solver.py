"""Finite-difference Laplace solver for the cell potential.

Gauss-Seidel relaxation of the electrolyte potential with insulating cell
walls (mirror closure), electrode boundary conditions expressed as a
potential jump across the double layer (V = Vm - DV with a linear
polarization law), and a zero-net-flux recursion that updates the metal
potential of floating electrodes. The converged potential yields the
current-density field J = -sigma * grad(V).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .geometry import (
    ANODE,
    CATHODE,
    CellGeometry,
    ELECTROLYTE,
    INTERIOR,
    Mask3D,
    PolarizationParams,
    build_occupancy_mask,
    iter_faces,
    surface_elements,
)


class ConfigurationError(ValueError):
    """Raised when a cell cannot be solved as configured."""


class DivergenceError(RuntimeError):
    """Raised when the iteration produces non-finite potentials."""

    def __init__(self, iterations: int):
        super().__init__(
            "solver diverged (non-finite potential) after %d iterations" % iterations
        )
        self.iterations = iterations


@dataclass
class SolverConfig:
    """Iteration controls: convergence tolerance [V] and iteration budgets."""

    tolerance: float = 1e-4
    max_iterations: int = 5000
    inner_steps: int = 10

    def __post_init__(self) -> None:
        if not (self.tolerance > 0 and math.isfinite(self.tolerance)):
            raise ConfigurationError("tolerance must be positive")
        if self.max_iterations < 0:
            raise ConfigurationError("max_iterations must be >= 0")
        if self.inner_steps < 1:
            raise ConfigurationError("inner_steps must be >= 1")


@dataclass
class ConvergenceReport:
    converged: bool
    iterations: int
    final_max_delta: float


# ---------------------------------------------------------------------------
# Sweep plan: index bookkeeping precomputed once per geometry.
# ---------------------------------------------------------------------------

@dataclass
class _ElectrodePlan:
    eid: int
    # Interface points storing the metal potential directly (every adjacent
    # non-tangent face is absent; metal touches only walls at this point).
    contact: List[int]
    # (point, electrolyte neighbor, section) with a single defined normal.
    direct: List[Tuple[int, int, str]]
    # Normal-free points: (point, donor interface points, fallback
    # (neighbor, section) pairs, rank); sorted by ascending rank so donors
    # are resolved first.
    averaged: List[Tuple[int, List[int], List[Tuple[int, str]], int]]
    # Surface quadrature for the floating update: (point, neighbor, weight).
    elements: List[Tuple[int, int, float]]


@dataclass
class _SweepPlan:
    targets: List[int]
    neighbors: List[Tuple[int, int, int, int, int, int]]
    electrode_plans: List[_ElectrodePlan]
    contact_set: frozenset


def _flat(i: int, j: int, k: int, nx: int, ny: int) -> int:
    return i + nx * (j + ny * k)


def _build_plan(cell: CellGeometry, mask: Mask3D) -> _SweepPlan:
    nx, ny, nz = cell.grid.shape
    kind = mask.kind

    targets: List[int] = []
    neighbors: List[Tuple[int, int, int, int, int, int]] = []
    dims = (nx, ny, nz)
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                if kind[i, j, k] != ELECTROLYTE:
                    continue
                p = _flat(i, j, k, nx, ny)
                nb = []
                coords = (i, j, k)
                strides = (1, nx, nx * ny)
                for ax in range(3):
                    for side in (-1, 1):
                        c = coords[ax] + side
                        if 0 <= c < dims[ax]:
                            nb.append(p + side * strides[ax])
                        else:
                            # Insulating wall: mirror closure doubles the
                            # interior neighbor.
                            nb.append(p - side * strides[ax])
                targets.append(p)
                neighbors.append(tuple(nb))

    plans: List[_ElectrodePlan] = []
    contact_all: set = set()
    unit = ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    for eid, e in enumerate(cell.electrodes):
        i1, i2, j1, j2, k1, k2 = e.box
        faces = list(iter_faces(e, cell.grid))

        def point_faces(pt):
            out = []
            for axis, side, plane, tangent in faces:
                if pt[axis] == plane:
                    out.append((axis, side, tangent))
            return out

        def ntf_rank(pt) -> int:
            return sum(1 for _, _, tangent in point_faces(pt) if not tangent)

        contact: List[int] = []
        direct: List[Tuple[int, int, str]] = []
        averaged: List[Tuple[int, List[int], List[Tuple[int, str]], int]] = []
        for k in range(k1, k2 + 1):
            for j in range(j1, j2 + 1):
                for i in range(i1, i2 + 1):
                    on_boundary = (i in (i1, i2) or j in (j1, j2) or k in (k1, k2))
                    if not on_boundary:
                        continue
                    pt = (i, j, k)
                    pf = _flat(i, j, k, nx, ny)
                    ntf = [(axis, side) for axis, side, tangent in point_faces(pt)
                           if not tangent]
                    if not ntf:
                        contact.append(pf)
                        contact_all.add(pf)
                        continue
                    section = e.section_at(i)
                    if len(ntf) == 1:
                        axis, side = ntf[0]
                        qf = pf + side * (1, nx, nx * ny)[axis]
                        direct.append((pf, qf, section))
                        continue
                    donors: List[int] = []
                    my_rank = len(ntf)
                    for ax in range(3):
                        for side in (-1, 1):
                            q = (pt[0] + side * unit[ax][0],
                                 pt[1] + side * unit[ax][1],
                                 pt[2] + side * unit[ax][2])
                            if not e.contains_index(*q):
                                continue
                            r = ntf_rank(q)
                            if 1 <= r < my_rank:
                                donors.append(_flat(q[0], q[1], q[2], nx, ny))
                    fallback = [(pf + side * (1, nx, nx * ny)[axis], section)
                                for axis, side in ntf]
                    averaged.append((pf, donors, fallback, my_rank))
        averaged.sort(key=lambda item: item[3])

        elements = [
            (_flat(*el.point, nx, ny),
             _flat(el.point[0] + el.normal[0], el.point[1] + el.normal[1],
                   el.point[2] + el.normal[2], nx, ny),
             el.area_factor)
            for el in surface_elements(e, cell.grid)
        ]
        if e.floating and not elements:
            raise ConfigurationError(
                "floating electrode %d has no face exposed to the electrolyte" % eid
            )
        plans.append(_ElectrodePlan(eid, contact, direct, averaged, elements))

    return _SweepPlan(targets, neighbors, plans, frozenset(contact_all))


# ---------------------------------------------------------------------------
# Solver state.
# ---------------------------------------------------------------------------

@dataclass
class SolverState:
    """Potential field plus floating metal potentials and sweep bookkeeping."""

    V: np.ndarray
    floating_vm: Dict[int, float]
    mask: Mask3D
    iteration_count: int = 0
    last_max_delta: float = math.inf
    _plan: Optional[_SweepPlan] = field(default=None, repr=False)

    def metal_potential(self, cell: CellGeometry, eid: int) -> float:
        e = cell.electrodes[eid]
        if e.floating:
            return self.floating_vm[eid]
        return e.metal_potential


def _ensure_plan(cell: CellGeometry, state: SolverState) -> _SweepPlan:
    if state._plan is None:
        state._plan = _build_plan(cell, state.mask)
    return state._plan


def _stability_check(cell: CellGeometry) -> None:
    h = cell.grid.h
    worst = max(
        (max(e.polarization.k_a, e.polarization.k_c) for e in cell.electrodes),
        default=0.0,
    )
    if worst * cell.conductivity / h >= 1.0:
        warnings.warn(
            "polarization slope times conductivity exceeds the grid spacing "
            "(k*sigma/h >= 1); the interface update may diverge",
            RuntimeWarning,
            stacklevel=3,
        )


def init_potentials(cell: CellGeometry) -> SolverState:
    """Initial guess: linear x-ramp between energized electrodes.

    The ramp drops by the zero-current jump 2*e_r across each intervening
    floating electrode; each floating metal potential starts at the midpoint
    of its local jump. Any finite guess converges to the same fixed point,
    this one merely starts close to it.
    """
    mask = build_occupancy_mask(cell)
    anodes = cell.energized(ANODE)
    cathodes = cell.energized(CATHODE)
    if not anodes or not cathodes:
        raise ConfigurationError(
            "cell needs at least one energized anode and one energized cathode"
        )
    _stability_check(cell)

    h = cell.grid.h
    energized = sorted(
        ((0.5 * (cell.electrodes[eid].box[0] + cell.electrodes[eid].box[1]) * h,
          cell.electrodes[eid].metal_potential)
         for eid in anodes + cathodes),
        key=lambda t: t[0],
    )
    floats = sorted(
        ((0.5 * (cell.electrodes[eid].box[0] + cell.electrodes[eid].box[1]) * h,
          cell.electrodes[eid].polarization.e_r, eid)
         for eid in cell.floating_ids()),
        key=lambda t: t[0],
    )

    floating_vm: Dict[int, float] = {}

    def segment(xl, vl, xr, vr):
        """Breakpoints and slope of the ramp between two energized plates."""
        inner = [f for f in floats if xl < f[0] < xr]
        sign = 0.0 if vl == vr else math.copysign(1.0, vl - vr)
        total_jump = sign * sum(2.0 * er for _, er, _ in inner)
        slope = ((vr - vl) + total_jump) / (xr - xl)
        return inner, sign, slope

    def profile(x: float) -> float:
        if x <= energized[0][0]:
            return energized[0][1]
        if x >= energized[-1][0]:
            return energized[-1][1]
        for (xl, vl), (xr, vr) in zip(energized, energized[1:]):
            if xl <= x <= xr:
                inner, sign, slope = segment(xl, vl, xr, vr)
                v = vl + slope * (x - xl)
                for xc, er, _ in inner:
                    if x > xc:
                        v -= sign * 2.0 * er
                return v
        return energized[-1][1]

    for xc, er, eid in floats:
        left = profile(xc - 1e-12 * max(h, 1.0))
        sign = 0.0
        for (xl, vl), (xr, vr) in zip(energized, energized[1:]):
            if xl < xc < xr:
                _, sign, _ = segment(xl, vl, xr, vr)
                break
        floating_vm[eid] = left - sign * er

    nx, ny, nz = cell.grid.shape
    xs = np.arange(nx) * h
    column = np.array([profile(x) for x in xs])
    V = np.broadcast_to(column[:, None, None], (nx, ny, nz)).copy()
    for eid, e in enumerate(cell.electrodes):
        i1, i2, j1, j2, k1, k2 = e.box
        vm = floating_vm.get(eid, e.metal_potential)
        V[i1:i2 + 1, j1:j2 + 1, k1:k2 + 1] = vm

    state = SolverState(V=V, floating_vm=floating_vm, mask=mask)
    state._plan = _build_plan(cell, mask)
    return state


# ---------------------------------------------------------------------------
# Update phases.
# ---------------------------------------------------------------------------

def electrode_dv(section: str, params: PolarizationParams, sigma: float,
                 normal_gradient: float) -> float:
    """Signed jump DV (electrode minus electrolyte) of the linear polarization law.

    Anodic sections lose e_r plus the ohmic overpotential; cathodic sections
    gain it. normal_gradient is grad(V) . n with n pointing into the
    electrolyte.
    """
    if section == "anodic":
        return params.e_r - params.k_a * sigma * normal_gradient
    if section == "cathodic":
        return -params.e_r - params.k_c * sigma * normal_gradient
    raise ValueError("unknown section %r" % (section,))


def _interface_phase(flat_v: List[float], plan: _ElectrodePlan, vm: float,
                     params: PolarizationParams, sigma: float, h: float) -> float:
    dv: Dict[int, float] = {}
    for p, q, section in plan.direct:
        g = (flat_v[q] - flat_v[p]) / h
        dv[p] = electrode_dv(section, params, sigma, g)
    for p, donors, fallback, _rank in plan.averaged:
        vals = [dv[d] for d in donors if d in dv]
        if not vals:
            vals = [
                electrode_dv(section, params, sigma, (flat_v[q] - flat_v[p]) / h)
                for q, section in fallback
            ]
        dv[p] = sum(vals) / len(vals)
    max_delta = 0.0
    for p in plan.contact:
        d = abs(vm - flat_v[p])
        if d > max_delta:
            max_delta = d
        flat_v[p] = vm
    for p, jump in dv.items():
        new = vm - jump
        d = abs(new - flat_v[p])
        if d > max_delta:
            max_delta = d
        flat_v[p] = new
    return max_delta


def update_interface_potentials(cell: CellGeometry, state: SolverState,
                                eid: int) -> float:
    """Apply V = Vm - DV on the interface points of one electrode."""
    plan = _ensure_plan(cell, state)
    flat_v = state.V.ravel(order="F").tolist()
    e = cell.electrodes[eid]
    delta = _interface_phase(flat_v, plan.electrode_plans[eid],
                             state.metal_potential(cell, eid),
                             e.polarization, cell.conductivity, cell.grid.h)
    state.V = np.asarray(flat_v).reshape(cell.grid.shape, order="F")
    return delta


def _relax_phase(flat_v: List[float],
                 targets: Sequence[int],
                 neighbors: Sequence[Tuple[int, int, int, int, int, int]]) -> float:
    max_delta = 0.0
    for p, (a, b, c, d, e, f) in zip(targets, neighbors):
        new = (flat_v[a] + flat_v[b] + flat_v[c] + flat_v[d]
               + flat_v[e] + flat_v[f]) / 6.0
        diff = new - flat_v[p]
        if diff < 0.0:
            diff = -diff
        if diff > max_delta:
            max_delta = diff
        flat_v[p] = new
    return max_delta


def relax_electrolyte(cell: CellGeometry, state: SolverState) -> float:
    """One Gauss-Seidel sweep over electrolyte points; returns max |dV|."""
    plan = _ensure_plan(cell, state)
    flat_v = state.V.ravel(order="F").tolist()
    delta = _relax_phase(flat_v, plan.targets, plan.neighbors)
    state.V = np.asarray(flat_v).reshape(cell.grid.shape, order="F")
    return delta


def _floating_phase(flat_v: List[float], plan: _ElectrodePlan, vm: float) -> float:
    num = 0.0
    den = 0.0
    for p, q, ks in plan.elements:
        num += ks * (flat_v[q] - flat_v[p])
        den += ks
    return vm + num / den


def update_floating_potential(cell: CellGeometry, state: SolverState,
                              eid: int) -> float:
    """Zero-net-flux recursion: shift Vm by the weighted mean face difference."""
    e = cell.electrodes[eid]
    if not e.floating:
        raise ConfigurationError("electrode %d is not floating" % eid)
    plan = _ensure_plan(cell, state)
    flat_v = state.V.ravel(order="F").tolist()
    new_vm = _floating_phase(flat_v, plan.electrode_plans[eid],
                             state.floating_vm[eid])
    state.floating_vm[eid] = new_vm
    return new_vm


def run_iteration(cell: CellGeometry, state: SolverState) -> float:
    """One outer iteration: interface updates, relaxation, floating updates.

    Returns the max absolute potential change over all three phases
    (floating Vm changes included).
    """
    plan = _ensure_plan(cell, state)
    sigma = cell.conductivity
    h = cell.grid.h
    flat_v = state.V.ravel(order="F").tolist()

    max_delta = 0.0
    for eplan in plan.electrode_plans:
        e = cell.electrodes[eplan.eid]
        d = _interface_phase(flat_v, eplan, state.metal_potential(cell, eplan.eid),
                             e.polarization, sigma, h)
        if d > max_delta:
            max_delta = d
    d = _relax_phase(flat_v, plan.targets, plan.neighbors)
    if d > max_delta:
        max_delta = d
    for eplan in plan.electrode_plans:
        if not cell.electrodes[eplan.eid].floating:
            continue
        old = state.floating_vm[eplan.eid]
        new = _floating_phase(flat_v, eplan, old)
        state.floating_vm[eplan.eid] = new
        d = abs(new - old)
        if d > max_delta:
            max_delta = d

    state.V = np.asarray(flat_v).reshape(cell.grid.shape, order="F")
    state.iteration_count += 1
    state.last_max_delta = max_delta
    if not (math.isfinite(max_delta) and np.isfinite(state.V).all()
            and all(math.isfinite(v) for v in state.floating_vm.values())):
        raise DivergenceError(state.iteration_count)
    return max_delta


def _finalize(cell: CellGeometry, state: SolverState) -> None:
    """Write each electrode's metal potential into its interior points."""
    for eid, e in enumerate(cell.electrodes):
        i1, i2, j1, j2, k1, k2 = e.box
        vm = state.metal_potential(cell, eid)
        if e.floating:
            e.metal_potential = vm
        if i2 - i1 >= 2 and j2 - j1 >= 2 and k2 - k1 >= 2:
            state.V[i1 + 1:i2, j1 + 1:j2, k1 + 1:k2] = vm


def solve(cell: CellGeometry, state: SolverState,
          config: SolverConfig) -> ConvergenceReport:
    """Iterate to convergence (max |dV| <= tolerance) or the iteration cap.

    Supports warm starts: an already converged state finishes in one
    iteration. Raises DivergenceError on non-finite potentials.
    """
    _stability_check(cell)
    iterations = 0
    max_delta = state.last_max_delta
    converged = False
    while iterations < config.max_iterations:
        max_delta = run_iteration(cell, state)
        iterations += 1
        if max_delta <= config.tolerance:
            converged = True
            break
    _finalize(cell, state)
    final = max_delta if iterations else state.last_max_delta
    return ConvergenceReport(converged=converged, iterations=iterations,
                             final_max_delta=final)


# ---------------------------------------------------------------------------
# Derived current field.
# ---------------------------------------------------------------------------

def compute_current_field(cell: CellGeometry, state: SolverState) -> np.ndarray:
    """Current density J = -sigma * grad(V), shape (nx, ny, nz, 3).

    Central differences where both neighbors carry electrolyte-side
    potentials, one-sided differences toward the single electrolyte neighbor
    at interface discontinuities, zero normal components at cell walls, and
    J = 0 inside electrode interiors and at metal-dielectric contact points.
    """
    plan = _ensure_plan(cell, state)
    nx, ny, nz = cell.grid.shape
    h = cell.grid.h
    sigma = cell.conductivity
    kind = state.mask.kind
    contact = plan.contact_set
    V = state.V
    J = np.zeros((nx, ny, nz, 3))
    dims = (nx, ny, nz)
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                pt = (i, j, k)
                if kind[pt] == INTERIOR or _flat(i, j, k, nx, ny) in contact:
                    continue
                for ax in range(3):
                    if pt[ax] == 0 or pt[ax] == dims[ax] - 1:
                        continue  # insulating wall: zero normal component
                    back = list(pt)
                    back[ax] -= 1
                    fwd = list(pt)
                    fwd[ax] += 1
                    back = tuple(back)
                    fwd = tuple(fwd)
                    b_ok = (kind[back] != INTERIOR
                            and _flat(*back, nx, ny) not in contact)
                    f_ok = (kind[fwd] != INTERIOR
                            and _flat(*fwd, nx, ny) not in contact)
                    if b_ok and f_ok:
                        e_comp = (V[back] - V[fwd]) / (2.0 * h)
                    elif b_ok:
                        e_comp = (V[back] - V[pt]) / h
                    elif f_ok:
                        e_comp = (V[pt] - V[fwd]) / h
                    else:
                        e_comp = 0.0
                    J[i, j, k, ax] = sigma * e_comp
    return J


def surface_fluxes(cell: CellGeometry, state: SolverState,
                   eid: int) -> List[Tuple[float, float]]:
    """(area weight, J.n) per surface element, from the one-sided difference."""
    plan = _ensure_plan(cell, state)
    h = cell.grid.h
    sigma = cell.conductivity
    flat_v = state.V.ravel(order="F")
    out = []
    for p, q, ks in plan.electrode_plans[eid].elements:
        jn = -sigma * (flat_v[q] - flat_v[p]) / h
        out.append((ks, jn))
    return out


def net_flux(cell: CellGeometry, state: SolverState, eid: int) -> float:
    """Total current [A] leaving the electrode through non-tangent faces."""
    h = cell.grid.h
    return sum(ks * h * h * jn for ks, jn in surface_fluxes(cell, state, eid))


_AXIS_NAMES = {"x": 0, "y": 1, "z": 2}


def extract_slice(cell: CellGeometry, state: SolverState, axis, index: int,
                  quantity: str, j_field: Optional[np.ndarray] = None) -> np.ndarray:
    """2D plane of V or |J| orthogonal to the given axis at a grid index."""
    ax = _AXIS_NAMES.get(axis, axis)
    if ax not in (0, 1, 2):
        raise ValueError("axis must be x, y or z")
    if not (0 <= index < cell.grid.shape[ax]):
        raise IndexError("slice index %d outside axis range" % index)
    if quantity == "V":
        return np.take(state.V, index, axis=ax).copy()
    if quantity == "Jmag":
        if j_field is None:
            j_field = compute_current_field(cell, state)
        mag = np.linalg.norm(j_field, axis=-1)
        return np.take(mag, index, axis=ax).copy()
    raise ValueError("quantity must be 'V' or 'Jmag'")


def surface_normal_current(cell: CellGeometry, state: SolverState,
                           eid: int) -> Dict[str, np.ndarray]:
    """Deposit maps on the principal (+/-x) faces.

    Cathodic faces map -J.n (deposition rate), anodic faces +J.n, both from
    the one-sided potential difference. Keys are "minus_x" / "plus_x"; faces
    tangent to the cell wall are omitted.
    """
    e = cell.electrodes[eid]
    nx, ny, _ = cell.grid.shape
    h = cell.grid.h
    sigma = cell.conductivity
    V = state.V
    i1, i2, j1, j2, k1, k2 = e.box
    maps: Dict[str, np.ndarray] = {}
    for name, plane, step in (("minus_x", i1, -1), ("plus_x", i2, +1)):
        if (plane == 0 and step < 0) or (plane == nx - 1 and step > 0):
            continue  # tangent face
        section = e.section_at(plane)
        values = np.zeros((j2 - j1 + 1, k2 - k1 + 1))
        for j in range(j1, j2 + 1):
            for k in range(k1, k2 + 1):
                jn = -sigma * (V[plane + step, j, k] - V[plane, j, k]) / h
                values[j - j1, k - k1] = -jn if section == "cathodic" else jn
        maps[name] = values
    return maps
