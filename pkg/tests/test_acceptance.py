"""Acceptance suite: one test per release criterion.

Each test is self-contained and checks the stated quantity at the stated
tolerance; run with ``pytest -v tests/test_acceptance.py`` for one pass/fail
line per criterion.
"""
from __future__ import annotations

import math
import time

import numpy as np
import pytest

from conftest import bipolar_cell, parallel_plate_cell
from ewcell.geometry import (
    CellGeometry,
    ELECTROLYTE,
    Electrode,
    GridSpec,
    OutsideDomain,
    PolarizationParams,
)
from ewcell.persist import cell_from_doc, cell_to_doc
from ewcell.shading import LightingParams, build_light_table, line_intensity
from ewcell.solver import (
    SolverConfig,
    compute_current_field,
    init_potentials,
    net_flux,
    solve,
    surface_fluxes,
    surface_normal_current,
)
from ewcell.tracer import (
    TraceConfig,
    ZIGZAG,
    adapt_step,
    generate_seeds,
    rk4_step,
    seed_counts,
    seed_total,
    trace_all,
    trace_field,
)


def test_criterion_01_parallel_plate_linear_ramp():
    """1 V across full-section plates: V linear to 1e-4, |J| uniform to 0.1%,
    solved under 10 s."""
    cell = parallel_plate_cell(dv=1.0, sigma=50.0)
    state = init_potentials(cell)
    t0 = time.perf_counter()
    report = solve(cell, state, SolverConfig(tolerance=1e-6,
                                             max_iterations=50000))
    elapsed = time.perf_counter() - t0
    assert report.converged
    assert elapsed < 10.0

    # Analytic ramp between the inner electrode faces (i = 1 at 1 V, i = 19
    # at 0 V) at every electrolyte point.
    kind = state.mask.kind
    worst = 0.0
    for i in range(21):
        expected = min(max((19 - i) / 18.0, 0.0), 1.0)
        plane = state.V[i, :, :]
        err = np.abs(plane - expected)[kind[i] == ELECTROLYTE]
        if err.size:
            worst = max(worst, float(err.max()))
    assert worst <= 1e-4

    # |J| uniform to 0.1% relative over the electrolyte gap.
    J = compute_current_field(cell, state)
    mags = np.linalg.norm(J, axis=-1)[2:19, :, :]
    spread = (mags.max() - mags.min()) / mags.mean()
    assert spread <= 1e-3


def test_criterion_02_floating_electrode_symmetry():
    """Centered floating plate between symmetric plates settles at the mean
    metal potential and carries no net current."""
    dv = 1.0
    cell = bipolar_cell(dv=dv, e_r=0.1, k_a=1e-4, k_c=1e-4)
    state = init_potentials(cell)
    report = solve(cell, state, SolverConfig(tolerance=1e-7,
                                             max_iterations=50000))
    assert report.converged

    vm = state.floating_vm[2]
    assert abs(vm - 0.5 * (dv + 0.0)) <= 1e-3 * dv

    fluxes = surface_fluxes(cell, state, 2)
    area = sum(ks for ks, _ in fluxes) * cell.grid.h ** 2
    mean_jn = sum(ks * abs(jn) for ks, jn in fluxes) / sum(ks for ks, _ in fluxes)
    normalized = abs(net_flux(cell, state, 2)) / (mean_jn * area)
    assert normalized <= 1e-3


def test_criterion_03_laplace_residual_randomized():
    """After convergence the six-neighbor mirror stencil residual stays below
    the solve tolerance at every plain electrolyte point, across 10 random
    geometries."""
    rng = np.random.default_rng(42)
    tol = 1e-4

    for trial in range(10):
        nx = int(rng.integers(12, 18))
        ny = int(rng.integers(7, 11))
        nz = int(rng.integers(7, 11))
        grid = GridSpec(nx, ny, nz, 0.01)
        electrodes = [
            Electrode(kind="anode", box=(0, 1, 0, ny - 1, 0, nz - 1),
                      metal_potential=float(rng.uniform(0.5, 3.0)),
                      polarization=PolarizationParams(
                          e_r=float(rng.uniform(0, 0.1)))),
            Electrode(kind="cathode", box=(nx - 2, nx - 1, 0, ny - 1, 0, nz - 1),
                      polarization=PolarizationParams(
                          e_r=float(rng.uniform(0, 0.1)))),
        ]
        if trial % 2 == 0:
            j1 = int(rng.integers(1, ny - 4))
            k1 = int(rng.integers(1, nz - 4))
            electrodes.append(Electrode(
                kind="bipolar",
                box=(nx // 2 - 1, nx // 2 + 1, j1, j1 + 2, k1, k1 + 2),
                polarization=PolarizationParams(e_r=0.05)))
        cell = CellGeometry(grid=grid, conductivity=50.0,
                            electrodes=electrodes)
        state = init_potentials(cell)
        report = solve(cell, state, SolverConfig(tolerance=tol,
                                                 max_iterations=50000))
        assert report.converged

        kind = state.mask.kind
        V = state.V
        worst = 0.0
        for i in range(nx):
            for j in range(ny):
                for k in range(nz):
                    if kind[i, j, k] != ELECTROLYTE:
                        continue
                    total = 0.0
                    for ax, n in ((0, nx), (1, ny), (2, nz)):
                        for side in (-1, 1):
                            c = [i, j, k]
                            c[ax] += side
                            if not (0 <= c[ax] < n):
                                c[ax] -= 2 * side
                            total += V[tuple(c)]
                    worst = max(worst, abs(V[i, j, k] - total / 6.0))
        assert worst <= tol


def test_criterion_04_polarization_regime_behavior():
    """High reaction threshold on the floating plate: at low drive current
    detours around it (with reverse current on its cathodic face); at high
    drive most anode streamlines cross its plane."""
    def crossing_fraction(applied):
        cell = bipolar_cell(dv=applied, e_r=0.89)
        state = init_potentials(cell)
        report = solve(cell, state, SolverConfig(tolerance=1e-7,
                                                 max_iterations=50000))
        assert report.converged
        groups = trace_all(cell, state, TraceConfig.for_grid(cell.grid))
        plane_x = (cell.electrodes[2].split_index + 0.5) * cell.grid.h
        lines = groups[0]
        assert lines
        past = sum(1 for l in lines if l.positions[-1, 0] > plane_x)
        cath = surface_normal_current(cell, state, 2)["minus_x"]
        return past / len(lines), cath

    frac_low, cath_low = crossing_fraction(1.0)
    frac_high, _ = crossing_fraction(3.0)
    assert frac_high > frac_low
    assert (cath_low < 0).any()


def test_criterion_05_tracer_circle_and_straight_line():
    """Adaptive RK4 keeps a circular streamline's radius within 0.1% over one
    revolution and reproduces a constant field exactly."""
    r0 = 0.3
    h = 0.05

    def rot(p):
        c = p[:2] - 0.5
        rad = np.hypot(*c)
        if rad == 0:
            return np.zeros(3)
        return np.array([-c[1] / rad, c[0] / rad, 0.0])

    def sampler(p):
        if np.any(p < 0.0) or np.any(p > 1.0):
            raise OutsideDomain("outside")
        return rot(p)

    cfg = TraceConfig(tol=1e-6 * h, d_min=1e-4 * h, d_max=h)
    line = trace_field(sampler, np.array([0.5 + r0, 0.5, 0.5]), cfg,
                       max_arc=2 * math.pi * r0)
    radii = np.hypot(line.positions[:, 0] - 0.5, line.positions[:, 1] - 0.5)
    assert np.abs(radii - r0).max() / r0 < 1e-3
    # Full revolution was actually covered.
    arc = np.linalg.norm(np.diff(line.positions, axis=0), axis=1).sum()
    assert arc >= 2 * math.pi * r0

    # Constant field: every RK4 stage agrees, so the error estimate is 0 and
    # the polyline is exactly straight.
    f = lambda x: np.array([1.0, 0.0, 0.0])
    x = np.zeros(3)
    for _ in range(20):
        x_next, delta = rk4_step(f, x, 0.07)
        assert np.all(delta == 0.0)
        assert x_next[1] == 0.0 and x_next[2] == 0.0
        x = x_next


def test_criterion_06_step_controller_halving():
    """An error of 32x the safety-scaled tolerance halves the step via the
    fifth-root law, exact to 1e-12."""
    tol, safety = 1e-4, 0.9
    for d in (0.001, 0.02, 0.5):
        d_new, accept = adapt_step(d, 32.0 * safety * tol, tol, safety,
                                   1e-9, 1e9)
        assert not accept
        assert abs(d_new - 0.5 * d) <= 1e-12 * d


def test_criterion_07_seed_counts_and_totals():
    """Cube at the corner density seeds exactly its 8 vertices; emitted seed
    totals match the closed-form lattice count on 20 random electrodes."""
    I = J = K = 10.0
    S = I * J + J * K + I * K
    rho8 = 4.0 / S
    assert rho8 == pytest.approx(4.0 / 300.0)
    counts = seed_counts(I, J, K, rho8, clamp_min=2)
    assert counts == (2, 2, 2)
    assert seed_total(*counts) == 8
    assert seed_total(*counts) == pytest.approx(2.0 * rho8 * S)

    rng = np.random.default_rng(7)
    grid = GridSpec(40, 40, 40, 0.01)
    for _ in range(20):
        dims = rng.integers(1, 12, size=3)
        lo = rng.integers(0, 5, size=3)
        box = (int(lo[0]), int(lo[0] + dims[0]),
               int(lo[1]), int(lo[1] + dims[1]),
               int(lo[2]), int(lo[2] + dims[2]))
        e = Electrode(kind="anode", box=box, metal_potential=1.0)
        rho_s = float(rng.uniform(0.005, 0.5))
        seeds = generate_seeds(e, grid, rho_s)
        n = seed_counts(float(dims[0]), float(dims[1]), float(dims[2]), rho_s)
        assert len(seeds) == seed_total(*n)
        # No duplicates.
        assert len({tuple(np.round(s, 12)) for s in seeds}) == len(seeds)


def test_criterion_08_light_table_oracle():
    """Table endpoints and center are exact; table lookups match the
    two-vector lighting oracle within one interpolation cell over 1e4 random
    tangents."""
    params = LightingParams()
    peak = params.ka + params.kd + params.ks

    # Exactness on a table whose lattice contains t1 = 0.5.
    odd = build_light_table(params, resolution=257)
    assert odd.entries[0] == params.ka
    assert odd.entries[-1] == params.ka
    assert odd.entries[128] == peak
    assert odd.lookup(0.0) == params.ka
    assert odd.lookup(1.0) == params.ka
    assert odd.lookup(0.5) == peak
    assert np.array_equal(odd.entries, odd.entries[::-1])

    # Default-resolution table against the headlight (L = V) oracle.
    table = build_light_table(params)
    gap = float(np.abs(np.diff(table.entries)).max())
    L = np.array([0.0, 0.0, 1.0])
    rng = np.random.default_rng(2024)
    for _ in range(10000):
        T = rng.normal(size=3)
        T /= np.linalg.norm(T)
        t1 = (float(np.dot(L, T)) + 1.0) / 2.0
        assert abs(table.lookup(t1) - line_intensity(L, L, T, params)) <= gap


def test_criterion_09_persistence_round_trip_and_warm_start():
    """Documents reproduce the cell and potentials exactly; resuming a saved
    converged state finishes within 2 iterations."""
    cell = bipolar_cell(dv=1.0, e_r=0.1)
    state = init_potentials(cell)
    config = SolverConfig(tolerance=1e-6, max_iterations=50000)
    report = solve(cell, state, config)
    assert report.converged

    doc = cell_to_doc(cell, state=state, solver_config=config)
    cell2, state2, config2, _ = cell_from_doc(doc)
    assert cell2.grid == cell.grid
    assert [e.box for e in cell2.electrodes] == [e.box for e in cell.electrodes]
    assert np.array_equal(state2.V, state.V)
    assert state2.floating_vm == state.floating_vm
    assert config2 == config

    warm = solve(cell2, state2, config2)
    assert warm.converged
    assert warm.iterations <= 2


def test_criterion_10_zigzag_suppression():
    """On a field that inverts sign across a plane, every trace stops with
    the zigzag reason and never stores a direction reversal."""
    def sampler(p):
        if np.any(p < 0.0) or np.any(p > 1.0):
            raise OutsideDomain("outside")
        return np.array([1.0 if p[0] < 0.5 else -1.0, 0.0, 0.0])

    cfg = TraceConfig(tol=1e-6, d_min=0.005, d_max=0.1)
    lines = []
    # Seeds placed so the final accepted step straddles the inversion plane.
    for m in range(4):
        x0 = 0.5 - m * cfg.d_max - 0.58 * cfg.d_max
        lines.append(trace_field(sampler, np.array([x0, 0.5, 0.5]), cfg))
    assert lines
    for line in lines:
        assert line.termination_reason == ZIGZAG
        dots = (line.tangents[:-1] * line.tangents[1:]).sum(axis=1)
        assert (dots >= 0.0).all()
