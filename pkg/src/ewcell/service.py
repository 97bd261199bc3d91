"""HTTP service exposing the cell editor, solver control and field queries.

Single-session FastAPI application mirroring the interactive workflow:
geometry editing, synchronous Step and background Run with polled status,
and on-demand streamlines, slices, probes, deposit maps and shading data.
Request and response bodies reuse the persisted JSON document schemas.
"""
from __future__ import annotations

import math
import threading
from typing import List, Optional

import numpy as np
from fastapi import Body, FastAPI, HTTPException
from pydantic import BaseModel, Field

from .geometry import (
    CellGeometry,
    Electrode,
    GeometryError,
    GridSpec,
    OutsideDomain,
    PolarizationParams,
    sample_trilinear,
)
from .persist import cell_from_doc, cell_to_doc, streamlines_to_doc
from .shading import (
    COLORMAPS,
    LightingParams,
    autofocus,
    build_light_table,
)
from .solver import (
    ConfigurationError,
    DivergenceError,
    SolverConfig,
    SolverState,
    compute_current_field,
    extract_slice,
    init_potentials,
    run_iteration,
    surface_normal_current,
)
from .tracer import TraceConfig, trace_all

IDLE = "idle"
STEPPING = "stepping"
RUNNING = "running"
CONVERGED = "converged"
DIVERGED = "diverged"


class Session:
    """One editable cell plus at most one solve executing at a time.

    Readers consume immutable snapshots published between iteration cycles,
    so partial results stay consistent while a background run mutates the
    working state.
    """

    def __init__(self, cell: Optional[CellGeometry] = None,
                 solver_config: Optional[SolverConfig] = None,
                 trace_config: Optional[TraceConfig] = None):
        self.lock = threading.Lock()
        self.cell = cell if cell is not None else _default_cell()
        self.solver_config = solver_config or SolverConfig()
        self.trace_config = trace_config or TraceConfig.for_grid(self.cell.grid)
        self.state: Optional[SolverState] = None
        self.snapshot: Optional[SolverState] = None
        self.status = IDLE
        self._thread: Optional[threading.Thread] = None
        self._cancel = threading.Event()

    # -- lifecycle ---------------------------------------------------------

    def running(self) -> bool:
        return self._thread is not None and self._thread.is_alive()

    def require_editable(self) -> None:
        if self.running():
            raise HTTPException(status_code=409,
                                detail="a solve is running; cancel it first")

    def invalidate(self) -> None:
        self.state = None
        self.snapshot = None
        self.status = IDLE

    def replace_cell(self, cell: CellGeometry,
                     state: Optional[SolverState] = None,
                     solver_config: Optional[SolverConfig] = None,
                     trace_config: Optional[TraceConfig] = None) -> None:
        self.require_editable()
        self.cell = cell
        self.invalidate()
        if solver_config is not None:
            self.solver_config = solver_config
        if trace_config is not None:
            self.trace_config = trace_config
        if state is not None:
            self.state = state
            self.snapshot = _copy_state(state)
            if state.last_max_delta <= self.solver_config.tolerance:
                self.status = CONVERGED

    # -- solving -----------------------------------------------------------

    def _ensure_state(self) -> SolverState:
        if self.state is None:
            try:
                self.state = init_potentials(self.cell)
            except (ConfigurationError, GeometryError) as exc:
                raise HTTPException(status_code=400, detail=str(exc))
        return self.state

    def publish(self) -> None:
        with self.lock:
            self.snapshot = _copy_state(self.state)

    def step(self, steps: Optional[int] = None) -> dict:
        self.require_editable()
        state = self._ensure_state()
        n = steps if steps is not None else self.solver_config.inner_steps
        self.status = STEPPING
        delta = state.last_max_delta
        try:
            for _ in range(n):
                delta = run_iteration(self.cell, state)
                if delta <= self.solver_config.tolerance:
                    break
        except DivergenceError:
            self.status = DIVERGED
            self.publish()
            return self.progress()
        self.status = (CONVERGED if delta <= self.solver_config.tolerance
                       else IDLE)
        self.publish()
        return self.progress()

    def run(self) -> None:
        self.require_editable()
        state = self._ensure_state()
        self._cancel.clear()
        self.status = RUNNING

        def work() -> None:
            iterations = 0
            try:
                while iterations < self.solver_config.max_iterations:
                    if self._cancel.is_set():
                        self.status = IDLE
                        break
                    delta = run_iteration(self.cell, state)
                    iterations += 1
                    if iterations % self.solver_config.inner_steps == 0:
                        self.publish()
                    if delta <= self.solver_config.tolerance:
                        self.status = CONVERGED
                        break
                else:
                    self.status = IDLE
            except DivergenceError:
                self.status = DIVERGED
            self.publish()

        self._thread = threading.Thread(target=work, daemon=True)
        self._thread.start()

    def cancel(self) -> dict:
        if self.running():
            self._cancel.set()
            self._thread.join()
        return self.progress()

    def progress(self) -> dict:
        st = self.snapshot if self.snapshot is not None else self.state
        delta = st.last_max_delta if st is not None else None
        return {
            "status": self.status,
            "iterations": st.iteration_count if st is not None else 0,
            "last_max_delta": (None if delta is None or not math.isfinite(delta)
                               else delta),
            "converged": self.status == CONVERGED,
        }

    # -- results -----------------------------------------------------------

    def solved_snapshot(self) -> SolverState:
        with self.lock:
            st = self.snapshot
        if st is None or st.iteration_count < 1:
            raise HTTPException(status_code=422,
                                detail="no solved potentials yet; run the solver")
        return st


def _copy_state(state: SolverState) -> SolverState:
    dup = SolverState(
        V=state.V.copy(),
        floating_vm=dict(state.floating_vm),
        mask=state.mask,
        iteration_count=state.iteration_count,
        last_max_delta=state.last_max_delta,
    )
    dup._plan = state._plan  # plans are immutable per geometry
    return dup


def _default_cell() -> CellGeometry:
    grid = GridSpec(21, 11, 11, 0.01)
    return CellGeometry(
        grid=grid,
        conductivity=50.0,
        electrodes=[
            Electrode(kind="anode", box=(0, 1, 0, 10, 0, 10), metal_potential=1.0),
            Electrode(kind="cathode", box=(19, 20, 0, 10, 0, 10),
                      metal_potential=0.0),
        ],
    )


# ---------------------------------------------------------------------------
# Request/response models.
# ---------------------------------------------------------------------------

class PolarizationModel(BaseModel):
    e_r: float = 0.0
    k_a: float = 0.0
    k_c: float = 0.0


class ElectrodeModel(BaseModel):
    kind: str
    box: List[int] = Field(min_length=6, max_length=6)
    split_index: Optional[int] = None
    polarization: PolarizationModel = PolarizationModel()
    metal_potential: float = 0.0
    floating: Optional[bool] = None


class ElectrodePatchModel(BaseModel):
    kind: Optional[str] = None
    box: Optional[List[int]] = Field(default=None, min_length=6, max_length=6)
    split_index: Optional[int] = None
    polarization: Optional[PolarizationModel] = None
    metal_potential: Optional[float] = None
    floating: Optional[bool] = None


class StepRequest(BaseModel):
    steps: Optional[int] = Field(default=None, ge=1)


class ProgressModel(BaseModel):
    status: str
    iterations: int
    last_max_delta: Optional[float]
    converged: bool


class ElectrodeIdModel(BaseModel):
    id: int


class ProbeModel(BaseModel):
    position: List[float]
    potential: float
    current: List[float]
    current_magnitude: float


def _electrode_from_model(m: ElectrodeModel) -> Electrode:
    return Electrode(
        kind=m.kind,
        box=tuple(m.box),
        split_index=m.split_index,
        polarization=PolarizationParams(
            e_r=m.polarization.e_r, k_a=m.polarization.k_a, k_c=m.polarization.k_c),
        metal_potential=m.metal_potential,
        floating=m.floating,
    )


# ---------------------------------------------------------------------------
# Application.
# ---------------------------------------------------------------------------

def create_app(session: Optional[Session] = None) -> FastAPI:
    app = FastAPI(title="ewcell", version="0.1.0")
    ses = session if session is not None else Session()
    app.state.session = ses

    def rebuilt_cell(electrodes: List[Electrode]) -> CellGeometry:
        try:
            return CellGeometry(grid=ses.cell.grid,
                                conductivity=ses.cell.conductivity,
                                electrodes=electrodes)
        except GeometryError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.get("/cell")
    def get_cell() -> dict:
        return cell_to_doc(ses.cell, state=None,
                           solver_config=ses.solver_config,
                           trace_config=ses.trace_config)

    @app.put("/cell")
    def put_cell(doc: dict = Body(...)) -> dict:
        try:
            cell, state, solver_config, trace_config = cell_from_doc(doc)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        ses.replace_cell(cell, state, solver_config, trace_config)
        return {"electrodes": len(cell.electrodes),
                "state_loaded": state is not None}

    @app.post("/electrode", status_code=201)
    def add_electrode(model: ElectrodeModel) -> ElectrodeIdModel:
        ses.require_editable()
        try:
            electrode = _electrode_from_model(model)
        except GeometryError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        cell = rebuilt_cell(ses.cell.electrodes + [electrode])
        ses.cell = cell
        ses.invalidate()
        return ElectrodeIdModel(id=len(cell.electrodes) - 1)

    def existing(eid: int) -> Electrode:
        if not (0 <= eid < len(ses.cell.electrodes)):
            raise HTTPException(status_code=404,
                                detail="no electrode %d" % eid)
        return ses.cell.electrodes[eid]

    @app.patch("/electrode/{eid}")
    def patch_electrode(eid: int, patch: ElectrodePatchModel) -> dict:
        ses.require_editable()
        e = existing(eid)
        merged = ElectrodeModel(
            kind=patch.kind if patch.kind is not None else e.kind,
            box=list(patch.box) if patch.box is not None else list(e.box),
            split_index=(patch.split_index if patch.split_index is not None
                         else e.split_index),
            polarization=(patch.polarization if patch.polarization is not None
                          else PolarizationModel(e_r=e.polarization.e_r,
                                                 k_a=e.polarization.k_a,
                                                 k_c=e.polarization.k_c)),
            metal_potential=(patch.metal_potential
                             if patch.metal_potential is not None
                             else e.metal_potential),
            floating=patch.floating if patch.floating is not None else e.floating,
        )
        try:
            electrode = _electrode_from_model(merged)
        except GeometryError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        electrodes = list(ses.cell.electrodes)
        electrodes[eid] = electrode
        ses.cell = rebuilt_cell(electrodes)
        ses.invalidate()
        return {"id": eid}

    @app.delete("/electrode/{eid}")
    def delete_electrode(eid: int) -> dict:
        ses.require_editable()
        existing(eid)
        electrodes = [e for i, e in enumerate(ses.cell.electrodes) if i != eid]
        ses.cell = rebuilt_cell(electrodes)
        ses.invalidate()
        return {"deleted": eid}

    @app.post("/simulate/step")
    def simulate_step(req: StepRequest = StepRequest()) -> ProgressModel:
        return ProgressModel(**ses.step(req.steps))

    @app.post("/simulate/run")
    def simulate_run() -> ProgressModel:
        ses.run()
        return ProgressModel(**ses.progress())

    @app.post("/simulate/cancel")
    def simulate_cancel() -> ProgressModel:
        return ProgressModel(**ses.cancel())

    @app.get("/simulate/status")
    def simulate_status() -> ProgressModel:
        return ProgressModel(**ses.progress())

    @app.get("/streamlines")
    def get_streamlines(density: Optional[float] = None,
                        maxArcUni: Optional[float] = None,
                        maxArcBip: Optional[float] = None) -> dict:
        state = ses.solved_snapshot()
        cfg = ses.trace_config
        overrides = {}
        if density is not None:
            overrides["seed_density"] = density
        if maxArcUni is not None:
            overrides["max_arc_unipolar"] = maxArcUni
        if maxArcBip is not None:
            overrides["max_arc_bipolar"] = maxArcBip
        if overrides:
            values = {f: getattr(cfg, f) for f in (
                "tol", "d_min", "d_max", "safety", "direction_probe",
                "seed_density", "max_arc_unipolar", "max_arc_bipolar",
                "max_vertices")}
            values.update(overrides)
            try:
                cfg = TraceConfig(**values)
            except ValueError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
        groups = trace_all(ses.cell, state, cfg)
        return streamlines_to_doc(groups)

    @app.get("/slice")
    def get_slice(axis: str, index: int, quantity: str = "V") -> dict:
        state = ses.solved_snapshot()
        try:
            values = extract_slice(ses.cell, state, axis, index, quantity)
        except IndexError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"axis": axis, "index": index, "quantity": quantity,
                "dims": list(values.shape), "order": "row-major",
                "values": values.ravel(order="C").tolist()}

    @app.get("/probe")
    def get_probe(x: float, y: float, z: float) -> ProbeModel:
        state = ses.solved_snapshot()
        pos = [x, y, z]
        try:
            v = float(sample_trilinear(state.V, ses.cell.grid.h, pos))
            j_field = compute_current_field(ses.cell, state)
            j = np.asarray(sample_trilinear(j_field, ses.cell.grid.h, pos))
        except OutsideDomain:
            raise HTTPException(status_code=400,
                                detail="probe position outside the cell")
        return ProbeModel(position=pos, potential=v, current=j.tolist(),
                          current_magnitude=float(np.linalg.norm(j)))

    @app.get("/deposit/{eid}")
    def get_deposit(eid: int) -> dict:
        existing(eid)
        state = ses.solved_snapshot()
        maps = surface_normal_current(ses.cell, state, eid)
        return {
            "electrode": eid,
            "faces": {
                name: {"dims": list(vals.shape), "order": "row-major",
                       "values": vals.ravel(order="C").tolist(),
                       "min": float(vals.min()), "max": float(vals.max())}
                for name, vals in maps.items()
            },
        }

    @app.get("/shading")
    def get_shading(electrode_id: Optional[int] = None,
                    ka: float = 0.1, kd: float = 0.6, ks: float = 0.3,
                    s: float = 16.0, p: float = 4.7635,
                    resolution: int = 256,
                    start_factor: float = 1.0,
                    stop_factor: float = 1.0) -> dict:
        try:
            params = LightingParams(ka=ka, kd=kd, ks=ks, s=s, p=p)
            table = build_light_table(params, resolution)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        h = ses.cell.grid.h
        if electrode_id is not None:
            e = existing(electrode_id)
            i1, i2, j1, j2, k1, k2 = e.box
            lo = (i1 * h, j1 * h, k1 * h)
            hi = (i2 * h, j2 * h, k2 * h)
        else:
            lo = (0.0, 0.0, 0.0)
            hi = ses.cell.grid.extent
        focus, distance, fog = autofocus(lo, hi, start_factor=start_factor,
                                         stop_factor=stop_factor)
        return {
            "light_table": {"resolution": table.resolution,
                            "entries": table.entries.tolist()},
            "lighting": {"ka": ka, "kd": kd, "ks": ks, "s": s, "p": p},
            "colormaps": {name: {"controls": [list(c) for c in cm.controls]}
                          for name, cm in COLORMAPS.items()},
            "autofocus": {"focus": list(focus), "distance": distance,
                          "fog": {"z_start": fog.z_start, "z_end": fog.z_end}},
        }

    return app


app = create_app()
