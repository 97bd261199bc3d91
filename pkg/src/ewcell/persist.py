"""Cell-file persistence and result export.

All documents are UTF-8 JSON. The cell file stores the geometry, the
polarization and solver/trace parameters, and optionally the potential field
(flat, x-fastest order with an explicit dims header). Streamlines and the
current-density field are never stored; they are recomputed on demand.

Minimal cell document::

    {
      "format": "ewcell-cell",
      "version": 1,
      "grid": {"nx": 4, "ny": 3, "nz": 3, "h": 0.01},
      "conductivity": 50.0,
      "electrodes": [
        {"kind": "anode", "box": [0, 1, 0, 2, 0, 2],
         "polarization": {"e_r": 0.0, "k_a": 0.0, "k_c": 0.0},
         "metal_potential": 1.0, "floating": false, "split_index": null}
      ],
      "solver": {"tolerance": 1e-4, "max_iterations": 5000, "inner_steps": 10}
    }
"""
from __future__ import annotations

import json
import math
from typing import Dict, List, Optional, Tuple

import numpy as np

from .geometry import (
    CellGeometry,
    Electrode,
    GeometryError,
    GridSpec,
    PolarizationParams,
    build_occupancy_mask,
)
from .solver import SolverConfig, SolverState, extract_slice
from .tracer import Streamline, TraceConfig

CELL_FORMAT = "ewcell-cell"
STREAMLINES_FORMAT = "ewcell-streamlines"
SLICE_FORMAT = "ewcell-slice"
VERSION = 1


class PersistError(ValueError):
    """Raised for malformed, mismatched or unreadable documents."""


# ---------------------------------------------------------------------------
# Document <-> object conversion (shared with the HTTP service).
# ---------------------------------------------------------------------------

def electrode_to_doc(e: Electrode) -> dict:
    return {
        "kind": e.kind,
        "box": list(e.box),
        "split_index": e.split_index,
        "polarization": {
            "e_r": e.polarization.e_r,
            "k_a": e.polarization.k_a,
            "k_c": e.polarization.k_c,
        },
        "metal_potential": e.metal_potential,
        "floating": e.floating,
    }


def electrode_from_doc(doc: dict) -> Electrode:
    pol = doc.get("polarization") or {}
    return Electrode(
        kind=doc["kind"],
        box=tuple(doc["box"]),
        split_index=doc.get("split_index"),
        polarization=PolarizationParams(
            e_r=pol.get("e_r", 0.0),
            k_a=pol.get("k_a", 0.0),
            k_c=pol.get("k_c", 0.0),
        ),
        metal_potential=doc.get("metal_potential", 0.0),
        floating=doc.get("floating"),
    )


def cell_to_doc(cell: CellGeometry,
                state: Optional[SolverState] = None,
                solver_config: Optional[SolverConfig] = None,
                trace_config: Optional[TraceConfig] = None) -> dict:
    doc = {
        "format": CELL_FORMAT,
        "version": VERSION,
        "grid": {"nx": cell.grid.nx, "ny": cell.grid.ny, "nz": cell.grid.nz,
                 "h": cell.grid.h},
        "conductivity": cell.conductivity,
        "electrodes": [electrode_to_doc(e) for e in cell.electrodes],
    }
    if solver_config is not None:
        doc["solver"] = {
            "tolerance": solver_config.tolerance,
            "max_iterations": solver_config.max_iterations,
            "inner_steps": solver_config.inner_steps,
        }
    if trace_config is not None:
        doc["trace"] = {
            "tol": trace_config.tol,
            "d_min": trace_config.d_min,
            "d_max": trace_config.d_max,
            "safety": trace_config.safety,
            "direction_probe": trace_config.direction_probe,
            "seed_density": trace_config.seed_density,
            "max_arc_unipolar": trace_config.max_arc_unipolar,
            "max_arc_bipolar": trace_config.max_arc_bipolar,
            "max_vertices": trace_config.max_vertices,
        }
    if state is not None:
        doc["state"] = {
            "dims": list(cell.grid.shape),
            "order": "x-fastest",
            "potential": state.V.ravel(order="F").tolist(),
            "floating_vm": {str(k): v for k, v in state.floating_vm.items()},
            "iteration_count": state.iteration_count,
            "last_max_delta": (state.last_max_delta
                               if math.isfinite(state.last_max_delta) else None),
        }
    return doc


def cell_from_doc(doc: dict) -> Tuple[CellGeometry, Optional[SolverState],
                                      Optional[SolverConfig], Optional[TraceConfig]]:
    if not isinstance(doc, dict) or doc.get("format") != CELL_FORMAT:
        raise PersistError("not a cell document (missing format marker)")
    if doc.get("version") != VERSION:
        raise PersistError(
            "unsupported cell document version %r" % (doc.get("version"),))
    try:
        g = doc["grid"]
        grid = GridSpec(nx=g["nx"], ny=g["ny"], nz=g["nz"], h=g["h"])
        cell = CellGeometry(
            grid=grid,
            conductivity=doc["conductivity"],
            electrodes=[electrode_from_doc(d) for d in doc.get("electrodes", [])],
        )
    except (KeyError, TypeError, GeometryError) as exc:
        raise PersistError("malformed cell document: %s" % exc) from exc

    solver_config = None
    if "solver" in doc:
        s = doc["solver"]
        solver_config = SolverConfig(
            tolerance=s.get("tolerance", 1e-4),
            max_iterations=s.get("max_iterations", 5000),
            inner_steps=s.get("inner_steps", 10),
        )
    trace_config = None
    if "trace" in doc:
        trace_config = TraceConfig(**doc["trace"])

    state = None
    if "state" in doc:
        st = doc["state"]
        dims = tuple(st.get("dims", ()))
        if dims != cell.grid.shape:
            raise PersistError(
                "state dims %r do not match grid %r" % (dims, cell.grid.shape))
        flat = st.get("potential", [])
        expected = grid.nx * grid.ny * grid.nz
        if len(flat) != expected:
            raise PersistError(
                "potential length %d does not match dims product %d"
                % (len(flat), expected))
        V = np.asarray(flat, dtype=float).reshape(cell.grid.shape, order="F")
        last = st.get("last_max_delta")
        state = SolverState(
            V=V,
            floating_vm={int(k): float(v)
                         for k, v in (st.get("floating_vm") or {}).items()},
            mask=build_occupancy_mask(cell),
            iteration_count=int(st.get("iteration_count", 0)),
            last_max_delta=math.inf if last is None else float(last),
        )
    return cell, state, solver_config, trace_config


# ---------------------------------------------------------------------------
# Files.
# ---------------------------------------------------------------------------

def _write_json(doc: dict, path: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
    except OSError as exc:
        raise PersistError("cannot write %s: %s" % (path, exc)) from exc


def _read_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise PersistError("cannot read %s: %s" % (path, exc)) from exc
    except json.JSONDecodeError as exc:
        raise PersistError("malformed document %s: %s" % (path, exc)) from exc


def save_cell(cell: CellGeometry, path: str,
              state: Optional[SolverState] = None,
              solver_config: Optional[SolverConfig] = None,
              trace_config: Optional[TraceConfig] = None) -> None:
    _write_json(cell_to_doc(cell, state, solver_config, trace_config), path)


def load_cell(path: str) -> Tuple[CellGeometry, Optional[SolverState],
                                  Optional[SolverConfig], Optional[TraceConfig]]:
    return cell_from_doc(_read_json(path))


def streamlines_to_doc(groups: Dict[int, List[Streamline]],
                       shading: Optional[dict] = None) -> dict:
    group_docs = []
    total = 0
    for eid in sorted(groups):
        lines = []
        for ln in groups[eid]:
            lines.append({
                "termination": ln.termination_reason,
                "positions": ln.positions.tolist(),
                "tangents": ln.tangents.tolist(),
                "magnitudes": ln.magnitudes.tolist(),
                "potentials": ln.potentials.tolist(),
            })
            total += 1
        group_docs.append({"electrode": eid, "lines": lines})
    doc = {
        "format": STREAMLINES_FORMAT,
        "version": VERSION,
        "line_count": total,
        "groups": group_docs,
    }
    if shading is not None:
        doc["shading"] = shading
    return doc


def export_streamlines(groups: Dict[int, List[Streamline]], path: str,
                       shading: Optional[dict] = None) -> None:
    _write_json(streamlines_to_doc(groups, shading), path)


def load_streamlines(path: str) -> Dict[int, List[Streamline]]:
    doc = _read_json(path)
    if doc.get("format") != STREAMLINES_FORMAT or doc.get("version") != VERSION:
        raise PersistError("not a supported streamline document")
    groups: Dict[int, List[Streamline]] = {}
    for g in doc["groups"]:
        lines = []
        for ln in g["lines"]:
            n = len(ln["positions"])
            lines.append(Streamline(
                source_electrode=g["electrode"],
                positions=np.asarray(ln["positions"]).reshape(n, 3),
                tangents=np.asarray(ln["tangents"]).reshape(n, 3),
                magnitudes=np.asarray(ln["magnitudes"]),
                potentials=np.asarray(ln["potentials"]),
                termination_reason=ln["termination"],
            ))
        groups[g["electrode"]] = lines
    return groups


def export_slice(cell: CellGeometry, state: SolverState, axis, index: int,
                 quantity: str, path: str) -> None:
    """Write one axis-orthogonal plane of V or |J| (row-major with dims)."""
    try:
        values = extract_slice(cell, state, axis, index, quantity)
    except (ValueError, IndexError) as exc:
        raise PersistError(str(exc)) from exc
    doc = {
        "format": SLICE_FORMAT,
        "version": VERSION,
        "axis": axis,
        "index": index,
        "quantity": quantity,
        "dims": list(values.shape),
        "order": "row-major",
        "values": values.ravel(order="C").tolist(),
    }
    _write_json(doc, path)
