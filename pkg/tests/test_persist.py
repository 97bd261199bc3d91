"""Cell-file round trips, validation errors and export documents."""
from __future__ import annotations

import json

import numpy as np
import pytest

from conftest import bipolar_cell, parallel_plate_cell
from ewcell.persist import (
    CELL_FORMAT,
    PersistError,
    SLICE_FORMAT,
    STREAMLINES_FORMAT,
    VERSION,
    cell_from_doc,
    cell_to_doc,
    export_slice,
    export_streamlines,
    load_cell,
    load_streamlines,
    save_cell,
    streamlines_to_doc,
)
from ewcell.solver import SolverConfig, init_potentials, solve
from ewcell.tracer import TraceConfig, trace_all


def solved_bipolar():
    cell = bipolar_cell(dv=1.0, e_r=0.1)
    state = init_potentials(cell)
    solve(cell, state, SolverConfig(tolerance=1e-5, max_iterations=20000))
    return cell, state


class TestCellRoundTrip:
    def test_geometry_only(self, tmp_path):
        cell = parallel_plate_cell()
        path = tmp_path / "cell.json"
        save_cell(cell, str(path))
        loaded, state, solver_config, trace_config = load_cell(str(path))
        assert state is None and solver_config is None and trace_config is None
        assert loaded.grid == cell.grid
        assert loaded.conductivity == cell.conductivity
        assert [e.box for e in loaded.electrodes] == [e.box for e in cell.electrodes]
        assert [e.kind for e in loaded.electrodes] == [e.kind for e in cell.electrodes]

    def test_full_round_trip(self, tmp_path):
        cell, state = solved_bipolar()
        sc = SolverConfig(tolerance=1e-5, max_iterations=20000, inner_steps=7)
        tc = TraceConfig.for_grid(cell.grid, seed_density=0.04)
        path = tmp_path / "cell.json"
        save_cell(cell, str(path), state=state, solver_config=sc,
                  trace_config=tc)
        cell2, state2, sc2, tc2 = load_cell(str(path))
        assert np.array_equal(state2.V, state.V)
        assert state2.floating_vm == state.floating_vm
        assert state2.iteration_count == state.iteration_count
        assert state2.last_max_delta == state.last_max_delta
        assert sc2 == sc
        assert tc2 == tc
        e = cell2.electrodes[2]
        assert e.kind == "bipolar" and e.floating and e.split_index == 10
        assert e.polarization.e_r == 0.1

    def test_unsolved_state_round_trip(self, tmp_path):
        # last_max_delta is infinite before any sweep; stored as null.
        cell = parallel_plate_cell()
        state = init_potentials(cell)
        path = tmp_path / "cell.json"
        save_cell(cell, str(path), state=state)
        raw = json.loads(path.read_text())
        assert raw["state"]["last_max_delta"] is None
        _, state2, _, _ = load_cell(str(path))
        assert state2.last_max_delta == float("inf")
        assert state2.iteration_count == 0

    def test_flat_order_is_x_fastest(self):
        cell = parallel_plate_cell()
        state = init_potentials(cell)
        doc = cell_to_doc(cell, state=state)
        flat = doc["state"]["potential"]
        nx = cell.grid.nx
        assert doc["state"]["order"] == "x-fastest"
        assert flat[:nx] == state.V[:, 0, 0].tolist()
        assert flat[nx] == state.V[0, 1, 0]

    def test_deterministic_bytes(self, tmp_path):
        cell, state = solved_bipolar()
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        save_cell(cell, str(a), state=state)
        save_cell(cell, str(b), state=state)
        assert a.read_bytes() == b.read_bytes()


class TestCellValidation:
    def doc(self):
        return cell_to_doc(parallel_plate_cell())

    def test_missing_format(self):
        doc = self.doc()
        del doc["format"]
        with pytest.raises(PersistError, match="format"):
            cell_from_doc(doc)

    def test_wrong_format(self):
        doc = self.doc()
        doc["format"] = "other"
        with pytest.raises(PersistError):
            cell_from_doc(doc)

    def test_unsupported_version(self):
        doc = self.doc()
        doc["version"] = VERSION + 1
        with pytest.raises(PersistError, match="version"):
            cell_from_doc(doc)

    def test_missing_grid(self):
        doc = self.doc()
        del doc["grid"]
        with pytest.raises(PersistError, match="malformed"):
            cell_from_doc(doc)

    def test_invalid_geometry_wrapped(self):
        doc = self.doc()
        doc["electrodes"][0]["box"] = [0, 25, 0, 10, 0, 10]
        with pytest.raises(PersistError):
            cell_from_doc(doc)

    def test_state_dims_mismatch(self):
        cell = parallel_plate_cell()
        doc = cell_to_doc(cell, state=init_potentials(cell))
        doc["state"]["dims"] = [5, 5, 5]
        with pytest.raises(PersistError, match="dims"):
            cell_from_doc(doc)

    def test_potential_length_mismatch(self):
        cell = parallel_plate_cell()
        doc = cell_to_doc(cell, state=init_potentials(cell))
        doc["state"]["potential"] = doc["state"]["potential"][:-1]
        with pytest.raises(PersistError, match="length"):
            cell_from_doc(doc)

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(PersistError, match="cannot read"):
            load_cell(str(tmp_path / "missing.json"))

    def test_malformed_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        with pytest.raises(PersistError, match="malformed"):
            load_cell(str(p))


class TestStreamlineDocs:
    def groups(self):
        cell, state = solved_bipolar()
        return trace_all(cell, state,
                         TraceConfig.for_grid(cell.grid, seed_density=0.01))

    def test_round_trip(self, tmp_path):
        groups = self.groups()
        path = tmp_path / "lines.json"
        export_streamlines(groups, str(path))
        loaded = load_streamlines(str(path))
        assert sorted(loaded) == sorted(groups)
        for eid in groups:
            assert len(loaded[eid]) == len(groups[eid])
            for la, lb in zip(groups[eid], loaded[eid]):
                assert np.allclose(la.positions, lb.positions)
                assert np.allclose(la.magnitudes, lb.magnitudes)
                assert la.termination_reason == lb.termination_reason
                assert lb.source_electrode == eid

    def test_line_count_header(self):
        groups = self.groups()
        doc = streamlines_to_doc(groups)
        assert doc["format"] == STREAMLINES_FORMAT
        assert doc["line_count"] == sum(len(v) for v in groups.values())

    def test_shading_block_passthrough(self, tmp_path):
        path = tmp_path / "lines.json"
        export_streamlines({0: []}, str(path), shading={"note": 1})
        raw = json.loads(path.read_text())
        assert raw["shading"] == {"note": 1}

    def test_wrong_format_rejected(self, tmp_path):
        p = tmp_path / "x.json"
        p.write_text(json.dumps({"format": CELL_FORMAT, "version": 1}))
        with pytest.raises(PersistError):
            load_streamlines(str(p))


class TestSliceExport:
    def test_document_layout(self, tmp_path):
        cell = parallel_plate_cell()
        state = init_potentials(cell)
        solve(cell, state, SolverConfig(tolerance=1e-5))
        path = tmp_path / "plane.json"
        export_slice(cell, state, "x", 10, "V", str(path))
        doc = json.loads(path.read_text())
        assert doc["format"] == SLICE_FORMAT
        assert doc["dims"] == [11, 11]
        assert len(doc["values"]) == 121
        # Row-major: the first row is V[10, 0, :].
        assert doc["values"][:11] == state.V[10, 0, :].tolist()

    def test_errors_wrapped(self, tmp_path):
        cell = parallel_plate_cell()
        state = init_potentials(cell)
        with pytest.raises(PersistError):
            export_slice(cell, state, "x", 99, "V", str(tmp_path / "p.json"))
        with pytest.raises(PersistError):
            export_slice(cell, state, "x", 0, "bogus", str(tmp_path / "p.json"))
