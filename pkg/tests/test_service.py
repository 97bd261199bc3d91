"""HTTP service tests: editing, solve control, results and error codes."""
from __future__ import annotations

import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from conftest import parallel_plate_cell
from ewcell.persist import cell_to_doc
from ewcell.service import Session, create_app
from ewcell.solver import SolverConfig, init_potentials, solve


@pytest.fixture
def client():
    return TestClient(create_app(Session()))


@pytest.fixture(scope="module")
def solved_client():
    """One converged default cell shared by the read-only result tests."""
    c = TestClient(create_app(Session()))
    r = c.post("/simulate/step", json={"steps": 5000})
    assert r.json()["converged"]
    return c


def start_slow_run(client):
    """Load a cell big enough that a background run outlives the test body."""
    cell = parallel_plate_cell()
    doc = cell_to_doc(cell)
    doc["grid"] = {"nx": 51, "ny": 31, "nz": 31, "h": 0.01}
    doc["electrodes"][0]["box"] = [0, 1, 0, 30, 0, 30]
    doc["electrodes"][1]["box"] = [49, 50, 0, 30, 0, 30]
    doc["solver"] = {"tolerance": 1e-15, "max_iterations": 10 ** 6,
                     "inner_steps": 10}
    assert client.put("/cell", json=doc).status_code == 200
    assert client.post("/simulate/run").json()["status"] == "running"


class TestCellEditing:
    def test_default_cell_document(self, client):
        doc = client.get("/cell").json()
        assert doc["format"] == "ewcell-cell"
        assert len(doc["electrodes"]) == 2
        assert "state" not in doc
        assert doc["solver"]["tolerance"] == pytest.approx(1e-4)

    def test_put_round_trip(self, client):
        cell = parallel_plate_cell(dv=2.0)
        state = init_potentials(cell)
        solve(cell, state, SolverConfig(tolerance=1e-5))
        doc = cell_to_doc(cell, state=state,
                          solver_config=SolverConfig(tolerance=1e-5))
        r = client.put("/cell", json=doc)
        assert r.status_code == 200
        assert r.json() == {"electrodes": 2, "state_loaded": True}
        # The loaded state is already converged: results are served directly.
        assert client.get("/simulate/status").json()["status"] == "converged"
        plane = client.get("/slice", params={"axis": "x", "index": 10})
        assert plane.status_code == 200

    def test_put_malformed(self, client):
        assert client.put("/cell", json={"format": "nope"}).status_code == 400

    def test_add_patch_delete_electrode(self, client):
        r = client.post("/electrode", json={
            "kind": "bipolar", "box": [8, 11, 3, 7, 3, 7],
            "polarization": {"e_r": 0.1}})
        assert r.status_code == 201
        assert r.json() == {"id": 2}
        assert len(client.get("/cell").json()["electrodes"]) == 3

        r = client.patch("/electrode/0", json={"metal_potential": 3.0})
        assert r.status_code == 200
        doc = client.get("/cell").json()
        assert doc["electrodes"][0]["metal_potential"] == 3.0
        # Untouched fields survive the merge.
        assert doc["electrodes"][0]["box"] == [0, 1, 0, 10, 0, 10]

        assert client.delete("/electrode/2").status_code == 200
        assert len(client.get("/cell").json()["electrodes"]) == 2

    def test_invalid_geometry_rejected(self, client):
        # Overlapping the existing anode violates the separation rule.
        r = client.post("/electrode", json={
            "kind": "cathode", "box": [1, 3, 0, 10, 0, 10]})
        assert r.status_code == 400
        assert len(client.get("/cell").json()["electrodes"]) == 2

    def test_unknown_electrode_404(self, client):
        assert client.patch("/electrode/9", json={}).status_code == 404
        assert client.delete("/electrode/9").status_code == 404

    def test_editing_invalidates_results(self, client):
        assert client.post("/simulate/step", json={"steps": 5000}) \
            .json()["converged"]
        client.patch("/electrode/0", json={"metal_potential": 2.0})
        assert client.get("/simulate/status").json()["status"] == "idle"
        r = client.get("/slice", params={"axis": "x", "index": 10})
        assert r.status_code == 422


class TestSolveControl:
    def test_step_accumulates(self, client):
        p1 = client.post("/simulate/step", json={"steps": 3}).json()
        assert p1["iterations"] == 3
        assert p1["status"] in ("idle", "converged")
        p2 = client.post("/simulate/step", json={"steps": 3}).json()
        assert p2["iterations"] == 6

    def test_step_default_uses_inner_steps(self, client):
        p = client.post("/simulate/step").json()
        assert p["iterations"] == 10  # default inner_steps

    def test_step_to_convergence(self, client):
        p = client.post("/simulate/step", json={"steps": 5000}).json()
        assert p["converged"] and p["status"] == "converged"
        assert p["iterations"] < 5000
        assert p["last_max_delta"] <= 1e-4

    def test_step_on_converged_stays_converged(self, client):
        client.post("/simulate/step", json={"steps": 5000})
        p = client.post("/simulate/step", json={"steps": 5}).json()
        assert p["status"] == "converged"

    def test_run_to_convergence(self, client):
        client.post("/simulate/run")
        for _ in range(200):
            p = client.get("/simulate/status").json()
            if p["status"] != "running":
                break
            time.sleep(0.05)
        assert p["status"] == "converged"
        assert client.get("/slice",
                          params={"axis": "x", "index": 10}).status_code == 200

    def test_mutations_blocked_while_running(self, client):
        start_slow_run(client)
        try:
            assert client.post("/electrode", json={
                "kind": "anode", "box": [20, 22, 5, 9, 5, 9],
                "metal_potential": 1.0}).status_code == 409
            assert client.patch("/electrode/0",
                                json={"metal_potential": 2.0}).status_code == 409
            assert client.delete("/electrode/0").status_code == 409
            assert client.put("/cell",
                              json=client.get("/cell").json()).status_code == 409
            assert client.post("/simulate/step").status_code == 409
            assert client.post("/simulate/run").status_code == 409
        finally:
            p = client.post("/simulate/cancel").json()
        assert p["status"] == "idle"
        assert p["iterations"] > 0
        # Editing works again after the cancel.
        assert client.patch("/electrode/0",
                            json={"metal_potential": 2.0}).status_code == 200

    def test_partial_results_while_running(self, client):
        start_slow_run(client)
        try:
            # Snapshots publish every inner_steps iterations; poll until the
            # first one is readable while the solver keeps running.
            for _ in range(400):
                r = client.get("/slice", params={"axis": "x", "index": 25})
                if r.status_code == 200:
                    break
                time.sleep(0.05)
            assert r.status_code == 200
            assert client.get("/simulate/status").json()["status"] == "running"
        finally:
            client.post("/simulate/cancel")

    def test_cancel_when_idle_is_noop(self, client):
        p = client.post("/simulate/cancel").json()
        assert p["status"] == "idle" and p["iterations"] == 0


class TestResultsRequireSolve:
    @pytest.mark.parametrize("route,params", [
        ("/streamlines", {}),
        ("/slice", {"axis": "x", "index": 10}),
        ("/probe", {"x": 0.1, "y": 0.05, "z": 0.05}),
        ("/deposit/1", {}),
    ])
    def test_422_before_solve(self, client, route, params):
        assert client.get(route, params=params).status_code == 422


class TestResults:
    def test_slice(self, solved_client):
        r = solved_client.get("/slice", params={"axis": "x", "index": 10})
        doc = r.json()
        assert doc["dims"] == [11, 11]
        assert len(doc["values"]) == 121
        vals = np.array(doc["values"])
        assert np.abs(vals - 0.5).max() < 1e-3

    def test_slice_bad_request(self, solved_client):
        assert solved_client.get(
            "/slice", params={"axis": "x", "index": 99}).status_code == 400
        assert solved_client.get(
            "/slice", params={"axis": "q", "index": 0}).status_code == 400

    def test_probe(self, solved_client):
        r = solved_client.get("/probe",
                              params={"x": 0.1, "y": 0.05, "z": 0.05})
        doc = r.json()
        assert doc["potential"] == pytest.approx(0.5, abs=1e-3)
        # Uniform field between the plates: J = sigma * dV / L in -> +x.
        assert doc["current"][0] == pytest.approx(50.0 / 0.18, rel=2e-2)
        assert doc["current_magnitude"] == pytest.approx(50.0 / 0.18, rel=2e-2)

    def test_probe_outside(self, solved_client):
        assert solved_client.get(
            "/probe", params={"x": 9.0, "y": 0.0, "z": 0.0}).status_code == 400

    def test_streamlines(self, solved_client):
        doc = solved_client.get("/streamlines").json()
        assert doc["format"] == "ewcell-streamlines"
        assert doc["line_count"] > 0
        assert {g["electrode"] for g in doc["groups"]} == {0, 1}

    def test_streamline_density_override(self, solved_client):
        base = solved_client.get("/streamlines").json()["line_count"]
        dense = solved_client.get(
            "/streamlines", params={"density": 0.5}).json()["line_count"]
        assert dense > base
        assert solved_client.get(
            "/streamlines", params={"density": -1}).status_code == 400

    def test_deposit(self, solved_client):
        doc = solved_client.get("/deposit/1").json()
        assert doc["electrode"] == 1
        face = doc["faces"]["minus_x"]
        assert face["dims"] == [11, 11]
        vals = np.array(face["values"])
        assert (vals > 0).all()
        assert face["min"] == pytest.approx(vals.min())
        assert solved_client.get("/deposit/7").status_code == 404


class TestShading:
    def test_defaults(self, client):
        doc = client.get("/shading").json()
        assert doc["light_table"]["resolution"] == 256
        assert len(doc["light_table"]["entries"]) == 256
        assert set(doc["colormaps"]) == {"jet", "summer"}
        assert doc["autofocus"]["distance"] > 0
        fog = doc["autofocus"]["fog"]
        assert fog["z_start"] < fog["z_end"]

    def test_electrode_focus(self, client):
        whole = client.get("/shading").json()["autofocus"]
        single = client.get("/shading",
                            params={"electrode_id": 0}).json()["autofocus"]
        assert single["distance"] < whole["distance"]
        assert client.get("/shading",
                          params={"electrode_id": 9}).status_code == 404

    def test_param_validation(self, client):
        assert client.get("/shading", params={"ka": 2.0}).status_code == 400
        assert client.get("/shading",
                          params={"resolution": 1}).status_code == 400
