"""Command-line driver: solve, trace, slice and probe cell files, or serve HTTP."""
from __future__ import annotations

import argparse
import os
import sys
from typing import Optional

import numpy as np

from .geometry import GeometryError, OutsideDomain, sample_trilinear
from .persist import (
    PersistError,
    export_slice,
    export_streamlines,
    load_cell,
    save_cell,
)
from .shading import COLORMAPS, LightingParams, build_light_table
from .solver import (
    ConfigurationError,
    DivergenceError,
    SolverConfig,
    compute_current_field,
    init_potentials,
    solve,
)
from .tracer import TraceConfig, trace_all


def _fail(message: str) -> "NoReturn":  # noqa: F821 - py3.10 typing clarity
    print("error: %s" % message, file=sys.stderr)
    raise SystemExit(1)


def _load(path: str):
    try:
        return load_cell(path)
    except (PersistError, GeometryError) as exc:
        _fail(str(exc))


def cmd_simulate(args: argparse.Namespace) -> int:
    cell, state, solver_config, trace_config = _load(args.cell)
    config = solver_config or SolverConfig()
    if args.tol is not None:
        config.tolerance = args.tol
    if args.max_iter is not None:
        config.max_iterations = args.max_iter
    try:
        if args.warm and state is not None:
            pass
        else:
            state = init_potentials(cell)
        report = solve(cell, state, config)
    except (ConfigurationError, DivergenceError) as exc:
        _fail(str(exc))
    out = args.out or args.cell
    save_cell(cell, out, state=state, solver_config=config,
              trace_config=trace_config)
    print("converged=%s iterations=%d final_max_delta=%.3e"
          % (report.converged, report.iterations, report.final_max_delta))
    if not report.converged:
        _fail("solver did not converge within %d iterations"
              % config.max_iterations)
    return 0


def _require_state(state):
    if state is None or state.iteration_count < 1:
        _fail("cell not solved: run `ewcell simulate` first")
    return state


def cmd_trace(args: argparse.Namespace) -> int:
    cell, state, _solver_config, trace_config = _load(args.cell)
    state = _require_state(state)
    cfg = trace_config or TraceConfig.for_grid(cell.grid)
    overrides = {}
    if args.density is not None:
        overrides["seed_density"] = args.density
    if args.tol is not None:
        overrides["tol"] = args.tol
    if args.max_arc_uni is not None:
        overrides["max_arc_unipolar"] = args.max_arc_uni
    if args.max_arc_bip is not None:
        overrides["max_arc_bipolar"] = args.max_arc_bip
    if overrides:
        values = {f: getattr(cfg, f) for f in (
            "tol", "d_min", "d_max", "safety", "direction_probe",
            "seed_density", "max_arc_unipolar", "max_arc_bipolar",
            "max_vertices")}
        values.update(overrides)
        try:
            cfg = TraceConfig(**values)
        except ValueError as exc:
            _fail(str(exc))
    groups = trace_all(cell, state, cfg)
    table = build_light_table(LightingParams())
    shading = {
        "light_table": {"resolution": table.resolution,
                        "entries": table.entries.tolist()},
        "colormaps": {name: {"controls": [list(c) for c in cm.controls]}
                      for name, cm in COLORMAPS.items()},
    }
    out = args.out or os.path.splitext(args.cell)[0] + ".streamlines.json"
    export_streamlines(groups, out, shading=shading)
    total = sum(len(lines) for lines in groups.values())
    print("wrote %d streamlines in %d groups to %s"
          % (total, len(groups), out))
    return 0


def cmd_slice(args: argparse.Namespace) -> int:
    cell, state, _sc, _tc = _load(args.cell)
    state = _require_state(state)
    out = args.out or os.path.splitext(args.cell)[0] + ".slice.json"
    try:
        export_slice(cell, state, args.axis, args.index, args.quantity, out)
    except PersistError as exc:
        _fail(str(exc))
    print("wrote %s slice at %s=%d to %s"
          % (args.quantity, args.axis, args.index, out))
    return 0


def cmd_probe(args: argparse.Namespace) -> int:
    cell, state, _sc, _tc = _load(args.cell)
    state = _require_state(state)
    pos = (args.x, args.y, args.z)
    try:
        v = float(sample_trilinear(state.V, cell.grid.h, pos))
        j_field = compute_current_field(cell, state)
        j = np.asarray(sample_trilinear(j_field, cell.grid.h, pos))
    except OutsideDomain:
        _fail("probe position outside the cell")
    print("V = %.9g V" % v)
    print("J = (%.9g, %.9g, %.9g) A/m^2  |J| = %.9g"
          % (j[0], j[1], j[2], float(np.linalg.norm(j))))
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    port = args.port or int(os.environ.get("EWCELL_PORT", "8000"))
    uvicorn.run(create_app(), host=args.host, port=port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ewcell",
        description="Electrowinning cell simulator and streamline backend",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="solve a cell file")
    p.add_argument("cell")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--warm", action="store_true",
                   help="resume from potentials stored in the file")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("trace", help="trace streamlines of a solved cell")
    p.add_argument("cell")
    p.add_argument("--density", type=float, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--max-arc-uni", type=float, default=None)
    p.add_argument("--max-arc-bip", type=float, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("slice", help="export a plane of V or |J|")
    p.add_argument("cell")
    p.add_argument("--axis", choices=("x", "y", "z"), required=True)
    p.add_argument("--index", type=int, required=True)
    p.add_argument("--quantity", choices=("V", "Jmag"), default="V")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("probe", help="print V and J at a position")
    p.add_argument("cell")
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--z", type=float, required=True)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
