"""Command-line front end.

Exit codes: 0 success, 1 bad input (scenario, file, missing cyclic
structure), 2 Zeno accumulation suspected, 3 numerical failure, 4 impact
counts differ in ``compare``, 5 deviation above ``--tol`` in ``compare``.
Output files are staged in a temporary directory and only moved into place
when the command succeeds.
"""

from __future__ import annotations

import argparse
import json
import os
import shutil
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import csvio, svg
from .errors import ScenarioError
from .hamiltonian import execute_hamiltonian, legendre, map_hybrid_flow
from .hybrid import Termination, compare_trajectories, execute
from .routh import compare_full_reduced, execute_reduced, momentum, momentum_drift, reconstruct
from .scenarios import list_presets, load_scenario

EXIT_OK, EXIT_INPUT, EXIT_ZENO, EXIT_NUMERIC, EXIT_STRUCTURE, EXIT_TOLERANCE = range(6)

DEFAULT_NAMES = {
    "trajectory": "trajectory.csv",
    "impacts": "impacts.csv",
    "reduced": "reduced.csv",
    "reconstructed": "reconstructed.csv",
    "manifest": "manifest.json",
    "report": "report.json",
}


class _Fail(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _err(msg):
    print(f"hybrid-routh: {msg}", file=sys.stderr)


# --- Staged output ---

class _Staging:
    """Collects output files in a temp dir; ``commit`` moves them into ``dest``."""

    def __init__(self, dest: Path):
        self.dest = dest
        dest.parent.mkdir(parents=True, exist_ok=True)
        self.tmp = Path(tempfile.mkdtemp(prefix=".hybrid-routh-", dir=dest.parent))
        self.names = []

    def path(self, name: str) -> Path:
        self.names.append(name)
        return self.tmp / name

    def final(self, name: str) -> Path:
        return self.dest / name

    def commit(self):
        self.dest.mkdir(parents=True, exist_ok=True)
        for name in self.names:
            target = self.dest / name
            target.parent.mkdir(parents=True, exist_ok=True)
            os.replace(self.tmp / name, target)

    def discard(self):
        shutil.rmtree(self.tmp, ignore_errors=True)


# --- Scenario handling ---

def _load(args):
    try:
        scn = load_scenario(args.scenario)
    except ScenarioError as exc:
        raise _Fail(EXIT_INPUT, str(exc))
    except OSError as exc:
        raise _Fail(EXIT_INPUT, f"{args.scenario}: {exc.strerror}")
    overrides = {}
    if args.dt is not None:
        overrides["dt"] = args.dt
    if args.tmax is not None:
        overrides["t_max"] = args.tmax
    if overrides:
        try:
            scn = replace(scn, integrator=replace(scn.integrator, **overrides))
        except ValueError as exc:
            raise _Fail(EXIT_INPUT, f"bad integrator flag: {exc}")
    return scn


def _out_dir(args, scn) -> Path:
    if args.out_dir:
        return Path(args.out_dir)
    if "dir" in scn.outputs:
        return Path(scn.outputs["dir"])
    return Path("out") / Path(scn.source or "run").stem


def _name(scn, key):
    return scn.outputs.get(key, DEFAULT_NAMES[key])


def _termination_exit(termination, message):
    if termination == Termination.ZENO_SUSPECTED:
        raise _Fail(EXIT_ZENO, f"Zeno accumulation suspected: {message}")
    if termination == Termination.ERROR:
        raise _Fail(EXIT_NUMERIC, f"numerical failure: {message}")
    if termination == Termination.MAX_IMPACTS:
        _err(f"warning: stopped after max_impacts; {message}")


def _manifest(args, scn, command, stage, termination, summary):
    files = [str(stage.final(n)) for n in stage.names]
    manifest_name = _name(scn, "manifest")
    data = {
        "command": command,
        "scenario": str(scn.source),
        "config": scn.to_dict(),
        "outputs": files + [str(stage.final(manifest_name))],
        "termination": termination.value,
        "summary": summary,
    }
    data["config"]["outputs"]["dir"] = str(stage.dest)
    with open(stage.path(manifest_name), "w") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")


def _run(stage_dest, body):
    stage = _Staging(stage_dest)
    try:
        body(stage)
        stage.commit()
    finally:
        stage.discard()


# --- Commands ---

def cmd_simulate(args) -> int:
    scn = _load(args)
    hs, cyc = scn.build()
    traj = execute(hs, scn.initial, scn.integrator)
    _termination_exit(traj.termination, traj.message)
    n = hs.system.dim
    impacts = traj.impacts
    if cyc is not None:
        impacts = [replace(imp, momentum_pre=momentum(hs.system, cyc, imp.state_pre),
                           momentum_post=momentum(hs.system, cyc, imp.state_post)) for imp in impacts]

    def body(stage):
        csvio.write_trajectory(stage.path(_name(scn, "trajectory")), traj)
        csvio.write_impacts(stage.path(_name(scn, "impacts")), impacts, n)
        summary = {
            "impact_count": len(traj.impacts),
            "final_time": traj.final_time,
            "max_momentum_drift": momentum_drift(hs.system, cyc, traj) if cyc is not None else None,
        }
        _manifest(args, scn, "simulate", stage, traj.termination, summary)

    _run(_out_dir(args, scn), body)
    return EXIT_OK


def _reduced_run(scn):
    hs, cyc = scn.build()
    if cyc is None:
        raise _Fail(EXIT_INPUT, f"scenario kind {scn.kind!r} declares no cyclic coordinate")
    rt = execute_reduced(hs, cyc, scn.initial, scn.integrator)
    _termination_exit(rt.termination, rt.message)
    return hs, cyc, rt


def cmd_reduce(args) -> int:
    scn = _load(args)
    hs, cyc, rt = _reduced_run(scn)
    rec = reconstruct(rt)
    end = rt.segments[-1].arc.end if rt.segments else 0.0

    def body(stage):
        csvio.write_reduced(stage.path(_name(scn, "reduced")), rt)
        csvio.write_trajectory(stage.path(_name(scn, "reconstructed")), rec)
        csvio.write_impacts(stage.path(_name(scn, "impacts")), rt.impacts, hs.system.dim)
        summary = {
            "impact_count": len(rt.impacts),
            "final_time": end,
            "max_momentum_drift": momentum_drift(hs.system, cyc, rec),
            "mus": rt.mus,
        }
        _manifest(args, scn, "reduce", stage, rt.termination, summary)

    _run(_out_dir(args, scn), body)
    return EXIT_OK


def cmd_compare(args) -> int:
    scn = _load(args)
    hs, cyc = scn.build()
    if args.side == "reduced":
        hs, cyc, rt = _reduced_run(scn)
        full = execute(hs, scn.initial, scn.integrator)
        _termination_exit(full.termination, full.message)
        report = compare_full_reduced(full, reconstruct(rt))
        extra = {"mus": rt.mus}
    else:
        full = execute(hs, scn.initial, scn.integrator)
        _termination_exit(full.termination, full.message)
        ham = execute_hamiltonian(hs, legendre(hs.system, scn.initial), scn.integrator)
        _termination_exit(ham.termination, ham.message)
        report = compare_trajectories(map_hybrid_flow(hs.system, full), ham)
        extra = {}
    worst = max(report.max_deviation, report.max_impact_time_deviation)
    result = dict(report.as_dict(), side=args.side, tol=args.tol, worst=worst, **extra)
    if report.structural_mismatch:
        raise _Fail(EXIT_STRUCTURE, f"impact counts differ: {report.n_impacts[0]} vs {report.n_impacts[1]}")
    if not worst <= args.tol:
        raise _Fail(EXIT_TOLERANCE, f"deviation {worst:.3e} exceeds tolerance {args.tol:.3e}")

    def body(stage):
        with open(stage.path(_name(scn, "report")), "w") as fh:
            json.dump(result, fh, indent=2)
            fh.write("\n")
        summary = {"impact_count": len(full.impacts), "final_time": full.final_time,
                   "max_momentum_drift": momentum_drift(hs.system, cyc, full) if cyc is not None else None,
                   "worst_deviation": worst}
        _manifest(args, scn, f"compare --side {args.side}", stage, full.termination, summary)

    _run(_out_dir(args, scn), body)
    print(f"{args.side}: worst deviation {worst:.3e} (tol {args.tol:.1e}), impacts {report.n_impacts[0]}")
    return EXIT_OK


def _chart_for(path: Path, chart: str) -> str:
    if chart != "auto":
        return chart
    manifest = path.parent / DEFAULT_NAMES["manifest"]
    try:
        kind = json.loads(manifest.read_text())["config"]["kind"]
    except (OSError, ValueError, KeyError, TypeError):
        return "cartesian"
    return "polar" if kind == "billiard_polar" else "cartesian"


def _render(path: Path, chart: str, guard: float) -> str:
    try:
        header, data = csvio.read_table(path)
        schema = csvio.classify(header)
    except ValueError as exc:
        raise _Fail(EXIT_INPUT, str(exc))
    if not np.all(np.isfinite(data[:, :2])):
        raise _Fail(EXIT_INPUT, f"{path}: non-numeric time or index column")
    title = path.stem
    if schema == "reduced":
        return svg.time_series_svg(data[:, 0], data[:, 3], guard=guard, title=title, ylabel=header[3])
    if schema == "impacts":
        raise _Fail(EXIT_INPUT, f"{path}: impact tables have no plot style; pass a trajectory CSV")
    n = (len(header) - 2) // 2
    if n == 1:
        return svg.time_series_svg(data[:, 0], data[:, 2], guard=0.0, title=title, ylabel="q0", guard_label="S")
    q0, q1 = data[:, 2], data[:, 3]
    if _chart_for(path, chart) == "polar":
        q0, q1 = q0 * np.cos(q1), q0 * np.sin(q1)
    return svg.disk_svg(q0, q1, radius=guard, title=title)


def cmd_plot(args) -> int:
    paths = [Path(p) for p in args.csv]
    rendered = []
    for p in paths:
        if not p.is_file():
            raise _Fail(EXIT_INPUT, f"{p}: no such file")
        rendered.append((p, _render(p, args.chart, args.guard)))
    groups = {}
    for p, text in rendered:
        dest = Path(args.out) if args.out else p.parent
        groups.setdefault(dest, []).append((p.stem + ".svg", text))
    for dest, items in groups.items():
        def body(stage, items=items):
            for name, text in items:
                stage.path(name).write_text(text)
        _run(dest, body)
        for name, _ in items:
            print(dest / name)
    return EXIT_OK


def cmd_list(args) -> int:
    for name, path in list_presets().items():
        try:
            scn = load_scenario(path)
            info = f"{scn.kind} {json.dumps(scn.params, sort_keys=True)}"
        except ScenarioError as exc:
            info = f"invalid: {exc}"
        print(f"{name:18s} {info}")
    return EXIT_OK


# --- Parser ---

class _Parser(argparse.ArgumentParser):
    """Usage errors exit with 1 so that 2 stays reserved for Zeno runs."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hybrid-routh", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def run_flags(p):
        p.add_argument("scenario", help="scenario JSON file or preset name")
        p.add_argument("--dt", type=float, help="fixed step size (overrides the scenario)")
        p.add_argument("--tmax", type=float, help="time horizon (overrides the scenario)")
        p.add_argument("--out-dir", help="output directory (overrides the scenario)")

    p = sub.add_parser("simulate", help="run the full hybrid system")
    run_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reduce", help="run the reduced system and reconstruct")
    run_flags(p)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("compare", help="cross-check full against reduced or Hamiltonian runs")
    run_flags(p)
    p.add_argument("--side", choices=("reduced", "hamiltonian"), required=True)
    p.add_argument("--tol", type=float, default=1e-3, help="largest accepted deviation (default 1e-3)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("plot", help="render trajectory CSVs as SVG")
    p.add_argument("csv", nargs="+")
    p.add_argument("--out", help="directory for the SVG files (default: next to each CSV)")
    p.add_argument("--chart", choices=("auto", "polar", "cartesian"), default="auto",
                   help="chart of two-dimensional trajectories (auto reads a sibling manifest.json)")
    p.add_argument("--guard", type=float, default=1.0, help="switching radius drawn in the plots")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("list-scenarios", help="list bundled scenario presets")
    p.set_defaults(func=cmd_list)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _Fail as exc:
        _err(str(exc))
        return exc.code
    except OSError as exc:
        _err(f"{getattr(exc, 'filename', '') or ''}: {exc.strerror or exc}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
