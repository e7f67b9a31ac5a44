"""Flat-file export of trajectories and reports.

Trajectory CSV: header ``n,x1,...,xd``, one row per index, decimals printed
with 17 significant digits so a re-import reproduces every float bit for bit.
Report JSON: deterministic key order, verdict serialized as a tagged object.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .dynamics import Trajectory
from .report import DiagnosticsReport


def format_float(value: float) -> str:
    """Round-trip-safe decimal rendering (17 significant digits)."""
    return format(float(value), ".17g")


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def export_trajectory(trajectory: Trajectory, path) -> Path:
    """Write the trajectory as CSV; returns the path written."""
    path = Path(path)
    pts = trajectory.points
    header = "n," + ",".join(f"x{i}" for i in range(1, pts.shape[1] + 1))
    lines = [header]
    for n, row in enumerate(pts):
        lines.append(f"{n}," + ",".join(format_float(v) for v in row))
    try:
        path.write_text("\n".join(lines) + "\n", encoding="ascii")
    except OSError as exc:
        raise OSError(f"cannot write trajectory to {path}: {exc}") from exc
    return path


def load_trajectory_csv(path) -> np.ndarray:
    """Read back a trajectory CSV written by :func:`export_trajectory`."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="ascii").strip().splitlines()
    except OSError as exc:
        raise OSError(f"cannot read trajectory from {path}: {exc}") from exc
    rows = [[float(v) for v in line.split(",")[1:]] for line in lines[1:]]
    return np.asarray(rows, dtype=float)


def report_to_dict(report: DiagnosticsReport) -> dict:
    """Canonical JSON-ready form of a report."""
    verdict: dict = {"type": report.verdict}
    if report.verdict == "fail":
        verdict["witness"] = _jsonable(report.witness)
    elif report.verdict == "inconclusive":
        verdict["reason"] = _jsonable(report.witness)
    return {
        "checker": report.checker,
        "verdict": verdict,
        "params": _jsonable(report.params),
        "seed": report.seed,
        "per_step": _jsonable(report.per_step) if report.per_step is not None else None,
        "metadata": _jsonable(report.metadata),
    }


def export_report(report: DiagnosticsReport, path) -> Path:
    path = Path(path)
    payload = json.dumps(report_to_dict(report), indent=2, sort_keys=True)
    try:
        path.write_text(payload + "\n", encoding="ascii")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
    return path


def export_run(artifacts, out_dir) -> Path:
    """Write every trajectory, every report, and the match summary of a run.

    Files go to ``out_dir/<scenario>/``; per-run directories keep concurrent
    scenario runs from contending on file names.
    """
    run_dir = Path(out_dir) / artifacts.scenario
    run_dir.mkdir(parents=True, exist_ok=True)
    for name, traj in artifacts.trajectories.items():
        export_trajectory(traj, run_dir / f"{name}.csv")
    for name, report in artifacts.reports.items():
        export_report(report, run_dir / f"{name}.json")
    summary = {
        "scenario": artifacts.scenario,
        "all_matched": artifacts.all_matched,
        "checks": [
            {
                "name": o.name,
                "expected": o.expected,
                "actual": o.actual,
                "matched": o.matched,
            }
            for o in artifacts.summary
        ],
    }
    payload = json.dumps(summary, indent=2, sort_keys=True)
    (run_dir / "summary.json").write_text(payload + "\n", encoding="ascii")
    return run_dir
