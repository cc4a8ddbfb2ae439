"""CSV serialization of trajectory logs.

``write_log`` emits two files into a directory:

* ``trajectory.csv`` with header ``step,time,kind,agent_id,x0..x{D-1},u0..u{m-1}``.
  One row per agent per step; adversary rows carry ``kind=adversary`` and
  empty control fields.
* ``barrier.csv`` with header ``step,time,h_value,residual,status,lambda,solve_ms``.
  One row per step.

Floats are written with 17 significant digits so parsed values round-trip
exactly. Files use ``\\n`` newlines regardless of platform.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .sim import TrajectoryLog

__all__ = [
    "write_log",
    "trajectory_header",
    "barrier_header",
    "read_trajectory_csv",
    "read_barrier_csv",
]

BARRIER_HEADER = ["step", "time", "h_value", "residual", "status", "lambda", "solve_ms"]


def fmt(value: float) -> str:
    return f"{value:.17g}"


def trajectory_header(state_dim: int, control_dim: int) -> list[str]:
    return (
        ["step", "time", "kind", "agent_id"]
        + [f"x{i}" for i in range(state_dim)]
        + [f"u{i}" for i in range(control_dim)]
    )


def barrier_header() -> list[str]:
    return list(BARRIER_HEADER)


def write_log(log: TrajectoryLog, path) -> None:
    """Write ``trajectory.csv`` and ``barrier.csv`` for a finished run."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    d = log.state_dim
    m = log.control_dim

    try:
        with open(out / "trajectory.csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(trajectory_header(d, m))
            for rec in log.records:
                for i, state in enumerate(rec.agents):
                    writer.writerow(
                        [rec.step, fmt(rec.time), "swarm", i]
                        + [fmt(v) for v in state]
                        + [fmt(v) for v in rec.controls[i]]
                    )
                for j, state in enumerate(rec.adversary):
                    writer.writerow(
                        [rec.step, fmt(rec.time), "adversary", j]
                        + [fmt(v) for v in state]
                        + [""] * m
                    )
        with open(out / "barrier.csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(barrier_header())
            for rec in log.records:
                writer.writerow(
                    [
                        rec.step,
                        fmt(rec.time),
                        fmt(rec.h_value),
                        fmt(rec.residual),
                        rec.status,
                        fmt(rec.multiplier),
                        fmt(rec.wall_ms),
                    ]
                )
    except OSError as exc:
        raise OSError(f"failed writing log under {out}: {exc}") from exc


def read_trajectory_csv(path) -> list[dict]:
    """Rows of ``trajectory.csv`` with numeric fields parsed back to floats.

    Control fields of adversary rows come back as None.
    """
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for raw in reader:
            row = {
                "step": int(raw["step"]),
                "time": float(raw["time"]),
                "kind": raw["kind"],
                "agent_id": int(raw["agent_id"]),
            }
            states = [v for k, v in raw.items() if k.startswith("x")]
            controls = [v for k, v in raw.items() if k.startswith("u")]
            row["state"] = np.array([float(v) for v in states])
            row["control"] = (
                None if any(v == "" for v in controls) else np.array([float(v) for v in controls])
            )
            rows.append(row)
    return rows


def read_barrier_csv(path) -> list[dict]:
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for raw in reader:
            rows.append(
                {
                    "step": int(raw["step"]),
                    "time": float(raw["time"]),
                    "h_value": float(raw["h_value"]),
                    "residual": float(raw["residual"]),
                    "status": raw["status"],
                    "lambda": float(raw["lambda"]),
                    "solve_ms": float(raw["solve_ms"]),
                }
            )
    return rows
