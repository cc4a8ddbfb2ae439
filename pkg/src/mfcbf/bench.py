"""Scaling benchmark: mean-field filter vs pairwise baseline over swarm sizes.

For each requested swarm size the same deterministic placement (a centered
square grid, spacing a fixed fraction of the pairwise separation distance so
the baseline rows start active without near-coincident agents) is filtered by
both paths for a fixed number of steps. The emitted table records constraint
counts and per-step medians; baseline runs that exhaust the time budget are
recorded as timeouts, not failures.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .barriers import assemble_constraint
from .baseline import pairwise_constraints, solve_dense_qp
from .config import ScenarioConfig
from .dynamics import step as dyn_step
from .measures import EmpiricalMeasure
from .qp import QpNonConvergence, project_halfspace_box
from .sim import adversary_velocity, transport_adversary

__all__ = ["BenchRow", "grid_states", "run_benchmark", "write_benchmark_csv", "BENCH_HEADER"]

BENCH_HEADER = [
    "n",
    "mf_rows",
    "baseline_rows",
    "mf_step_ms",
    "baseline_step_ms",
    "mf_solve_iters",
    "baseline_solve_iters",
]


@dataclass
class BenchRow:
    n: int
    mf_rows: int
    baseline_rows: int
    mf_step_ms: float
    baseline_step_ms: float | None
    mf_solve_iters: int
    baseline_solve_iters: int | None
    baseline_timeout: bool = False


def grid_states(cfg: ScenarioConfig, n: int) -> np.ndarray:
    """Deterministic centered grid of n agents for a benchmark scenario."""
    spacing = cfg.bench_grid_spacing
    if spacing is None:
        if cfg.pairwise is None:
            raise ValueError("benchmark template needs a pairwise section or bench.grid_spacing")
        spacing = 0.8 * cfg.pairwise.eps_safe
    d = cfg.dynamics.spatial_dim
    side = int(math.ceil(n ** (1.0 / d)))
    axes = [np.arange(side, dtype=float) * spacing for _ in range(d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)[:n]
    points -= points.mean(axis=0)
    if cfg.dynamics.model == "single_integrator":
        return points
    return np.hstack([points, np.zeros_like(points)])


def _median(samples: list[float]) -> float:
    return float(np.median(np.asarray(samples)))


def _run_mf(cfg: ScenarioConfig, states: np.ndarray, steps: int):
    dyn = cfg.dynamics
    agents = states.copy()
    adversary = np.array(cfg.adversary_initial, copy=True)
    q_nom = cfg.nominal_controls(agents.shape[0])
    times, iters = [], []
    for k in range(steps):
        s = k * cfg.dt
        t0 = time.perf_counter()
        rho = EmpiricalMeasure.uniform(agents)
        rho_ref = EmpiricalMeasure.uniform(adversary)
        vels = np.array([adversary_velocity(cfg.adversary_field, dyn, s, x) for x in adversary])
        row = assemble_constraint(cfg.barrier, dyn, s, rho, rho_ref, vels)
        controls, report = project_halfspace_box(q_nom, row, cfg.control_box, weights=rho.weights)
        agents = dyn_step(dyn, agents, controls, cfg.dt)
        times.append((time.perf_counter() - t0) * 1e3)
        iters.append(report.iterations)
        adversary = transport_adversary(cfg.adversary_field, dyn, adversary, s, cfg.dt)
    return _median(times), int(np.median(iters))


def _run_baseline(cfg: ScenarioConfig, states: np.ndarray, steps: int, budget_s: float):
    dyn = cfg.dynamics
    agents = states.copy()
    n = agents.shape[0]
    q_nom = cfg.nominal_controls(n)
    times, iters = [], []
    rows_count = len(pairwise_constraints(cfg.pairwise, dyn, 0.0, agents))
    started = time.perf_counter()
    for k in range(steps):
        elapsed = time.perf_counter() - started
        if elapsed > budget_s:
            return rows_count, None, None, True
        s = k * cfg.dt
        t0 = time.perf_counter()
        rows = pairwise_constraints(cfg.pairwise, dyn, s, agents)
        try:
            controls, report = solve_dense_qp(
                np.ones(n),
                q_nom.ravel(),
                rows.matrix,
                rows.bounds,
                cfg.control_box,
                tol=cfg.solver_tolerance,
                max_iterations=cfg.solver_max_iterations,
                time_budget_s=max(budget_s - elapsed, 1e-3),
            )
        except QpNonConvergence:
            return rows_count, None, None, True
        agents = dyn_step(dyn, agents, controls, cfg.dt)
        times.append((time.perf_counter() - t0) * 1e3)
        iters.append(report.iterations)
    return rows_count, _median(times), int(np.median(iters)), False


def run_benchmark(cfg: ScenarioConfig, sizes: list[int]) -> list[BenchRow]:
    """Benchmark both filters on matched scenarios for every requested size.

    ``cfg`` must be a mean-field scenario that also carries a pairwise
    section; sizes must be sorted ascending.
    """
    if cfg.barrier is None or cfg.pairwise is None:
        raise ValueError("benchmark template must define both barrier and pairwise sections")
    if sorted(sizes) != list(sizes):
        raise ValueError("sizes must be sorted ascending")
    out = []
    for n in sizes:
        states = grid_states(cfg, n)
        mf_ms, mf_iters = _run_mf(cfg, states, cfg.bench_steps)
        b_rows, b_ms, b_iters, timeout = _run_baseline(
            cfg, states, cfg.bench_steps, cfg.bench_budget_s
        )
        out.append(
            BenchRow(
                n=n,
                mf_rows=1,
                baseline_rows=b_rows,
                mf_step_ms=mf_ms,
                baseline_step_ms=b_ms,
                mf_solve_iters=mf_iters,
                baseline_solve_iters=b_iters,
                baseline_timeout=timeout,
            )
        )
    return out


def write_benchmark_csv(rows: list[BenchRow], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(BENCH_HEADER)
        for row in rows:
            writer.writerow(
                [
                    row.n,
                    row.mf_rows,
                    row.baseline_rows,
                    f"{row.mf_step_ms:.6g}",
                    "timeout" if row.baseline_timeout else f"{row.baseline_step_ms:.6g}",
                    row.mf_solve_iters,
                    "timeout" if row.baseline_timeout else row.baseline_solve_iters,
                ]
            )
