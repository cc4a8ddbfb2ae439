"""Closed-loop engine: adversary transport, constraint assembly, QP filtering,
state stepping and logging.

Each step works on the pre-step state: build the empirical measures, assemble
the constraint (one row in mean-field mode, n(n-1)/2 rows in the pairwise
baseline), filter the nominal controls, record, then advance agents by one
Euler step and transport the adversary by its velocity field. Runs are
deterministic: the same config produces the same log, bit for bit.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .barriers import assemble_constraint, class_k, dh_ds_analytic
from .baseline import pairwise_constraints, solve_dense_qp
from .dynamics import DynamicsSpec, step as dyn_step
from .measures import EmpiricalMeasure
from .qp import QpNonConvergence, project_halfspace_box

if TYPE_CHECKING:  # pragma: no cover - typing only
    from .config import ScenarioConfig

__all__ = [
    "SwarmState",
    "AdversaryField",
    "StepRecord",
    "TrajectoryLog",
    "SimulationError",
    "adversary_velocity",
    "transport_adversary",
    "run_scenario",
]

ADVERSARY_KINDS = ("constant_velocity", "waypoint_path")


@dataclass(eq=False)
class SwarmState:
    """Time plus stacked controlled-agent and adversary state vectors."""

    time: float
    agents: np.ndarray
    adversary: np.ndarray

    def __post_init__(self):
        self.agents = np.asarray(self.agents, dtype=float)
        self.adversary = np.asarray(self.adversary, dtype=float)
        if self.agents.ndim != 2 or self.adversary.ndim != 2:
            raise ValueError("agent and adversary states must be 2-D stacks")
        if self.agents.shape[0] < 1 or self.adversary.shape[0] < 1:
            raise ValueError("need at least one agent and one adversary particle")
        if self.agents.shape[1] != self.adversary.shape[1]:
            raise ValueError("agents and adversary disagree on state dimension")


@dataclass(frozen=True, eq=False)
class AdversaryField:
    """Prescribed transport velocity for the adversary particles.

    ``constant_velocity`` carries a spatial velocity vector; for the double
    integrator it lifts to (velocity, 0), moving the state kinematically.
    ``waypoint_path`` interpolates (time, position) knots piecewise linearly.
    """

    kind: str
    velocity: np.ndarray | None = None
    waypoints: tuple[tuple[float, np.ndarray], ...] | None = None

    def __post_init__(self):
        if self.kind not in ADVERSARY_KINDS:
            raise ValueError(f"unknown adversary field kind {self.kind!r}")
        if self.kind == "constant_velocity":
            if self.velocity is None:
                raise ValueError("constant_velocity field needs a velocity vector")
            vel = np.asarray(self.velocity, dtype=float)
            if vel.ndim != 1 or not np.all(np.isfinite(vel)):
                raise ValueError("velocity must be a finite vector")
            object.__setattr__(self, "velocity", vel)
        else:
            if self.waypoints is None or len(self.waypoints) < 2:
                raise ValueError("waypoint_path needs at least two knots")
            knots = []
            prev_t = -np.inf
            for t, pos in self.waypoints:
                t = float(t)
                pos = np.asarray(pos, dtype=float)
                if t <= prev_t:
                    raise ValueError("waypoint times must be strictly increasing")
                if pos.ndim != 1 or not np.all(np.isfinite(pos)):
                    raise ValueError("waypoint positions must be finite vectors")
                knots.append((t, pos))
                prev_t = t
            object.__setattr__(self, "waypoints", tuple(knots))


def _physical_velocity(fld: AdversaryField, s: float) -> np.ndarray:
    if fld.kind == "constant_velocity":
        return fld.velocity
    times = [t for t, _ in fld.waypoints]
    if s < times[0] - 1e-12 or s > times[-1] + 1e-12:
        raise ValueError(f"time {s} outside waypoint span [{times[0]}, {times[-1]}]")
    idx = int(np.searchsorted(times, s, side="right")) - 1
    idx = min(max(idx, 0), len(times) - 2)
    t0, p0 = fld.waypoints[idx]
    t1, p1 = fld.waypoints[idx + 1]
    return (p1 - p0) / (t1 - t0)


def _lift(dyn: DynamicsSpec, phys: np.ndarray) -> np.ndarray:
    if phys.shape != (dyn.spatial_dim,):
        raise ValueError(
            f"adversary velocity dimension {phys.shape} does not match spatial_dim {dyn.spatial_dim}"
        )
    if dyn.model == "single_integrator":
        return np.array(phys, dtype=float, copy=True)
    return np.concatenate([phys, np.zeros(dyn.spatial_dim)])


def adversary_velocity(fld: AdversaryField, dyn: DynamicsSpec, s: float, x) -> np.ndarray:
    """State-space transport velocity of the adversary at (s, x).

    Both field kinds are spatially uniform, so ``x`` only participates in a
    dimension check.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (dyn.state_dim,):
        raise ValueError(f"state dimension mismatch: expected {dyn.state_dim}, got {x.shape}")
    return _lift(dyn, _physical_velocity(fld, s))


def transport_adversary(
    fld: AdversaryField,
    dyn: DynamicsSpec,
    states: np.ndarray,
    s: float,
    dt: float,
    method: str = "euler",
) -> np.ndarray:
    """Move all adversary particles over [s, s + dt] along the field.

    ``rk4`` integrates the (time-only) velocity by Runge-Kutta quadrature,
    useful for waypoint paths crossed mid-step; for a constant field both
    methods coincide. Double-integrator waypoint transport resets the
    velocity block to the segment slope at s + dt, keeping the state
    kinematically consistent.
    """
    states = np.asarray(states, dtype=float)
    if method == "euler":
        delta = dt * _lift(dyn, _physical_velocity(fld, s))
    elif method == "rk4":
        k1 = _physical_velocity(fld, s)
        k2 = _physical_velocity(fld, s + 0.5 * dt)
        k4 = _physical_velocity(fld, s + dt)
        delta = dt * _lift(dyn, (k1 + 4.0 * k2 + k4) / 6.0)
    else:
        raise ValueError(f"unknown transport method {method!r}")
    out = states + delta[None, :]
    if fld.kind == "waypoint_path" and dyn.model == "double_integrator":
        out[:, dyn.spatial_dim :] = _physical_velocity(fld, s + dt)[None, :]
    return out


@dataclass(eq=False)
class StepRecord:
    """Pre-step snapshot plus the controls applied over the step."""

    step: int
    time: float
    agents: np.ndarray
    adversary: np.ndarray
    controls: np.ndarray
    h_value: float
    residual: float
    status: str
    multiplier: float
    iterations: int
    wall_ms: float


@dataclass(eq=False)
class TrajectoryLog:
    """Per-step records with the scenario echo that produced them."""

    scenario: dict
    mode: str
    dt: float
    horizon: float
    state_dim: int
    control_dim: int
    records: list[StepRecord] = field(default_factory=list)

    def h_values(self) -> np.ndarray:
        return np.array([r.h_value for r in self.records])

    def statuses(self) -> list[str]:
        return [r.status for r in self.records]

    def min_h(self) -> float:
        return float(np.min(self.h_values())) if self.records else np.nan


class SimulationError(RuntimeError):
    """Raised when a run aborts; carries the log built so far."""

    def __init__(self, message: str, log: TrajectoryLog):
        super().__init__(message)
        self.log = log


def initial_swarm(cfg: "ScenarioConfig") -> SwarmState:
    """Initial agent and adversary states from a validated config."""
    dyn = cfg.dynamics
    if cfg.initial_states is not None:
        agents = np.array(cfg.initial_states, dtype=float, copy=True)
    else:
        rng = np.random.default_rng(cfg.initial_seed)
        positions = rng.uniform(
            cfg.initial_low, cfg.initial_high, size=(cfg.initial_count, dyn.spatial_dim)
        )
        if dyn.model == "single_integrator":
            agents = positions
        else:
            agents = np.hstack([positions, np.zeros_like(positions)])
    return SwarmState(time=0.0, agents=agents, adversary=np.array(cfg.adversary_initial, copy=True))


def num_steps(horizon: float, dt: float) -> int:
    return int(math.ceil(horizon / dt - 1e-9))


def run_scenario(cfg: "ScenarioConfig") -> TrajectoryLog:
    """Run the closed loop described by a validated config.

    Returns the full trajectory log; aborts raise :class:`SimulationError`
    with the partial log attached.
    """
    dyn = cfg.dynamics
    state = initial_swarm(cfg)
    n = state.agents.shape[0]
    q_nom = cfg.nominal_controls(n)
    steps = num_steps(cfg.horizon, cfg.dt)
    log = TrajectoryLog(
        scenario=cfg.echo,
        mode=cfg.mode,
        dt=cfg.dt,
        horizon=cfg.horizon,
        state_dim=dyn.state_dim,
        control_dim=dyn.control_dim,
    )

    for k in range(steps):
        s = k * cfg.dt
        t0 = time.perf_counter()
        try:
            if cfg.mode in ("avoidance", "tracking"):
                rho = EmpiricalMeasure.uniform(state.agents)
                rho_ref = EmpiricalMeasure.uniform(state.adversary)
                vels = np.array(
                    [adversary_velocity(cfg.adversary_field, dyn, s, x) for x in state.adversary]
                )
                row = assemble_constraint(cfg.barrier, dyn, s, rho, rho_ref, vels)
                controls, report = project_halfspace_box(
                    q_nom, row, cfg.control_box, weights=rho.weights
                )
                h_val = row.h_value
                residual = dh_ds_analytic(row, controls) + class_k(
                    cfg.barrier.alpha, row.h_value
                )
            else:
                rows = pairwise_constraints(cfg.pairwise, dyn, s, state.agents)
                controls, report = solve_dense_qp(
                    np.ones(n),
                    q_nom.ravel(),
                    rows.matrix,
                    rows.bounds,
                    cfg.control_box,
                    tol=cfg.solver_tolerance,
                    max_iterations=cfg.solver_max_iterations,
                )
                if len(rows):
                    h_val = float(np.min(rows.h_values))
                    residual = float(np.min(rows.matrix @ controls.ravel() - rows.bounds))
                else:
                    h_val = np.inf
                    residual = np.inf
        except (QpNonConvergence, ValueError) as exc:
            raise SimulationError(f"step {k} (t={s:g}) failed: {exc}", log) from exc

        wall_ms = (time.perf_counter() - t0) * 1e3 if cfg.log_wall_time else 0.0
        log.records.append(
            StepRecord(
                step=k,
                time=s,
                agents=state.agents.copy(),
                adversary=state.adversary.copy(),
                controls=np.asarray(controls, dtype=float).copy(),
                h_value=h_val,
                residual=residual,
                status=report.status,
                multiplier=report.multiplier,
                iterations=report.iterations,
                wall_ms=wall_ms,
            )
        )

        try:
            agents = dyn_step(dyn, state.agents, controls, cfg.dt)
            adversary = transport_adversary(
                cfg.adversary_field, dyn, state.adversary, s, cfg.dt, cfg.adversary_integrator
            )
        except ValueError as exc:
            raise SimulationError(f"step {k} (t={s:g}) diverged: {exc}", log) from exc
        if not (np.all(np.isfinite(agents)) and np.all(np.isfinite(adversary))):
            raise SimulationError(f"step {k} (t={s:g}) produced non-finite states", log)
        state = SwarmState(time=(k + 1) * cfg.dt, agents=agents, adversary=adversary)

    return log
