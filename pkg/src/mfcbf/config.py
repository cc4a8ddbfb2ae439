"""Scenario configuration: JSON parsing with fail-closed validation.

A scenario document is a JSON object with these sections (unknown keys are
rejected everywhere, and every validation error is reported, not just the
first):

    mode             "avoidance" | "tracking" | "baseline_pairwise"
    dynamics         {"model": ..., "spatial_dim": d}
    horizon          total simulated time T > 0
    dt               step size (default 1e-2; 2e-3 in tracking mode)
    kernel           {"family", "bandwidth", "observation"}   (mean-field modes)
    barrier          {"epsilon", "alpha": {"family", "gamma"}} (mean-field modes)
    control_box      null for unbounded, else {"lower", "upper"} with scalars,
                     per-component lists, or "inf"/"-inf" strings
    nominal          {"kind": "zero"} | {"kind": "constant", "value": [...]}
    adversary        {"kind": "constant_velocity", "velocity": [...],
                      "initial_positions": [[...], ...], "integrator": "euler"}
                     or {"kind": "waypoint_path", "waypoints": [[t, [...]], ...], ...}
    initial          {"kind": "box", "low", "high", "count", "seed"}
                     | {"kind": "explicit", "states": [[...], ...]}
    pairwise         {"eps_safe", "alpha", "individual_barriers"}  (baseline mode,
                     optional elsewhere so one template can drive the benchmark)
    solver           {"tolerance": 1e-8, "max_iterations": 50000}
    bench            {"steps": 25, "budget_seconds": 300, "grid_spacing": ...}
    output           {"wall_time": true}

Bandwidth, epsilon and eps_safe are physics and carry no defaults. The
``output.wall_time`` switch exists for reproducibility: with it off, the
per-step solve_ms diagnostic is recorded as 0 so that two runs of one config
serialize to byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .barriers import ALPHA_FAMILIES, MODES as BARRIER_MODES, BarrierSpec, ClassKSpec
from .baseline import IndividualBarrier, PairwiseSpec
from .dynamics import MODELS, DynamicsSpec
from .kernels import FAMILIES as KERNEL_FAMILIES, OBSERVATIONS, KernelSpec
from .qp import ControlBox
from .sim import AdversaryField

__all__ = ["ScenarioConfig", "ScenarioError", "parse_scenario", "load_scenario"]

SCENARIO_MODES = ("avoidance", "tracking", "baseline_pairwise")


class ScenarioError(ValueError):
    """Validation failure carrying the complete list of problems found."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


@dataclass(eq=False)
class ScenarioConfig:
    """Validated scenario ready to run; ``echo`` re-parses to an identical config."""

    mode: str
    dynamics: DynamicsSpec
    horizon: float
    dt: float
    barrier: BarrierSpec | None
    pairwise: PairwiseSpec | None
    control_box: ControlBox
    nominal_kind: str
    nominal_value: np.ndarray | None
    adversary_field: AdversaryField
    adversary_initial: np.ndarray
    adversary_integrator: str
    initial_states: np.ndarray | None
    initial_low: np.ndarray | None
    initial_high: np.ndarray | None
    initial_count: int | None
    initial_seed: int
    solver_tolerance: float
    solver_max_iterations: int
    bench_steps: int
    bench_budget_s: float
    bench_grid_spacing: float | None
    log_wall_time: bool
    echo: dict

    def nominal_controls(self, n: int) -> np.ndarray:
        m = self.dynamics.control_dim
        if self.nominal_kind == "zero":
            return np.zeros((n, m))
        return np.tile(self.nominal_value, (n, 1))

    @property
    def agent_count(self) -> int:
        if self.initial_states is not None:
            return self.initial_states.shape[0]
        return int(self.initial_count)


class _DuplicateKey(Exception):
    def __init__(self, key):
        super().__init__(key)
        self.key = key


def _pairs_hook(pairs):
    out = {}
    for key, value in pairs:
        if key in out:
            raise _DuplicateKey(key)
        out[key] = value
    return out


def _section(raw, key, path, errors, required=False, default=None):
    if key not in raw:
        if required:
            errors.append(f"{path}: required section missing")
        return default if default is not None else None
    value = raw.pop(key)
    if value is None:
        return None
    if not isinstance(value, dict):
        errors.append(f"{path}: expected an object")
        return None
    return dict(value)


def _number(raw, key, path, errors, required=False, default=None, positive=False):
    if key not in raw:
        if required:
            errors.append(f"{path}: required value missing")
        return default
    value = raw.pop(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errors.append(f"{path}: expected a number")
        return default
    value = float(value)
    if not np.isfinite(value):
        errors.append(f"{path}: must be finite")
        return default
    if positive and value <= 0:
        errors.append(f"{path}: must be > 0")
        return default
    return value


def _integer(raw, key, path, errors, required=False, default=None, minimum=None):
    if key not in raw:
        if required:
            errors.append(f"{path}: required value missing")
        return default
    value = raw.pop(key)
    if isinstance(value, bool) or not isinstance(value, int):
        errors.append(f"{path}: expected an integer")
        return default
    if minimum is not None and value < minimum:
        errors.append(f"{path}: must be >= {minimum}")
        return default
    return value


def _enum(raw, key, path, errors, choices, required=False, default=None):
    if key not in raw:
        if required:
            errors.append(f"{path}: required value missing")
        return default
    value = raw.pop(key)
    if value not in choices:
        errors.append(f"{path}: expected one of {sorted(choices)}, got {value!r}")
        return default
    return value


def _boolean(raw, key, path, errors, default):
    if key not in raw:
        return default
    value = raw.pop(key)
    if not isinstance(value, bool):
        errors.append(f"{path}: expected true or false")
        return default
    return value


def _vector(value, path, errors, length=None):
    if not isinstance(value, list) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        errors.append(f"{path}: expected a list of numbers")
        return None
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        errors.append(f"{path}: entries must be finite")
        return None
    if length is not None and arr.shape != (length,):
        errors.append(f"{path}: expected {length} entries, got {arr.shape[0]}")
        return None
    return arr


def _reject_unknown(raw: dict, path: str, errors: list[str]) -> None:
    for key in sorted(raw):
        errors.append((f"{path}.{key}" if path else key) + ": unknown key")


def _box_bound(value, path, errors, dim):
    """Scalar, list, or "inf"/"-inf" strings, broadcast to the control dimension."""

    def one(v, p):
        if isinstance(v, str):
            if v in ("inf", "+inf"):
                return np.inf
            if v == "-inf":
                return -np.inf
            errors.append(f"{p}: expected a number or 'inf'/'-inf'")
            return None
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            errors.append(f"{p}: expected a number or 'inf'/'-inf'")
            return None
        return float(v)

    if isinstance(value, list):
        if len(value) != dim:
            errors.append(f"{path}: expected {dim} entries, got {len(value)}")
            return None
        vals = [one(v, f"{path}[{i}]") for i, v in enumerate(value)]
        if any(v is None for v in vals):
            return None
        return np.array(vals)
    v = one(value, path)
    return None if v is None else np.full(dim, v)


def _bound_echo(arr: np.ndarray) -> list:
    out = []
    for v in arr:
        if np.isposinf(v):
            out.append("inf")
        elif np.isneginf(v):
            out.append("-inf")
        else:
            out.append(float(v))
    return out


def _parse_alpha(section, path, errors) -> ClassKSpec | None:
    if section is None:
        return ClassKSpec("linear", 1.0)
    family = _enum(section, "family", f"{path}.family", errors, ALPHA_FAMILIES, default="linear")
    gamma = _number(section, "gamma", f"{path}.gamma", errors, default=1.0, positive=True)
    _reject_unknown(section, path, errors)
    if family is None or gamma is None:
        return None
    return ClassKSpec(family, gamma)


def parse_scenario(text: str) -> ScenarioConfig:
    """Parse and validate a scenario document.

    Raises :class:`ScenarioError` carrying every problem found; syntax errors
    report line and column.
    """
    try:
        raw = json.loads(text, object_pairs_hook=_pairs_hook)
    except _DuplicateKey as exc:
        raise ScenarioError([f"duplicate key {exc.key!r}"]) from None
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"line {exc.lineno} column {exc.colno}: {exc.msg}"]) from None
    if not isinstance(raw, dict):
        raise ScenarioError(["top level: expected a JSON object"])
    raw = dict(raw)
    errors: list[str] = []

    mode = _enum(raw, "mode", "mode", errors, SCENARIO_MODES, required=True)

    dyn_sec = _section(raw, "dynamics", "dynamics", errors, required=True)
    dynamics = None
    if dyn_sec is not None:
        model = _enum(dyn_sec, "model", "dynamics.model", errors, MODELS, required=True)
        d = _integer(dyn_sec, "spatial_dim", "dynamics.spatial_dim", errors, required=True, minimum=1)
        _reject_unknown(dyn_sec, "dynamics", errors)
        if model is not None and d is not None:
            dynamics = DynamicsSpec(model, d)

    horizon = _number(raw, "horizon", "horizon", errors, required=True, positive=True)
    default_dt = 2e-3 if mode == "tracking" else 1e-2
    dt = _number(raw, "dt", "dt", errors, default=default_dt, positive=True)

    mf_mode = mode in ("avoidance", "tracking")

    kernel = None
    kernel_sec = _section(raw, "kernel", "kernel", errors, required=mf_mode)
    if kernel_sec is not None:
        family = _enum(
            kernel_sec, "family", "kernel.family", errors, KERNEL_FAMILIES, default="gaussian"
        )
        bandwidth = _number(
            kernel_sec, "bandwidth", "kernel.bandwidth", errors, required=True, positive=True
        )
        observation = _enum(
            kernel_sec,
            "observation",
            "kernel.observation",
            errors,
            OBSERVATIONS,
            default="full_state",
        )
        _reject_unknown(kernel_sec, "kernel", errors)
        if family is not None and bandwidth is not None and observation is not None and dynamics is not None:
            kernel = KernelSpec(
                family,
                bandwidth,
                observation,
                dynamics.spatial_dim if observation == "position_only" else None,
            )

    barrier = None
    barrier_alpha = None
    epsilon = None
    barrier_sec = _section(raw, "barrier", "barrier", errors, required=mf_mode)
    if barrier_sec is not None:
        epsilon = _number(
            barrier_sec, "epsilon", "barrier.epsilon", errors, required=True, positive=True
        )
        alpha_sec = _section(barrier_sec, "alpha", "barrier.alpha", errors)
        barrier_alpha = _parse_alpha(alpha_sec, "barrier.alpha", errors)
        _reject_unknown(barrier_sec, "barrier", errors)
    if mf_mode and epsilon is not None and barrier_alpha is not None and kernel is not None:
        barrier = BarrierSpec(mode, epsilon, barrier_alpha, kernel)

    control_dim = dynamics.control_dim if dynamics is not None else None
    box = None
    box_raw = raw.pop("control_box", None)
    if box_raw is None:
        if control_dim is not None:
            box = ControlBox.unbounded(control_dim)
    elif not isinstance(box_raw, dict):
        errors.append("control_box: expected an object or null")
    elif control_dim is not None:
        box_sec = dict(box_raw)
        lower = (
            _box_bound(box_sec.pop("lower"), "control_box.lower", errors, control_dim)
            if "lower" in box_sec
            else np.full(control_dim, -np.inf)
        )
        upper = (
            _box_bound(box_sec.pop("upper"), "control_box.upper", errors, control_dim)
            if "upper" in box_sec
            else np.full(control_dim, np.inf)
        )
        _reject_unknown(box_sec, "control_box", errors)
        if lower is not None and upper is not None:
            if np.any(lower > upper):
                errors.append("control_box: lower exceeds upper")
            else:
                box = ControlBox(lower, upper)

    nominal_kind = "zero"
    nominal_value = None
    nominal_sec = _section(raw, "nominal", "nominal", errors)
    if nominal_sec is not None:
        nominal_kind = _enum(
            nominal_sec, "kind", "nominal.kind", errors, ("zero", "constant"), default="zero"
        )
        if nominal_kind == "constant":
            if "value" not in nominal_sec:
                errors.append("nominal.value: required for constant nominal")
            elif control_dim is not None:
                nominal_value = _vector(
                    nominal_sec.pop("value"), "nominal.value", errors, control_dim
                )
            else:
                nominal_sec.pop("value")
        _reject_unknown(nominal_sec, "nominal", errors)

    adversary_field = None
    adversary_initial = None
    adversary_integrator = "euler"
    adv_sec = _section(raw, "adversary", "adversary", errors, required=True)
    if adv_sec is not None and dynamics is not None:
        kind = _enum(
            adv_sec,
            "kind",
            "adversary.kind",
            errors,
            ("constant_velocity", "waypoint_path"),
            required=True,
        )
        adversary_integrator = _enum(
            adv_sec, "integrator", "adversary.integrator", errors, ("euler", "rk4"), default="euler"
        )
        d = dynamics.spatial_dim
        velocity = None
        waypoints = None
        if kind == "constant_velocity":
            if "velocity" not in adv_sec:
                errors.append("adversary.velocity: required value missing")
            else:
                velocity = _vector(adv_sec.pop("velocity"), "adversary.velocity", errors, d)
        elif kind == "waypoint_path":
            wp_raw = adv_sec.pop("waypoints", None)
            if not isinstance(wp_raw, list) or len(wp_raw) < 2:
                errors.append("adversary.waypoints: expected a list of at least two [time, position] knots")
            else:
                knots = []
                ok = True
                for i, knot in enumerate(wp_raw):
                    if (
                        not isinstance(knot, list)
                        or len(knot) != 2
                        or isinstance(knot[0], bool)
                        or not isinstance(knot[0], (int, float))
                    ):
                        errors.append(f"adversary.waypoints[{i}]: expected [time, position]")
                        ok = False
                        continue
                    pos = _vector(knot[1], f"adversary.waypoints[{i}][1]", errors, d)
                    if pos is None:
                        ok = False
                        continue
                    knots.append((float(knot[0]), pos))
                if ok and knots:
                    times = [t for t, _ in knots]
                    if any(t1 <= t0 for t0, t1 in zip(times, times[1:])):
                        errors.append("adversary.waypoints: times must be strictly increasing")
                    elif horizon is not None and (times[0] > 0 or times[-1] < horizon):
                        errors.append(
                            f"adversary.waypoints: knots must span [0, {horizon}] to cover the run"
                        )
                    else:
                        waypoints = tuple(knots)
        positions = None
        pos_raw = adv_sec.pop("initial_positions", None)
        if not isinstance(pos_raw, list) or len(pos_raw) < 1:
            errors.append("adversary.initial_positions: expected a non-empty list of positions")
        else:
            rows = [_vector(p, f"adversary.initial_positions[{i}]", errors, d) for i, p in enumerate(pos_raw)]
            if all(r is not None for r in rows):
                positions = np.vstack(rows)
        _reject_unknown(adv_sec, "adversary", errors)
        if kind == "constant_velocity" and velocity is not None:
            adversary_field = AdversaryField("constant_velocity", velocity=velocity)
        elif kind == "waypoint_path" and waypoints is not None:
            adversary_field = AdversaryField("waypoint_path", waypoints=waypoints)
        if adversary_field is not None and positions is not None:
            if dynamics.model == "single_integrator":
                adversary_initial = positions
            else:
                if adversary_field.kind == "constant_velocity":
                    v0 = adversary_field.velocity
                else:
                    t0, p0 = adversary_field.waypoints[0]
                    t1, p1 = adversary_field.waypoints[1]
                    v0 = (p1 - p0) / (t1 - t0)
                adversary_initial = np.hstack(
                    [positions, np.tile(v0, (positions.shape[0], 1))]
                )

    initial_states = None
    initial_low = initial_high = None
    initial_count = None
    initial_seed = 0
    init_sec = _section(raw, "initial", "initial", errors, required=True)
    if init_sec is not None and dynamics is not None:
        kind = _enum(
            init_sec, "kind", "initial.kind", errors, ("box", "explicit"), required=True
        )
        if kind == "box":
            d = dynamics.spatial_dim
            low = (
                _vector(init_sec.pop("low"), "initial.low", errors, d)
                if "low" in init_sec
                else errors.append("initial.low: required value missing")
            )
            high = (
                _vector(init_sec.pop("high"), "initial.high", errors, d)
                if "high" in init_sec
                else errors.append("initial.high: required value missing")
            )
            count = _integer(init_sec, "count", "initial.count", errors, required=True, minimum=1)
            seed = _integer(init_sec, "seed", "initial.seed", errors, default=0)
            if isinstance(low, np.ndarray) and isinstance(high, np.ndarray):
                if np.any(low > high):
                    errors.append("initial: low exceeds high")
                else:
                    initial_low, initial_high = low, high
            initial_count = count
            initial_seed = seed if seed is not None else 0
        elif kind == "explicit":
            states_raw = init_sec.pop("states", None)
            if not isinstance(states_raw, list) or len(states_raw) < 1:
                errors.append("initial.states: expected a non-empty list of state vectors")
            else:
                rows = [
                    _vector(sv, f"initial.states[{i}]", errors, dynamics.state_dim)
                    for i, sv in enumerate(states_raw)
                ]
                if all(r is not None for r in rows):
                    initial_states = np.vstack(rows)
        _reject_unknown(init_sec, "initial", errors)

    pairwise = None
    pw_sec = _section(raw, "pairwise", "pairwise", errors, required=(mode == "baseline_pairwise"))
    if pw_sec is not None and dynamics is not None:
        eps_safe = _number(
            pw_sec, "eps_safe", "pairwise.eps_safe", errors, required=True, positive=True
        )
        alpha_sec = _section(pw_sec, "alpha", "pairwise.alpha", errors)
        pw_alpha = _parse_alpha(alpha_sec, "pairwise.alpha", errors)
        barriers = []
        bars_raw = pw_sec.pop("individual_barriers", [])
        if not isinstance(bars_raw, list):
            errors.append("pairwise.individual_barriers: expected a list")
            bars_raw = []
        for i, bar in enumerate(bars_raw):
            path = f"pairwise.individual_barriers[{i}]"
            if not isinstance(bar, dict):
                errors.append(f"{path}: expected an object")
                continue
            bar = dict(bar)
            agent = _integer(bar, "agent", f"{path}.agent", errors, required=True, minimum=0)
            center = (
                _vector(bar.pop("center"), f"{path}.center", errors, dynamics.state_dim)
                if "center" in bar
                else errors.append(f"{path}.center: required value missing")
            )
            radius = _number(bar, "radius", f"{path}.radius", errors, required=True, positive=True)
            _reject_unknown(bar, path, errors)
            if agent is not None and isinstance(center, np.ndarray) and radius is not None:
                barriers.append(IndividualBarrier(agent, center, radius))
        _reject_unknown(pw_sec, "pairwise", errors)
        if eps_safe is not None and pw_alpha is not None:
            pairwise = PairwiseSpec(eps_safe, pw_alpha, tuple(barriers))

    solver_sec = _section(raw, "solver", "solver", errors, default={})
    solver_sec = solver_sec if solver_sec is not None else {}
    solver_tol = _number(
        solver_sec, "tolerance", "solver.tolerance", errors, default=1e-8, positive=True
    )
    solver_iters = _integer(
        solver_sec, "max_iterations", "solver.max_iterations", errors, default=50_000, minimum=1
    )
    _reject_unknown(solver_sec, "solver", errors)

    bench_sec = _section(raw, "bench", "bench", errors, default={})
    bench_sec = bench_sec if bench_sec is not None else {}
    bench_steps = _integer(bench_sec, "steps", "bench.steps", errors, default=25, minimum=20)
    bench_budget = _number(
        bench_sec, "budget_seconds", "bench.budget_seconds", errors, default=300.0, positive=True
    )
    bench_spacing = _number(
        bench_sec, "grid_spacing", "bench.grid_spacing", errors, default=None, positive=True
    )
    _reject_unknown(bench_sec, "bench", errors)

    output_sec = _section(raw, "output", "output", errors, default={})
    output_sec = output_sec if output_sec is not None else {}
    wall_time = _boolean(output_sec, "wall_time", "output.wall_time", errors, default=True)
    _reject_unknown(output_sec, "output", errors)

    _reject_unknown(raw, "", errors)

    # Cross-checks that need several sections at once.
    if (
        not errors
        and pairwise is not None
        and initial_states is None
        and initial_count is not None
    ):
        for bar in pairwise.individual_barriers:
            if bar.agent >= initial_count:
                errors.append(
                    f"pairwise.individual_barriers: agent {bar.agent} out of range for count {initial_count}"
                )
    if not errors and pairwise is not None and initial_states is not None:
        for bar in pairwise.individual_barriers:
            if bar.agent >= initial_states.shape[0]:
                errors.append(
                    f"pairwise.individual_barriers: agent {bar.agent} out of range"
                )

    if errors:
        raise ScenarioError(errors)

    echo: dict = {
        "mode": mode,
        "dynamics": {"model": dynamics.model, "spatial_dim": dynamics.spatial_dim},
        "horizon": horizon,
        "dt": dt,
        "control_box": None
        if box is not None and not np.any(np.isfinite(box.lower)) and not np.any(np.isfinite(box.upper))
        else {"lower": _bound_echo(box.lower), "upper": _bound_echo(box.upper)},
        "nominal": {"kind": nominal_kind}
        if nominal_value is None
        else {"kind": nominal_kind, "value": [float(v) for v in nominal_value]},
        "adversary": _adversary_echo(adversary_field, adversary_initial, adversary_integrator, dynamics),
        "initial": (
            {"kind": "explicit", "states": [[float(v) for v in row] for row in initial_states]}
            if initial_states is not None
            else {
                "kind": "box",
                "low": [float(v) for v in initial_low],
                "high": [float(v) for v in initial_high],
                "count": initial_count,
                "seed": initial_seed,
            }
        ),
        "solver": {"tolerance": solver_tol, "max_iterations": solver_iters},
        "bench": {
            "steps": bench_steps,
            "budget_seconds": bench_budget,
            **({"grid_spacing": bench_spacing} if bench_spacing is not None else {}),
        },
        "output": {"wall_time": wall_time},
    }
    if barrier is not None:
        echo["kernel"] = {
            "family": barrier.kernel.family,
            "bandwidth": barrier.kernel.bandwidth,
            "observation": barrier.kernel.observation,
        }
        echo["barrier"] = {
            "epsilon": barrier.epsilon,
            "alpha": {"family": barrier.alpha.family, "gamma": barrier.alpha.gamma},
        }
    if pairwise is not None:
        echo["pairwise"] = {
            "eps_safe": pairwise.eps_safe,
            "alpha": {"family": pairwise.alpha.family, "gamma": pairwise.alpha.gamma},
            **(
                {
                    "individual_barriers": [
                        {
                            "agent": bar.agent,
                            "center": [float(v) for v in bar.center],
                            "radius": bar.radius,
                        }
                        for bar in pairwise.individual_barriers
                    ]
                }
                if pairwise.individual_barriers
                else {}
            ),
        }

    return ScenarioConfig(
        mode=mode,
        dynamics=dynamics,
        horizon=horizon,
        dt=dt,
        barrier=barrier,
        pairwise=pairwise,
        control_box=box,
        nominal_kind=nominal_kind,
        nominal_value=nominal_value,
        adversary_field=adversary_field,
        adversary_initial=adversary_initial,
        adversary_integrator=adversary_integrator,
        initial_states=initial_states,
        initial_low=initial_low,
        initial_high=initial_high,
        initial_count=initial_count,
        initial_seed=initial_seed,
        solver_tolerance=solver_tol,
        solver_max_iterations=solver_iters,
        bench_steps=bench_steps,
        bench_budget_s=bench_budget,
        bench_grid_spacing=bench_spacing,
        log_wall_time=wall_time,
        echo=echo,
    )


def _adversary_echo(fld, initial, integrator, dynamics) -> dict:
    d = dynamics.spatial_dim
    positions = [[float(v) for v in row[:d]] for row in initial]
    out: dict = {"kind": fld.kind}
    if fld.kind == "constant_velocity":
        out["velocity"] = [float(v) for v in fld.velocity]
    else:
        out["waypoints"] = [[t, [float(v) for v in p]] for t, p in fld.waypoints]
    out["initial_positions"] = positions
    out["integrator"] = integrator
    return out


def load_scenario(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read())
