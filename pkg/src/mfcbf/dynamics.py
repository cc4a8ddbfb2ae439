"""Control-affine agent dynamics f(s, x, u) = A(s, x) + B(s, x) u.

Two models are provided: the single integrator (state = position, control =
velocity) and the double integrator (state = stacked position and velocity,
control = acceleration). Stepping is explicit Euler with zero-order-hold
controls, matching the per-step filter structure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DynamicsSpec",
    "drift",
    "control_matrix",
    "vector_field",
    "step",
    "drift_rows",
    "control_adjoint_rows",
    "drift_inner",
]

MODELS = ("single_integrator", "double_integrator")


@dataclass(frozen=True)
class DynamicsSpec:
    """Model family and spatial dimension d; control dimension equals d."""

    model: str
    spatial_dim: int

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown dynamics model {self.model!r}")
        if int(self.spatial_dim) < 1:
            raise ValueError("spatial_dim must be a positive integer")

    @property
    def state_dim(self) -> int:
        d = int(self.spatial_dim)
        return d if self.model == "single_integrator" else 2 * d

    @property
    def control_dim(self) -> int:
        return int(self.spatial_dim)


def _check_state(dyn: DynamicsSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (dyn.state_dim,):
        raise ValueError(f"state dimension mismatch: expected {dyn.state_dim}, got {x.shape}")
    return x


def drift(dyn: DynamicsSpec, s: float, x) -> np.ndarray:
    """Uncontrolled part A(s, x): zero for the single integrator, (v, 0) for the double."""
    x = _check_state(dyn, x)
    out = np.zeros_like(x)
    if dyn.model == "double_integrator":
        d = dyn.spatial_dim
        out[:d] = x[d:]
    return out


def control_matrix(dyn: DynamicsSpec, s: float, x) -> np.ndarray:
    """Control map B(s, x) as a (state_dim, control_dim) matrix."""
    _check_state(dyn, x)
    d = dyn.spatial_dim
    if dyn.model == "single_integrator":
        return np.eye(d)
    return np.vstack([np.zeros((d, d)), np.eye(d)])


def vector_field(dyn: DynamicsSpec, s: float, x, u) -> np.ndarray:
    """Full state derivative f(s, x, u) = A(s, x) + B(s, x) u."""
    x = _check_state(dyn, x)
    u = np.asarray(u, dtype=float)
    if u.shape != (dyn.control_dim,):
        raise ValueError(f"control dimension mismatch: expected {dyn.control_dim}, got {u.shape}")
    out = drift(dyn, s, x)
    if dyn.model == "single_integrator":
        out += u
    else:
        out[dyn.spatial_dim :] += u
    return out


def drift_rows(dyn: DynamicsSpec, s: float, states: np.ndarray) -> np.ndarray:
    """A(s, x) for every row of an (k, state_dim) stack."""
    out = np.zeros_like(states)
    if dyn.model == "double_integrator":
        d = dyn.spatial_dim
        out[:, :d] = states[:, d:]
    return out


def control_adjoint_rows(dyn: DynamicsSpec, grads: np.ndarray) -> np.ndarray:
    """B^T g for every row of an (k, state_dim) stack of state-space covectors."""
    if dyn.model == "single_integrator":
        return np.array(grads, dtype=float, copy=True)
    return np.array(grads[:, dyn.spatial_dim :], dtype=float, copy=True)


def drift_inner(dyn: DynamicsSpec, s: float, states: np.ndarray, grads: np.ndarray) -> float:
    """sum_i g_i . A(s, x_i) over stacked states and covectors."""
    if dyn.model == "single_integrator":
        return 0.0
    d = dyn.spatial_dim
    return float(np.sum(grads[:, :d] * states[:, d:]))


def step(dyn: DynamicsSpec, states, controls, dt: float) -> np.ndarray:
    """One explicit Euler step with zero-order-hold controls for every agent.

    ``states`` is (k, state_dim), ``controls`` is (k, control_dim). Non-finite
    inputs raise, naming the first offending agent.
    """
    states = np.asarray(states, dtype=float)
    controls = np.asarray(controls, dtype=float)
    if states.ndim != 2 or states.shape[1] != dyn.state_dim:
        raise ValueError(f"states must have shape (k, {dyn.state_dim})")
    if controls.shape != (states.shape[0], dyn.control_dim):
        raise ValueError(
            f"controls must have shape ({states.shape[0]}, {dyn.control_dim})"
        )
    if not dt > 0:
        raise ValueError("dt must be positive")
    for name, arr in (("state", states), ("control", controls)):
        finite = np.all(np.isfinite(arr), axis=1)
        if not np.all(finite):
            bad = int(np.argmin(finite))
            raise ValueError(f"non-finite {name} for agent {bad}")
    xdot = drift_rows(dyn, 0.0, states)
    if dyn.model == "single_integrator":
        xdot = xdot + controls
    else:
        xdot[:, dyn.spatial_dim :] += controls
    return states + dt * xdot
