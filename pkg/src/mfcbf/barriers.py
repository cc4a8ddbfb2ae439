"""Swarm barrier functionals on the kernel discrepancy, and the half-space
constraint they induce on per-agent controls.

Avoidance mode keeps the swarm away from a reference measure,
``H = mmd_sq_half(rho, rho_ref) - eps >= 0``; tracking mode keeps it close,
``H = eps - mmd_sq_half(rho, rho_ref) >= 0``. Enforcing ``dH/ds >= -alpha(H)``
along control-affine dynamics yields a single linear inequality on the
stacked per-agent controls,

    sum_i c_i . q_i >= b,

with ``c_i = B(s, x_i)^T g_i`` built from the particle gradients ``g_i`` of
the discrepancy and

    b = -(sum_i g_i . A(s, x_i)) - (reference-motion term) - alpha(H).

Tracking rows are assembled with every term negated (equivalently, with the
gradients of the tracking H), so downstream solvers always see the same
``>=`` orientation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import DynamicsSpec, control_adjoint_rows, drift_inner
from .kernels import KernelSpec, grad_x_pairwise
from .measures import EmpiricalMeasure, mmd_grad_particles, mmd_sq_half

__all__ = [
    "ClassKSpec",
    "BarrierSpec",
    "ConstraintRow",
    "class_k",
    "barrier_value",
    "adversary_term",
    "assemble_constraint",
    "dh_ds_analytic",
]

MODES = ("avoidance", "tracking")
ALPHA_FAMILIES = ("linear", "cubic")

DEGENERACY_TOL = 1e-10


@dataclass(frozen=True)
class ClassKSpec:
    """Strictly increasing gain with alpha(0) = 0: gamma*x or gamma*x^3."""

    family: str = "linear"
    gamma: float = 1.0

    def __post_init__(self):
        if self.family not in ALPHA_FAMILIES:
            raise ValueError(f"unknown class-K family {self.family!r}")
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError(f"class-K gain must be positive, got {self.gamma!r}")


def class_k(spec: ClassKSpec, x: float) -> float:
    if spec.family == "linear":
        return spec.gamma * x
    return spec.gamma * x**3


@dataclass(frozen=True)
class BarrierSpec:
    """Barrier mode, clearance epsilon, class-K gain and kernel."""

    mode: str
    epsilon: float
    alpha: ClassKSpec
    kernel: KernelSpec

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown barrier mode {self.mode!r}")
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise ValueError(f"epsilon must be positive, got {self.epsilon!r}")


@dataclass(frozen=True, eq=False)
class ConstraintRow:
    """One half-space constraint ``sum_i coeffs[i] . q_i >= rhs`` on stacked controls.

    ``drift_term``, ``adversary_term`` and ``h_value`` are diagnostics carrying
    the mode's sign convention, so ``dh_ds_analytic`` can reassemble the barrier
    rate without knowing the mode. ``degenerate`` flags a vanishing coefficient
    stack (coincident measures, or an observation map that hides the control).
    """

    coeffs: np.ndarray
    rhs: float
    drift_term: float
    adversary_term: float
    h_value: float
    degenerate: bool


def barrier_value(
    spec: BarrierSpec, s: float, rho: EmpiricalMeasure, rho_ref: EmpiricalMeasure
) -> float:
    """Barrier H at time s; the measures already encode the time dependence."""
    m = mmd_sq_half(spec.kernel, rho, rho_ref)
    if spec.mode == "avoidance":
        return m - spec.epsilon
    return spec.epsilon - m


def adversary_term(
    spec: BarrierSpec,
    rho: EmpiricalMeasure,
    rho_ref: EmpiricalMeasure,
    ref_velocities,
) -> float:
    """Rate of the avoidance barrier due to reference-measure motion.

    ``ref_velocities`` holds one full state-space transport velocity per
    reference particle. The returned value is the avoidance-sign dH/ds
    contribution; tracking callers negate it.
    """
    vels = np.asarray(ref_velocities, dtype=float)
    if vels.shape != rho_ref.points.shape:
        raise ValueError(
            f"expected one velocity per reference particle, got {vels.shape} "
            f"for {rho_ref.points.shape}"
        )
    g_self = grad_x_pairwise(spec.kernel, rho_ref.points, rho_ref.points)
    g_cross = grad_x_pairwise(spec.kernel, rho_ref.points, rho.points)
    inner = np.sum(rho_ref.weights[None, :, None] * g_self, axis=1)
    inner -= np.sum(rho.weights[None, :, None] * g_cross, axis=1)
    return float(np.sum(rho_ref.weights[:, None] * inner * vels))


def assemble_constraint(
    spec: BarrierSpec,
    dyn: DynamicsSpec,
    s: float,
    rho: EmpiricalMeasure,
    rho_ref: EmpiricalMeasure,
    ref_velocities,
) -> ConstraintRow:
    """Build the control constraint row for the current swarm and reference states.

    ``rho.points`` must be the controlled agents' states in swarm order.
    Avoidance uses the discrepancy gradients directly; tracking negates
    gradients, drift and reference-motion terms so the emitted row is again
    in ``>=`` orientation.
    """
    if rho.dim != dyn.state_dim:
        raise ValueError(
            f"measure dimension {rho.dim} does not match state dimension {dyn.state_dim}"
        )
    h = barrier_value(spec, s, rho, rho_ref)
    grads = mmd_grad_particles(spec.kernel, rho, rho_ref)
    adv = adversary_term(spec, rho, rho_ref, ref_velocities)
    if spec.mode == "tracking":
        grads = -grads
        adv = -adv
    drift_dot = drift_inner(dyn, s, rho.points, grads)
    coeffs = control_adjoint_rows(dyn, grads)
    rhs = -drift_dot - adv - class_k(spec.alpha, h)
    return ConstraintRow(
        coeffs=coeffs,
        rhs=rhs,
        drift_term=drift_dot,
        adversary_term=adv,
        h_value=h,
        degenerate=bool(np.linalg.norm(coeffs) < DEGENERACY_TOL),
    )


def dh_ds_analytic(row: ConstraintRow, controls) -> float:
    """Barrier rate dH/ds for the given per-agent controls.

    Equals ``drift_term + sum_i coeffs[i] . q_i + adversary_term`` with the
    row's sign convention already folded in.
    """
    q = np.asarray(controls, dtype=float)
    if q.shape != row.coeffs.shape:
        raise ValueError(
            f"controls shape {q.shape} does not match constraint coefficients "
            f"{row.coeffs.shape}"
        )
    return row.drift_term + float(np.sum(row.coeffs * q)) + row.adversary_term
