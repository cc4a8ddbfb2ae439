"""Finite-dimensional pairwise CBF filter, the scaling baseline.

Every unordered agent pair (i < j) contributes one separation barrier
``h_ij = ||z_i - z_j||^2 - eps_safe^2`` on full state vectors, plus one row
per configured individual sphere-avoid barrier. The stacked rows feed the
dense QP solver; the decision variable has dimension n * control_dim, and the
row count grows as n(n-1)/2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .barriers import ClassKSpec, class_k
from .dynamics import DynamicsSpec, drift, drift_rows
from .qp import ControlBox, QpReport, solve_dense_qp

__all__ = ["IndividualBarrier", "PairwiseSpec", "PairwiseRows", "pairwise_constraints", "solve_pairwise_cbf"]


@dataclass(frozen=True, eq=False)
class IndividualBarrier:
    """Keep one agent outside a sphere: h = ||z - center||^2 - radius^2."""

    agent: int
    center: np.ndarray
    radius: float

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float)
        if center.ndim != 1:
            raise ValueError("barrier center must be a state vector")
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ValueError("barrier radius must be positive")
        object.__setattr__(self, "center", center)


@dataclass(frozen=True)
class PairwiseSpec:
    """Pairwise separation distance, class-K gain and optional per-agent barriers."""

    eps_safe: float
    alpha: ClassKSpec
    individual_barriers: tuple[IndividualBarrier, ...] = ()

    def __post_init__(self):
        if not (np.isfinite(self.eps_safe) and self.eps_safe > 0):
            raise ValueError(f"eps_safe must be positive, got {self.eps_safe!r}")


@dataclass(frozen=True, eq=False)
class PairwiseRows:
    """Stacked rows ``matrix @ q_stacked >= bounds`` with per-row barrier values."""

    matrix: np.ndarray
    bounds: np.ndarray
    h_values: np.ndarray

    def __len__(self) -> int:
        return self.matrix.shape[0]


def pairwise_constraints(
    spec: PairwiseSpec, dyn: DynamicsSpec, s: float, states
) -> PairwiseRows:
    """Rows for all unordered pairs (i < j), then one row per individual barrier.

    A pair row carries the coefficients ``B^T 2(z_i - z_j)`` in agent i's block
    and the negated coefficients in agent j's block; its bound is
    ``-alpha(h_ij)`` minus the drift contribution of both endpoints.
    """
    states = np.asarray(states, dtype=float)
    if states.ndim != 2 or states.shape[1] != dyn.state_dim:
        raise ValueError(f"states must have shape (n, {dyn.state_dim})")
    n = states.shape[0]
    m = dyn.control_dim
    d = dyn.spatial_dim
    drifts = drift_rows(dyn, s, states)

    def ctrl_block(grad_state: np.ndarray) -> np.ndarray:
        # B^T for both models: identity for the single integrator, the
        # velocity block for the double integrator.
        return grad_state if dyn.model == "single_integrator" else grad_state[d:]

    rows = []
    bounds = []
    h_vals = []
    for i in range(n):
        for j in range(i + 1, n):
            diff = states[i] - states[j]
            h = float(np.dot(diff, diff)) - spec.eps_safe**2
            grad_i = 2.0 * diff
            row = np.zeros(n * m)
            row[i * m : (i + 1) * m] = ctrl_block(grad_i)
            row[j * m : (j + 1) * m] = ctrl_block(-grad_i)
            drift_dot = float(np.dot(grad_i, drifts[i])) + float(np.dot(-grad_i, drifts[j]))
            rows.append(row)
            bounds.append(-class_k(spec.alpha, h) - drift_dot)
            h_vals.append(h)
    for bar in spec.individual_barriers:
        if not 0 <= bar.agent < n:
            raise ValueError(f"individual barrier references missing agent {bar.agent}")
        if bar.center.shape != (dyn.state_dim,):
            raise ValueError(
                f"barrier center dimension {bar.center.shape[0]} does not match "
                f"state dimension {dyn.state_dim}"
            )
        diff = states[bar.agent] - bar.center
        h = float(np.dot(diff, diff)) - bar.radius**2
        grad = 2.0 * diff
        row = np.zeros(n * m)
        row[bar.agent * m : (bar.agent + 1) * m] = ctrl_block(grad)
        drift_dot = float(np.dot(grad, drift(dyn, s, states[bar.agent])))
        rows.append(row)
        bounds.append(-class_k(spec.alpha, h) - drift_dot)
        h_vals.append(h)

    matrix = np.array(rows, dtype=float).reshape(len(rows), n * m)
    return PairwiseRows(
        matrix=matrix,
        bounds=np.array(bounds, dtype=float),
        h_values=np.array(h_vals, dtype=float),
    )


def solve_pairwise_cbf(
    spec: PairwiseSpec,
    dyn: DynamicsSpec,
    s: float,
    states,
    q_nom,
    box: ControlBox,
    tol: float = 1e-8,
    max_iterations: int = 50_000,
    time_budget_s: float | None = None,
) -> tuple[np.ndarray, QpReport]:
    """Filter stacked nominal controls through all pairwise rows.

    The objective is the plain Euclidean distance to the nominal (unit weight
    per agent); controls come back with shape (n, control_dim).
    """
    states = np.asarray(states, dtype=float)
    q_nom = np.asarray(q_nom, dtype=float)
    n = states.shape[0]
    if q_nom.shape != (n, dyn.control_dim):
        raise ValueError(f"nominal controls must have shape ({n}, {dyn.control_dim})")
    rows = pairwise_constraints(spec, dyn, s, states)
    return solve_dense_qp(
        np.ones(n),
        q_nom.ravel(),
        rows.matrix,
        rows.bounds,
        box,
        tol=tol,
        max_iterations=max_iterations,
        time_budget_s=time_budget_s,
    )
