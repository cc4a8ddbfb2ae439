"""Swarms as weighted empirical measures, with the squared-MMD energy.

For measures ``rho = sum_i w_i delta_{x_i}`` and ``rho' = sum_j w'_j delta_{y_j}``
the half squared maximum mean discrepancy expands into three kernel double sums:

    0.5 * [ sum_ij w_i w_j K(x_i, x_j)
            - 2 sum_ij w_i w'_j K(x_i, y_j)
            + sum_ij w'_i w'_j K(y_i, y_j) ].

Diagonal terms are included; nothing is excluded or debiased. All reductions
go through numpy's fixed-order pairwise summation (no threaded BLAS in the
reduction path), so repeated runs give bit-identical results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import KernelSpec, gram, grad_x_pairwise

__all__ = ["EmpiricalMeasure", "mmd_sq_half", "mmd_grad_particles"]

_WEIGHT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Weighted particle set; weights are nonnegative and sum to one."""

    points: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=float))
        if pts.ndim != 2:
            raise ValueError("points must be a 2-D array of shape (n, dim)")
        if pts.shape[0] < 1:
            raise ValueError("a measure needs at least one particle")
        if not np.all(np.isfinite(pts)):
            raise ValueError("particle states must be finite")
        if self.weights is None:
            w = np.full(pts.shape[0], 1.0 / pts.shape[0])
        else:
            w = np.ascontiguousarray(np.asarray(self.weights, dtype=float))
        if w.shape != (pts.shape[0],):
            raise ValueError(
                f"weights shape {w.shape} does not match particle count {pts.shape[0]}"
            )
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        total = float(np.sum(w))
        if abs(total - 1.0) > _WEIGHT_TOL:
            raise ValueError(f"weights must sum to 1 within {_WEIGHT_TOL}, got {total!r}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, points) -> "EmpiricalMeasure":
        return cls(points=np.asarray(points, dtype=float))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def _check_dims(rho: EmpiricalMeasure, other: EmpiricalMeasure) -> None:
    if rho.dim != other.dim:
        raise ValueError(f"state dimension mismatch: {rho.dim} vs {other.dim}")


def _weighted_gram_sum(spec: KernelSpec, X, wx, Y, wy) -> float:
    return float(np.sum(np.outer(wx, wy) * gram(spec, X, Y)))


def mmd_sq_half(spec: KernelSpec, rho: EmpiricalMeasure, other: EmpiricalMeasure) -> float:
    """Half the squared MMD between two empirical measures.

    Nonnegative up to roundoff (>= -1e-12) and symmetric in its arguments.
    """
    _check_dims(rho, other)
    s_xx = _weighted_gram_sum(spec, rho.points, rho.weights, rho.points, rho.weights)
    s_xy = _weighted_gram_sum(spec, rho.points, rho.weights, other.points, other.weights)
    s_yy = _weighted_gram_sum(spec, other.points, other.weights, other.points, other.weights)
    return 0.5 * (s_xx - 2.0 * s_xy + s_yy)


def mmd_grad_particles(
    spec: KernelSpec, rho: EmpiricalMeasure, other: EmpiricalMeasure
) -> np.ndarray:
    """Gradient of :func:`mmd_sq_half` in the particles of ``rho``.

    Returns an (n, dim) array whose i-th row is

        w_i * [ sum_j w_j grad_x K(x_i, x_j) - sum_j w'_j grad_x K(x_i, y_j) ],

    which equals d(mmd_sq_half)/d(x_i). Weights stay folded in so each row
    scales with its particle's mass.
    """
    _check_dims(rho, other)
    g_self = grad_x_pairwise(spec, rho.points, rho.points)
    g_cross = grad_x_pairwise(spec, rho.points, other.points)
    inner = np.sum(rho.weights[None, :, None] * g_self, axis=1)
    inner -= np.sum(other.weights[None, :, None] * g_cross, axis=1)
    return rho.weights[:, None] * inner
