"""Symmetric positive-definite kernels and their gradients on agent states.

A kernel acts on an observed projection of the state: either the full state
vector or the leading position block of a stacked (position, velocity) state.
Gradients are always returned in the full state dimension, with zeros on the
coordinates the observation map discards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["KernelSpec", "evaluate", "grad_x", "gram", "grad_x_pairwise"]

FAMILIES = ("gaussian", "inverse_multiquadric")
OBSERVATIONS = ("full_state", "position_only")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family, bandwidth and observation map.

    ``bandwidth`` is the length scale sigma. Both families evaluate to 1 at
    x == y and decay with ``||C(x - y)||^2 / (2 sigma^2)`` where C selects
    the observed coordinates. ``position_only`` requires ``position_dim``,
    the number of leading coordinates forming the position block.
    """

    family: str = "gaussian"
    bandwidth: float = 1.0
    observation: str = "full_state"
    position_dim: int | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        bw = self.bandwidth
        if not (np.isscalar(bw) and np.isfinite(bw) and bw > 0):
            raise ValueError(f"kernel bandwidth must be a positive scalar, got {bw!r}")
        if self.observation not in OBSERVATIONS:
            raise ValueError(f"unknown observation map {self.observation!r}")
        if self.observation == "position_only":
            if self.position_dim is None or int(self.position_dim) < 1:
                raise ValueError("position_only observation requires position_dim >= 1")


def _observed(spec: KernelSpec, arr: np.ndarray) -> np.ndarray:
    """Apply the observation map along the last axis."""
    if spec.observation == "position_only":
        k = int(spec.position_dim)
        if arr.shape[-1] < k:
            raise ValueError(
                f"state dimension {arr.shape[-1]} smaller than position block {k}"
            )
        return arr[..., :k]
    return arr


def _value_from_sqdist(spec: KernelSpec, r2):
    """Kernel value as a function of the observed squared distance."""
    u = r2 / (2.0 * spec.bandwidth**2)
    if spec.family == "gaussian":
        return np.exp(-u)
    # inverse multiquadric, normalized so that K(x, x) = 1
    return 1.0 / np.sqrt(1.0 + u)


def _radial_slope(spec: KernelSpec, k_val):
    """dK/d(r^2) expressed through the kernel value itself."""
    if spec.family == "gaussian":
        return -k_val / (2.0 * spec.bandwidth**2)
    return -(k_val**3) / (4.0 * spec.bandwidth**2)


def _check_pair(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or y.ndim != 1:
        raise ValueError("kernel arguments must be 1-D state vectors")
    if x.shape != y.shape:
        raise ValueError(f"state dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    return x, y


def evaluate(spec: KernelSpec, x, y) -> float:
    """Kernel value K(x, y) on the observed coordinates.

    Gaussian family: ``exp(-||Cx - Cy||^2 / (2 sigma^2))``.
    """
    x, y = _check_pair(x, y)
    d = _observed(spec, x) - _observed(spec, y)
    return float(_value_from_sqdist(spec, float(np.dot(d, d))))


def grad_x(spec: KernelSpec, x, y) -> np.ndarray:
    """Gradient of K(x, y) in its first argument, lifted to full state dimension.

    Unobserved coordinates get zero entries. For the gaussian family this is
    ``-(C^T (Cx - Cy) / sigma^2) * K(x, y)``.
    """
    x, y = _check_pair(x, y)
    d = _observed(spec, x) - _observed(spec, y)
    k_val = _value_from_sqdist(spec, float(np.dot(d, d)))
    out = np.zeros_like(x)
    obs = 2.0 * _radial_slope(spec, k_val) * d
    if spec.observation == "position_only":
        out[: int(spec.position_dim)] = obs
    else:
        out[:] = obs
    return out


def _check_batch(X: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim != 2 or Y.ndim != 2:
        raise ValueError("expected 2-D arrays of stacked state vectors")
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"state dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    return X, Y


def gram(spec: KernelSpec, X, Y) -> np.ndarray:
    """Matrix of kernel values K(X[i], Y[j]), shape (len(X), len(Y))."""
    X, Y = _check_batch(X, Y)
    diff = _observed(spec, X)[:, None, :] - _observed(spec, Y)[None, :, :]
    r2 = np.sum(diff * diff, axis=-1)
    return _value_from_sqdist(spec, r2)


def grad_x_pairwise(spec: KernelSpec, X, Y) -> np.ndarray:
    """Gradients of K(X[i], Y[j]) in the first argument, shape (n, m, dim).

    Entries on unobserved coordinates are zero, matching :func:`grad_x`.
    """
    X, Y = _check_batch(X, Y)
    diff = _observed(spec, X)[:, None, :] - _observed(spec, Y)[None, :, :]
    r2 = np.sum(diff * diff, axis=-1)
    k_val = _value_from_sqdist(spec, r2)
    obs = 2.0 * _radial_slope(spec, k_val)[:, :, None] * diff
    if spec.observation == "position_only":
        out = np.zeros((X.shape[0], Y.shape[0], X.shape[1]))
        out[:, :, : int(spec.position_dim)] = obs
        return out
    return obs
