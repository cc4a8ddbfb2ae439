import numpy as np
import pytest

from mfcbf.dynamics import (
    DynamicsSpec,
    control_adjoint_rows,
    control_matrix,
    drift,
    drift_inner,
    step,
    vector_field,
)

SI2 = DynamicsSpec("single_integrator", 2)
DI3 = DynamicsSpec("double_integrator", 3)


def test_spec_dimensions():
    assert SI2.state_dim == 2 and SI2.control_dim == 2
    assert DI3.state_dim == 6 and DI3.control_dim == 3
    with pytest.raises(ValueError):
        DynamicsSpec("triple_integrator", 2)
    with pytest.raises(ValueError):
        DynamicsSpec("single_integrator", 0)


def test_drift():
    assert np.all(drift(SI2, 0.0, np.array([3.0, -1.0])) == 0.0)
    x = np.array([0.0, 0.0, 0.0, 1.0, 2.0, 3.0])
    np.testing.assert_array_equal(drift(DI3, 0.0, x), [1.0, 2.0, 3.0, 0.0, 0.0, 0.0])
    rest = np.zeros(6)
    assert np.all(drift(DI3, 0.0, rest) == 0.0)
    with pytest.raises(ValueError, match="mismatch"):
        drift(DI3, 0.0, np.zeros(5))


def test_control_matrix():
    np.testing.assert_array_equal(control_matrix(SI2, 0.0, np.zeros(2)), np.eye(2))
    B = control_matrix(DI3, 0.0, np.zeros(6))
    np.testing.assert_array_equal(B @ np.array([1.0, 0.0, 0.0]), [0, 0, 0, 1, 0, 0])
    # adjoint picks out the velocity block
    cov = np.arange(6.0)
    np.testing.assert_array_equal(B.T @ cov, cov[3:])
    np.testing.assert_array_equal(control_adjoint_rows(DI3, cov[None, :])[0], cov[3:])


def test_drift_inner_matches_direct_sum():
    rng = np.random.default_rng(20)
    states = rng.normal(size=(4, 6))
    grads = rng.normal(size=(4, 6))
    direct = sum(float(np.dot(g, drift(DI3, 0.0, x))) for g, x in zip(grads, states))
    assert drift_inner(DI3, 0.0, states, grads) == pytest.approx(direct, rel=1e-14)
    assert drift_inner(SI2, 0.0, rng.normal(size=(4, 2)), rng.normal(size=(4, 2))) == 0.0


def test_step_examples():
    out = step(SI2, np.zeros((1, 2)), np.array([[1.0, 0.0]]), 0.1)
    np.testing.assert_allclose(out, [[0.1, 0.0]])
    out = step(DI3, np.zeros((1, 6)), np.array([[1.0, 0.0, 0.0]]), 0.1)
    np.testing.assert_allclose(out, [[0, 0, 0, 0.1, 0, 0]])
    x = np.array([[0.5, -0.5]])
    np.testing.assert_array_equal(step(SI2, x, np.zeros((1, 2)), 0.3), x)


def test_step_rejects_bad_input():
    with pytest.raises(ValueError, match="agent 1"):
        step(SI2, np.array([[0.0, 0.0], [np.nan, 0.0]]), np.zeros((2, 2)), 0.1)
    with pytest.raises(ValueError, match="agent 0"):
        step(SI2, np.zeros((1, 2)), np.array([[np.inf, 0.0]]), 0.1)
    with pytest.raises(ValueError):
        step(SI2, np.zeros((1, 2)), np.zeros((1, 2)), 0.0)
    with pytest.raises(ValueError):
        step(SI2, np.zeros((1, 3)), np.zeros((1, 2)), 0.1)


def test_control_affinity():
    rng = np.random.default_rng(21)
    for dyn in (SI2, DI3):
        x = rng.normal(size=dyn.state_dim)
        u1 = rng.normal(size=dyn.control_dim)
        u2 = rng.normal(size=dyn.control_dim)
        a, b = 0.7, -1.3
        f0 = vector_field(dyn, 0.0, x, np.zeros(dyn.control_dim))
        lhs = vector_field(dyn, 0.0, x, a * u1 + b * u2) - f0
        rhs = a * (vector_field(dyn, 0.0, x, u1) - f0) + b * (
            vector_field(dyn, 0.0, x, u2) - f0
        )
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_euler_richardson_order():
    # two half steps differ from one full step by O(dt^2), ratio ~4 under halving
    rng = np.random.default_rng(22)
    x = rng.normal(size=(1, 6))
    u = rng.normal(size=(1, 3))
    diffs = []
    for dt in (0.1, 0.05):
        full = step(DI3, x, u, dt)
        half = step(DI3, step(DI3, x, u, dt / 2), u, dt / 2)
        diffs.append(np.linalg.norm(full - half))
    assert diffs[0] <= 1.0 * 0.1**2 * (np.linalg.norm(u) + 1)
    assert diffs[0] / diffs[1] == pytest.approx(4.0, rel=0.05)
