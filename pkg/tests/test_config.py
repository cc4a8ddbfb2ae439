import json

import numpy as np
import pytest

from mfcbf.config import ScenarioError, parse_scenario

MINIMAL_AVOIDANCE = {
    "mode": "avoidance",
    "dynamics": {"model": "double_integrator", "spatial_dim": 3},
    "horizon": 1.0,
    "kernel": {"family": "gaussian", "bandwidth": 2.0},
    "barrier": {"epsilon": 0.4},
    "adversary": {
        "kind": "constant_velocity",
        "velocity": [1.0, 0, 0],
        "initial_positions": [[-5, 0, 0]],
    },
    "initial": {"kind": "box", "low": [-1, -1, -1], "high": [1, 1, 1], "count": 5, "seed": 1},
}


def doc(**overrides):
    out = json.loads(json.dumps(MINIMAL_AVOIDANCE))
    out.update(overrides)
    return out


def test_minimal_document_gets_defaults():
    cfg = parse_scenario(json.dumps(MINIMAL_AVOIDANCE))
    assert cfg.dt == 1e-2
    assert cfg.barrier.alpha.family == "linear" and cfg.barrier.alpha.gamma == 1.0
    assert cfg.nominal_kind == "zero"
    assert np.all(np.isinf(cfg.control_box.lower)) and np.all(np.isinf(cfg.control_box.upper))
    assert cfg.solver_tolerance == 1e-8
    assert cfg.solver_max_iterations == 50_000
    assert cfg.log_wall_time is True
    assert cfg.barrier.kernel.observation == "full_state"
    # double-integrator adversary state carries its velocity block
    np.testing.assert_array_equal(cfg.adversary_initial[0], [-5, 0, 0, 1.0, 0, 0])


def test_tracking_default_dt():
    cfg = parse_scenario(json.dumps(doc(mode="tracking")))
    assert cfg.dt == 2e-3


def test_negative_bandwidth_names_key():
    bad = doc(kernel={"family": "gaussian", "bandwidth": -1})
    with pytest.raises(ScenarioError) as err:
        parse_scenario(json.dumps(bad))
    assert any("kernel.bandwidth" in e for e in err.value.errors)


def test_duplicate_key_rejected():
    text = '{"mode": "avoidance", "mode": "tracking"}'
    with pytest.raises(ScenarioError) as err:
        parse_scenario(text)
    assert any("duplicate" in e for e in err.value.errors)


def test_syntax_error_reports_position():
    with pytest.raises(ScenarioError) as err:
        parse_scenario('{"mode": }')
    assert any("line 1" in e and "column" in e for e in err.value.errors)


def test_unknown_keys_rejected():
    bad = doc(extra_section={"a": 1})
    bad["kernel"]["wibble"] = 2
    with pytest.raises(ScenarioError) as err:
        parse_scenario(json.dumps(bad))
    msgs = err.value.errors
    assert any("extra_section: unknown key" in e for e in msgs)
    assert any("kernel.wibble: unknown key" in e for e in msgs)


def test_all_errors_collected():
    bad = doc(kernel={"family": "gaussian", "bandwidth": -1})
    bad["barrier"] = {"epsilon": -2}
    bad["dt"] = -0.5
    with pytest.raises(ScenarioError) as err:
        parse_scenario(json.dumps(bad))
    msgs = err.value.errors
    assert any("kernel.bandwidth" in e for e in msgs)
    assert any("barrier.epsilon" in e for e in msgs)
    assert any(e.startswith("dt") for e in msgs)


def test_baseline_requires_pairwise():
    bad = doc(mode="baseline_pairwise")
    with pytest.raises(ScenarioError) as err:
        parse_scenario(json.dumps(bad))
    assert any("pairwise" in e for e in err.value.errors)
    good = doc(mode="baseline_pairwise", pairwise={"eps_safe": 0.3})
    cfg = parse_scenario(json.dumps(good))
    assert cfg.pairwise.eps_safe == 0.3


def test_constant_nominal_length_checked():
    bad = doc(nominal={"kind": "constant", "value": [1.0, 0.0]})
    with pytest.raises(ScenarioError) as err:
        parse_scenario(json.dumps(bad))
    assert any("nominal.value" in e for e in err.value.errors)
    good = doc(nominal={"kind": "constant", "value": [1.0, 0.0, 0.0]})
    cfg = parse_scenario(json.dumps(good))
    np.testing.assert_array_equal(cfg.nominal_controls(2), [[1, 0, 0], [1, 0, 0]])


def test_waypoints_must_cover_horizon():
    bad = doc(
        adversary={
            "kind": "waypoint_path",
            "waypoints": [[0.0, [0, 0, 0]], [0.5, [1, 0, 0]]],
            "initial_positions": [[0, 0, 0]],
        }
    )
    with pytest.raises(ScenarioError) as err:
        parse_scenario(json.dumps(bad))
    assert any("span" in e for e in err.value.errors)


def test_explicit_initial_states_dimension():
    bad = doc(initial={"kind": "explicit", "states": [[0, 0, 0]]})  # needs 6 entries
    with pytest.raises(ScenarioError) as err:
        parse_scenario(json.dumps(bad))
    assert any("initial.states[0]" in e for e in err.value.errors)


def test_individual_barrier_agent_range():
    bad = doc(
        mode="baseline_pairwise",
        pairwise={
            "eps_safe": 0.3,
            "individual_barriers": [
                {"agent": 11, "center": [0, 0, 0, 0, 0, 0], "radius": 1.0}
            ],
        },
    )
    with pytest.raises(ScenarioError) as err:
        parse_scenario(json.dumps(bad))
    assert any("out of range" in e for e in err.value.errors)


def test_box_scalars_and_inf_strings():
    cfg = parse_scenario(json.dumps(doc(control_box={"lower": -3, "upper": 3})))
    np.testing.assert_array_equal(cfg.control_box.lower, [-3, -3, -3])
    cfg2 = parse_scenario(
        json.dumps(doc(control_box={"lower": ["-inf", -1, 0], "upper": "inf"}))
    )
    np.testing.assert_array_equal(cfg2.control_box.lower, [-np.inf, -1, 0])
    assert np.all(np.isposinf(cfg2.control_box.upper))
    with pytest.raises(ScenarioError):
        parse_scenario(json.dumps(doc(control_box={"lower": "big", "upper": 1})))


def test_echo_reparses_identically():
    for document in (
        MINIMAL_AVOIDANCE,
        doc(mode="tracking", control_box={"lower": -2, "upper": 2}),
        doc(
            mode="baseline_pairwise",
            pairwise={"eps_safe": 0.3, "alpha": {"family": "cubic", "gamma": 2.0}},
        ),
    ):
        cfg = parse_scenario(json.dumps(document))
        cfg2 = parse_scenario(json.dumps(cfg.echo))
        assert cfg2.echo == cfg.echo
        assert cfg2.mode == cfg.mode
        assert cfg2.dynamics == cfg.dynamics
        assert cfg2.dt == cfg.dt
        np.testing.assert_array_equal(cfg2.adversary_initial, cfg.adversary_initial)
        np.testing.assert_array_equal(cfg2.control_box.lower, cfg.control_box.lower)
        np.testing.assert_array_equal(cfg2.control_box.upper, cfg.control_box.upper)
        if cfg.barrier is not None:
            assert cfg2.barrier == cfg.barrier
        if cfg.pairwise is not None:
            assert cfg2.pairwise.eps_safe == cfg.pairwise.eps_safe
            assert cfg2.pairwise.alpha == cfg.pairwise.alpha
