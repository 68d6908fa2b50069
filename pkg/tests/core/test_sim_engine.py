import numpy as np
import pandas as pd
import pytest

from core import arm_model as am
from core import sim_engine
from core.scenario_loader import load_scenario_text
from protocols.trace_schema import trace_columns
from tests.conftest import FROZEN_TWO_ARMS as FROZEN


@pytest.fixture
def frozen_config():
    return load_scenario_text(FROZEN)


def test_initial_states_use_frozen_blocks(frozen_config):
    (state1, est1), (state2, est2) = sim_engine.initial_states(frozen_config)
    np.testing.assert_array_equal(state1.q, [0.3, 1.2])
    np.testing.assert_array_equal(state2.q, [-0.2, 0.4, 1.6])
    np.testing.assert_array_equal(est2.theta_hat, np.ones(9))


def test_sampled_states_follow_the_ranges(tiny_config):
    states = sim_engine.initial_states(tiny_config)
    again = sim_engine.initial_states(tiny_config)
    for (s, e), (s2, e2) in zip(states, again):
        np.testing.assert_array_equal(s.q, s2.q)
        np.testing.assert_array_equal(e.zeta, e2.zeta)
        assert np.all(np.abs(s.q) <= 5.0)
        assert np.all((e.theta_hat >= 0.0) & (e.theta_hat <= 5.0))


def test_sampling_draw_order(tiny_config):
    rng = np.random.default_rng(tiny_config.initial_sampling.seed)
    q1 = rng.uniform(-5, 5, size=2)
    qdot1 = rng.uniform(-5, 5, size=2)
    zeta1 = rng.uniform(-5, 5, size=6)
    theta1 = rng.uniform(0, 5, size=5)
    q2 = rng.uniform(-5, 5, size=3)
    (s1, e1), (s2, _) = sim_engine.initial_states(tiny_config)
    np.testing.assert_array_equal(s1.q, q1)
    np.testing.assert_array_equal(s1.qdot, qdot1)
    np.testing.assert_array_equal(e1.zeta, zeta1)
    np.testing.assert_array_equal(e1.theta_hat, theta1)
    np.testing.assert_array_equal(s2.q, q2)


def test_run_layout(frozen_config):
    trace = sim_engine.run(frozen_config)
    assert trace.diagnostic is None
    assert len(trace) == frozen_config.ticks + 1
    assert list(trace.frame.columns) == trace_columns((2, 3), has_leader=True)
    np.testing.assert_allclose(trace.times, np.linspace(0.0, 0.1, 11), atol=1e-12)
    assert (trace.frame["segment"] == 0).all()
    np.testing.assert_allclose(trace.frame[["x0_x", "x0_y"]].iloc[0], [1.2, 1.6])
    first = trace.frame.iloc[0]
    assert first["q1_1"] == 0.3
    assert first["xh2_x"] == 1.1


def test_error_columns_are_consistent(frozen_config):
    frame = sim_engine.run(frozen_config).frame
    e = frame[["e1_x", "e1_y"]].to_numpy()
    np.testing.assert_allclose(frame["e_norm1"], np.linalg.norm(e, axis=1))
    np.testing.assert_allclose(e, frame[["x1_x", "x1_y"]].to_numpy() - frame[["x0_x", "x0_y"]].to_numpy())


def test_run_is_deterministic(frozen_config):
    pd.testing.assert_frame_equal(sim_engine.run(frozen_config).frame, sim_engine.run(frozen_config).frame)


def test_seed_override_changes_the_disturbance(frozen_config):
    base = sim_engine.run(frozen_config).frame
    same = sim_engine.run(frozen_config, seed=3).frame
    other = sim_engine.run(frozen_config, seed=4).frame
    pd.testing.assert_frame_equal(base, same)
    assert not np.allclose(base["q1_1"], other["q1_1"])


def test_without_subtasks(frozen_config):
    twin = sim_engine.without_subtasks(frozen_config)
    assert all(arm.subtask.kind == "none" for arm in twin.arms)
    assert twin.name.endswith("(no subtask)")
    assert frozen_config.arms[1].subtask.kind == "joint-target"


def test_pair_run_differs_only_through_the_subtask(frozen_config):
    trace, twin = sim_engine.run_pair_subtask(frozen_config)
    assert len(trace) == len(twin)
    # the two-link arm never sees a subtask and shares every seed
    pd.testing.assert_frame_equal(trace.frame[["q1_1", "q1_2"]], twin.frame[["q1_1", "q1_2"]])
    assert not np.allclose(trace.frame["es2_2"], twin.frame["es2_2"])


def test_singular_start_aborts_with_partial_trace():
    text = FROZEN.replace("q: [0.3, 1.2]", "q: [0.3, 0.0]")
    trace = sim_engine.run(load_scenario_text(text))
    assert trace.aborted
    assert trace.diagnostic.error == "SingularJacobian"
    assert trace.diagnostic.arm == 1
    assert len(trace) == 0


def test_leaderless_run_has_no_leader_columns():
    text = (FROZEN.replace("  mode: pinned", "  mode: leaderless") + "leader:\n  kind: none\n")
    trace = sim_engine.run(load_scenario_text(text))
    assert not trace.has_leader
    assert "x0_x" not in trace.frame.columns
    # arm 2 reads arm 1 and both start in agreement
    assert trace.frame["disagree_inf"].max() == 0.0


def test_task_velocity_follows_the_simulated_motion():
    config = load_scenario_text(FROZEN.replace("  bound: 40\n", "  bound: 0\n"))
    frame = sim_engine.run(config).frame
    T_c = config.timing.control_period
    for i, arm in enumerate(config.arms, start=1):
        joints = range(1, arm.model.dof + 1)
        q = frame[[f"q{i}_{k}" for k in joints]].to_numpy()
        qd = frame[[f"qd{i}_{k}" for k in joints]].to_numpy()
        x = frame[[f"x{i}_x", f"x{i}_y"]].to_numpy()
        xd = frame[[f"xd{i}_x", f"xd{i}_y"]].to_numpy()
        for row in range(len(frame)):
            np.testing.assert_allclose(xd[row], am.jacobian(arm.model, q[row]) @ qd[row], atol=1e-12)
        # trapezoidal integral of the recorded task velocity over each tick
        np.testing.assert_allclose(x[1:] - x[:-1], 0.5 * T_c * (xd[1:] + xd[:-1]), atol=2e-3)
