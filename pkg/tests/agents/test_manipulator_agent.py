import numpy as np
import pytest

from agents.manipulator_agent import ManipulatorAgent
from core import arm_model as am
from core import dcea
from core.arm_model import JointState, ManipulatorModel
from core.dcea import EstimatorState
from core.errors import DimensionMismatch, NonfiniteState
from core.subtask_factory import JointTargetSubtask
from tests.conftest import make_gains


@pytest.fixture
def agent(arm6, leader):
    return ManipulatorAgent(
        agent_id=6,
        model=arm6,
        gains=make_gains(3),
        state=JointState([-0.2, 0.4, 1.6], [0.1, -0.2, 0.3]),
        estimator=EstimatorState(leader.stack(0.0) + 0.2, np.ones(9)),
        subtask=JointTargetSubtask(arm6, joint=2, target=1.0, gain=9.0),
    )


def test_defaults(arm1, leader):
    agent = ManipulatorAgent(1, arm1, make_gains(2), JointState([0.3, 1.2], [0, 0]),
                             EstimatorState(leader.stack(0.0), np.ones(5)))
    assert agent.name == "arm1"
    assert agent.subtask.kind == "none"
    np.testing.assert_array_equal(agent.u, np.zeros(2))
    assert agent.aux is None


def test_rejects_mismatched_parts(arm1, arm6, leader):
    with pytest.raises(ValueError, match="Ks is 2x2"):
        ManipulatorAgent(1, arm6, make_gains(2), JointState([0, 0, 1], [0, 0, 0]),
                         EstimatorState(leader.stack(0.0), np.ones(9)))
    with pytest.raises(DimensionMismatch):
        ManipulatorAgent(1, arm1, make_gains(2), JointState([0.3, 1.2], [0, 0]),
                         EstimatorState(leader.stack(0.0), np.ones(9)))


def test_compute_control_holds_torque_and_rate(agent):
    u = agent.compute_control(0.0)
    expected = dcea.control_torque(agent.model, agent.state.q, agent.state.qdot, agent.estimator,
                                   agent.gains, 0.0, subtask=agent.subtask)
    np.testing.assert_allclose(u, expected)
    assert agent.u is u
    expected_rate = dcea.theta_hat_rate(agent.model, agent.state.q, agent.state.qdot, agent.estimator,
                                        agent.gains, 0.0, subtask=agent.subtask)
    np.testing.assert_allclose(agent.theta_rate, expected_rate)
    assert agent.aux is not None


def test_end_effector(agent):
    x, xdot = agent.end_effector()
    np.testing.assert_allclose(x, am.forward_kinematics(agent.model, agent.state.q))
    np.testing.assert_allclose(xdot, am.jacobian(agent.model, agent.state.q) @ agent.state.qdot)


def test_gravity_compensation_holds_still(arm7, leader):
    state = JointState([-0.2, 1.0, 1.2], [0, 0, 0])
    agent = ManipulatorAgent(7, arm7, make_gains(3), state, EstimatorState(leader.stack(0.0), np.ones(9)))
    agent.u = am.gravity_vector(arm7, state.q)
    for _ in range(100):
        agent.step_dynamics(0.001, np.zeros(3))
    np.testing.assert_allclose(agent.state.q, [-0.2, 1.0, 1.2], atol=1e-10)
    np.testing.assert_allclose(agent.state.qdot, 0.0, atol=1e-10)


def test_semi_implicit_step(leader):
    model = ManipulatorModel(masses=(1, 1), lengths=(1, 1), com_offsets=(0.5, 0.5), inertias=(0.1, 0.1), gravity=0.0)
    agent = ManipulatorAgent(1, model, make_gains(2), JointState([0.0, 1.0], [0.0, 0.0]),
                             EstimatorState(leader.stack(0.0), np.ones(5)))
    agent.u = np.array([1.0, 0.0])
    dt = 0.01
    qddot = np.linalg.solve(am.inertia_matrix(model, [0.0, 1.0]), agent.u)
    agent.step_dynamics(dt, np.zeros(2))
    np.testing.assert_allclose(agent.state.qdot, dt * qddot)
    # position uses the updated velocity
    np.testing.assert_allclose(agent.state.q, np.array([0.0, 1.0]) + dt * agent.state.qdot)


def test_disturbance_opposes_torque(agent):
    agent.u = np.array([1.0, 2.0, 3.0])
    twin = ManipulatorAgent(6, agent.model, agent.gains,
                            JointState(agent.state.q.copy(), agent.state.qdot.copy()),
                            EstimatorState(agent.estimator.zeta.copy(), agent.estimator.theta_hat.copy()))
    twin.u = np.zeros(3)
    agent.step_dynamics(0.001, agent.u)
    twin.step_dynamics(0.001, np.zeros(3))
    np.testing.assert_allclose(agent.state.qdot, twin.state.qdot, atol=1e-12)


def test_step_parameters(agent):
    agent.compute_control(0.0)
    before = agent.estimator.theta_hat.copy()
    agent.step_parameters(0.01)
    np.testing.assert_allclose(agent.estimator.theta_hat, before + 0.01 * agent.theta_rate)


def test_nonfinite_torque_is_refused_before_the_solve(agent):
    q = agent.state.q.copy()
    agent.u = np.array([np.nan, 0.0, 0.0])
    with pytest.raises(NonfiniteState, match="arm 6: non-finite torque"):
        agent.step_dynamics(0.001, np.zeros(3))
    np.testing.assert_array_equal(agent.state.q, q)
    agent.u = np.zeros(3)
    with pytest.raises(NonfiniteState, match="arm 6: non-finite joint force balance"):
        agent.step_dynamics(0.001, np.array([0.0, np.inf, 0.0]))


def test_check_finite(agent):
    agent.check_finite()
    agent.state.qdot = np.array([0.0, np.inf, 0.0])
    with pytest.raises(NonfiniteState, match="arm 6: non-finite qdot"):
        agent.check_finite()


def test_one_unseen_tick_of_disturbance_sets_a_velocity_floor(arm1, leader):
    # the torque is held at gravity compensation while a corner disturbance acts for one tick
    q = np.array([0.3, 1.2])
    H_inv = np.linalg.inv(am.inertia_matrix(arm1, q))
    J = am.jacobian(arm1, q)
    corners = [np.array([a, b]) for a in (-40.0, 40.0) for b in (-40.0, 40.0)]
    d = max(corners, key=lambda c: np.linalg.norm(J @ H_inv @ c))
    agent = ManipulatorAgent(1, arm1, make_gains(2), JointState(q, [0, 0]),
                             EstimatorState(leader.stack(0.0), np.ones(5)))
    agent.u = am.gravity_vector(arm1, q)
    for _ in range(10):
        agent.step_dynamics(0.001, d)
    _, xdot = agent.end_effector()
    assert np.linalg.norm(xdot) == pytest.approx(0.01 * np.linalg.norm(J @ H_inv @ d), rel=0.05)
    assert np.linalg.norm(xdot) > 0.05
