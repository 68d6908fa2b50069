import logging

import numpy as np
import pytest

from core import dcea
from core.errors import DimensionMismatch
from core.subtask_factory import (
    SUBTASK_REGISTRY,
    JointTargetSubtask,
    ManipulabilitySubtask,
    NoSubtask,
    SubtaskFunction,
    create_subtask,
    register_subtask_type,
)


@pytest.fixture(autouse=True)
def reset_subtask_registry():
    original_registry = SUBTASK_REGISTRY.copy()
    yield
    SUBTASK_REGISTRY.clear()
    SUBTASK_REGISTRY.update(original_registry)


def test_registry_holds_builtin_kinds():
    assert set(SUBTASK_REGISTRY) >= {"none", "joint-target", "manipulability"}


def test_joint_target_field(arm6):
    subtask = create_subtask("joint-target", arm6, joint=2, target=1.0, gain=9.0)
    assert isinstance(subtask, JointTargetSubtask)
    np.testing.assert_allclose(subtask.phi(0.0, [0.1, 0.4, -0.3]), [0.0, 5.4, 0.0])
    np.testing.assert_allclose(subtask.phi(0.0, [0.1, 1.0, -0.3]), np.zeros(3))


def test_joint_target_rate_along_motion(arm6):
    subtask = JointTargetSubtask(arm6, joint=3, target=0.5, gain=2.0)
    rate = subtask.rate(0.0, [0.0, 0.0, 0.0], [0.3, -0.1, 0.7])
    np.testing.assert_allclose(rate, [0.0, 0.0, -1.4], atol=1e-8)


def test_joint_out_of_range(arm6):
    with pytest.raises(ValueError, match="joint must lie in 1..3"):
        create_subtask("joint-target", arm6, joint=4, target=0.0)


def test_manipulability_field_is_scaled_gradient(arm7):
    q = np.array([-0.2, 1.0, 1.2])
    subtask = create_subtask("manipulability", arm7, gain=2.0)
    assert isinstance(subtask, ManipulabilitySubtask)
    np.testing.assert_allclose(subtask.phi(0.0, q), 2.0 * dcea.manipulability_gradient(arm7, q))


def test_two_link_subtask_is_zero_with_warning(arm1, caplog):
    with caplog.at_level(logging.WARNING):
        subtask = create_subtask("joint-target", arm1, joint=1, target=1.0, gain=5.0)
    assert "evaluates to zero" in caplog.text
    np.testing.assert_array_equal(subtask.phi(0.0, [0.3, 0.2]), np.zeros(2))
    np.testing.assert_array_equal(subtask.rate(0.0, [0.3, 0.2], [1.0, 1.0]), np.zeros(2))


def test_none_subtask(arm6):
    subtask = create_subtask("none", arm6)
    assert isinstance(subtask, NoSubtask)
    np.testing.assert_array_equal(subtask.phi(1.0, [0.1, 0.2, 0.3]), np.zeros(3))


def test_unknown_kind(arm6):
    with pytest.raises(ValueError, match="unknown subtask 'posture'"):
        create_subtask("posture", arm6)


def test_register_custom_kind(arm6):
    class TimeVarying(SubtaskFunction):
        kind = "time-varying"

        def field(self, t, q):
            return np.array([0.0, 0.0, t])

    register_subtask_type("time-varying", TimeVarying)
    subtask = create_subtask("time-varying", arm6)
    # time enters the rate as well as the motion
    np.testing.assert_allclose(subtask.rate(2.0, np.zeros(3), np.zeros(3)), [0.0, 0.0, 1.0], atol=1e-8)


def test_field_with_wrong_length(arm6):
    class Broken(SubtaskFunction):
        def field(self, t, q):
            return np.zeros(2)

    with pytest.raises(DimensionMismatch):
        Broken(arm6).phi(0.0, np.zeros(3))
