import logging
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from core import arm_model as am
from core import dcea
from core.arm_model import JointState, ManipulatorModel
from core.dcea import AuxiliaryReference, ControlGains, EstimatorState
from core.errors import DimensionMismatch, NonfiniteState, NonPositiveDefiniteInertia
from core.subtask_factory import NoSubtask, SubtaskFunction

logger = logging.getLogger(f"dcea.{__name__}")


class ManipulatorAgent:
    """One follower arm: its plant state, its estimator state and its local controller.

    `compute_control` runs once per control tick and holds the torque and the
    parameter-update rate until the next tick."""

    def __init__(self, agent_id: int, model: ManipulatorModel, gains: ControlGains,
                 state: JointState, estimator: EstimatorState,
                 subtask: Optional[SubtaskFunction] = None, name: Optional[str] = None,
                 smoothing: Optional[float] = None):
        gains.check_dims(model)
        state.check_against(model)
        if estimator.theta_hat.shape != (model.parameter_count,):
            raise DimensionMismatch("theta_hat", model.parameter_count, estimator.theta_hat.size)
        self.agent_id = agent_id
        self.name = name or f"arm{agent_id}"
        self.model = model
        self.gains = gains
        self.state = state
        self.estimator = estimator
        self.subtask = subtask if subtask is not None else NoSubtask(model)
        self.smoothing = smoothing

        self.u = np.zeros(model.dof)
        self.theta_rate = np.zeros(model.parameter_count)
        self.aux: Optional[AuxiliaryReference] = None
        logger.info(f"Agent {self.agent_id} ({self.name}) initialized: dof={model.dof}, subtask={self.subtask.description}")

    @property
    def dof(self) -> int:
        return self.model.dof

    def end_effector(self) -> Tuple[np.ndarray, np.ndarray]:
        q, qdot = self.state.q, self.state.qdot
        return am.forward_kinematics(self.model, q), am.jacobian(self.model, q) @ qdot

    def compute_control(self, t: float) -> np.ndarray:
        q, qdot = self.state.q, self.state.qdot
        aux = dcea.auxiliary_reference(self.model, q, qdot, self.estimator, self.gains, self.subtask, t)
        self.u = dcea.control_torque(self.model, q, qdot, self.estimator, self.gains, t,
                                     aux=aux, smoothing=self.smoothing)
        self.theta_rate = dcea.theta_hat_rate(self.model, q, qdot, self.estimator, self.gains, t, aux=aux)
        self.aux = aux
        return self.u

    def step_dynamics(self, dt: float, disturbance: np.ndarray) -> None:
        """Semi-implicit Euler under the held torque: velocity first, then position."""
        q, qdot = self.state.q, self.state.qdot
        H = am.inertia_matrix(self.model, q)
        rhs = (self.u - am.coriolis_matrix(self.model, q, qdot) @ qdot
               - am.gravity_vector(self.model, q) - disturbance)
        if not np.all(np.isfinite(rhs)):
            label = "torque" if not np.all(np.isfinite(self.u)) else "joint force balance"
            raise NonfiniteState(f"arm {self.agent_id}: non-finite {label}")
        try:
            factor = cho_factor(H)
        except LinAlgError as e:
            raise NonPositiveDefiniteInertia(f"arm {self.agent_id}: inertia matrix not positive definite at q={q.tolist()}") from e
        qddot = cho_solve(factor, rhs)
        self.state.qdot = qdot + dt * qddot
        self.state.q = q + dt * self.state.qdot

    def step_parameters(self, dt: float) -> None:
        self.estimator.theta_hat += dt * self.theta_rate

    def check_finite(self) -> None:
        for label, v in (("q", self.state.q), ("qdot", self.state.qdot),
                         ("zeta", self.estimator.zeta), ("theta_hat", self.estimator.theta_hat)):
            if not np.all(np.isfinite(v)):
                raise NonfiniteState(f"arm {self.agent_id}: non-finite {label}")

    def __repr__(self):
        return f"<ManipulatorAgent(id={self.agent_id}, name='{self.name}', dof={self.dof})>"
