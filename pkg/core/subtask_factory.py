"""
Subtask Factory to create and register null-space subtask fields by name.
"""

import logging
from typing import Dict, Type

import numpy as np

from core import arm_model as am
from core.arm_model import ManipulatorModel
from core.errors import DimensionMismatch

logger = logging.getLogger(f"dcea.{__name__}")


class SubtaskFunction:
    """A joint-space field phi(t, q) steered in the null space of a redundant arm.
    On a nonredundant arm every subtask evaluates to the zero vector."""

    kind = "abstract"

    def __init__(self, model: ManipulatorModel):
        self.model = model

    @property
    def description(self) -> str:
        return self.kind

    def field(self, t: float, q: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def phi(self, t: float, q) -> np.ndarray:
        if not self.model.is_redundant:
            return np.zeros(self.model.dof)
        value = np.asarray(self.field(t, np.asarray(q, dtype=float)), dtype=float)
        if value.shape != (self.model.dof,):
            raise DimensionMismatch("phi", self.model.dof, value.size)
        return value

    def rate(self, t: float, q, qdot, h: float = 1e-6) -> np.ndarray:
        """d/dt phi(t, q(t)) along the current motion, by central difference."""
        q = np.asarray(q, dtype=float)
        qdot = np.asarray(qdot, dtype=float)
        return (self.phi(t + h, q + qdot * h) - self.phi(t - h, q - qdot * h)) / (2 * h)

    def __repr__(self):
        return f"<{type(self).__name__}({self.description})>"


class NoSubtask(SubtaskFunction):
    kind = "none"

    def field(self, t, q):
        return np.zeros(self.model.dof)


class JointTargetSubtask(SubtaskFunction):
    """phi_j = gain * (target - q_j) on one joint (1-based), zero elsewhere."""

    kind = "joint-target"

    def __init__(self, model: ManipulatorModel, joint: int, target: float, gain: float = 1.0):
        super().__init__(model)
        if not 1 <= joint <= model.dof:
            raise ValueError(f"joint must lie in 1..{model.dof}, got {joint}")
        self.joint = int(joint)
        self.target = float(target)
        self.gain = float(gain)

    @property
    def description(self):
        return f"joint-target q{self.joint} -> {self.target} (gain {self.gain})"

    def field(self, t, q):
        out = np.zeros(self.model.dof)
        out[self.joint - 1] = self.gain * (self.target - q[self.joint - 1])
        return out


class ManipulabilitySubtask(SubtaskFunction):
    """Gradient ascent on det(J J^T)."""

    kind = "manipulability"

    def __init__(self, model: ManipulatorModel, gain: float = 1.0):
        super().__init__(model)
        self.gain = float(gain)

    @property
    def description(self):
        return f"manipulability ascent (gain {self.gain})"

    def field(self, t, q):
        from core.dcea import manipulability_gradient
        return self.gain * manipulability_gradient(self.model, q)


SUBTASK_REGISTRY: Dict[str, Type[SubtaskFunction]] = {}


def register_subtask_type(name: str, subtask_class: Type[SubtaskFunction]):
    logger.debug(f"Registering subtask type: {name}")
    SUBTASK_REGISTRY[name] = subtask_class


register_subtask_type("none", NoSubtask)
register_subtask_type("joint-target", JointTargetSubtask)
register_subtask_type("manipulability", ManipulabilitySubtask)


def create_subtask(kind: str, model: ManipulatorModel, **params) -> SubtaskFunction:
    subtask_class = SUBTASK_REGISTRY.get(kind)
    if subtask_class is None:
        raise ValueError(f"unknown subtask '{kind}', known: {sorted(SUBTASK_REGISTRY)}")
    if kind != "none" and not model.is_redundant:
        logger.warning(f"Subtask '{kind}' attached to a {model.dof}-dof arm evaluates to zero")
    subtask = subtask_class(model, **params)
    logger.debug(f"Created subtask {subtask!r}")
    return subtask
