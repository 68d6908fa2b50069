"""
Leader (node 0) trajectories and their derivative bounds.
"""

from abc import ABC, abstractmethod
import logging
from typing import Dict, Tuple, Type

import numpy as np

logger = logging.getLogger(f"dcea.{__name__}")


class LeaderTrajectory(ABC):
    """x0(t) with velocity, acceleration and jerk. `declared_bounds` are the sups of
    the infinity norms of v0, a0 and da0/dt used by Assumption A2 checks."""

    kind: str = "abstract"

    @abstractmethod
    def position(self, t: float) -> np.ndarray: ...

    @abstractmethod
    def velocity(self, t: float) -> np.ndarray: ...

    @abstractmethod
    def acceleration(self, t: float) -> np.ndarray: ...

    @abstractmethod
    def jerk(self, t: float) -> np.ndarray: ...

    @property
    @abstractmethod
    def declared_bounds(self) -> Tuple[float, float, float]: ...

    def stack(self, t: float) -> np.ndarray:
        """col(x0, v0, a0), the reference for every estimator zeta_i."""
        return np.concatenate([self.position(t), self.velocity(t), self.acceleration(t)])

    def derivative_sups(self, t0: float, t1: float, samples: int = 2001) -> Tuple[float, float, float]:
        ts = np.linspace(t0, t1, samples)
        v = max(np.max(np.abs(self.velocity(t))) for t in ts)
        a = max(np.max(np.abs(self.acceleration(t))) for t in ts)
        j = max(np.max(np.abs(self.jerk(t))) for t in ts)
        return float(v), float(a), float(j)

    def consistency_error(self, t0: float, t1: float, samples: int = 50, h: float = 1e-5) -> float:
        """Worst mismatch between each derivative and a central difference of the one below it."""
        worst = 0.0
        for t in np.linspace(t0, t1, samples):
            pairs = ((self.position, self.velocity), (self.velocity, self.acceleration),
                     (self.acceleration, self.jerk))
            for f, df in pairs:
                fd = (f(t + h) - f(t - h)) / (2 * h)
                worst = max(worst, float(np.max(np.abs(fd - df(t)))))
        return worst


class EllipseLeader(LeaderTrajectory):
    """x0 = (cx + ax sin(w t), cy + ay cos(w t))."""

    kind = "ellipse"

    def __init__(self, center=(1.2, 1.3), amplitudes=(0.5, 0.3), omega: float = np.pi):
        self.center = np.asarray(center, dtype=float)
        self.amplitudes = np.asarray(amplitudes, dtype=float)
        self.omega = float(omega)

    def position(self, t):
        w = self.omega
        return self.center + self.amplitudes * np.array([np.sin(w * t), np.cos(w * t)])

    def velocity(self, t):
        w = self.omega
        return self.amplitudes * w * np.array([np.cos(w * t), -np.sin(w * t)])

    def acceleration(self, t):
        w = self.omega
        return self.amplitudes * w**2 * np.array([-np.sin(w * t), -np.cos(w * t)])

    def jerk(self, t):
        w = self.omega
        return self.amplitudes * w**3 * np.array([-np.cos(w * t), np.sin(w * t)])

    @property
    def declared_bounds(self):
        a = float(np.max(np.abs(self.amplitudes)))
        w = abs(self.omega)
        return a * w, a * w**2, a * w**3

    def __repr__(self):
        return f"<EllipseLeader(center={self.center.tolist()}, amplitudes={self.amplitudes.tolist()}, omega={self.omega})>"


LEADER_REGISTRY: Dict[str, Type[LeaderTrajectory]] = {
    "ellipse": EllipseLeader,
}


def create_leader(kind: str, **params) -> LeaderTrajectory:
    leader_class = LEADER_REGISTRY.get(kind)
    if leader_class is None:
        raise ValueError(f"unknown leader kind '{kind}', known: {sorted(LEADER_REGISTRY)}")
    leader = leader_class(**params)
    logger.debug(f"Created leader {leader!r}")
    return leader
