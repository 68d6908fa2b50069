# Pytest shared fixtures for the project

from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from core.arm_model import ManipulatorModel
from core.dcea import ControlGains
from core.graph_topology import Topology
from core.leader import EllipseLeader
from core.scenario_loader import load_scenario_text
from core.verify_suite import reference_models, reference_topology
from protocols.scenario_schema import ScenarioConfig
from protocols.trace_schema import SimTrace, trace_columns

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"

BETAS = (4.0, 7.0, 21.0)

# A two-link arm feeding a three-link arm over 0.1 s; line numbers are asserted in the loader tests.
TWO_ARMS = """\
name: tiny
timing:
  t_end: 0.1
estimator:
  mode: pinned
  betas: [4, 7, 21]
topology:
  edges:
    - {from: 1, to: 2}
  pinning: [1, 0]
arms:
  - masses: [0.8, 0.6]
    lengths: [1.4, 0.9]
    com_offsets: [0.8, 0.45]
    inertias: [6, 3]
    gains:
      alpha: 3
      Kx: 50
      Ks: 100
      Kr: 60
      T: 0.1
  - name: redundant
    masses: [0.8, 1.2, 1.4]
    lengths: [0.8, 1.1, 1.4]
    com_offsets: [0.4, 0.5, 0.7]
    inertias: [4, 6, 5]
    gains:
      alpha: 3
      Kx: [50, 50]
      Ks: 150
      Kr: [60, 60, 60]
      T: 0.1
    subtask: {kind: joint-target, joint: 2, target: 1.0, gain: 9}
"""

# TWO_ARMS with fixed initial states and a seeded disturbance, so runs need no sampling.
FROZEN_TWO_ARMS = (TWO_ARMS
                   .replace("      T: 0.1\n  - name",
                            "      T: 0.1\n"
                            "    initial: {q: [0.3, 1.2], qdot: [0, 0], zeta: [1.1, 1.5, 1.5, 0, 0, -2.9],"
                            " theta_hat: [1, 1, 1, 1, 1]}\n"
                            "  - name")
                   + "    initial: {q: [-0.2, 0.4, 1.6], qdot: [0, 0, 0], zeta: [1.1, 1.5, 1.5, 0, 0, -2.9],"
                     " theta_hat: [1, 1, 1, 1, 1, 1, 1, 1, 1]}\n"
                   + "disturbance:\n  bound: 40\n  seed: 3\n")


def diag(*values):
    return tuple(tuple(float(v) if r == c else 0.0 for c, v in enumerate(values)) for r in range(len(values)))


def make_gains(dof: int, alpha: float = 3.0, ks: float = None, kr: float = 60.0, t: float = 0.1) -> ControlGains:
    ks = ks if ks is not None else (100.0 if dof == 2 else 150.0)
    n_theta = 5 if dof == 2 else 9
    return ControlGains(alpha=alpha, Kx=diag(50, 50), Ks=diag(*[ks] * dof), Kr=diag(*[kr] * dof),
                        T=diag(*[t] * n_theta), betas=BETAS)


@pytest.fixture
def reference_arms():
    """The seven reference arms, 1-5 two-link and 6-7 three-link."""
    return reference_models()


@pytest.fixture
def arm1(reference_arms) -> ManipulatorModel:
    return reference_arms[0]


@pytest.fixture
def arm3(reference_arms) -> ManipulatorModel:
    return reference_arms[2]


@pytest.fixture
def arm6(reference_arms) -> ManipulatorModel:
    return reference_arms[5]


@pytest.fixture
def arm7(reference_arms) -> ManipulatorModel:
    return reference_arms[6]


@pytest.fixture
def sec4_topology() -> Topology:
    return reference_topology()


@pytest.fixture
def leader() -> EllipseLeader:
    return EllipseLeader()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def scenario_path():
    def _path(name: str) -> Path:
        return SCENARIO_DIR / f"{name}.scenario"
    return _path


@pytest.fixture
def tiny_config() -> ScenarioConfig:
    return load_scenario_text(TWO_ARMS)


def synthetic_trace(dofs=(2, 3), has_leader: bool = True, samples: int = 11, t0: float = 0.0,
                    dt: float = 0.01, fill: float = 0.0) -> SimTrace:
    """A trace with every signal set to `fill`, for exercising report and I/O code without a run."""
    columns = trace_columns(dofs, has_leader)
    frame = pd.DataFrame(np.full((samples, len(columns)), fill), columns=columns)
    frame["t"] = t0 + dt * np.arange(samples)
    frame["segment"] = 0
    return SimTrace(frame=frame, dofs=tuple(dofs), mode="pinned" if has_leader else "leaderless",
                    has_leader=has_leader)
