"""
Builds the agent network from a scenario and runs it, recording a SimTrace.
"""

import logging
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.spatial.distance import pdist

from agents.manipulator_agent import ManipulatorAgent
from agents.orchestrator import DisturbanceSource, NetworkOrchestrator
from core import arm_model as am
from core import dcea
from core.arm_model import JointState
from core.dcea import EstimatorState
from core.graph_topology import unreachable_nodes
from core.leader import LeaderTrajectory
from protocols.scenario_schema import ScenarioConfig, SubtaskBlock
from protocols.trace_schema import SimTrace, trace_columns

logger = logging.getLogger(f"dcea.{__name__}")


def initial_states(config: ScenarioConfig) -> List[Tuple[JointState, EstimatorState]]:
    """Frozen initial blocks where given, otherwise uniform draws over the sampling
    ranges. Draw order is arm by arm: q, qdot, zeta, theta_hat."""
    ranges = config.initial_sampling
    rng = np.random.default_rng(ranges.seed)
    states = []
    for arm in config.arms:
        p, n_theta = arm.model.dof, arm.model.parameter_count
        if arm.initial is not None:
            block = arm.initial
            states.append((JointState(block.q, block.qdot), EstimatorState(block.zeta, block.theta_hat)))
            continue
        q = rng.uniform(*ranges.q, size=p)
        qdot = rng.uniform(*ranges.qdot, size=p)
        zeta = rng.uniform(*ranges.zeta, size=dcea.ZETA_DIM)
        theta_hat = rng.uniform(*ranges.theta_hat, size=n_theta)
        states.append((JointState(q, qdot), EstimatorState(zeta, theta_hat)))
    return states


def build_network(config: ScenarioConfig) -> NetworkOrchestrator:
    network = NetworkOrchestrator(
        schedule=config.schedule,
        betas=config.estimator.betas,
        leader=config.build_leader(),
        mode=config.estimator.mode,
        smoothing=config.estimator.smoothing,
        estimator_substeps=config.timing.estimator_substeps,
    )
    for index, (arm, (state, estimator)) in enumerate(zip(config.arms, initial_states(config)), start=1):
        network.register_agent(ManipulatorAgent(
            agent_id=index,
            model=arm.model,
            gains=arm.gains,
            state=state,
            estimator=estimator,
            subtask=arm.build_subtask(),
            name=arm.name,
            smoothing=config.estimator.smoothing,
        ))
    return network


class TraceRecorder:
    """Collects one row per control tick in the column order of trace_columns."""

    def __init__(self, dofs, leader: Optional[LeaderTrajectory]):
        self.dofs = tuple(dofs)
        self.leader = leader
        self.columns = trace_columns(self.dofs, leader is not None)
        self.rows: List[List[float]] = []

    def record(self, t: float, segment: int, network: NetworkOrchestrator) -> None:
        agents = network.agents
        Z = network.zetas()
        row: List[float] = [t, segment]
        stack = None
        if self.leader is not None:
            stack = self.leader.stack(t)
            row += stack.tolist()
        ends = np.array([a.end_effector()[0] for a in agents])
        row.append(float(np.max(Z.max(axis=0) - Z.min(axis=0))))
        row.append(float(pdist(ends).max()) if len(agents) > 1 else 0.0)

        for agent, zeta in zip(agents, Z):
            model, q, qdot = agent.model, agent.state.q, agent.state.qdot
            x, xdot = agent.end_effector()
            row += q.tolist() + qdot.tolist() + x.tolist() + xdot.tolist() + zeta.tolist()
            row += agent.estimator.theta_hat.tolist() + agent.u.tolist() + agent.aux.s_hat.tolist()
            if stack is not None:
                e = x - stack[0:2]
                ftilde = dcea.closed_loop_residual(model, q, qdot, agent.estimator, agent.gains, agent.aux,
                                                   self.leader, agent.subtask, t, agent.smoothing)
                row += e.tolist()
                row += [float(np.linalg.norm(e)), float(np.linalg.norm(xdot - stack[2:4])),
                        float(np.max(np.abs(zeta - stack))), float(np.linalg.norm(ftilde))]
            if model.is_redundant:
                phi = agent.subtask.phi(t, q)
                row += dcea.subtask_error(model, q, qdot, phi).tolist()
                row.append(am.manipulability(model, q))
        self.rows.append(row)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.rows, columns=self.columns, dtype=float)
        frame["segment"] = frame["segment"].astype("int64")
        return frame


def run(config: ScenarioConfig, seed: Optional[int] = None) -> SimTrace:
    """One closed-loop run. `seed` replaces the scenario's disturbance seed."""
    disturbance_seed = config.disturbance.seed if seed is None else seed
    leader = config.build_leader()
    if config.has_leader:
        for k, topology in enumerate(config.schedule.topologies):
            missing = unreachable_nodes(topology)
            if missing:
                logger.warning(f"Segment {k}: leader does not reach arms {missing}; running anyway")
    network = build_network(config)
    dofs = [a.model.dof for a in config.arms]
    hold_steps = int(round(config.hold_period / config.timing.dt))
    disturbance = DisturbanceSource(config.disturbance.bound, disturbance_seed, dofs, hold_steps)
    recorder = TraceRecorder(dofs, leader)
    logger.info(f"Starting run '{config.name}' (disturbance seed {disturbance_seed})")
    diagnostic = network.run(config.timing.t0, config.ticks, config.timing.control_period,
                             config.substeps, disturbance, recorder)
    return SimTrace(frame=recorder.to_frame(), dofs=tuple(dofs), mode=config.estimator.mode,
                    has_leader=leader is not None, diagnostic=diagnostic)


def without_subtasks(config: ScenarioConfig) -> ScenarioConfig:
    arms = tuple(arm.model_copy(update={"subtask": SubtaskBlock()}) for arm in config.arms)
    return config.model_copy(update={"arms": arms, "name": f"{config.name} (no subtask)"})


def run_pair_subtask(config: ScenarioConfig, seed: Optional[int] = None) -> Tuple[SimTrace, SimTrace]:
    """(with subtasks, with every phi = 0); both runs share all seeds."""
    with_subtask = run(config, seed)
    twin = run(without_subtasks(config), seed)
    return with_subtask, twin
