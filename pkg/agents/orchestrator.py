import logging
from typing import Dict, List, Optional, Protocol, Sequence

import numpy as np

from agents.manipulator_agent import ManipulatorAgent
from core import dcea
from core.errors import NonfiniteState, NonPositiveDefiniteInertia, SingularJacobian
from core.graph_topology import TopologySchedule
from core.leader import LeaderTrajectory
from protocols.trace_schema import RunDiagnostic

logger = logging.getLogger(f"dcea.{__name__}")

ABORTS = (SingularJacobian, NonfiniteState, NonPositiveDefiniteInertia)


class Recorder(Protocol):
    def record(self, t: float, segment: int, network: "NetworkOrchestrator") -> None: ...


class DisturbanceSource:
    """Piecewise-constant torque disturbance, each component uniform on [-bound, bound],
    redrawn every `hold_steps` integrator steps from a seeded generator."""

    def __init__(self, bound: float, seed: int, dofs: Sequence[int], hold_steps: int = 1):
        if bound < 0:
            raise ValueError("disturbance bound must be >= 0")
        self.bound = float(bound)
        self.seed = seed
        self.dofs = tuple(dofs)
        self.hold_steps = max(int(hold_steps), 1)
        self._rng = np.random.default_rng(seed)
        self._current = [np.zeros(p) for p in self.dofs]

    def at_step(self, n: int) -> List[np.ndarray]:
        if self.bound > 0 and n % self.hold_steps == 0:
            self._current = [self._rng.uniform(-self.bound, self.bound, size=p) for p in self.dofs]
        return self._current


class NetworkOrchestrator:
    """Owns the follower agents and their stacked estimates, advances each estimate from
    its in-neighbours only and runs the zero-order-hold control loop."""

    def __init__(self, schedule: TopologySchedule, betas: Sequence[float],
                 leader: Optional[LeaderTrajectory] = None, mode: dcea.EstimatorMode = "pinned",
                 smoothing: Optional[float] = None, estimator_substeps: int = 10):
        if mode == "pinned" and leader is None:
            raise ValueError("pinned mode needs a leader trajectory")
        self.schedule = schedule
        self.betas = tuple(float(b) for b in betas)
        self.leader = leader if mode == "pinned" else None
        self.mode = mode
        self.smoothing = smoothing
        self.estimator_substeps = max(int(estimator_substeps), 1)
        self.registered_agents: Dict[int, ManipulatorAgent] = {}
        self._Z: Optional[np.ndarray] = None

    def register_agent(self, agent: ManipulatorAgent) -> None:
        if agent.agent_id in self.registered_agents:
            logger.warning(f"Agent {agent.agent_id} ({agent.name}) is already registered.")
            return
        self.registered_agents[agent.agent_id] = agent
        self._Z = None
        logger.debug(f"Agent {agent.name} (ID: {agent.agent_id}) registered with orchestrator.")

    @property
    def agents(self) -> List[ManipulatorAgent]:
        return [self.registered_agents[k] for k in sorted(self.registered_agents)]

    def _bind_estimates(self) -> np.ndarray:
        """Stack every zeta into one (n, 6) array and make each agent's zeta a row view."""
        if self._Z is None:
            agents = self.agents
            if len(agents) != self.schedule.n:
                raise ValueError(f"{len(agents)} agents registered, topology has {self.schedule.n} nodes")
            self._Z = np.vstack([a.estimator.zeta for a in agents])
            for row, agent in enumerate(agents):
                agent.estimator.zeta = self._Z[row]
        return self._Z

    def zetas(self) -> np.ndarray:
        return self._bind_estimates().copy()

    def advance_estimators(self, t: float, dt: float) -> None:
        """Move every zeta over [t, t + dt] with the topology in force at t."""
        Z = self._bind_estimates()
        topology = self.schedule.at(t)
        h = dt / self.estimator_substeps
        for e in range(self.estimator_substeps):
            stack = self.leader.stack(t + e * h) if self.leader is not None else None
            Z += h * dcea.network_estimator_rate(Z, topology, stack, self.betas, self.smoothing)

    def run(self, t0: float, ticks: int, control_period: float, substeps: int,
            disturbance: DisturbanceSource, recorder: Optional[Recorder] = None) -> Optional[RunDiagnostic]:
        """Advance the network over `ticks` control periods. Returns a diagnostic when the
        run had to stop early, None otherwise."""
        agents = self.agents
        self._bind_estimates()
        dt = control_period / substeps
        log_every = max(int(round(1.0 / control_period)), 1)
        current: Optional[ManipulatorAgent] = None
        t = t0
        logger.info(f"Running {len(agents)} arms for {ticks} ticks (T_c={control_period:g} s, dt={dt:g} s, mode={self.mode})")
        try:
            for k in range(ticks + 1):
                t = t0 + k * control_period
                for agent in agents:
                    current = agent
                    agent.compute_control(t)
                current = None
                if recorder is not None:
                    recorder.record(t, self.schedule.segment_index(t), self)
                if k == ticks:
                    break
                for s in range(substeps):
                    ts = t + s * dt
                    d = disturbance.at_step(k * substeps + s)
                    for agent, d_i in zip(agents, d):
                        current = agent
                        agent.step_dynamics(dt, d_i)
                        agent.step_parameters(dt)
                    current = None
                    self.advance_estimators(ts, dt)
                    for agent in agents:
                        current = agent
                        agent.check_finite()
                    current = None
                if k % log_every == 0:
                    logger.debug(f"t={t:.2f} s, max |zeta| = {float(np.max(np.abs(self._Z))):.3g}")
        except ABORTS as e:
            diagnostic = RunDiagnostic(
                error=type(e).__name__,
                message=str(e),
                arm=current.agent_id if current is not None else None,
                t=float(t),
                q=current.state.q.tolist() if current is not None else None,
            )
            logger.error(f"Run aborted at t={t:.3f} s (arm {diagnostic.arm}): {e}")
            return diagnostic
        logger.info(f"Run finished at t={t:.3f} s")
        return None

    def __repr__(self):
        return f"<NetworkOrchestrator(n={len(self.registered_agents)}, mode={self.mode})>"
