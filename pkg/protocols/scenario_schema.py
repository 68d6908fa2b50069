"""
Scenario file dialect (YAML) and the validated runtime configuration built from it.

The `*Block` models mirror the file one-to-one (unknown keys are rejected); the
loader in core/scenario_loader.py turns a ScenarioFile into a ScenarioConfig.
"""

from typing import Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.arm_model import ManipulatorModel
from core.dcea import ZETA_DIM, ControlGains
from core.graph_topology import TopologySchedule
from core.leader import LeaderTrajectory, create_leader
from core.subtask_factory import SubtaskFunction, create_subtask

GainValue = Union[float, List[float], List[List[float]]]
Range = Tuple[float, float]


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class GainsBlock(_Block):
    alpha: float
    Kx: GainValue
    Ks: GainValue
    Kr: GainValue
    T: GainValue


class SubtaskBlock(_Block):
    kind: str = "none"
    joint: Optional[int] = None
    target: Optional[float] = None
    gain: Optional[float] = None

    def params(self) -> Dict[str, float]:
        return {k: v for k, v in self.model_dump(exclude={"kind"}).items() if v is not None}


class InitialBlock(_Block):
    q: List[float]
    qdot: List[float]
    zeta: List[float]
    # "nominal" starts from the arm's true parameters
    theta_hat: Union[Literal["nominal"], List[float]]

    @model_validator(mode="after")
    def _check_zeta(self) -> "InitialBlock":
        if len(self.zeta) != ZETA_DIM:
            raise ValueError(f"zeta must have {ZETA_DIM} entries (x_hat, v_hat, a_hat), got {len(self.zeta)}")
        return self


class ArmBlock(_Block):
    name: Optional[str] = None
    masses: List[float]
    lengths: List[float]
    com_offsets: List[float]
    inertias: List[float]
    gains: GainsBlock
    subtask: SubtaskBlock = Field(default_factory=SubtaskBlock)
    initial: Optional[InitialBlock] = None


class EdgeBlock(_Block):
    source: int = Field(alias="from")
    receiver: int = Field(alias="to")
    weight: float = 1.0


class GraphBlock(_Block):
    edges: List[EdgeBlock] = Field(default_factory=list)
    pinning: Optional[List[float]] = None


class SegmentBlock(GraphBlock):
    start: float


class TopologyBlock(GraphBlock):
    segments: Optional[List[SegmentBlock]] = None

    @model_validator(mode="after")
    def _static_or_switching(self) -> "TopologyBlock":
        if self.segments is not None and (self.edges or self.pinning is not None):
            raise ValueError("declare either edges/pinning or segments, not both")
        return self


class LeaderBlock(_Block):
    kind: Literal["ellipse", "none"] = "ellipse"
    center: Tuple[float, float] = (1.2, 1.3)
    amplitudes: Tuple[float, float] = (0.5, 0.3)
    omega: float = 3.141592653589793


class EstimatorBlock(_Block):
    mode: Literal["pinned", "leaderless"] = "pinned"
    betas: Tuple[float, float, float]
    smoothing: Optional[float] = None


class DisturbanceBlock(_Block):
    bound: float = 0.0
    seed: int = 0
    hold: Optional[float] = None


class TimingBlock(_Block):
    t0: float = 0.0
    t_end: float
    control_period: float = 0.01
    dt: float = 0.001
    estimator_substeps: int = 10


class SamplingBlock(_Block):
    seed: int = 0
    q: Range = (-5.0, 5.0)
    qdot: Range = (-5.0, 5.0)
    zeta: Range = (-5.0, 5.0)
    theta_hat: Range = (0.0, 5.0)


class ThresholdsBlock(_Block):
    """Pass/fail limits over the report window. Unset entries are reported only."""

    tracking_error: Optional[float] = None
    velocity_error: Optional[float] = None
    settle_slack: Optional[float] = None
    joint_target_error: Optional[float] = None
    subtask_error: Optional[float] = None
    disagreement: Optional[float] = None
    spread: Optional[float] = None
    unreachable_min_error: Optional[float] = None


class ScenarioFile(_Block):
    name: str
    description: str = ""
    gravity: float = 9.81
    singular_threshold: float = 1e-6
    settle_tolerance: float = 0.02
    tail_window: Optional[float] = None
    timing: TimingBlock
    estimator: EstimatorBlock
    leader: LeaderBlock = Field(default_factory=LeaderBlock)
    topology: TopologyBlock = Field(default_factory=TopologyBlock)
    disturbance: DisturbanceBlock = Field(default_factory=DisturbanceBlock)
    initial_sampling: SamplingBlock = Field(default_factory=SamplingBlock)
    arms: List[ArmBlock]
    thresholds: ThresholdsBlock = Field(default_factory=ThresholdsBlock)


# ------------------------------------------------------------------ runtime


class ArmConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    model: ManipulatorModel
    gains: ControlGains
    subtask: SubtaskBlock = Field(default_factory=SubtaskBlock)
    initial: Optional[InitialBlock] = None

    def build_subtask(self) -> SubtaskFunction:
        return create_subtask(self.subtask.kind, self.model, **self.subtask.params())


class ScenarioConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    description: str = ""
    arms: Tuple[ArmConfig, ...]
    schedule: TopologySchedule
    leader: LeaderBlock
    estimator: EstimatorBlock
    disturbance: DisturbanceBlock
    timing: TimingBlock
    initial_sampling: SamplingBlock
    thresholds: ThresholdsBlock
    gravity: float = 9.81
    singular_threshold: float = 1e-6
    settle_tolerance: float = 0.02
    tail_window: Optional[float] = None

    @property
    def n_arms(self) -> int:
        return len(self.arms)

    @property
    def has_leader(self) -> bool:
        return self.estimator.mode == "pinned" and self.leader.kind != "none"

    @property
    def hold_period(self) -> float:
        return self.disturbance.hold if self.disturbance.hold is not None else self.timing.control_period

    @property
    def substeps(self) -> int:
        return int(round(self.timing.control_period / self.timing.dt))

    @property
    def ticks(self) -> int:
        return int(round((self.timing.t_end - self.timing.t0) / self.timing.control_period))

    def build_leader(self) -> Optional[LeaderTrajectory]:
        if not self.has_leader:
            return None
        block = self.leader
        return create_leader(block.kind, center=block.center, amplitudes=block.amplitudes, omega=block.omega)
