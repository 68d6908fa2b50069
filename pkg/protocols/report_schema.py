from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, Field

from protocols.trace_schema import RunDiagnostic


class ArmMetrics(BaseModel):
    index: int
    name: str
    dof: int
    reachable: bool = True
    max_tracking_error: Optional[float] = None
    max_velocity_error: Optional[float] = None
    final_tracking_error: Optional[float] = None
    subtask: str = "none"
    joint_target_error: Optional[float] = None
    max_subtask_error: Optional[float] = None
    mean_manipulability: Optional[float] = None


class ThresholdCheck(BaseModel):
    name: str
    value: Optional[float]
    threshold: float
    comparison: Literal["<", ">", "<="]
    passed: bool


class RunReport(BaseModel):
    scenario: str
    mode: Literal["pinned", "leaderless"]
    t0: float
    t_end: float
    window: Tuple[float, float]
    settle_tolerance: float
    observed_settle: Optional[float] = None
    settle_bound: Optional[float] = None
    settle_bound_applicable: bool = False
    max_disagreement: Optional[float] = None
    max_spread: Optional[float] = None
    segment_reachability: List[bool] = Field(default_factory=list)
    arms: List[ArmMetrics] = Field(default_factory=list)
    checks: List[ThresholdCheck] = Field(default_factory=list)
    diagnostic: Optional[RunDiagnostic] = None
    passed: bool = False

    def arm(self, index: int) -> ArmMetrics:
        return self.arms[index - 1]

    def to_text(self) -> str:
        def fmt(v):
            return "-" if v is None else f"{v:.6g}"

        lines = [
            f"scenario      {self.scenario}",
            f"mode          {self.mode}",
            f"horizon       [{self.t0:g}, {self.t_end:g}] s, window [{self.window[0]:g}, {self.window[1]:g}] s",
            f"settle        observed {fmt(self.observed_settle)} s, bound {fmt(self.settle_bound)} s"
            f"{'' if self.settle_bound_applicable else ' (bound not applicable)'}",
        ]
        if self.segment_reachability:
            lines.append("reachability  " + " ".join("ok" if r else "BROKEN" for r in self.segment_reachability))
        if self.mode == "leaderless":
            lines.append(f"disagreement  {fmt(self.max_disagreement)}, spread {fmt(self.max_spread)} m")
        lines.append("")
        lines.append("arm  dof  reach  max|e|      max|ev|     q_target    max|es|     <manip>")
        for a in self.arms:
            lines.append(
                f"{a.index:<4d} {a.dof:<4d} {'yes' if a.reachable else 'no':<6s} "
                f"{fmt(a.max_tracking_error):<11s} {fmt(a.max_velocity_error):<11s} "
                f"{fmt(a.joint_target_error):<11s} {fmt(a.max_subtask_error):<11s} {fmt(a.mean_manipulability)}"
            )
        lines.append("")
        for c in self.checks:
            lines.append(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {fmt(c.value)} {c.comparison} {c.threshold:g}")
        if self.diagnostic is not None:
            d = self.diagnostic
            where = f" arm {d.arm}" if d.arm is not None else ""
            lines.append(f"ABORTED at t={d.t:g}{where}: {d.error}: {d.message}")
        lines.append(f"RESULT {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"
