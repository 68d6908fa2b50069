"""
Column layout of a simulation trace. Arms are labelled 1..n, joints 1..p.

Global:       t, segment, [x0_x x0_y v0_x v0_y a0_x a0_y], disagree_inf, spread
Per arm i:    q{i}_{k}, qd{i}_{k}, x{i}_x, x{i}_y, xd{i}_x, xd{i}_y,
              xh{i}_*, vh{i}_*, ah{i}_*, th{i}_{k}, u{i}_{k}, sh{i}_{k}
With leader:  e{i}_x, e{i}_y, e_norm{i}, ev_norm{i}, sigma_inf{i}, ftilde_norm{i}
3-link arms:  es{i}_{k}, manip{i}

Bracketed columns exist only when the run has a leader (pinned mode).
"""

from typing import List, Literal, Optional, Sequence, Tuple

import pandas as pd
from pydantic import BaseModel, ConfigDict

from core.arm_model import TASK_DIM, parameter_count

AXES = ("x", "y")
LEADER_COLUMNS = ["x0_x", "x0_y", "v0_x", "v0_y", "a0_x", "a0_y"]


def arm_columns(i: int, dof: int, has_leader: bool) -> List[str]:
    joints = range(1, dof + 1)
    cols = [f"q{i}_{k}" for k in joints]
    cols += [f"qd{i}_{k}" for k in joints]
    cols += [f"x{i}_{a}" for a in AXES] + [f"xd{i}_{a}" for a in AXES]
    for prefix in ("xh", "vh", "ah"):
        cols += [f"{prefix}{i}_{a}" for a in AXES]
    cols += [f"th{i}_{k}" for k in range(1, parameter_count(dof) + 1)]
    cols += [f"u{i}_{k}" for k in joints]
    cols += [f"sh{i}_{k}" for k in joints]
    if has_leader:
        cols += [f"e{i}_{a}" for a in AXES]
        cols += [f"e_norm{i}", f"ev_norm{i}", f"sigma_inf{i}", f"ftilde_norm{i}"]
    if dof > TASK_DIM:
        cols += [f"es{i}_{k}" for k in joints]
        cols += [f"manip{i}"]
    return cols


def trace_columns(dofs: Sequence[int], has_leader: bool) -> List[str]:
    cols = ["t", "segment"]
    if has_leader:
        cols += LEADER_COLUMNS
    cols += ["disagree_inf", "spread"]
    for i, dof in enumerate(dofs, start=1):
        cols += arm_columns(i, dof, has_leader)
    return cols


class RunDiagnostic(BaseModel):
    """Why a run stopped early."""

    error: str
    message: str
    arm: Optional[int] = None
    t: float
    q: Optional[List[float]] = None


class SimTrace(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    frame: pd.DataFrame
    dofs: Tuple[int, ...]
    mode: Literal["pinned", "leaderless"]
    has_leader: bool
    diagnostic: Optional[RunDiagnostic] = None

    @property
    def n_arms(self) -> int:
        return len(self.dofs)

    @property
    def times(self):
        return self.frame["t"].to_numpy()

    @property
    def aborted(self) -> bool:
        return self.diagnostic is not None

    def __len__(self) -> int:
        return len(self.frame)
