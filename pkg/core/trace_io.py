"""
CSV persistence of simulation traces. Floats are written with 17 significant digits
and parsed with round-trip precision, so read_trace(write_trace(x)) reproduces x.
The diagnostic of an aborted run travels in a JSON sidecar next to the CSV.
"""

import logging
import re
from pathlib import Path
from typing import Union

import pandas as pd

from core.errors import TraceSchemaError
from protocols.trace_schema import LEADER_COLUMNS, RunDiagnostic, SimTrace, trace_columns

logger = logging.getLogger(f"dcea.{__name__}")

FLOAT_FORMAT = "%.17g"
_JOINT_COLUMN = re.compile(r"^q(\d+)_(\d+)$")


def diagnostic_path(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}.diagnostic.json")


def write_trace(trace: SimTrace, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    trace.frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    sidecar = diagnostic_path(path)
    if trace.diagnostic is not None:
        sidecar.write_text(trace.diagnostic.model_dump_json(indent=2) + "\n")
    elif sidecar.exists():
        sidecar.unlink()
    logger.info(f"Wrote trace ({len(trace.frame)} samples, {trace.frame.shape[1]} columns) to {path}")
    return path


def infer_dofs(columns) -> tuple:
    joints = {}
    for name in columns:
        m = _JOINT_COLUMN.match(name)
        if m:
            arm, joint = int(m.group(1)), int(m.group(2))
            joints[arm] = max(joints.get(arm, 0), joint)
    if not joints:
        raise TraceSchemaError("trace has no joint columns (q<i>_<k>)", column="q1_1")
    arms = sorted(joints)
    if arms != list(range(1, len(arms) + 1)):
        missing = next(i for i in range(1, len(arms) + 1) if i not in joints)
        raise TraceSchemaError(f"missing column q{missing}_1", column=f"q{missing}_1")
    return tuple(joints[i] for i in arms)


def read_trace(path: Union[str, Path]) -> SimTrace:
    path = Path(path)
    frame = pd.read_csv(path, float_precision="round_trip")
    dofs = infer_dofs(frame.columns)
    has_leader = LEADER_COLUMNS[0] in frame.columns
    expected = trace_columns(dofs, has_leader)
    present = set(frame.columns)
    for name in expected:
        if name not in present:
            raise TraceSchemaError(f"{path}: missing column '{name}'", column=name)
    extra = [name for name in frame.columns if name not in set(expected)]
    if extra:
        raise TraceSchemaError(f"{path}: unexpected column '{extra[0]}'", column=extra[0])
    frame = frame[expected]
    frame = frame.astype({name: "float64" for name in expected if name != "segment"})
    frame["segment"] = frame["segment"].astype("int64")
    logger.debug(f"Read trace {path}: {len(frame)} samples, arms with dofs {dofs}")
    sidecar = diagnostic_path(path)
    diagnostic = RunDiagnostic.model_validate_json(sidecar.read_text()) if sidecar.exists() else None
    return SimTrace(frame=frame, dofs=dofs, mode="pinned" if has_leader else "leaderless",
                    has_leader=has_leader, diagnostic=diagnostic)
