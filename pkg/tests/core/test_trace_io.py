import numpy as np
import pandas as pd
import pytest

from core.errors import TraceSchemaError
from core.trace_io import diagnostic_path, infer_dofs, read_trace, write_trace
from protocols.trace_schema import RunDiagnostic, arm_columns, trace_columns
from tests.conftest import synthetic_trace


def test_columns_for_mixed_arms():
    columns = trace_columns((2, 3), has_leader=True)
    assert columns[:10] == ["t", "segment", "x0_x", "x0_y", "v0_x", "v0_y", "a0_x", "a0_y",
                            "disagree_inf", "spread"]
    two_link = arm_columns(1, 2, True)
    assert [c for c in two_link if c.startswith("th")] == [f"th1_{k}" for k in range(1, 6)]
    assert "manip1" not in two_link
    three_link = arm_columns(2, 3, True)
    assert three_link[-4:] == ["es2_1", "es2_2", "es2_3", "manip2"]
    assert len([c for c in three_link if c.startswith("th")]) == 9


def test_leaderless_columns_have_no_error_block():
    columns = trace_columns((2,), has_leader=False)
    assert "x0_x" not in columns
    assert "e_norm1" not in columns
    assert "sigma_inf1" not in columns


def test_written_values_read_back_exactly(tmp_path, rng):
    trace = synthetic_trace()
    values = [c for c in trace.frame.columns if c not in ("t", "segment")]
    trace.frame[values] = rng.standard_normal((len(trace.frame), len(values))) * 1e3
    path = write_trace(trace, tmp_path / "nested" / "trace.csv")
    loaded = read_trace(path)
    pd.testing.assert_frame_equal(loaded.frame, trace.frame)
    assert loaded.dofs == (2, 3)
    assert loaded.has_leader
    assert loaded.mode == "pinned"


def test_header_matches_layout(tmp_path):
    trace = synthetic_trace(dofs=(3, 2), has_leader=False)
    path = write_trace(trace, tmp_path / "trace.csv")
    header = path.read_text().splitlines()[0].split(",")
    assert header == trace_columns((3, 2), has_leader=False)
    loaded = read_trace(path)
    assert loaded.mode == "leaderless"
    assert loaded.frame["segment"].dtype == np.int64


def test_missing_column_is_named(tmp_path):
    path = write_trace(synthetic_trace(), tmp_path / "trace.csv")
    frame = pd.read_csv(path).drop(columns=["u1_2"])
    frame.to_csv(path, index=False)
    with pytest.raises(TraceSchemaError, match="missing column 'u1_2'") as excinfo:
        read_trace(path)
    assert excinfo.value.column == "u1_2"


def test_unexpected_column_is_named(tmp_path):
    path = write_trace(synthetic_trace(), tmp_path / "trace.csv")
    frame = pd.read_csv(path)
    frame["bogus"] = 1.0
    frame.to_csv(path, index=False)
    with pytest.raises(TraceSchemaError, match="unexpected column 'bogus'"):
        read_trace(path)


def test_infer_dofs():
    assert infer_dofs(trace_columns((2, 3, 2), True)) == (2, 3, 2)
    with pytest.raises(TraceSchemaError, match="no joint columns"):
        infer_dofs(["t", "segment"])
    with pytest.raises(TraceSchemaError, match="missing column q2_1"):
        infer_dofs(["q1_1", "q1_2", "q3_1", "q3_2"])


def test_diagnostic_survives_a_round_trip(tmp_path):
    trace = synthetic_trace()
    trace.diagnostic = RunDiagnostic(error="NonfiniteState", message="arm 2: non-finite torque", arm=2, t=0.05,
                                     q=[-0.2, 0.4, 1.6])
    path = write_trace(trace, tmp_path / "trace.csv")
    assert diagnostic_path(path).name == "trace.diagnostic.json"
    loaded = read_trace(path)
    assert loaded.aborted
    assert loaded.diagnostic == trace.diagnostic
    # rewriting a completed run clears the stale sidecar
    write_trace(synthetic_trace(), path)
    assert not diagnostic_path(path).exists()
    assert read_trace(path).diagnostic is None
