import numpy as np
import pytest

from core.errors import EmptyTraceError
from core.figures import render_figures
from tests.conftest import synthetic_trace


@pytest.fixture
def moving_trace():
    trace = synthetic_trace(samples=51)
    t = trace.times
    for i in (1, 2):
        trace.frame[f"x{i}_x"] = 1.2 + 0.5 * np.sin(np.pi * t) + 0.1 * i
        trace.frame[f"x{i}_y"] = 1.3 + 0.3 * np.cos(np.pi * t)
    trace.frame["x0_x"] = 1.2 + 0.5 * np.sin(np.pi * t)
    trace.frame["x0_y"] = 1.3 + 0.3 * np.cos(np.pi * t)
    trace.frame["manip2"] = 1.0 + t
    return trace


def test_base_figures(tmp_path, moving_trace):
    paths = render_figures(moving_trace, tmp_path / "figs")
    assert sorted(p.name for p in paths) == ["estimates.svg", "task_states.svg", "xy_paths.svg"]
    for path in paths:
        assert path.read_bytes().lstrip().startswith(b"<?xml")


def test_comparison_figures_need_a_twin(tmp_path, moving_trace):
    twin = moving_trace.model_copy(update={"frame": moving_trace.frame.copy()})
    paths = render_figures(moving_trace, tmp_path, twin=twin)
    assert {p.name for p in paths} >= {"subtask_joint.svg", "manipulability.svg"}


def test_leaderless_trace_renders(tmp_path):
    paths = render_figures(synthetic_trace(has_leader=False), tmp_path)
    assert len(paths) == 3


def test_empty_trace_writes_nothing(tmp_path):
    empty = synthetic_trace(samples=0)
    with pytest.raises(EmptyTraceError):
        render_figures(empty, tmp_path / "figs")
    assert not (tmp_path / "figs").exists()


def test_empty_twin_writes_nothing(tmp_path, moving_trace):
    with pytest.raises(EmptyTraceError):
        render_figures(moving_trace, tmp_path / "figs", twin=synthetic_trace(samples=0))
    assert not (tmp_path / "figs").exists()


def test_rendering_is_byte_identical(tmp_path, moving_trace):
    first = render_figures(moving_trace, tmp_path / "a")
    second = render_figures(moving_trace, tmp_path / "b")
    for a, b in zip(first, second):
        assert a.read_bytes() == b.read_bytes()
