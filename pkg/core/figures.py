"""
SVG figure set for a run: estimates, task-space states, XY paths and, given the
twin run without subtasks, the joint and manipulability comparisons.

Every figure is rendered in memory first; files are written only once all of them
rendered, so a failure never leaves a partial set behind.
"""

import io
import logging
from pathlib import Path
from typing import Dict, List, Optional, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from core.errors import EmptyTraceError  # noqa: E402
from protocols.trace_schema import SimTrace  # noqa: E402

logger = logging.getLogger(f"dcea.{__name__}")

SVG_METADATA = {"Date": None}


def _svg_bytes(fig) -> bytes:
    buffer = io.BytesIO()
    fig.savefig(buffer, format="svg", metadata=SVG_METADATA)
    plt.close(fig)
    return buffer.getvalue()


def _estimates_figure(trace: SimTrace):
    t = trace.times
    fig, axes = plt.subplots(3, 2, figsize=(10, 8), sharex=True)
    labels = (("xh", "x0", "x hat"), ("vh", "v0", "v hat"), ("ah", "a0", "a hat"))
    for row, (prefix, leader_prefix, title) in enumerate(labels):
        for col, axis in enumerate(("x", "y")):
            ax = axes[row, col]
            for i in range(1, trace.n_arms + 1):
                ax.plot(t, trace.frame[f"{prefix}{i}_{axis}"], lw=0.8, label=f"arm {i}")
            if trace.has_leader:
                ax.plot(t, trace.frame[f"{leader_prefix}_{axis}"], "k--", lw=1.2, label="leader")
            ax.set_title(f"{title} ({axis})")
            ax.grid(True)
    axes[-1, 0].set_xlabel("t (s)")
    axes[-1, 1].set_xlabel("t (s)")
    axes[0, 1].legend(fontsize="x-small", ncol=2)
    fig.tight_layout()
    return fig


def _task_states_figure(trace: SimTrace):
    t = trace.times
    fig, axes = plt.subplots(2, 2, figsize=(10, 6), sharex=True)
    for col, axis in enumerate(("x", "y")):
        for i in range(1, trace.n_arms + 1):
            axes[0, col].plot(t, trace.frame[f"x{i}_{axis}"], lw=0.8, label=f"arm {i}")
            axes[1, col].plot(t, trace.frame[f"xd{i}_{axis}"], lw=0.8)
        if trace.has_leader:
            axes[0, col].plot(t, trace.frame[f"x0_{axis}"], "k--", lw=1.2, label="leader")
            axes[1, col].plot(t, trace.frame[f"v0_{axis}"], "k--", lw=1.2)
        axes[0, col].set_title(f"position ({axis})")
        axes[1, col].set_title(f"velocity ({axis})")
        axes[1, col].set_xlabel("t (s)")
        for ax in axes[:, col]:
            ax.grid(True)
    axes[0, 1].legend(fontsize="x-small", ncol=2)
    fig.tight_layout()
    return fig


def _xy_figure(trace: SimTrace):
    fig, ax = plt.subplots(figsize=(6, 6))
    for i in range(1, trace.n_arms + 1):
        xy = trace.task_block(i, "x")
        line, = ax.plot(xy[:, 0], xy[:, 1], lw=0.8, label=f"arm {i}")
        ax.plot(xy[0, 0], xy[0, 1], "o", color=line.get_color(), ms=3)
    if trace.has_leader:
        ax.plot(trace.frame["x0_x"], trace.frame["x0_y"], "k--", lw=1.2, label="leader")
    ax.set_xlabel("X (m)")
    ax.set_ylabel("Y (m)")
    ax.set_aspect("equal", adjustable="datalim")
    ax.grid(True)
    ax.legend(fontsize="x-small")
    fig.tight_layout()
    return fig


def _joint_figure(trace: SimTrace, twin: SimTrace, arm: int, joint: int):
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(trace.times, trace.frame[f"q{arm}_{joint}"], lw=1.0, label="with subtask")
    ax.plot(twin.times, twin.frame[f"q{arm}_{joint}"], lw=1.0, ls="--", label="without subtask")
    ax.set_xlabel("t (s)")
    ax.set_ylabel(f"q{joint} of arm {arm} (rad)")
    ax.grid(True)
    ax.legend()
    fig.tight_layout()
    return fig


def _manipulability_figure(trace: SimTrace, twin: SimTrace, arm: int):
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(trace.times, trace.frame[f"manip{arm}"], lw=1.0, label="with subtask")
    ax.plot(twin.times, twin.frame[f"manip{arm}"], lw=1.0, ls="--", label="without subtask")
    ax.set_xlabel("t (s)")
    ax.set_ylabel(f"det(J J^T) of arm {arm}")
    ax.grid(True)
    ax.legend()
    fig.tight_layout()
    return fig


def render_figures(trace: SimTrace, out_dir: Union[str, Path], twin: Optional[SimTrace] = None,
                   joint_arm: Optional[int] = None, joint: int = 2,
                   manip_arm: Optional[int] = None) -> List[Path]:
    """Write the figure set to `out_dir`; returns the written paths.

    The comparison figures need `twin`. By default they use the first redundant arm
    for the joint plot and the last one for manipulability."""
    if len(trace) == 0:
        raise EmptyTraceError("cannot render figures from an empty trace")
    redundant = [i for i, p in enumerate(trace.dofs, start=1) if p > 2]

    with plt.rc_context({"svg.hashsalt": "dcea", "svg.fonttype": "path"}):
        rendered: Dict[str, bytes] = {
            "estimates.svg": _svg_bytes(_estimates_figure(trace)),
            "task_states.svg": _svg_bytes(_task_states_figure(trace)),
            "xy_paths.svg": _svg_bytes(_xy_figure(trace)),
        }
        if twin is not None and redundant:
            if len(twin) == 0:
                raise EmptyTraceError("cannot render comparison figures from an empty twin trace")
            joint_arm = joint_arm or redundant[0]
            manip_arm = manip_arm or redundant[-1]
            rendered["subtask_joint.svg"] = _svg_bytes(_joint_figure(trace, twin, joint_arm, joint))
            rendered["manipulability.svg"] = _svg_bytes(_manipulability_figure(trace, twin, manip_arm))

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, payload in rendered.items():
        path = out_dir / name
        path.write_bytes(payload)
        paths.append(path)
    logger.info(f"Wrote {len(paths)} figures to {out_dir}")
    return paths

