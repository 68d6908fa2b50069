"""
Run report: tracking statistics over the tail window, estimator settle time against
the finite-time bound, subtask metrics and threshold checks.
"""

import logging
from typing import List, Optional

import numpy as np

from core.dcea import settle_time_bound
from core.errors import NonpositiveMargin
from core.graph_topology import unreachable_nodes
from protocols.report_schema import ArmMetrics, RunReport, ThresholdCheck
from protocols.scenario_schema import ScenarioConfig
from protocols.trace_schema import SimTrace

logger = logging.getLogger(f"dcea.{__name__}")


def report_window(config: ScenarioConfig) -> tuple:
    t0, t_end = config.timing.t0, config.timing.t_end
    length = config.tail_window if config.tail_window is not None else 0.25 * (t_end - t0)
    return max(t_end - length, t0), t_end


def observed_settle(times: np.ndarray, signal: np.ndarray, tolerance: float) -> Optional[float]:
    """First sample time after which `signal` stays below `tolerance`; None if it never does."""
    if len(signal) == 0:
        return None
    above = np.flatnonzero(~(signal < tolerance))
    if len(above) == 0:
        return float(times[0])
    last = above[-1]
    if last == len(signal) - 1:
        return None
    return float(times[last + 1])


def _max(values) -> Optional[float]:
    values = [v for v in values if v is not None]
    return float(max(values)) if values else None


def _min(values) -> Optional[float]:
    values = [v for v in values if v is not None]
    return float(min(values)) if values else None


def _check(name: str, value: Optional[float], threshold: float, comparison: str) -> ThresholdCheck:
    if value is None:
        passed = False
    elif comparison == "<":
        passed = value < threshold
    elif comparison == "<=":
        passed = value <= threshold
    else:
        passed = value > threshold
    return ThresholdCheck(name=name, value=value, threshold=threshold, comparison=comparison, passed=passed)


def _unreachable_arms(config: ScenarioConfig) -> set:
    if not config.has_leader:
        return set()
    missing = set()
    for topology in config.schedule.topologies:
        missing.update(unreachable_nodes(topology))
    return missing


def _settle_bound(trace: SimTrace, config: ScenarioConfig) -> Optional[float]:
    leader = config.build_leader()
    if leader is None or len(trace) == 0:
        return None
    first = trace.frame.iloc[0]
    zetas = np.array([[first[f"{p}{i}_{a}"] for p in ("xh", "vh", "ah") for a in ("x", "y")]
                      for i in range(1, trace.n_arms + 1)])
    try:
        return settle_time_bound(zetas, leader, float(first["t"]), config.estimator.betas)
    except NonpositiveMargin as e:
        logger.warning(f"No settle bound: {e}")
        return None


def compute_report(trace: SimTrace, config: ScenarioConfig) -> RunReport:
    frame = trace.frame
    times = frame["t"].to_numpy()
    start, end = report_window(config)
    in_window = times >= start - 1e-9
    window = frame[in_window]
    unreachable = _unreachable_arms(config)
    reachability = config.schedule.reachability() if config.has_leader else []

    arms: List[ArmMetrics] = []
    for index, arm in enumerate(config.arms, start=1):
        m = ArmMetrics(index=index, name=arm.name, dof=arm.model.dof, reachable=index not in unreachable,
                       subtask=arm.subtask.kind)
        if trace.has_leader and len(window):
            m.max_tracking_error = float(window[f"e_norm{index}"].max())
            m.max_velocity_error = float(window[f"ev_norm{index}"].max())
            m.final_tracking_error = float(frame[f"e_norm{index}"].iloc[-1])
        if arm.model.is_redundant and len(window):
            m.mean_manipulability = float(window[f"manip{index}"].mean())
            if arm.subtask.kind == "joint-target":
                joint = arm.subtask.joint
                m.joint_target_error = abs(float(frame[f"q{index}_{joint}"].iloc[-1]) - arm.subtask.target)
                es = window[[f"es{index}_{k}" for k in range(1, arm.model.dof + 1)]].to_numpy()
                m.max_subtask_error = float(np.max(np.linalg.norm(es, axis=1)))
        arms.append(m)

    report = RunReport(
        scenario=config.name,
        mode=config.estimator.mode,
        t0=config.timing.t0,
        t_end=config.timing.t_end,
        window=(start, end),
        settle_tolerance=config.settle_tolerance,
        segment_reachability=reachability,
        arms=arms,
        diagnostic=trace.diagnostic,
    )

    if trace.has_leader:
        sigma = np.max(frame[[f"sigma_inf{i}" for i in range(1, trace.n_arms + 1)]].to_numpy(), axis=1) \
            if len(frame) else np.array([])
        report.observed_settle = observed_settle(times, sigma, config.settle_tolerance)
        report.settle_bound = _settle_bound(trace, config)
        report.settle_bound_applicable = (report.settle_bound is not None and config.schedule.is_static
                                          and all(reachability))
    else:
        report.observed_settle = observed_settle(times, frame["disagree_inf"].to_numpy(), config.settle_tolerance)
        if len(window):
            report.max_disagreement = float(window["disagree_inf"].max())
            report.max_spread = float(window["spread"].max())

    th = config.thresholds
    reachable = [a for a in arms if a.reachable]
    targets = [a for a in arms if a.subtask == "joint-target"]
    checks = []
    if trace.has_leader:
        if th.tracking_error is not None:
            checks.append(_check("tracking_error", _max(a.max_tracking_error for a in arms), th.tracking_error, "<"))
            if unreachable and reachable:
                checks.append(_check("reachable_tracking_error", _max(a.max_tracking_error for a in reachable),
                                     th.tracking_error, "<"))
        if th.velocity_error is not None:
            checks.append(_check("velocity_error", _max(a.max_velocity_error for a in arms), th.velocity_error, "<"))
        if th.settle_slack is not None and report.settle_bound_applicable:
            checks.append(_check("settle_time", report.observed_settle, report.settle_bound + th.settle_slack, "<="))
        if th.unreachable_min_error is not None:
            checks.append(_check("unreachable_error", _min(a.max_tracking_error for a in arms if not a.reachable),
                                 th.unreachable_min_error, ">"))
    else:
        if th.disagreement is not None:
            checks.append(_check("disagreement", report.max_disagreement, th.disagreement, "<"))
        if th.spread is not None:
            checks.append(_check("spread", report.max_spread, th.spread, "<"))
    if th.joint_target_error is not None:
        checks.append(_check("joint_target_error", _max(a.joint_target_error for a in targets), th.joint_target_error, "<"))
    if th.subtask_error is not None:
        checks.append(_check("subtask_error", _max(a.max_subtask_error for a in targets), th.subtask_error, "<"))
    report.checks = checks
    report.passed = trace.diagnostic is None and bool(len(window)) and all(c.passed for c in checks)
    logger.info(f"Report for '{config.name}': {'PASS' if report.passed else 'FAIL'} "
                f"({sum(c.passed for c in checks)}/{len(checks)} checks)")
    return report
