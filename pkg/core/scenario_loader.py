"""
Scenario files: YAML text -> validated ScenarioConfig, and back.

Every rejection is a ScenarioError anchored at the line of the offending key. The
dialect is documented in docs/scenario_format.md.
"""

import logging
from pathlib import Path
from typing import Any, List, Optional, Sequence, Union

import numpy as np
import yaml
from pydantic import ValidationError

from core.arm_model import TASK_DIM, ManipulatorModel, parameter_count
from core.dcea import ControlGains
from core.errors import ScenarioError
from core.graph_topology import Topology, TopologySchedule, spanning_tree_exists, unreachable_nodes
from core.subtask_factory import create_subtask
from protocols.scenario_schema import ArmConfig, GainValue, ScenarioConfig, ScenarioFile

logger = logging.getLogger(f"dcea.{__name__}")

Loc = Sequence[Union[str, int]]
_TIME_EPS = 1e-9


class _Anchors:
    """Maps a pydantic error location onto the YAML node it came from."""

    def __init__(self, root: Optional[yaml.Node], path: str):
        self.root = root
        self.path = path

    def line_of(self, loc: Loc) -> Optional[tuple]:
        node = self.root
        mark = node.start_mark if node is not None else None
        for part in loc:
            if isinstance(node, yaml.MappingNode):
                match = next(((k, v) for k, v in node.value if k.value == part), None)
                if match is None:
                    break
                mark = match[0].start_mark
                node = match[1]
            elif isinstance(node, yaml.SequenceNode) and isinstance(part, int) and part < len(node.value):
                node = node.value[part]
                mark = node.start_mark
            else:
                break
        if mark is None:
            return None
        return mark.line + 1, mark.column + 1

    def error(self, message: str, loc: Loc = ()) -> ScenarioError:
        where = self.line_of(loc)
        line, column = where if where is not None else (None, None)
        return ScenarioError(message, self.path, line, column)


def _format_loc(loc: Loc) -> str:
    out = ""
    for part in loc:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out


def _translate(e: ValidationError, anchors: _Anchors, prefix: Loc = ()) -> ScenarioError:
    first = e.errors()[0]
    loc = tuple(prefix) + tuple(p for p in first["loc"] if not str(p).startswith("function-"))
    message = first["msg"]
    if first["type"] == "extra_forbidden":
        message = f"unknown key '{loc[-1]}'"
    elif first["type"] == "missing":
        message = f"missing key '{loc[-1]}'"
    label = _format_loc(loc)
    return anchors.error(f"{label}: {message}" if label else message, loc)


def gain_matrix(value: GainValue, dim: int, what: str) -> tuple:
    """Scalar -> scalar * I, flat list -> diagonal, nested list -> as written."""
    if isinstance(value, (int, float)):
        M = float(value) * np.eye(dim)
    elif value and all(isinstance(v, (int, float)) for v in value):
        M = np.diag(np.asarray(value, dtype=float))
    else:
        M = np.asarray(value, dtype=float)
    if M.shape != (dim, dim):
        raise ValueError(f"{what} is {'x'.join(map(str, M.shape))}, expected {dim}x{dim}")
    return tuple(tuple(float(v) for v in row) for row in M)


def _build_arm(index: int, block, scenario: ScenarioFile, anchors: _Anchors) -> ArmConfig:
    loc = ("arms", index)
    name = block.name or f"arm{index + 1}"
    label = f"arm {index + 1} ({name})"
    try:
        model = ManipulatorModel(masses=block.masses, lengths=block.lengths, com_offsets=block.com_offsets,
                                 inertias=block.inertias, gravity=scenario.gravity,
                                 singular_threshold=scenario.singular_threshold)
    except ValidationError as e:
        raise anchors.error(f"{label}: {e.errors()[0]['msg']}", loc) from None

    p, n_theta = model.dof, parameter_count(model.dof)
    g = block.gains
    gains_loc = loc + ("gains",)
    matrices = {}
    for key, dim in (("Kx", TASK_DIM), ("Ks", p), ("Kr", p), ("T", n_theta)):
        try:
            matrices[key] = gain_matrix(getattr(g, key), dim, key)
        except ValueError as e:
            raise anchors.error(f"{label}: {e} for a {p}-dof arm", gains_loc + (key,)) from None
    try:
        gains = ControlGains(alpha=g.alpha, betas=scenario.estimator.betas, **matrices)
    except ValidationError as e:
        raise anchors.error(f"{label}: {e.errors()[0]['msg']}", gains_loc) from None

    try:
        create_subtask(block.subtask.kind, model, **block.subtask.params())
    except (TypeError, ValueError) as e:
        raise anchors.error(f"{label}: subtask: {e}", loc + ("subtask",)) from None

    init = block.initial
    if init is not None:
        if init.theta_hat == "nominal":
            init = init.model_copy(update={"theta_hat": model.theta_true.tolist()})
        for key, size in (("q", p), ("qdot", p), ("theta_hat", n_theta)):
            if len(getattr(init, key)) != size:
                raise anchors.error(f"{label}: initial {key} needs {size} entries, got {len(getattr(init, key))}",
                                    loc + ("initial", key))
    return ArmConfig(name=name, model=model, gains=gains, subtask=block.subtask, initial=init)


def _build_topology(graph, n: int, loc: Loc, anchors: _Anchors) -> Topology:
    for k, edge in enumerate(graph.edges):
        for end in (edge.source, edge.receiver):
            if not 1 <= end <= n:
                raise anchors.error(f"edge {edge.source} -> {edge.receiver}: nodes are numbered 1..{n}",
                                    tuple(loc) + ("edges", k))
    pinning = graph.pinning if graph.pinning is not None else [0.0] * n
    if len(pinning) != n:
        raise anchors.error(f"pinning has {len(pinning)} entries for {n} arms", tuple(loc) + ("pinning",))
    try:
        return Topology.from_edges(n, [(e.source, e.receiver, e.weight) for e in graph.edges], pinning)
    except ValidationError as e:
        raise anchors.error(e.errors()[0]["msg"], loc) from None


def _check_timing(scenario: ScenarioFile, anchors: _Anchors) -> None:
    timing = scenario.timing
    if timing.t_end <= timing.t0:
        raise anchors.error("timing: t_end must be greater than t0", ("timing", "t_end"))
    if timing.dt <= 0 or timing.control_period <= 0:
        raise anchors.error("timing: dt and control_period must be > 0", ("timing",))
    substeps = timing.control_period / timing.dt
    if abs(substeps - round(substeps)) > _TIME_EPS * max(substeps, 1.0) or round(substeps) < 1:
        raise anchors.error(f"timing: dt={timing.dt} does not divide control_period={timing.control_period}",
                            ("timing", "dt"))
    ticks = (timing.t_end - timing.t0) / timing.control_period
    if abs(ticks - round(ticks)) > 1e-6:
        raise anchors.error("timing: the horizon must be a whole number of control periods", ("timing", "t_end"))
    if timing.estimator_substeps < 1:
        raise anchors.error("timing: estimator_substeps must be >= 1", ("timing", "estimator_substeps"))
    hold = scenario.disturbance.hold
    if hold is not None:
        ratio = hold / timing.dt
        if hold <= 0 or abs(ratio - round(ratio)) > 1e-9 * max(ratio, 1.0):
            raise anchors.error("disturbance: hold must be a positive multiple of dt",
                                ("disturbance", "hold"))
    if scenario.disturbance.bound < 0:
        raise anchors.error("disturbance: bound must be >= 0", ("disturbance", "bound"))
    if scenario.estimator.smoothing is not None and scenario.estimator.smoothing <= 0:
        raise anchors.error("estimator: smoothing must be > 0", ("estimator", "smoothing"))


def _check_hypotheses(config: ScenarioConfig, anchors: _Anchors) -> None:
    """Warnings for the hypotheses a run may deliberately violate; a pinned run with a
    nonpositive estimator margin is rejected."""
    bound = config.disturbance.bound
    for index, arm in enumerate(config.arms, start=1):
        kr = arm.gains.kr_min_eig
        if kr < bound:
            logger.warning(f"Arm {index} ({arm.name}): lambda_min(Kr) = {kr:g} is below the disturbance "
                           f"bound {bound:g}; disturbance rejection is not guaranteed")

    leader = config.build_leader()
    if config.estimator.mode == "pinned":
        declared = leader.declared_bounds
        numeric = leader.derivative_sups(config.timing.t0, config.timing.t_end)
        for k, (d, s) in enumerate(zip(declared, numeric), start=1):
            if s > d + 1e-9:
                logger.warning(f"Leader derivative {k} reaches {s:.6g}, above its declared bound {d:.6g}")
        for k, (beta, d) in enumerate(zip(config.estimator.betas, declared), start=1):
            if beta <= d:
                raise anchors.error(f"estimator: beta_{k} = {beta:g} must exceed the leader bound {d:.6g}",
                                    ("estimator", "betas"))
        reach = config.schedule.reachability()
        logger.info(f"Leader reachability per segment: {reach}")
        for k, topology in enumerate(config.schedule.topologies):
            missing = unreachable_nodes(topology)
            if missing:
                logger.warning(f"Segment {k}: arms {missing} are not reachable from the leader")
    else:
        for k, topology in enumerate(config.schedule.topologies):
            if not spanning_tree_exists(topology):
                logger.warning(f"Segment {k}: the graph has no spanning tree; estimates cannot agree")


def load_scenario_text(text: str, path: str = "<scenario>") -> ScenarioConfig:
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        problem = getattr(e, "problem", None) or str(e)
        raise ScenarioError(f"YAML syntax error: {problem}", path,
                            mark.line + 1 if mark else None, mark.column + 1 if mark else None) from None
    anchors = _Anchors(root, path)
    if not isinstance(data, dict):
        raise anchors.error("a scenario must be a mapping of keys")

    try:
        scenario = ScenarioFile.model_validate(data)
    except ValidationError as e:
        raise _translate(e, anchors) from None

    _check_timing(scenario, anchors)
    if not scenario.arms:
        raise anchors.error("at least one arm is required", ("arms",))
    arms = tuple(_build_arm(i, block, scenario, anchors) for i, block in enumerate(scenario.arms))
    n = len(arms)

    topo = scenario.topology
    if topo.segments is not None:
        if not topo.segments:
            raise anchors.error("segments must not be empty", ("topology", "segments"))
        if abs(topo.segments[0].start - scenario.timing.t0) > _TIME_EPS:
            raise anchors.error(f"the first segment must start at t0 = {scenario.timing.t0}",
                                ("topology", "segments", 0, "start"))
        topologies = [_build_topology(seg, n, ("topology", "segments", k), anchors)
                      for k, seg in enumerate(topo.segments)]
        try:
            schedule = TopologySchedule(starts=tuple(s.start for s in topo.segments), topologies=tuple(topologies))
        except ValidationError as e:
            raise anchors.error(e.errors()[0]["msg"], ("topology", "segments")) from None
    else:
        schedule = TopologySchedule.constant(_build_topology(topo, n, ("topology",), anchors), scenario.timing.t0)

    if scenario.estimator.mode == "pinned" and scenario.leader.kind == "none":
        raise anchors.error("pinned mode needs a leader (leader.kind is 'none')", ("leader", "kind"))
    if scenario.estimator.mode == "leaderless" and scenario.leader.kind != "none":
        logger.warning("Leaderless mode ignores the declared leader")

    config = ScenarioConfig(
        name=scenario.name,
        description=scenario.description,
        arms=arms,
        schedule=schedule,
        leader=scenario.leader,
        estimator=scenario.estimator,
        disturbance=scenario.disturbance,
        timing=scenario.timing,
        initial_sampling=scenario.initial_sampling,
        thresholds=scenario.thresholds,
        gravity=scenario.gravity,
        singular_threshold=scenario.singular_threshold,
        settle_tolerance=scenario.settle_tolerance,
        tail_window=scenario.tail_window,
    )
    _check_hypotheses(config, anchors)
    return config


def parse_scenario(path: Union[str, Path]) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioError(f"cannot read scenario: {e.strerror or e}", str(path)) from None
    config = load_scenario_text(text, str(path))
    logger.info(f"Loaded scenario '{config.name}' from {path}: {config.n_arms} arms, "
                f"{len(config.schedule.topologies)} topology segment(s), mode {config.estimator.mode}")
    return config


def _graph_dict(topology: Topology) -> dict:
    return {
        "edges": [{"from": s, "to": r, "weight": w} for s, r, w in topology.edges()],
        "pinning": list(topology.pinning),
    }


def _matrix(M) -> List[List[float]]:
    return [list(row) for row in M]


def scenario_to_dict(config: ScenarioConfig) -> dict:
    out: dict[str, Any] = {
        "name": config.name,
        "description": config.description,
        "gravity": config.gravity,
        "singular_threshold": config.singular_threshold,
        "settle_tolerance": config.settle_tolerance,
        "tail_window": config.tail_window,
        "timing": config.timing.model_dump(mode="json"),
        "estimator": config.estimator.model_dump(mode="json"),
        "leader": config.leader.model_dump(mode="json"),
    }
    schedule = config.schedule
    if schedule.is_static:
        out["topology"] = _graph_dict(schedule.topologies[0])
    else:
        out["topology"] = {"segments": [{"start": s, **_graph_dict(t)}
                                        for s, t in zip(schedule.starts, schedule.topologies)]}
    out["disturbance"] = config.disturbance.model_dump(mode="json")
    out["initial_sampling"] = config.initial_sampling.model_dump(mode="json")
    arms = []
    for arm in config.arms:
        m, g = arm.model, arm.gains
        entry: dict[str, Any] = {
            "name": arm.name,
            "masses": list(m.masses),
            "lengths": list(m.lengths),
            "com_offsets": list(m.com_offsets),
            "inertias": list(m.inertias),
            "gains": {"alpha": g.alpha, "Kx": _matrix(g.Kx), "Ks": _matrix(g.Ks),
                      "Kr": _matrix(g.Kr), "T": _matrix(g.T)},
            "subtask": arm.subtask.model_dump(mode="json", exclude_none=True),
        }
        if arm.initial is not None:
            entry["initial"] = arm.initial.model_dump(mode="json")
        arms.append(entry)
    out["arms"] = arms
    out["thresholds"] = config.thresholds.model_dump(mode="json", exclude_none=True)
    return out


def dump_scenario(config: ScenarioConfig) -> str:
    return yaml.safe_dump(scenario_to_dict(config), sort_keys=False, default_flow_style=None)
