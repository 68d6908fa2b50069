"""
Invariant suite behind `main.py verify`: arm-model identities, the null-space
projector identities, Moore-Penrose conditions, the regressor oracle, derivative
cross-checks, graph oracles and estimator locality.

Each property returns a PropertyResult carrying the number of checks it ran and
its worst residual.
"""

import itertools
from collections import deque
import logging
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel

from core import arm_model as am
from core import dcea
from core.arm_model import ManipulatorModel
from core.errors import SingularJacobian
from core.graph_topology import Topology, laplacian, leader_reachable, spanning_tree_exists
from core.leader import EllipseLeader

logger = logging.getLogger(f"dcea.{__name__}")

# physical parameters of the seven reference arms: masses, lengths, com offsets, inertias
REFERENCE_ARMS: Tuple[Tuple[Tuple[float, ...], ...], ...] = (
    ((0.8, 0.6), (1.4, 0.9), (0.8, 0.45), (6.0, 3.0)),
    ((1.0, 0.8), (1.2, 1.1), (0.7, 0.5), (2.0, 3.0)),
    ((0.5, 0.8), (1.1, 1.3), (0.4, 0.6), (5.0, 3.0)),
    ((1.5, 0.8), (1.1, 1.2), (0.6, 0.6), (5.0, 4.0)),
    ((2.3, 0.8), (1.0, 1.2), (0.4, 0.7), (5.0, 3.0)),
    ((0.8, 1.2, 1.4), (0.8, 1.1, 1.4), (0.4, 0.5, 0.7), (4.0, 6.0, 5.0)),
    ((1.8, 1.2, 1.4), (1.0, 1.1, 1.2), (0.6, 0.6, 0.6), (5.0, 6.0, 5.0)),
)

# reference network: edges as (source, receiver), leader pinned into arms 1, 3, 5, 7
REFERENCE_EDGES = ((1, 2), (3, 2), (1, 4), (3, 4), (5, 6))
REFERENCE_PINNING = (1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0)
REFERENCE_LAPLACIAN = np.array([
    [0, 0, 0, 0, 0, 0, 0],
    [-1, 2, -1, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0],
    [-1, 0, -1, 2, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, -1, 1, 0],
    [0, 0, 0, 0, 0, 0, 0],
], dtype=float)

MIN_SIGMA = 0.05


class PropertyResult(BaseModel):
    name: str
    checks: int
    worst: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name} ({self.checks} checks, worst residual {self.worst:.3e})"


def reference_models(gravity: float = 9.81) -> List[ManipulatorModel]:
    return [ManipulatorModel(masses=m, lengths=l, com_offsets=r, inertias=i, gravity=gravity)
            for m, l, r, i in REFERENCE_ARMS]


def reference_topology() -> Topology:
    return Topology.from_edges(7, [(s, r, 1.0) for s, r in REFERENCE_EDGES], REFERENCE_PINNING)


def sample_regular_q(model: ManipulatorModel, rng: np.random.Generator, min_sigma: float = MIN_SIGMA) -> np.ndarray:
    """Uniform q in [-pi, pi)^p, redrawn until J is comfortably full rank."""
    while True:
        q = rng.uniform(-np.pi, np.pi, size=model.dof)
        if np.linalg.svd(am.jacobian(model, q), compute_uv=False)[-1] >= min_sigma:
            return q


class _Tally:
    def __init__(self, name: str, tolerance: float):
        self.name = name
        self.tolerance = tolerance
        self.checks = 0
        self.worst = 0.0
        self.failures: List[str] = []

    def residual(self, value: float, context: str = "") -> None:
        self.checks += 1
        value = float(value)
        self.worst = max(self.worst, value) if np.isfinite(value) else np.inf
        if not value < self.tolerance:
            self.failures.append(context or f"residual {value:.3e}")

    def condition(self, ok: bool, context: str) -> None:
        self.checks += 1
        if not ok:
            self.worst = max(self.worst, 1.0)
            self.failures.append(context)

    def result(self) -> PropertyResult:
        detail = "; ".join(self.failures[:3])
        return PropertyResult(name=self.name, checks=self.checks, worst=self.worst,
                              passed=not self.failures, detail=detail)


# ------------------------------------------------------------- arm model

def check_inertia(models, rng, samples) -> PropertyResult:
    """z^T H z > 0 and H = H^T; the residual is the asymmetry, failures also cover
    nonpositive quadratic forms."""
    tally = _Tally("inertia_positive_definite", 1e-12)
    for k, model in enumerate(models, start=1):
        for _ in range(samples):
            q = rng.uniform(-np.pi, np.pi, size=model.dof)
            z = rng.standard_normal(model.dof)
            z /= np.linalg.norm(z)
            H = am.inertia_matrix(model, q)
            tally.residual(np.max(np.abs(H - H.T)), f"arm {k}: H not symmetric")
            tally.condition(z @ H @ z > 0, f"arm {k}: z^T H z <= 0 at q={q.tolist()}")
    return tally.result()


def check_skew_symmetry(models, rng, samples) -> PropertyResult:
    tally = _Tally("skew_symmetry", 1e-9)
    for k, model in enumerate(models, start=1):
        for _ in range(samples):
            q = rng.uniform(-np.pi, np.pi, size=model.dof)
            qdot = rng.uniform(-5, 5, size=model.dof)
            z = rng.standard_normal(model.dof)
            N = am.inertia_matrix_dot(model, q, qdot) - 2 * am.coriolis_matrix(model, q, qdot)
            tally.residual(abs(z @ N @ z), f"arm {k}: z^T (Hdot - 2C) z != 0")
    return tally.result()


def check_regressor(models, rng, samples) -> PropertyResult:
    tally = _Tally("regressor_identity", 1e-9)
    for k, model in enumerate(models, start=1):
        theta = model.theta_true
        for _ in range(samples):
            q, qdot, y, x = (rng.uniform(-3, 3, size=model.dof) for _ in range(4))
            expected = (am.inertia_matrix(model, q) @ x + am.coriolis_matrix(model, q, qdot) @ y
                        + am.gravity_vector(model, q))
            tally.residual(np.linalg.norm(am.regressor(model, q, qdot, y, x) @ theta - expected),
                           f"arm {k}: Y theta != H x + C y + g")
    return tally.result()


def check_null_projector(models, rng, samples) -> PropertyResult:
    tally = _Tally("null_projector_identities", 1e-10)
    for k, model in enumerate(models, start=1):
        for _ in range(samples):
            q = sample_regular_q(model, rng)
            P = am.null_projector(model, q)
            J = am.jacobian(model, q)
            J_sharp = am.j_sharp(model, q)
            if not model.is_redundant:
                tally.residual(np.max(np.abs(P)), f"arm {k}: projector not zero on a square arm")
                continue
            tally.residual(np.max(np.abs(J @ P)), f"arm {k}: J P != 0")
            tally.residual(np.max(np.abs(P @ J_sharp)), f"arm {k}: P J# != 0")
            tally.residual(np.max(np.abs(P @ P - P)), f"arm {k}: P P != P")
    return tally.result()


def check_moore_penrose(models, rng, samples) -> PropertyResult:
    tally = _Tally("moore_penrose", 1e-10)
    for k, model in enumerate(models, start=1):
        for _ in range(samples):
            q = sample_regular_q(model, rng)
            J = am.jacobian(model, q)
            Js = am.j_sharp(model, q)
            tally.residual(np.max(np.abs(J @ Js - np.eye(am.TASK_DIM))), f"arm {k}: J J# != I")
            tally.residual(np.max(np.abs(J @ Js @ J - J)), f"arm {k}: J J# J != J")
            tally.residual(np.max(np.abs(Js @ J @ Js - Js)), f"arm {k}: J# J J# != J#")
            tally.residual(np.max(np.abs(Js @ J - (Js @ J).T)), f"arm {k}: J# J not symmetric")
    return tally.result()


def check_aux_velocity(models, rng, samples) -> PropertyResult:
    """J qdot_r = v_hat - alpha (x - x_hat), whatever the subtask field."""
    tally = _Tally("aux_velocity_task_map", 1e-9)
    alpha = 3.0
    for k, model in enumerate(models, start=1):
        for _ in range(samples):
            q = sample_regular_q(model, rng)
            x = am.forward_kinematics(model, q)
            est = dcea.EstimatorState(rng.uniform(-5, 5, size=dcea.ZETA_DIM), np.zeros(model.parameter_count))
            phi = rng.uniform(-5, 5, size=model.dof)
            qd_r = dcea.aux_velocity(model, q, x, est, alpha, phi)
            target = est.v_hat - alpha * (x - est.x_hat)
            tally.residual(np.max(np.abs(am.jacobian(model, q) @ qd_r - target)), f"arm {k}: J qdot_r mismatch")
    return tally.result()


def check_derivatives(models, rng, samples, h: float = 1e-6) -> PropertyResult:
    """Analytic J, dJ/dt, dJ#/dt and the manipulability gradient against central differences."""
    tally = _Tally("derivative_consistency", 1e-5)
    for k, model in enumerate(models, start=1):
        for _ in range(samples):
            q = sample_regular_q(model, rng, min_sigma=0.2)
            qdot = rng.uniform(-2, 2, size=model.dof)
            J_fd = np.column_stack([
                (am.forward_kinematics(model, q + h * e) - am.forward_kinematics(model, q - h * e)) / (2 * h)
                for e in np.eye(model.dof)
            ])
            tally.residual(np.max(np.abs(am.jacobian(model, q) - J_fd)), f"arm {k}: J vs FD")
            Jd_fd = (am.jacobian(model, q + qdot * h) - am.jacobian(model, q - qdot * h)) / (2 * h)
            tally.residual(np.max(np.abs(am.jacobian_dot(model, q, qdot) - Jd_fd)), f"arm {k}: Jdot vs FD")
            Jsd_fd = (am.j_sharp(model, q + qdot * h) - am.j_sharp(model, q - qdot * h)) / (2 * h)
            tally.residual(np.max(np.abs(am.j_sharp_dot(model, q, qdot) - Jsd_fd)), f"arm {k}: J# dot vs FD")
            if model.is_redundant:
                fd = dcea.manipulability_gradient(model, q)
                exact = dcea.manipulability_gradient_analytic(model, q)
                tally.residual(np.max(np.abs(fd - exact)) / max(1.0, np.max(np.abs(exact))),
                               f"arm {k}: manipulability gradient")
    return tally.result()


def check_singularity_guard(models, rng, samples) -> PropertyResult:
    """Straight two-link arms must raise SingularJacobian instead of inverting."""
    tally = _Tally("singularity_guard", 0.5)
    for k, model in enumerate(models, start=1):
        if model.is_redundant:
            continue
        for _ in range(max(samples // 100, 1)):
            q = np.array([rng.uniform(-np.pi, np.pi), 0.0])
            try:
                am.j_sharp(model, q)
                tally.condition(False, f"arm {k}: no SingularJacobian at q2 = 0")
            except SingularJacobian:
                tally.condition(True, "")
    return tally.result()


# ----------------------------------------------------------------- graphs

def reach_from(adjacency: np.ndarray, sources) -> set:
    """Nodes reached by breadth-first search from `sources` along information flow
    (j -> i whenever i reads j). Independent of networkx."""
    A = np.asarray(adjacency) > 0
    seen = set(int(s) for s in sources)
    frontier = deque(seen)
    while frontier:
        j = frontier.popleft()
        for i in np.flatnonzero(A[:, j]):
            if int(i) not in seen:
                seen.add(int(i))
                frontier.append(int(i))
    return seen


def brute_leader_reachable(adjacency: np.ndarray, pinning: np.ndarray) -> bool:
    return len(reach_from(adjacency, np.flatnonzero(np.asarray(pinning) > 0))) == adjacency.shape[0]


def brute_spanning_tree(adjacency: np.ndarray) -> bool:
    n = adjacency.shape[0]
    return any(len(reach_from(adjacency, [r])) == n for r in range(n))


def _slots(n: int) -> List[Tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(n) if i != j]


def _adjacency_of(mask: int, n: int) -> np.ndarray:
    A = np.zeros((n, n))
    for k, (i, j) in enumerate(_slots(n)):
        A[i, j] = float((mask >> k) & 1)
    return A


def canonical_masks(n: int) -> np.ndarray:
    """One bitmask per isomorphism class of binary digraphs on n nodes: the smallest
    mask over every relabeling."""
    slots = _slots(n)
    index = {s: k for k, s in enumerate(slots)}
    masks = np.arange(1 << len(slots), dtype=np.int32)
    canonical = masks.copy()
    for perm in itertools.permutations(range(n)):
        relabeled = np.zeros_like(masks)
        for k, (i, j) in enumerate(slots):
            relabeled |= ((masks >> k) & 1) << index[(perm[i], perm[j])]
        np.minimum(canonical, relabeled, out=canonical)
    return np.unique(canonical)


def _compare(tally: "_Tally", A: np.ndarray, pinnings: List[np.ndarray]) -> None:
    n = A.shape[0]
    adjacency = tuple(map(tuple, A))
    tally.condition(spanning_tree_exists(Topology(adjacency=adjacency, pinning=(0.0,) * n)) == brute_spanning_tree(A),
                    f"spanning tree mismatch for A={A.tolist()}")
    reach = [reach_from(A, [r]) for r in range(n)]
    for b in pinnings:
        expected = len(set().union(*(reach[r] for r in np.flatnonzero(b)))) == n
        tally.condition(leader_reachable(Topology(adjacency=adjacency, pinning=tuple(b))) == expected,
                        f"leader reachability mismatch for A={A.tolist()}, b={b.tolist()}")


def check_graph_oracles(rng, max_nodes: int = 5, labeled_max_nodes: int = 4,
                        relabelings: int = 200) -> PropertyResult:
    """Exhaustive comparison of spanning_tree_exists and leader_reachable (every pinning
    vector) against breadth-first search. Every labeled digraph is checked up to
    `labeled_max_nodes`; above that one digraph per isomorphism class, plus random
    relabelings to show neither function depends on node labels."""
    tally = _Tally("graph_oracles", 0.5)
    for n in range(1, max_nodes + 1):
        pinnings = [np.array(p) for p in itertools.product((0.0, 1.0), repeat=n)]
        if n <= labeled_max_nodes:
            masks = range(1 << len(_slots(n)))
        else:
            masks = canonical_masks(n)
            logger.debug(f"{len(masks)} isomorphism classes of digraphs on {n} nodes")
        for mask in masks:
            _compare(tally, _adjacency_of(int(mask), n), pinnings)
        if n > labeled_max_nodes:
            for _ in range(relabelings):
                A = _adjacency_of(int(rng.integers(1 << len(_slots(n)))), n)
                b = rng.integers(0, 2, size=n).astype(float)
                perm = rng.permutation(n)
                original = Topology(adjacency=tuple(map(tuple, A)), pinning=tuple(b))
                relabeled = Topology(adjacency=tuple(map(tuple, A[np.ix_(perm, perm)])), pinning=tuple(b[perm]))
                tally.condition(spanning_tree_exists(original) == spanning_tree_exists(relabeled),
                                f"spanning_tree_exists depends on labels for A={A.tolist()}")
                tally.condition(leader_reachable(original) == leader_reachable(relabeled),
                                f"leader_reachable depends on labels for A={A.tolist()}, b={b.tolist()}")
    L = laplacian(reference_topology())
    tally.condition(np.array_equal(L, REFERENCE_LAPLACIAN), "reference Laplacian differs")
    return tally.result()


# -------------------------------------------------------------- estimator

def check_estimator_locality(rng, samples, n: int = 6) -> PropertyResult:
    """The rate of node i ignores every node it does not read, the vectorised rate
    matches the per-node rate and no component exceeds its beta."""
    tally = _Tally("estimator_locality", 1e-12)
    leader = EllipseLeader()
    betas = (4.0, 7.0, 21.0)
    beta_vec = np.repeat(betas, am.TASK_DIM)
    for _ in range(samples):
        A = (rng.random((n, n)) < 0.35).astype(float) * rng.uniform(0.5, 2.0, size=(n, n))
        np.fill_diagonal(A, 0.0)
        b = (rng.random(n) < 0.4).astype(float)
        topology = Topology(adjacency=tuple(map(tuple, A)), pinning=tuple(b))
        Z = rng.uniform(-5, 5, size=(n, dcea.ZETA_DIM))
        t = float(rng.uniform(0, 10))
        vectorised = dcea.network_estimator_rate(Z, topology, leader.stack(t), betas)
        for i in range(n):
            rate = dcea.estimator_rate(i, Z, topology, leader, t, "pinned", betas)
            tally.residual(np.max(np.abs(rate - vectorised[i])), f"node {i + 1}: vectorised rate differs")
            tally.condition(bool(np.all(np.abs(rate) <= beta_vec + 1e-12)), f"node {i + 1}: rate exceeds beta")
            outsiders = [j for j in range(n) if j != i and A[i, j] == 0]
            if outsiders:
                Zp = Z.copy()
                Zp[outsiders] = rng.uniform(-50, 50, size=(len(outsiders), dcea.ZETA_DIM))
                perturbed = dcea.estimator_rate(i, Zp, topology, leader, t, "pinned", betas)
                tally.residual(np.max(np.abs(perturbed - rate)), f"node {i + 1}: reads a non-neighbour")
    return tally.result()


# ------------------------------------------------------------------ suite

def run_suite(samples: int = 1000, seed: int = 0, max_nodes: int = 5,
              report: Optional[Callable[[PropertyResult], None]] = None) -> List[PropertyResult]:
    rng = np.random.default_rng(seed)
    models = reference_models()
    steps: Dict[str, Callable[[], PropertyResult]] = {
        "inertia_positive_definite": lambda: check_inertia(models, rng, samples),
        "skew_symmetry": lambda: check_skew_symmetry(models, rng, samples),
        "regressor_identity": lambda: check_regressor(models, rng, samples),
        "null_projector_identities": lambda: check_null_projector(models, rng, samples),
        "moore_penrose": lambda: check_moore_penrose(models, rng, samples),
        "aux_velocity_task_map": lambda: check_aux_velocity(models, rng, max(samples // 10, 1)),
        "derivative_consistency": lambda: check_derivatives(models, rng, max(samples // 10, 1)),
        "singularity_guard": lambda: check_singularity_guard(models, rng, samples),
        "graph_oracles": lambda: check_graph_oracles(rng, max_nodes),
        "estimator_locality": lambda: check_estimator_locality(rng, max(samples // 10, 1)),
    }
    results = []
    for name, step in steps.items():
        logger.debug(f"Checking {name}")
        result = step()
        if not result.passed:
            logger.error(f"Property {name} failed: {result.detail}")
        if report is not None:
            report(result)
        results.append(result)
    return results
