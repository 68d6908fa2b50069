"""
Distributed controller-estimator algorithm for one follower arm: the sliding-mode
leader estimator, the auxiliary joint references built from the estimates, the
adaptive torque law and the parameter update law.
"""

from dataclasses import dataclass
import logging
from typing import TYPE_CHECKING, Literal, Mapping, Optional, Sequence, Tuple

import numpy as np
from pydantic import ConfigDict, PrivateAttr, field_validator, model_validator

from core import arm_model as am
from core.arm_model import ManipulatorModel
from core.errors import NonpositiveMargin
from core.graph_topology import Topology
from core.leader import LeaderTrajectory
from utils.model_utils import CachedArraysModel

if TYPE_CHECKING:
    from core.subtask_factory import SubtaskFunction

logger = logging.getLogger(f"dcea.{__name__}")

ZETA_DIM = 3 * am.TASK_DIM
FD_STEP = 1e-6

EstimatorMode = Literal["pinned", "leaderless"]


def sgn(z: np.ndarray, smoothing: Optional[float] = None) -> np.ndarray:
    """Elementwise sign with sgn(0) = 0, or tanh(z / eps) when smoothing is set."""
    if smoothing is None:
        return np.sign(z)
    return np.tanh(np.asarray(z) / smoothing)


@dataclass
class EstimatorState:
    zeta: np.ndarray
    theta_hat: np.ndarray

    def __post_init__(self):
        self.zeta = np.asarray(self.zeta, dtype=float)
        self.theta_hat = np.asarray(self.theta_hat, dtype=float)
        if self.zeta.shape != (ZETA_DIM,):
            raise ValueError(f"zeta must have {ZETA_DIM} entries, got {self.zeta.size}")

    @property
    def x_hat(self) -> np.ndarray:
        return self.zeta[0:2]

    @property
    def v_hat(self) -> np.ndarray:
        return self.zeta[2:4]

    @property
    def a_hat(self) -> np.ndarray:
        return self.zeta[4:6]


Matrix = Tuple[Tuple[float, ...], ...]


def _pd_min_eig(M: np.ndarray) -> float:
    return float(np.min(np.linalg.eigvalsh(0.5 * (M + M.T))))


class ControlGains(CachedArraysModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha: float
    Kx: Matrix
    Ks: Matrix
    Kr: Matrix
    T: Matrix
    betas: Tuple[float, float, float]

    _Kx: np.ndarray = PrivateAttr()
    _Ks: np.ndarray = PrivateAttr()
    _Kr: np.ndarray = PrivateAttr()
    _T: np.ndarray = PrivateAttr()
    _beta_vec: np.ndarray = PrivateAttr()

    @field_validator("Kx", "Ks", "Kr", "T")
    @classmethod
    def _square(cls, v: Matrix) -> Matrix:
        n = len(v)
        if n == 0 or any(len(row) != n for row in v):
            raise ValueError("gain matrix must be square and non-empty")
        return v

    @model_validator(mode="after")
    def _check_positive(self) -> "ControlGains":
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if any(b <= 0 for b in self.betas):
            raise ValueError("betas must be > 0")
        self._Kx = np.asarray(self.Kx, dtype=float)
        self._Ks = np.asarray(self.Ks, dtype=float)
        self._Kr = np.asarray(self.Kr, dtype=float)
        self._T = np.asarray(self.T, dtype=float)
        if self._Kx.shape != (am.TASK_DIM, am.TASK_DIM):
            raise ValueError(f"Kx must be {am.TASK_DIM}x{am.TASK_DIM}")
        for name, M in (("Kx", self._Kx), ("Ks", self._Ks), ("Kr", self._Kr)):
            if _pd_min_eig(M) <= 0:
                raise ValueError(f"{name} must be positive definite")
        if np.any(self._T != np.diag(np.diag(self._T))) or np.any(np.diag(self._T) <= 0):
            raise ValueError("T must be diagonal positive definite")
        self._beta_vec = np.repeat(np.asarray(self.betas, dtype=float), am.TASK_DIM)
        return self

    def check_dims(self, model: ManipulatorModel) -> None:
        p, n_theta = model.dof, model.parameter_count
        if self._Ks.shape != (p, p):
            raise ValueError(f"Ks is {self._Ks.shape[0]}x{self._Ks.shape[1]}, arm has dof {p}")
        if self._Kr.shape != (p, p):
            raise ValueError(f"Kr is {self._Kr.shape[0]}x{self._Kr.shape[1]}, arm has dof {p}")
        if self._T.shape != (n_theta, n_theta):
            raise ValueError(f"T is {self._T.shape[0]}x{self._T.shape[1]}, parameter vector has {n_theta} entries")

    @property
    def Kx_array(self) -> np.ndarray:
        return self._Kx

    @property
    def Ks_array(self) -> np.ndarray:
        return self._Ks

    @property
    def Kr_array(self) -> np.ndarray:
        return self._Kr

    @property
    def T_array(self) -> np.ndarray:
        return self._T

    @property
    def beta_vector(self) -> np.ndarray:
        """(b1, b1, b2, b2, b3, b3), i.e. diag(b1, b2, b3) kron I_2."""
        return self._beta_vec

    @property
    def kr_min_eig(self) -> float:
        return _pd_min_eig(self._Kr)


# ---------------------------------------------------------------- estimator

def sigma_pair(zeta_i: np.ndarray, zeta_j: np.ndarray) -> np.ndarray:
    return np.asarray(zeta_i, dtype=float) - np.asarray(zeta_j, dtype=float)


def sigma_leader(zeta_i: np.ndarray, leader: LeaderTrajectory, t: float) -> np.ndarray:
    return np.asarray(zeta_i, dtype=float) - leader.stack(t)


def local_estimator_rate(zeta_i: np.ndarray,
                         neighbor_zetas: Mapping[int, Tuple[float, np.ndarray]],
                         betas: Sequence[float],
                         pin_weight: float = 0.0,
                         leader_stack: Optional[np.ndarray] = None,
                         smoothing: Optional[float] = None) -> np.ndarray:
    """Rate of node i computed from what node i can see: its own zeta, the
    (weight, zeta_j) pairs of its neighbours and, when pinned, the leader stack."""
    zeta_i = np.asarray(zeta_i, dtype=float)
    arg = np.zeros(ZETA_DIM)
    for weight, zeta_j in neighbor_zetas.values():
        arg += weight * sigma_pair(zeta_i, zeta_j)
    if leader_stack is not None and pin_weight > 0:
        arg += pin_weight * (zeta_i - leader_stack)
    beta_vec = np.repeat(np.asarray(betas, dtype=float), am.TASK_DIM)
    return -beta_vec * sgn(arg, smoothing)


def estimator_rate(i: int, all_zetas: np.ndarray, topology: Topology,
                   leader: Optional[LeaderTrajectory], t: float, mode: EstimatorMode,
                   betas: Sequence[float], smoothing: Optional[float] = None) -> np.ndarray:
    """zeta_i rate; i is 0-based. Leaderless mode drops the pinning term."""
    all_zetas = np.asarray(all_zetas, dtype=float)
    neighbors = {j: (float(topology.adjacency_array[i, j]), all_zetas[j]) for j in topology.neighbors(i)}
    leader_stack = None
    pin_weight = 0.0
    if mode == "pinned" and leader is not None:
        pin_weight = float(topology.pinning_array[i])
        if pin_weight > 0:
            leader_stack = leader.stack(t)
    return local_estimator_rate(all_zetas[i], neighbors, betas, pin_weight, leader_stack, smoothing)


def network_estimator_rate(zetas: np.ndarray, topology: Topology, leader_stack: Optional[np.ndarray],
                           betas: Sequence[float], smoothing: Optional[float] = None) -> np.ndarray:
    """All n rates at once, shape (n, 6). Row i of the sgn argument is sum_j eps_ij (zeta_i - zeta_j),
    so node i still sees only its neighbours. `leader_stack=None` is leaderless mode."""
    Z = np.asarray(zetas, dtype=float)
    arg = np.einsum("ij,ijk->ik", topology.adjacency_array, Z[:, None, :] - Z[None, :, :])
    if leader_stack is not None:
        arg = arg + topology.pinning_array[:, None] * (Z - leader_stack[None, :])
    beta_vec = np.repeat(np.asarray(betas, dtype=float), am.TASK_DIM)
    return -beta_vec[None, :] * sgn(arg, smoothing)


def settle_time_bound(initial_zetas: np.ndarray, leader: LeaderTrajectory, t0: float,
                      betas: Sequence[float]) -> float:
    """max(t_f1, t_f2, t_f3): the finite-time estimation bound of the pinned estimator."""
    Z = np.atleast_2d(np.asarray(initial_zetas, dtype=float))
    ref = leader.stack(t0)
    bounds = leader.declared_bounds
    t_f = t0
    for k in range(3):
        margin = betas[k] - bounds[k]
        if margin <= 0:
            raise NonpositiveMargin(k + 1, betas[k], bounds[k])
        block = slice(2 * k, 2 * k + 2)
        err = float(np.max(np.abs(Z[:, block] - ref[block])))
        t_f = max(t_f, t0 + err / margin)
    return t_f


# ------------------------------------------------------------ references

def _references(model: ManipulatorModel, q, qdot, x, xdot, x_ref, v_ref, a_ref,
                alpha: float, subtask: Optional["SubtaskFunction"], t: float) -> Tuple[np.ndarray, np.ndarray]:
    J = am.jacobian(model, q)
    J_sharp = am.j_sharp(model, q)
    J_sharp_dot = am.j_sharp_dot(model, q, qdot)
    w = v_ref - alpha * (x - x_ref)
    w_dot = a_ref - alpha * (xdot - v_ref)
    qd_r = J_sharp @ w
    qdd_r = J_sharp_dot @ w + J_sharp @ w_dot
    if model.is_redundant and subtask is not None:
        phi = subtask.phi(t, q)
        phi_dot = subtask.rate(t, q, qdot)
        P = np.eye(model.dof) - J_sharp @ J
        P_dot = -(J_sharp_dot @ J + J_sharp @ am.jacobian_dot(model, q, qdot))
        qd_r = qd_r + P @ phi
        qdd_r = qdd_r + P_dot @ phi + P @ phi_dot
    return qd_r, qdd_r


def aux_velocity(model: ManipulatorModel, q, x, est: EstimatorState, alpha: float,
                 phi: Optional[np.ndarray] = None) -> np.ndarray:
    J_sharp = am.j_sharp(model, q)
    qd_r = J_sharp @ (est.v_hat - alpha * (np.asarray(x) - est.x_hat))
    if model.is_redundant and phi is not None:
        qd_r = qd_r + (np.eye(model.dof) - J_sharp @ am.jacobian(model, q)) @ np.asarray(phi, dtype=float)
    return qd_r


def aux_acceleration(model: ManipulatorModel, q, qdot, x, xdot, est: EstimatorState, alpha: float,
                     subtask: Optional["SubtaskFunction"], t: float) -> np.ndarray:
    return _references(model, q, qdot, np.asarray(x), np.asarray(xdot),
                       est.x_hat, est.v_hat, est.a_hat, alpha, subtask, t)[1]


def reference_variables(model: ManipulatorModel, q, qdot, leader: LeaderTrajectory, t: float,
                        alpha: float, subtask: Optional["SubtaskFunction"] = None
                        ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(qdot_r, qddot_r, s) formed from the true leader instead of the estimates."""
    q = np.asarray(q, dtype=float)
    qdot = np.asarray(qdot, dtype=float)
    x = am.forward_kinematics(model, q)
    xdot = am.jacobian(model, q) @ qdot
    qd_r, qdd_r = _references(model, q, qdot, x, xdot, leader.position(t), leader.velocity(t),
                              leader.acceleration(t), alpha, subtask, t)
    return qd_r, qdd_r, qdot - qd_r


@dataclass
class AuxiliaryReference:
    qdot_r: np.ndarray
    qddot_r: np.ndarray
    s_hat: np.ndarray
    Y: np.ndarray


def auxiliary_reference(model: ManipulatorModel, q, qdot, est: EstimatorState, gains: ControlGains,
                        subtask: Optional["SubtaskFunction"], t: float) -> AuxiliaryReference:
    q = np.asarray(q, dtype=float)
    qdot = np.asarray(qdot, dtype=float)
    x = am.forward_kinematics(model, q)
    xdot = am.jacobian(model, q) @ qdot
    qd_r, qdd_r = _references(model, q, qdot, x, xdot, est.x_hat, est.v_hat, est.a_hat,
                              gains.alpha, subtask, t)
    Y = am.regressor(model, q, qdot, qd_r, qdd_r)
    return AuxiliaryReference(qdot_r=qd_r, qddot_r=qdd_r, s_hat=qdot - qd_r, Y=Y)


def control_torque(model: ManipulatorModel, q, qdot, est: EstimatorState, gains: ControlGains, t: float,
                   subtask: Optional["SubtaskFunction"] = None, aux: Optional[AuxiliaryReference] = None,
                   smoothing: Optional[float] = None) -> np.ndarray:
    """u = Y theta_hat - J^T Kx J s_hat - Ks s_hat - Kr sgn(s_hat). Pass `aux` to reuse
    references already formed at this tick."""
    if aux is None:
        aux = auxiliary_reference(model, q, qdot, est, gains, subtask, t)
    J = am.jacobian(model, q)
    s_hat = aux.s_hat
    return (aux.Y @ est.theta_hat
            - J.T @ gains.Kx_array @ J @ s_hat
            - gains.Ks_array @ s_hat
            - gains.Kr_array @ sgn(s_hat, smoothing))


def theta_hat_rate(model: ManipulatorModel, q, qdot, est: EstimatorState, gains: ControlGains, t: float,
                   subtask: Optional["SubtaskFunction"] = None,
                   aux: Optional[AuxiliaryReference] = None) -> np.ndarray:
    if aux is None:
        aux = auxiliary_reference(model, q, qdot, est, gains, subtask, t)
    return -gains.T_array @ aux.Y.T @ aux.s_hat


# --------------------------------------------------------------- subtasks

def subtask_error(model: ManipulatorModel, q, qdot, phi) -> np.ndarray:
    am.require_redundant(model)
    P = am.null_projector(model, q)
    return P @ (np.asarray(qdot, dtype=float) - np.asarray(phi, dtype=float))


def manipulability_gradient(model: ManipulatorModel, q, h: float = FD_STEP) -> np.ndarray:
    """Central-difference gradient of det(J J^T)."""
    am.require_redundant(model)
    q = np.asarray(q, dtype=float)
    grad = np.empty(model.dof)
    for k in range(model.dof):
        e = np.zeros(model.dof)
        e[k] = h
        grad[k] = (am.manipulability(model, q + e) - am.manipulability(model, q - e)) / (2 * h)
    return grad


def manipulability_gradient_analytic(model: ManipulatorModel, q) -> np.ndarray:
    am.require_redundant(model)
    J = am.jacobian(model, q)
    A = J @ J.T
    A_inv = np.linalg.inv(A)
    det_A = np.linalg.det(A)
    partials = am.jacobian_partials(model, q)
    return np.array([det_A * np.trace(A_inv @ (dJ @ J.T + J @ dJ.T)) for dJ in partials])


# ------------------------------------------------------ analysis quantities

def cascade_residual(model: ManipulatorModel, q, qdot, leader: LeaderTrajectory, t: float,
                     alpha: float, subtask: Optional["SubtaskFunction"] = None) -> np.ndarray:
    """(de/dt + alpha e) - J s, identically zero for any state."""
    q = np.asarray(q, dtype=float)
    qdot = np.asarray(qdot, dtype=float)
    J = am.jacobian(model, q)
    e = am.forward_kinematics(model, q) - leader.position(t)
    e_dot = J @ qdot - leader.velocity(t)
    _, _, s = reference_variables(model, q, qdot, leader, t, alpha, subtask)
    return e_dot + alpha * e - J @ s


def closed_loop_residual(model: ManipulatorModel, q, qdot, est: EstimatorState, gains: ControlGains,
                         aux: AuxiliaryReference, leader: LeaderTrajectory,
                         subtask: Optional["SubtaskFunction"], t: float,
                         smoothing: Optional[float] = None) -> np.ndarray:
    """f~_i: what the estimation error injects into the closed loop; zero once zeta_i
    matches the leader."""
    qd_r, qdd_r, s = reference_variables(model, q, qdot, leader, t, gains.alpha, subtask)
    qd_tilde = aux.qdot_r - qd_r
    qdd_tilde = aux.qddot_r - qdd_r
    s_tilde = aux.s_hat - s
    J = am.jacobian(model, q)
    th = est.theta_hat
    zeros = np.zeros(model.dof)
    inertial = am.regressor(model, q, qdot, qd_tilde, qdd_tilde) @ th - am.regressor(model, q, qdot, zeros, zeros) @ th
    return (inertial
            - J.T @ gains.Kx_array @ J @ s_tilde
            - gains.Ks_array @ s_tilde
            - gains.Kr_array @ (sgn(aux.s_hat, smoothing) - sgn(s, smoothing)))
