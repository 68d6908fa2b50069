"""
Planar revolute-chain manipulators (2 or 3 links): dynamics, kinematics and the
linear parameterisation used by the adaptive controller.

Everything is expressed through the absolute link angles theta = S q, with S the
lower-triangular matrix of ones. In those coordinates the kinetic energy of a
planar chain is 1/2 * sum_ab M_ab cos(theta_a - theta_b) dtheta_a dtheta_b, where

    M_aa = I_a + m_a r_a^2 + l_a^2 * sum_{k>a} m_k      (delta_a)
    M_ab = l_a * pi_b,  a < b                           (kappa_ab)
    pi_b = m_b r_b + l_b * sum_{k>b} m_k                (first moment about joint b)

and the potential energy is g * sum_a pi_a sin(theta_a). The parameter vector is

    theta = (delta_1..delta_p, kappa_ab for a<b in lexicographic order, gamma_1..gamma_p)

with gamma_a = g * pi_a, i.e. 5 entries for two links and 9 for three.
"""

from dataclasses import dataclass
import logging
from typing import Tuple

import numpy as np
from pydantic import ConfigDict, PrivateAttr, model_validator

from core.errors import DimensionMismatch, NotRedundant, SingularJacobian
from utils.model_utils import CachedArraysModel

logger = logging.getLogger(f"dcea.{__name__}")

TASK_DIM = 2
SUPPORTED_DOF = (2, 3)
DEFAULT_SINGULAR_THRESHOLD = 1e-6


def parameter_count(dof: int) -> int:
    return 2 * dof + dof * (dof - 1) // 2


def _coupling_pairs(dof: int) -> list[Tuple[int, int]]:
    return [(a, b) for a in range(dof) for b in range(a + 1, dof)]


class ManipulatorModel(CachedArraysModel):
    """Physical description of one planar arm. Link k rotates about joint k; r_k is
    measured from that joint, I_k about the link's centre of mass."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    masses: Tuple[float, ...]
    lengths: Tuple[float, ...]
    com_offsets: Tuple[float, ...]
    inertias: Tuple[float, ...]
    gravity: float = 9.81
    singular_threshold: float = DEFAULT_SINGULAR_THRESHOLD

    _lengths: np.ndarray = PrivateAttr()
    _moments: np.ndarray = PrivateAttr()
    _coupling: np.ndarray = PrivateAttr()
    _tril: np.ndarray = PrivateAttr()
    _theta: np.ndarray = PrivateAttr()

    @model_validator(mode="after")
    def _check_physics(self) -> "ManipulatorModel":
        p = len(self.masses)
        if p not in SUPPORTED_DOF:
            raise ValueError(f"dof must be one of {SUPPORTED_DOF}, got {p}")
        for field_name in ("lengths", "com_offsets", "inertias"):
            if len(getattr(self, field_name)) != p:
                raise ValueError(f"{field_name} has {len(getattr(self, field_name))} entries, masses has {p}")
        if any(m <= 0 for m in self.masses):
            raise ValueError("masses must be > 0")
        if any(v <= 0 for v in self.lengths):
            raise ValueError("lengths must be > 0")
        for k, (r, l) in enumerate(zip(self.com_offsets, self.lengths)):
            if not 0 < r <= l:
                raise ValueError(f"com_offsets[{k}] = {r} must lie in (0, {l}]")
        if any(v < 0 for v in self.inertias):
            raise ValueError("inertias must be >= 0")
        if not np.isfinite(self.gravity) or self.gravity < 0:
            raise ValueError("gravity must be a finite magnitude >= 0")
        if self.singular_threshold <= 0:
            raise ValueError("singular_threshold must be > 0")
        return self

    def model_post_init(self, __context) -> None:
        p = self.dof
        if p not in SUPPORTED_DOF or any(len(getattr(self, f)) != p for f in ("lengths", "com_offsets", "inertias")):
            return  # rejected by _check_physics
        m = np.asarray(self.masses, dtype=float)
        l = np.asarray(self.lengths, dtype=float)
        r = np.asarray(self.com_offsets, dtype=float)
        inertia = np.asarray(self.inertias, dtype=float)
        tail_mass = np.array([m[a + 1:].sum() for a in range(p)])
        moments = m * r + l * tail_mass
        delta = inertia + m * r**2 + l**2 * tail_mass

        coupling = np.diag(delta)
        for a, b in _coupling_pairs(p):
            coupling[a, b] = coupling[b, a] = l[a] * moments[b]

        kappa = [l[a] * moments[b] for a, b in _coupling_pairs(p)]
        self._lengths = l
        self._moments = moments
        self._coupling = coupling
        self._tril = np.tril(np.ones((p, p)))
        self._theta = np.concatenate([delta, kappa, self.gravity * moments])

    @property
    def dof(self) -> int:
        return len(self.masses)

    @property
    def is_redundant(self) -> bool:
        return self.dof > TASK_DIM

    @property
    def theta_true(self) -> np.ndarray:
        return self._theta.copy()

    @property
    def parameter_count(self) -> int:
        return parameter_count(self.dof)


@dataclass
class JointState:
    q: np.ndarray
    qdot: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.qdot = np.asarray(self.qdot, dtype=float)
        if self.q.shape != self.qdot.shape:
            raise DimensionMismatch("qdot", self.q.size, self.qdot.size)
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.qdot))):
            raise ValueError("joint state must be finite")

    def check_against(self, model: ManipulatorModel) -> None:
        _check_len(model, self.q, "q")


def _check_len(model: ManipulatorModel, v: np.ndarray, what: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (model.dof,):
        raise DimensionMismatch(what, model.dof, v.size)
    return v


def absolute_angles(q: np.ndarray) -> np.ndarray:
    return np.cumsum(q)


def inertia_matrix(model: ManipulatorModel, q) -> np.ndarray:
    q = _check_len(model, q, "q")
    th = absolute_angles(q)
    m_abs = model._coupling * np.cos(th[:, None] - th[None, :])
    S = model._tril
    return S.T @ m_abs @ S


def inertia_matrix_dot(model: ManipulatorModel, q, qdot) -> np.ndarray:
    """dH/dt along qdot, from the same coupling constants as H and C."""
    q = _check_len(model, q, "q")
    qdot = _check_len(model, qdot, "qdot")
    th = absolute_angles(q)
    thdot = absolute_angles(qdot)
    d = th[:, None] - th[None, :]
    m_dot = -model._coupling * np.sin(d) * (thdot[:, None] - thdot[None, :])
    S = model._tril
    return S.T @ m_dot @ S


def coriolis_matrix(model: ManipulatorModel, q, qdot) -> np.ndarray:
    q = _check_len(model, q, "q")
    qdot = _check_len(model, qdot, "qdot")
    th = absolute_angles(q)
    thdot = absolute_angles(qdot)
    c_abs = model._coupling * np.sin(th[:, None] - th[None, :]) * thdot[None, :]
    S = model._tril
    return S.T @ c_abs @ S


def gravity_vector(model: ManipulatorModel, q) -> np.ndarray:
    q = _check_len(model, q, "q")
    th = absolute_angles(q)
    return model._tril.T @ (model.gravity * model._moments * np.cos(th))


def forward_kinematics(model: ManipulatorModel, q) -> np.ndarray:
    q = _check_len(model, q, "q")
    th = absolute_angles(q)
    l = model._lengths
    return np.array([np.sum(l * np.cos(th)), np.sum(l * np.sin(th))])


def jacobian(model: ManipulatorModel, q) -> np.ndarray:
    q = _check_len(model, q, "q")
    th = absolute_angles(q)
    l = model._lengths
    j_abs = np.vstack([-l * np.sin(th), l * np.cos(th)])
    return j_abs @ model._tril


def jacobian_dot(model: ManipulatorModel, q, qdot) -> np.ndarray:
    q = _check_len(model, q, "q")
    qdot = _check_len(model, qdot, "qdot")
    th = absolute_angles(q)
    thdot = absolute_angles(qdot)
    l = model._lengths
    jdot_abs = np.vstack([-l * np.cos(th) * thdot, -l * np.sin(th) * thdot])
    return jdot_abs @ model._tril


def jacobian_partials(model: ManipulatorModel, q) -> np.ndarray:
    """dJ/dq_k stacked along the first axis, shape (p, 2, p)."""
    q = _check_len(model, q, "q")
    th = absolute_angles(q)
    l = model._lengths
    p = model.dof
    out = np.empty((p, TASK_DIM, p))
    for k in range(p):
        # theta_a depends on q_k only for a >= k
        mask = (np.arange(p) >= k).astype(float)
        d_abs = np.vstack([-l * np.cos(th) * mask, -l * np.sin(th) * mask])
        out[k] = d_abs @ model._tril
    return out


def sharp_inverse(J: np.ndarray, threshold: float = DEFAULT_SINGULAR_THRESHOLD) -> np.ndarray:
    """J^-1 for a square Jacobian, J^T (J J^T)^-1 for a wide one."""
    J = np.asarray(J, dtype=float)
    sigma_min = float(np.linalg.svd(J, compute_uv=False)[-1])
    if sigma_min < threshold:
        raise SingularJacobian(sigma_min, threshold)
    if J.shape[0] == J.shape[1]:
        return np.linalg.inv(J)
    return J.T @ np.linalg.inv(J @ J.T)


def j_sharp(model: ManipulatorModel, q) -> np.ndarray:
    q = _check_len(model, q, "q")
    try:
        return sharp_inverse(jacobian(model, q), model.singular_threshold)
    except SingularJacobian as e:
        raise SingularJacobian(e.sigma_min, e.threshold, q) from None


def null_projector(model: ManipulatorModel, q) -> np.ndarray:
    q = _check_len(model, q, "q")
    J_sharp = j_sharp(model, q)
    if not model.is_redundant:
        return np.zeros((model.dof, model.dof))
    return np.eye(model.dof) - J_sharp @ jacobian(model, q)


def j_sharp_dot(model: ManipulatorModel, q, qdot) -> np.ndarray:
    J_sharp = j_sharp(model, q)
    J = jacobian(model, q)
    Jd = jacobian_dot(model, q, qdot)
    if not model.is_redundant:
        return -J_sharp @ Jd @ J_sharp
    M = np.linalg.inv(J @ J.T)
    M_dot = -M @ (Jd @ J.T + J @ Jd.T) @ M
    return Jd.T @ M + J.T @ M_dot


def manipulability(model: ManipulatorModel, q) -> float:
    J = jacobian(model, q)
    return float(np.linalg.det(J @ J.T))


def regressor(model: ManipulatorModel, q, qdot, y, x) -> np.ndarray:
    """Y(q, qdot, y, x) with Y @ theta = H(q) x + C(q, qdot) y + g(q).

    Only the geometry of the chain enters through S; masses, inertias and gravity
    live entirely in theta."""
    q = _check_len(model, q, "q")
    qdot = _check_len(model, qdot, "qdot")
    y = _check_len(model, y, "y")
    x = _check_len(model, x, "x")
    p = model.dof
    pairs = _coupling_pairs(p)
    th = absolute_angles(q)
    thdot = absolute_angles(qdot)
    X = absolute_angles(x)
    V = absolute_angles(y)

    W = np.zeros((p, parameter_count(p)))
    W[np.arange(p), np.arange(p)] = X
    for idx, (a, b) in enumerate(pairs):
        col = p + idx
        d = th[a] - th[b]
        W[a, col] = np.cos(d) * X[b] + np.sin(d) * thdot[b] * V[b]
        W[b, col] = np.cos(d) * X[a] - np.sin(d) * thdot[a] * V[a]
    W[np.arange(p), p + len(pairs) + np.arange(p)] = np.cos(th)
    return model._tril.T @ W


def require_redundant(model: ManipulatorModel) -> None:
    if not model.is_redundant:
        raise NotRedundant(model.dof)
