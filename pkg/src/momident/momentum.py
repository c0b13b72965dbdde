"""Momentum model in linear form of the standard inertial parameters.

Each link's momentum about the inertial origin factors as ``K_i @ phi_i``
where the 6x10 link kinematic matrix ``K_i`` contains only kinematic data
and ``phi_i`` the ten inertial parameters.  Horizontally concatenating the
link matrices gives the system kinematic matrix; stacking system matrices
over time gives the global kinematic matrix used for identification.

``link_momentum`` evaluates the classical nonlinear momentum expressions
and serves as the independent oracle for the linear form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinematics import LinkState, skew
from .robot import inertia_matrix


def omega_operator(omega: np.ndarray) -> np.ndarray:
    """3x6 operator with ``omega_operator(w) @ inertia_vector(I) = I @ w``.

    Columns follow the canonical inertia order (xx, yy, zz, xy, yz, xz).
    """
    x, y, z = omega
    return np.array(
        [
            [x, 0.0, 0.0, y, 0.0, z],
            [0.0, y, 0.0, x, z, 0.0],
            [0.0, 0.0, z, 0.0, y, x],
        ]
    )


def link_kinematic_matrix(state: LinkState) -> np.ndarray:
    """6x10 matrix mapping a link parameter vector to (p, l)."""
    r, rot = state.origin, state.rotation
    v, w = state.linear_velocity, state.angular_velocity
    w_tilde = skew(w)
    r_tilde = skew(r)
    k = np.zeros((6, 10))
    k[:3, 6] = v
    k[:3, 7:] = w_tilde @ rot
    k[3:, :6] = rot @ omega_operator(rot.T @ w)
    k[3:, 6] = r_tilde @ v
    k[3:, 7:] = (r_tilde @ w_tilde - skew(v)) @ rot
    return k


def system_kinematic_matrix(states: list[LinkState]) -> np.ndarray:
    """Horizontal concatenation of the link kinematic matrices."""
    return np.hstack([link_kinematic_matrix(s) for s in states])


@dataclass(frozen=True)
class GlobalKinematicMatrix:
    """Time-stacked system kinematic matrices with sample timestamps."""

    matrix: np.ndarray
    times: np.ndarray

    def __post_init__(self):
        if self.matrix.shape[0] != 6 * len(self.times):
            raise ValueError("row count must be 6 x number of samples")

    @property
    def n_samples(self) -> int:
        return len(self.times)

    def sample(self, index: int) -> np.ndarray:
        """The 6-row block of one time instant."""
        return self.matrix[6 * index : 6 * (index + 1)]


def stack_global(
    skms: list[np.ndarray], times: np.ndarray | list[float]
) -> GlobalKinematicMatrix:
    """Vertically stack per-instant system kinematic matrices."""
    if len(skms) == 0:
        raise ValueError("cannot stack an empty list of samples")
    if len(skms) != len(times):
        raise ValueError("one timestamp per sample required")
    return GlobalKinematicMatrix(np.vstack(skms), np.asarray(times, dtype=float))


def link_momentum(
    state: LinkState, phi: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Momentum of one link from the textbook nonlinear expressions.

    ``p = m cdot(c)`` and ``l = R I_com R^T w + c x m cdot(c)`` with the
    CoM position recovered from the parameters.  Independent of the linear
    form; used as its oracle.
    """
    phi = np.asarray(phi, dtype=float)
    mass = phi[6]
    rot, w = state.rotation, state.angular_velocity
    inertia_frame = inertia_matrix(phi[:6])
    if mass == 0.0:
        com_local = np.zeros(3)
        inertia_com = inertia_frame
    else:
        com_local = phi[7:10] / mass
        inertia_com = inertia_frame - mass * (
            com_local @ com_local * np.eye(3) - np.outer(com_local, com_local)
        )
    a = rot @ com_local
    c = state.origin + a
    c_dot = state.linear_velocity + np.cross(w, a)
    p = mass * c_dot
    l = rot @ inertia_com @ rot.T @ w + np.cross(c, p)
    return p, l


def total_momentum(states: list[LinkState], phis: np.ndarray) -> np.ndarray:
    """Summed (p, l) of several links; ``phis`` stacked 10 per link."""
    total = np.zeros(6)
    for i, state in enumerate(states):
        p, l = link_momentum(state, phis[10 * i : 10 * i + 10])
        total[:3] += p
        total[3:] += l
    return total
