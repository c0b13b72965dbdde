"""Rotation conventions, Euler-rate mapping and tree forward kinematics.

Conventions:

* base orientation uses Z-X-Y Euler angles ``zeta = (z, x, y)``;
* every joint is revolute about the local z axis of its link frame;
* the parent-to-child rotation is ``mount @ Rx(twist) @ Rz(q)`` where the
  optional fixed mount rotation is identity for ordinary links;
* all positions, velocities and angular velocities are expressed in the
  inertial frame unless stated otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GimbalLockError
from .robot import BaseState, RobotModel

GIMBAL_LOCK_MARGIN = 1e-6


def skew(v: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix of a 3-vector, so that ``skew(v) @ u = v x u``."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def unskew(m: np.ndarray) -> np.ndarray:
    """Extract the 3-vector from the antisymmetric part of a matrix."""
    a = 0.5 * (m - m.T)
    return np.array([a[2, 1], a[0, 2], a[1, 0]])


def rot_x(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def joint_rotation(q: float, twist: float) -> np.ndarray:
    """Parent-to-child rotation of a revolute joint (modified DH form).

    Equals ``Rx(twist) @ Rz(q)``; the joint axis is the child frame z axis
    and lies along ``(0, -sin(twist), cos(twist))`` in the parent frame.
    """
    cq, sq = np.cos(q), np.sin(q)
    ca, sa = np.cos(twist), np.sin(twist)
    return np.array(
        [
            [cq, -sq, 0.0],
            [sq * ca, cq * ca, -sa],
            [sq * sa, cq * sa, ca],
        ]
    )


def base_rotation(zeta: np.ndarray) -> np.ndarray:
    """Inertial-from-base rotation from Z-X-Y Euler angles."""
    return rot_z(zeta[0]) @ rot_x(zeta[1]) @ rot_y(zeta[2])


def euler_rate_map(zeta: np.ndarray) -> np.ndarray:
    """Matrix mapping Z-X-Y Euler rates to body-frame angular velocity.

    ``omega_inertial = base_rotation(zeta) @ euler_rate_map(zeta) @ zeta_dot``.

    Raises:
        GimbalLockError: when ``|cos(zeta[1])|`` is within the singularity
            margin of zero (x rotation near +-pi/2).
    """
    cb, sb = np.cos(zeta[1]), np.sin(zeta[1])
    cc, sc = np.cos(zeta[2]), np.sin(zeta[2])
    if abs(cb) <= GIMBAL_LOCK_MARGIN:
        raise GimbalLockError(
            f"Z-X-Y euler rate map singular: cos(zeta_x) = {cb:.3e}"
        )
    return np.array(
        [
            [-sc * cb, cc, 0.0],
            [sb, 0.0, 1.0],
            [cc * cb, sc, 0.0],
        ]
    )


def euler_rates_from_angular_velocity(
    zeta: np.ndarray, omega: np.ndarray
) -> np.ndarray:
    """Invert the rate map: Euler rates producing inertial ``omega``."""
    body = base_rotation(zeta).T @ omega
    return np.linalg.solve(euler_rate_map(zeta), body)


@dataclass(frozen=True)
class LinkState:
    """Pose and twist of one link frame, expressed in the inertial frame."""

    rotation: np.ndarray
    origin: np.ndarray
    linear_velocity: np.ndarray
    angular_velocity: np.ndarray


def base_link_state(state: BaseState) -> LinkState:
    """Convert a measured base state into the base link's pose/twist."""
    rot = base_rotation(state.euler)
    omega = rot @ (euler_rate_map(state.euler) @ state.euler_rates)
    return LinkState(
        rotation=rot,
        origin=np.asarray(state.position, dtype=float),
        linear_velocity=np.asarray(state.linear_velocity, dtype=float),
        angular_velocity=omega,
    )


def forward_kinematics(
    model: RobotModel,
    base: LinkState,
    q: np.ndarray,
    qd: np.ndarray,
) -> list[LinkState]:
    """Propagate pose and twist from the base through the whole tree.

    ``q`` and ``qd`` hold one entry per non-base link, ordered by link
    index (arm joints first, then wheels for the standard layout).

    Per parent-child pair: ``r_j = r_i + R_i b_j``, ``R_j = R_i iRj``,
    ``v_j = v_i + w_i x (R_i b_j)`` and ``w_j = w_i + z_j qd_j``.
    """
    n_moving = len(model.links) - 1
    if len(q) != n_moving or len(qd) != n_moving:
        raise ValueError(
            f"expected {n_moving} joint values, got {len(q)}/{len(qd)}"
        )
    states: list[LinkState] = [base]
    for j, link in enumerate(model.links[1:], start=1):
        geo = link.geometry
        parent = states[geo.parent]
        rel = geo.mount @ joint_rotation(q[j - 1], geo.twist)
        rotation = parent.rotation @ rel
        b_inertial = parent.rotation @ geo.offset
        origin = parent.origin + b_inertial
        linear = parent.linear_velocity + np.cross(
            parent.angular_velocity, b_inertial
        )
        angular = parent.angular_velocity + rotation[:, 2] * qd[j - 1]
        states.append(LinkState(rotation, origin, linear, angular))
    return states


def integrate_base(state: BaseState, dt: float) -> BaseState:
    """Explicit Euler step on base position and Euler angles."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    return BaseState(
        position=state.position + dt * state.linear_velocity,
        euler=state.euler + dt * state.euler_rates,
        linear_velocity=state.linear_velocity,
        euler_rates=state.euler_rates,
    )
