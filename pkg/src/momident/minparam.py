"""Minimal (base) parameter construction and the identification regressor.

A revolute joint makes three columns of the child's kinematic matrix
linearly dependent on columns of the parent's: the Iyy, mass and m*az
columns (indices 2, 7, 10 in the 1-based paper ordering).  The dependency
coefficients are closed-form functions of the joint twist and offset
only.  Grouping the standard parameters recursively from the leaves to
the base with those coefficients and deleting the redundant columns
yields ``10 + 7n`` minimal parameters and a reduced kinematic matrix that
reproduces the momentum exactly: ``K @ phi == K_m @ (B @ phi)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import UnderdeterminedWarning
from .kinematics import skew
from .robot import RobotModel, inertia_vector
from .simulation import Dataset

# 0-based parameter slots kept for every non-base link (drops Iyy, m, m*az).
KEPT_SLOTS = (0, 2, 3, 4, 5, 7, 8)
DROPPED_SLOTS = (1, 6, 9)

_SLOT_NAMES = ("Ixx", "Iyy", "Izz", "Ixy", "Iyz", "Ixz", "m", "max", "may", "maz")


@dataclass(frozen=True)
class DependencyVectors:
    """Coefficients tying a child's redundant columns to parent columns."""

    t1: np.ndarray  # (6,) inertia-block coefficients of the Iyy column
    t2: np.ndarray  # (6,) inertia-block coefficients of the m*az column
    t3: np.ndarray  # (3,) moment-block coefficients of the m*az column


def dependency_vectors(twist: float, offset: np.ndarray) -> DependencyVectors:
    """Closed-form dependency coefficients of one joint."""
    c, s = np.cos(twist), np.sin(twist)
    b1, b2, b3 = np.asarray(offset, dtype=float)
    t1 = np.array([1.0, c * c, s * s, 0.0, c * s, 0.0])
    t2 = np.array(
        [
            2.0 * b3 * c - 2.0 * b2 * s,
            2.0 * b3 * c,
            -2.0 * b2 * s,
            b1 * s,
            b3 * s - b2 * c,
            -b1 * c,
        ]
    )
    t3 = np.array([0.0, -s, c])
    return DependencyVectors(t1, t2, t3)


@dataclass(frozen=True)
class GroupingVectors:
    """10-vectors folding a child's dropped parameters into its parent."""

    k1: np.ndarray
    k2: np.ndarray
    k3: np.ndarray


def grouping_vectors(twist: float, offset: np.ndarray) -> GroupingVectors:
    offset = np.asarray(offset, dtype=float)
    dep = dependency_vectors(twist, offset)
    b_tilde_sq = inertia_vector(skew(offset) @ skew(offset))
    k1 = np.concatenate([dep.t1, np.zeros(4)])
    k2 = np.concatenate([-b_tilde_sq, [1.0], offset])
    k3 = np.concatenate([dep.t2, [0.0], dep.t3])
    return GroupingVectors(k1, k2, k3)


@dataclass(frozen=True)
class MinimalBasis:
    """Linear map from standard to minimal parameters plus bookkeeping.

    Attributes:
        matrix: (10+7n) x 10(n+1) map with ``phi_m = matrix @ phi``.
        identified: model link indices backing the column blocks.
        kept_flat: flat column indices (into the stacked standard vector)
            that survive deletion; selecting them from a system kinematic
            matrix yields the reduced one.
        link_rows: row slice of each identified link's minimal block.
    """

    matrix: np.ndarray
    identified: tuple[int, ...]
    kept_flat: np.ndarray
    link_rows: tuple[slice, ...]

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_standard(self) -> int:
        return self.matrix.shape[1]

    def embed(self, phi_m: np.ndarray) -> np.ndarray:
        """Expand minimal parameters to a standard-size vector.

        The embedded vector has the minimal values in the kept slots and
        zeros in the deleted ones, so evaluating the full kinematic matrix
        on it equals evaluating the reduced matrix on ``phi_m``.
        """
        phi_m = np.asarray(phi_m, dtype=float)
        if phi_m.shape != (self.size,):
            raise ValueError(f"expected {self.size} minimal parameters")
        out = np.zeros(self.n_standard)
        out[self.kept_flat] = phi_m
        return out

    def expressions(self, tol: float = 5e-5) -> list[str]:
        """Human-readable composition of every minimal parameter.

        Coefficients are rounded to four decimals; standard parameters
        are named by identified-link position (``I1yy``, ``m3``, ``ma0z``).
        """
        names = []
        for b in range(len(self.identified)):
            names += [_slot_name(b, s) for s in _SLOT_NAMES]
        lines = []
        for row in self.matrix:
            terms = []
            for coeff, name in zip(row, names):
                coeff = round(float(coeff), 4)
                if abs(coeff) < tol:
                    continue
                if coeff == 1.0:
                    terms.append(("+", name))
                elif coeff == -1.0:
                    terms.append(("-", name))
                else:
                    sign = "+" if coeff > 0 else "-"
                    terms.append((sign, f"{abs(coeff):g}*{name}"))
            if not terms:
                lines.append("0")
                continue
            first_sign, first = terms[0]
            text = first if first_sign == "+" else f"-{first}"
            for sign, term in terms[1:]:
                text += f" {sign} {term}"
            lines.append(text)
        return lines


def _slot_name(link_position: int, slot: str) -> str:
    if slot.startswith("I"):
        return f"I{link_position}{slot[1:]}"
    if slot == "m":
        return f"m{link_position}"
    return f"ma{link_position}{slot[2:]}"


def minimal_basis(model: RobotModel) -> MinimalBasis:
    """Recursive grouping of standard parameters into minimal ones.

    Children fold into parents leaf-first; every non-base link then folds
    its Iyy into Ixx and drops the Iyy, mass and m*az slots.  Wheels are
    known momentum sources and take no part in the construction.
    """
    ids = model.identified_indices
    position = {link: b for b, link in enumerate(ids)}
    n_cols = 10 * len(ids)
    rows: dict[int, np.ndarray] = {}
    for link, b in position.items():
        block = np.zeros((10, n_cols))
        block[:, 10 * b : 10 * b + 10] = np.eye(10)
        rows[link] = block

    def fold_children(link: int):
        for child in model.identified_children(link):
            geo = model.links[child].geometry
            group = grouping_vectors(geo.twist, geo.offset)
            rows[link] += (
                np.outer(group.k1, rows[child][1])
                + np.outer(group.k2, rows[child][6])
                + np.outer(group.k3, rows[child][9])
            )

    for link in reversed(ids[1:]):
        fold_children(link)
        rows[link][0] -= rows[link][1]
    fold_children(0)

    blocks = [rows[0]]
    link_rows = [slice(0, 10)]
    start = 10
    for link in ids[1:]:
        blocks.append(rows[link][list(KEPT_SLOTS)])
        link_rows.append(slice(start, start + len(KEPT_SLOTS)))
        start += len(KEPT_SLOTS)
    kept_flat = np.concatenate(
        [np.arange(10)]
        + [10 * b + np.array(KEPT_SLOTS) for b in range(1, len(ids))]
    )
    return MinimalBasis(
        matrix=np.vstack(blocks),
        identified=ids,
        kept_flat=kept_flat,
        link_rows=tuple(link_rows),
    )


def reduce_skm(skm: np.ndarray, basis: MinimalBasis) -> np.ndarray:
    """Delete the redundant columns of a system kinematic matrix."""
    if skm.shape[1] != basis.n_standard:
        raise ValueError(
            f"SKM has {skm.shape[1]} columns, basis expects {basis.n_standard}"
        )
    return skm[:, basis.kept_flat]


def _batched_skew(v: np.ndarray) -> np.ndarray:
    """(N, 3) vectors to (N, 3, 3) skew matrices."""
    n = len(v)
    out = np.zeros((n, 3, 3))
    out[:, 0, 1] = -v[:, 2]
    out[:, 0, 2] = v[:, 1]
    out[:, 1, 0] = v[:, 2]
    out[:, 1, 2] = -v[:, 0]
    out[:, 2, 0] = -v[:, 1]
    out[:, 2, 1] = v[:, 0]
    return out


def _batched_base_rotation(euler: np.ndarray) -> np.ndarray:
    """(N, 3) Z-X-Y Euler angles to (N, 3, 3) rotations."""
    cz, sz = np.cos(euler[:, 0]), np.sin(euler[:, 0])
    cx, sx = np.cos(euler[:, 1]), np.sin(euler[:, 1])
    cy, sy = np.cos(euler[:, 2]), np.sin(euler[:, 2])
    n = len(euler)
    rz = np.zeros((n, 3, 3))
    rz[:, 0, 0], rz[:, 0, 1], rz[:, 1, 0], rz[:, 1, 1], rz[:, 2, 2] = cz, -sz, sz, cz, 1.0
    rx = np.zeros((n, 3, 3))
    rx[:, 0, 0], rx[:, 1, 1], rx[:, 1, 2], rx[:, 2, 1], rx[:, 2, 2] = 1.0, cx, -sx, sx, cx
    ry = np.zeros((n, 3, 3))
    ry[:, 0, 0], ry[:, 0, 2], ry[:, 1, 1], ry[:, 2, 0], ry[:, 2, 2] = cy, sy, 1.0, -sy, cy
    return rz @ rx @ ry


def _batched_states(model: RobotModel, dataset: Dataset):
    """Forward kinematics over all samples at once.

    Returns per-link (rotations, origins, linear and angular velocities),
    each an array with the sample axis first.
    """
    n = dataset.n_samples
    q = np.hstack([dataset.joint_angles, dataset.wheel_angles])
    qd = np.hstack([dataset.joint_rates, dataset.wheel_rates])
    rot = [_batched_base_rotation(dataset.base_euler)]
    pos = [dataset.base_position]
    vel = [dataset.base_linear_velocity]
    omg = [dataset.base_angular_velocity]
    for j, link in enumerate(model.links[1:], start=1):
        geo = link.geometry
        parent = geo.parent
        cq, sq = np.cos(q[:, j - 1]), np.sin(q[:, j - 1])
        rz = np.zeros((n, 3, 3))
        rz[:, 0, 0], rz[:, 0, 1], rz[:, 1, 0], rz[:, 1, 1], rz[:, 2, 2] = cq, -sq, sq, cq, 1.0
        fixed = geo.mount @ np.array(
            [
                [1.0, 0.0, 0.0],
                [0.0, np.cos(geo.twist), -np.sin(geo.twist)],
                [0.0, np.sin(geo.twist), np.cos(geo.twist)],
            ]
        )
        rotation = rot[parent] @ (fixed @ rz)
        b = rot[parent] @ geo.offset
        rot.append(rotation)
        pos.append(pos[parent] + b)
        vel.append(vel[parent] + np.cross(omg[parent], b))
        omg.append(omg[parent] + rotation[:, :, 2] * qd[:, j - 1 : j])
    return rot, pos, vel, omg


def _batched_lkm(rotation, origin, velocity, omega) -> np.ndarray:
    """(N, 6, 10) link kinematic matrices for one link over all samples."""
    n = len(origin)
    k = np.zeros((n, 6, 10))
    w_tilde = _batched_skew(omega)
    k[:, :3, 6] = velocity
    k[:, :3, 7:] = w_tilde @ rotation
    body_w = np.einsum("nji,nj->ni", rotation, omega)
    op = np.zeros((n, 3, 6))
    op[:, 0, 0] = body_w[:, 0]
    op[:, 0, 3] = body_w[:, 1]
    op[:, 0, 5] = body_w[:, 2]
    op[:, 1, 1] = body_w[:, 1]
    op[:, 1, 3] = body_w[:, 0]
    op[:, 1, 4] = body_w[:, 2]
    op[:, 2, 2] = body_w[:, 2]
    op[:, 2, 4] = body_w[:, 1]
    op[:, 2, 5] = body_w[:, 0]
    k[:, 3:, :6] = rotation @ op
    k[:, 3:, 6] = np.cross(origin, velocity)
    k[:, 3:, 7:] = (_batched_skew(origin) @ w_tilde - _batched_skew(velocity)) @ rotation
    return k


def regressor(
    dataset: Dataset, model: RobotModel, basis: MinimalBasis
) -> tuple[np.ndarray, np.ndarray]:
    """Identification system ``G_m @ phi_m = m`` from a kinematic record.

    Both sides come from the dataset's (possibly noisy) channels: the rows
    of ``G_m`` are reduced kinematic matrices of the identified links and
    the right-hand side is minus the momentum of the known-parameter wheel
    links, i.e. the momentum the wheels applied to the rest of the system.
    All samples are assembled in one vectorized pass.
    """
    n_samples = dataset.n_samples
    if 6 * n_samples <= basis.size:
        warnings.warn(
            f"{n_samples} samples give {6 * n_samples} equations for "
            f"{basis.size} parameters; the system is underdetermined",
            UnderdeterminedWarning,
        )
    rot, pos, vel, omg = _batched_states(model, dataset)
    blocks = []
    for b, link in enumerate(basis.identified):
        lkm = _batched_lkm(rot[link], pos[link], vel[link], omg[link])
        kept = [s for s in range(10) if b == 0 or s in KEPT_SLOTS]
        blocks.append(lkm[:, :, kept])
    g = np.concatenate(blocks, axis=2).reshape(6 * n_samples, basis.size)

    wheel_momentum = np.zeros((n_samples, 6))
    for i in model.wheel_indices:
        p, l = batched_link_momentum(
            rot[i], pos[i], vel[i], omg[i], model.links[i].params.values
        )
        wheel_momentum[:, :3] += p
        wheel_momentum[:, 3:] += l
    rhs = -wheel_momentum.reshape(6 * n_samples)
    return g, rhs


def batched_link_momentum(
    rotation: np.ndarray,
    origin: np.ndarray,
    velocity: np.ndarray,
    omega: np.ndarray,
    phi10: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """One link's (p, l) over all samples from its ten parameters."""
    mass, ma_local = phi10[6], phi10[7:10]
    inertia = np.array(
        [
            [phi10[0], phi10[3], phi10[5]],
            [phi10[3], phi10[1], phi10[4]],
            [phi10[5], phi10[4], phi10[2]],
        ]
    )
    ma = np.einsum("nij,j->ni", rotation, ma_local)
    p = mass * velocity + np.cross(omega, ma)
    inertia_inertial = rotation @ inertia @ rotation.transpose(0, 2, 1)
    l = (
        np.einsum("nij,nj->ni", inertia_inertial, omega)
        + np.cross(origin, p)
        + np.cross(ma, velocity)
    )
    return p, l


def appendix_report(model: RobotModel) -> str:
    """Printable closed-form expressions of the minimal parameters."""
    basis = minimal_basis(model)
    lines = [
        f"phi_m[{i + 1:2d}] = {expr}"
        for i, expr in enumerate(basis.expressions())
    ]
    return "\n".join(lines) + "\n"
