"""Free-floating response simulation under total momentum conservation.

Starting from rest the total momentum (robot plus reaction wheels) stays
zero, so at every instant the base twist is the solution of a 6x6 linear
system: the columns of the base momentum matrix are obtained by evaluating
the total momentum at unit base twists with all joints frozen, exploiting
that momentum is exactly linear in every velocity.

The integrator records pose/twist datasets at a fixed sample rate and a
separate step adds Gaussian measurement noise, after which the pose
channels are re-integrated from the noisy rates the way an on-board
estimator would.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, SingularSystemError
from .kinematics import (
    LinkState,
    base_rotation,
    euler_rate_map,
    joint_rotation,
)
from .robot import BaseState, RobotModel


def _skew(v: np.ndarray) -> np.ndarray:
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


class MomentumEvaluator:
    """Fast total-momentum evaluation for one robot and parameter vector.

    ``phi`` stacks ten parameters per link in link-index order, wheels
    included.  Velocities enter linearly, so batches of velocity scenarios
    share one forward-kinematics pose pass.
    """

    def __init__(self, model: RobotModel, phi: np.ndarray):
        phi = np.asarray(phi, dtype=float)
        n_links = len(model.links)
        if phi.shape != (10 * n_links,):
            raise ValueError(
                f"expected {10 * n_links} parameters, got {phi.shape}"
            )
        self.model = model
        self.masses = phi[6::10].copy()
        self.first_moments = phi.reshape(n_links, 10)[:, 7:10].copy()
        from .robot import inertia_matrix

        self.inertias = np.stack(
            [inertia_matrix(phi[10 * i : 10 * i + 6]) for i in range(n_links)]
        )
        self._rel_fixed = [
            link.geometry.mount for link in model.links[1:]
        ]
        self._offsets = [link.geometry.offset for link in model.links[1:]]
        self._parents = [link.geometry.parent for link in model.links[1:]]

    def poses(
        self, position: np.ndarray, rotation: np.ndarray, q: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        """Origins and rotations of every link for the given base pose."""
        n_links = len(self.model.links)
        origins = np.empty((n_links, 3))
        rotations = np.empty((n_links, 3, 3))
        origins[0] = position
        rotations[0] = rotation
        for j in range(1, n_links):
            parent = self._parents[j - 1]
            link = self.model.links[j]
            rel = self._rel_fixed[j - 1] @ joint_rotation(
                q[j - 1], link.geometry.twist
            )
            rotations[j] = rotations[parent] @ rel
            origins[j] = origins[parent] + rotations[parent] @ self._offsets[j - 1]
        return origins, rotations

    def momentum_batch(
        self,
        origins: np.ndarray,
        rotations: np.ndarray,
        v0: np.ndarray,
        w0: np.ndarray,
        qd: np.ndarray,
    ) -> np.ndarray:
        """Total (p, l) for a batch of velocity scenarios.

        ``v0``/``w0`` have shape (S, 3) and ``qd`` (S, J); returns (S, 6).
        Row-batched cross products are written as products with skew
        matrices: ``A x b`` row-wise equals ``A @ skew(b)``.
        """
        n_links = len(self.model.links)
        lin = [None] * n_links
        ang = [None] * n_links
        lin[0], ang[0] = v0, w0
        total_p = np.zeros_like(v0)
        total_l = np.zeros_like(v0)
        for i in range(n_links):
            if i > 0:
                parent = self._parents[i - 1]
                b = rotations[parent] @ self._offsets[i - 1]
                lin[i] = lin[parent] + ang[parent] @ _skew(b)
                ang[i] = ang[parent] + np.outer(qd[:, i - 1], rotations[i][:, 2])
            rot = rotations[i]
            ma = rot @ self.first_moments[i]
            p = self.masses[i] * lin[i] + ang[i] @ _skew(ma)
            inertia_inertial = rot @ self.inertias[i] @ rot.T
            l = (
                ang[i] @ inertia_inertial.T
                - p @ _skew(origins[i])
                - lin[i] @ _skew(ma)
            )
            total_p += p
            total_l += l
        return np.hstack([total_p, total_l])

    def link_momenta(
        self,
        origins: np.ndarray,
        rotations: np.ndarray,
        v0: np.ndarray,
        w0: np.ndarray,
        qd: np.ndarray,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Per-link (p, l) for a single velocity scenario."""
        n_links = len(self.model.links)
        lin = np.empty((n_links, 3))
        ang = np.empty((n_links, 3))
        lin[0], ang[0] = v0, w0
        p_out = np.empty((n_links, 3))
        l_out = np.empty((n_links, 3))
        for i in range(n_links):
            if i > 0:
                parent = self._parents[i - 1]
                b = rotations[parent] @ self._offsets[i - 1]
                lin[i] = lin[parent] + ang[parent] @ _skew(b)
                ang[i] = ang[parent] + qd[i - 1] * rotations[i][:, 2]
            rot = rotations[i]
            ma = rot @ self.first_moments[i]
            p = self.masses[i] * lin[i] + ang[i] @ _skew(ma)
            p_out[i] = p
            l_out[i] = (
                rot @ (self.inertias[i] @ (rot.T @ ang[i]))
                - p @ _skew(origins[i])
                - lin[i] @ _skew(ma)
            )
        return p_out, l_out

    def wheel_momentum(
        self,
        origins: np.ndarray,
        rotations: np.ndarray,
        v0: np.ndarray,
        w0: np.ndarray,
        qd: np.ndarray,
    ) -> np.ndarray:
        """Summed (p, l) of the wheel links (all children of the base)."""
        total = np.zeros(6)
        for i in self.model.wheel_indices:
            b = rotations[0] @ self._offsets[i - 1]
            lin = v0 + w0 @ _skew(b)
            ang = w0 + qd[i - 1] * rotations[i][:, 2]
            rot = rotations[i]
            ma = rot @ self.first_moments[i]
            p = self.masses[i] * lin + ang @ _skew(ma)
            total[:3] += p
            total[3:] += (
                rot @ (self.inertias[i] @ (rot.T @ ang))
                - p @ _skew(origins[i])
                - lin @ _skew(ma)
            )
        return total

    _UNIT_V = np.vstack([np.eye(3), np.zeros((4, 3))])
    _UNIT_W = np.vstack([np.zeros((3, 3)), np.eye(3), np.zeros((1, 3))])

    def base_system(
        self, origins: np.ndarray, rotations: np.ndarray, qd: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        """Base momentum matrix H_b and the joint-rate momentum bias.

        Total momentum = ``H_b @ (v0, w0) + bias(qd)``.
        """
        qd_batch = np.zeros((7, len(qd)))
        qd_batch[6] = qd
        out = self.momentum_batch(
            origins, rotations, self._UNIT_V, self._UNIT_W, qd_batch
        )
        return out[:6].T, out[6]

    def solve_twist(
        self,
        origins: np.ndarray,
        rotations: np.ndarray,
        qd: np.ndarray,
        target: np.ndarray,
    ) -> np.ndarray:
        """Base twist realizing the target total momentum."""
        h_b, bias = self.base_system(origins, rotations, qd)
        try:
            return np.linalg.solve(h_b, target - bias)
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError(
                "base momentum matrix is singular; check the parameter vector"
            ) from exc


@dataclass
class StateSeries:
    """Raw integrator output: sampled pose/twist and joint channels."""

    time: np.ndarray
    position: np.ndarray
    euler: np.ndarray
    linear_velocity: np.ndarray
    euler_rates: np.ndarray
    angular_velocity: np.ndarray
    joint_angles: np.ndarray
    joint_rates: np.ndarray
    applied_momentum: np.ndarray

    @property
    def n_samples(self) -> int:
        return len(self.time)


def momentum_response(
    model: RobotModel,
    phi: np.ndarray,
    trajectory,
    *,
    duration: float | None = None,
    dt: float = 0.002,
    sample_rate: float = 50.0,
    initial: BaseState | None = None,
    target_momentum: np.ndarray | None = None,
    record_applied: bool = True,
) -> StateSeries:
    """Integrate the base response to a prescribed joint trajectory.

    ``trajectory.sample(t)`` must return joint angles and rates for every
    moving joint (arms then wheels).  The base pose advances by explicit
    Euler on position and Z-X-Y Euler angles; at each step the base twist
    is solved from momentum conservation, so the conservation residual at
    the recorded samples is zero to solver precision regardless of ``dt``.
    ``record_applied=False`` skips the applied-momentum channel (zeros),
    which trajectory optimization does not need.
    """
    if duration is None:
        duration = trajectory.duration
    if initial is None:
        initial = BaseState.at_rest()
    if target_momentum is None:
        target_momentum = np.zeros(6)
    record_every = round(1.0 / (sample_rate * dt))
    if record_every < 1 or abs(record_every * sample_rate * dt - 1.0) > 1e-9:
        raise ConfigError(
            f"sample rate {sample_rate} Hz incompatible with dt {dt}"
        )
    evaluator = MomentumEvaluator(model, phi)
    wheel_idx = list(model.wheel_indices)
    n_steps = round(duration / dt)
    n_samples = (n_steps - 1) // record_every + 1 if n_steps > 0 else 0

    times = np.empty(n_samples)
    out = {
        name: np.empty((n_samples, 3))
        for name in (
            "position",
            "euler",
            "linear_velocity",
            "euler_rates",
            "angular_velocity",
        )
    }
    n_moving = model.n_moving
    joint_angles = np.empty((n_samples, n_moving))
    joint_rates = np.empty((n_samples, n_moving))
    applied = np.empty((n_samples, 6))

    position = initial.position.copy()
    euler = initial.euler.copy()
    sample = 0
    for step in range(n_steps):
        t = step * dt
        q, qd = trajectory.sample(t)
        rotation = base_rotation(euler)
        origins, rotations = evaluator.poses(position, rotation, q)
        twist = evaluator.solve_twist(origins, rotations, qd, target_momentum)
        v0, w0 = twist[:3], twist[3:]
        euler_rates = np.linalg.solve(euler_rate_map(euler), rotation.T @ w0)
        if step % record_every == 0:
            times[sample] = t
            out["position"][sample] = position
            out["euler"][sample] = euler
            out["linear_velocity"][sample] = v0
            out["euler_rates"][sample] = euler_rates
            out["angular_velocity"][sample] = w0
            joint_angles[sample] = q
            joint_rates[sample] = qd
            if record_applied and wheel_idx:
                applied[sample] = -evaluator.wheel_momentum(
                    origins, rotations, v0, w0, qd
                )
            else:
                applied[sample] = 0.0
            sample += 1
        position = position + dt * v0
        euler = euler + dt * euler_rates
    return StateSeries(
        time=times,
        joint_angles=joint_angles,
        joint_rates=joint_rates,
        applied_momentum=applied,
        **out,
    )


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseSpec:
    """Gaussian measurement noise levels (standard deviations) and seed."""

    linear_velocity: float = 50e-6  # m/s on base linear velocity
    angular_velocity: float = 80e-6  # rad/s on base angular velocity
    joint_rate: float = 50e-6  # rad/s on arm joint rates
    seed: int = 0

    def __post_init__(self):
        if min(self.linear_velocity, self.angular_velocity, self.joint_rate) < 0:
            raise ConfigError("noise standard deviations must be nonnegative")


@dataclass
class Dataset:
    """Uniformly sampled kinematic record of one simulation run.

    The ``applied_momentum`` channel holds the momentum injected by the
    wheels as simulated (noise-free truth); identification recomputes the
    right-hand side from the kinematic channels instead of trusting it.
    """

    time: np.ndarray
    base_position: np.ndarray
    base_euler: np.ndarray
    base_linear_velocity: np.ndarray
    base_euler_rates: np.ndarray
    base_angular_velocity: np.ndarray
    joint_angles: np.ndarray
    joint_rates: np.ndarray
    wheel_angles: np.ndarray
    wheel_rates: np.ndarray
    applied_momentum: np.ndarray
    sample_rate: float
    dt: float
    noise: NoiseSpec | None = None

    def __post_init__(self):
        n = len(self.time)
        for name in (
            "base_position",
            "base_euler",
            "base_linear_velocity",
            "base_euler_rates",
            "base_angular_velocity",
            "joint_angles",
            "joint_rates",
            "wheel_angles",
            "wheel_rates",
            "applied_momentum",
        ):
            if len(getattr(self, name)) != n:
                raise ValueError(f"channel {name} length mismatch")
        steps = np.diff(self.time)
        if len(steps) and not np.allclose(steps, steps[0], atol=1e-9):
            raise ValueError("time grid must be uniform")

    @property
    def n_samples(self) -> int:
        return len(self.time)

    @property
    def n_joints(self) -> int:
        return self.joint_angles.shape[1]

    @property
    def n_wheels(self) -> int:
        return self.wheel_angles.shape[1]

    def base_link_state(self, index: int) -> LinkState:
        rotation = base_rotation(self.base_euler[index])
        return LinkState(
            rotation=rotation,
            origin=self.base_position[index],
            linear_velocity=self.base_linear_velocity[index],
            angular_velocity=self.base_angular_velocity[index],
        )

    def moving_joint_angles(self, index: int) -> np.ndarray:
        return np.concatenate([self.joint_angles[index], self.wheel_angles[index]])

    def moving_joint_rates(self, index: int) -> np.ndarray:
        return np.concatenate([self.joint_rates[index], self.wheel_rates[index]])

    # -- serialization -----------------------------------------------------

    def column_names(self) -> list[str]:
        names = ["t"]
        names += [f"p0{a}" for a in "xyz"]
        names += [f"e0{a}" for a in "zxy"]
        names += [f"v0{a}" for a in "xyz"]
        names += [f"ed0{a}" for a in "zxy"]
        names += [f"w0{a}" for a in "xyz"]
        names += [f"q{j + 1}" for j in range(self.n_joints)]
        names += [f"qd{j + 1}" for j in range(self.n_joints)]
        names += [f"wq{j + 1}" for j in range(self.n_wheels)]
        names += [f"wqd{j + 1}" for j in range(self.n_wheels)]
        names += [f"m{a}" for a in ("px", "py", "pz", "lx", "ly", "lz")]
        return names

    def save(self, path: str | Path):
        """CSV table plus a JSON metadata sidecar (same stem, .meta.json)."""
        path = Path(path)
        table = np.hstack(
            [
                self.time[:, None],
                self.base_position,
                self.base_euler,
                self.base_linear_velocity,
                self.base_euler_rates,
                self.base_angular_velocity,
                self.joint_angles,
                self.joint_rates,
                self.wheel_angles,
                self.wheel_rates,
                self.applied_momentum,
            ]
        )
        header = ",".join(self.column_names())
        np.savetxt(path, table, delimiter=",", header=header, comments="", fmt="%.17g")
        meta = {
            "sample_rate": self.sample_rate,
            "dt": self.dt,
            "n_joints": self.n_joints,
            "n_wheels": self.n_wheels,
            "noise": None
            if self.noise is None
            else {
                "linear_velocity": self.noise.linear_velocity,
                "angular_velocity": self.noise.angular_velocity,
                "joint_rate": self.noise.joint_rate,
                "seed": self.noise.seed,
            },
        }
        path.with_suffix(path.suffix + ".meta.json").write_text(
            json.dumps(meta, indent=2) + "\n"
        )

    @classmethod
    def load(cls, path: str | Path) -> "Dataset":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"dataset file not found: {path}")
        meta_path = path.with_suffix(path.suffix + ".meta.json")
        if not meta_path.exists():
            raise ConfigError(f"dataset metadata not found: {meta_path}")
        meta = json.loads(meta_path.read_text())
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        n, w = meta["n_joints"], meta["n_wheels"]
        cols = iter(np.split(table, np.cumsum([1, 3, 3, 3, 3, 3, n, n, w, w]), axis=1))
        noise = meta["noise"]
        return cls(
            time=next(cols)[:, 0],
            base_position=next(cols),
            base_euler=next(cols),
            base_linear_velocity=next(cols),
            base_euler_rates=next(cols),
            base_angular_velocity=next(cols),
            joint_angles=next(cols),
            joint_rates=next(cols),
            wheel_angles=next(cols),
            wheel_rates=next(cols),
            applied_momentum=next(cols),
            sample_rate=meta["sample_rate"],
            dt=meta["dt"],
            noise=None if noise is None else NoiseSpec(**noise),
        )


def base_twist_from_momentum(
    model: RobotModel,
    phi: np.ndarray,
    base_position: np.ndarray,
    base_rotation_matrix: np.ndarray,
    q: np.ndarray,
    qd: np.ndarray,
    target_momentum: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Base twist that realizes ``target_momentum`` at the given state."""
    evaluator = MomentumEvaluator(model, phi)
    origins, rotations = evaluator.poses(base_position, base_rotation_matrix, q)
    twist = evaluator.solve_twist(origins, rotations, qd, target_momentum)
    return twist[:3], twist[3:]


def series_to_dataset(
    series: StateSeries,
    model: RobotModel,
    sample_rate: float,
    dt: float,
    noise: NoiseSpec | None = None,
) -> Dataset:
    """Split a raw state series into a dataset's arm/wheel channels."""
    n = model.n
    return Dataset(
        time=series.time,
        base_position=series.position,
        base_euler=series.euler,
        base_linear_velocity=series.linear_velocity,
        base_euler_rates=series.euler_rates,
        base_angular_velocity=series.angular_velocity,
        joint_angles=series.joint_angles[:, :n],
        joint_rates=series.joint_rates[:, :n],
        wheel_angles=series.joint_angles[:, n:],
        wheel_rates=series.joint_rates[:, n:],
        applied_momentum=series.applied_momentum,
        sample_rate=sample_rate,
        dt=dt,
        noise=noise,
    )


def simulate(
    model: RobotModel,
    trajectory,
    *,
    phi: np.ndarray | None = None,
    duration: float | None = None,
    dt: float = 0.002,
    sample_rate: float = 50.0,
    initial: BaseState | None = None,
) -> Dataset:
    """Simulate the free-floating robot executing ``trajectory``.

    The robot starts at rest with zero total momentum unless ``initial``
    says otherwise (the momentum target is always zero, matching a system
    that was at rest before the wheels spun up).
    """
    if phi is None:
        phi = model.standard_parameters(include_wheels=True)
    series = momentum_response(
        model,
        phi,
        trajectory,
        duration=duration,
        dt=dt,
        sample_rate=sample_rate,
        initial=initial,
    )
    return series_to_dataset(series, model, sample_rate, dt)


def add_noise(dataset: Dataset, spec: NoiseSpec) -> Dataset:
    """Corrupt rate measurements with white noise and rebuild the pose.

    Noise is applied to the base linear velocity, the base angular
    velocity (inertial frame) and the arm joint rates.  Wheel channels are
    commanded quantities and stay exact.  Positions, Euler angles and
    Euler rates are then recomputed from the noisy rates exactly as an
    estimator integrating its sensors would, starting from the true
    initial pose.
    """
    if dataset.noise is not None:
        raise ValueError("dataset already contains measurement noise")
    rng = np.random.default_rng(spec.seed)
    n = dataset.n_samples
    v0 = dataset.base_linear_velocity + rng.normal(
        0.0, spec.linear_velocity, (n, 3)
    )
    w0 = dataset.base_angular_velocity + rng.normal(
        0.0, spec.angular_velocity, (n, 3)
    )
    qd = dataset.joint_rates + rng.normal(
        0.0, spec.joint_rate, dataset.joint_rates.shape
    )

    step = 1.0 / dataset.sample_rate
    position = np.empty_like(dataset.base_position)
    euler = np.empty_like(dataset.base_euler)
    euler_rates = np.empty_like(dataset.base_euler_rates)
    angles = np.empty_like(dataset.joint_angles)
    position[0] = dataset.base_position[0]
    euler[0] = dataset.base_euler[0]
    angles[0] = dataset.joint_angles[0]
    for k in range(n):
        rotation = base_rotation(euler[k])
        euler_rates[k] = np.linalg.solve(
            euler_rate_map(euler[k]), rotation.T @ w0[k]
        )
        if k + 1 < n:
            position[k + 1] = position[k] + step * v0[k]
            euler[k + 1] = euler[k] + step * euler_rates[k]
            angles[k + 1] = angles[k] + step * qd[k]
    return replace(
        dataset,
        base_position=position,
        base_euler=euler,
        base_linear_velocity=v0,
        base_euler_rates=euler_rates,
        base_angular_velocity=w0,
        joint_angles=angles,
        joint_rates=qd,
        noise=spec,
    )
