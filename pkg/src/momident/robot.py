"""Robot description: tree topology, geometry, inertial parameters, wheels.

A robot is a tree of rigid links connected by revolute joints.  Link 0 is
the free-floating base.  Reaction-wheel links are flagged ``is_wheel``:
their inertial parameters are treated as known momentum sources and they
are excluded from the identified parameter set.

The built-in fixture is a 12-DoF dual-arm robot (base + two 3-link arms +
three mutually orthogonal reaction wheels) with two inertial parameter
sets: the "true" values and the deliberately offset guess used to design
exciting trajectories.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, TopologyError

# Inertia 6-vectors are always ordered (xx, yy, zz, xy, yz, xz); any other
# order breaks the redundant-column bookkeeping downstream.
INERTIA_ORDER = ("xx", "yy", "zz", "xy", "yz", "xz")

_EYE3 = np.eye(3)


def inertia_vector(matrix: np.ndarray) -> np.ndarray:
    """Pack a symmetric 3x3 matrix into the canonical 6-vector."""
    m = np.asarray(matrix, dtype=float)
    return np.array([m[0, 0], m[1, 1], m[2, 2], m[0, 1], m[1, 2], m[0, 2]])


def inertia_matrix(vec6: np.ndarray) -> np.ndarray:
    """Unpack the canonical 6-vector into a symmetric 3x3 matrix."""
    xx, yy, zz, xy, yz, xz = np.asarray(vec6, dtype=float)
    return np.array([[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]])


def _rpy_matrix(rx: float, ry: float, rz: float) -> np.ndarray:
    """Fixed rotation Rx(rx) @ Ry(ry) @ Rz(rz) used for wheel mounts."""
    cx, sx = math.cos(rx), math.sin(rx)
    cy, sy = math.cos(ry), math.sin(ry)
    cz, sz = math.cos(rz), math.sin(rz)
    mx = np.array([[1.0, 0.0, 0.0], [0.0, cx, -sx], [0.0, sx, cx]])
    my = np.array([[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]])
    mz = np.array([[cz, -sz, 0.0], [sz, cz, 0.0], [0.0, 0.0, 1.0]])
    return mx @ my @ mz


@dataclass(frozen=True)
class JointGeometry:
    """Joint connecting a link to its parent.

    Attributes:
        parent: index of the parent link (must be smaller than the link's
            own index).
        twist: fixed rotation about the parent x axis, radians.
        offset: position of the link frame origin in the parent frame, m.
        mount: extra fixed rotation applied before the twist; identity for
            ordinary links, used only to orient wheel spin axes that a
            single twist angle cannot reach.
    """

    parent: int
    twist: float
    offset: np.ndarray
    mount: np.ndarray = field(default_factory=lambda: _EYE3.copy())

    def __post_init__(self):
        object.__setattr__(self, "offset", np.asarray(self.offset, dtype=float))
        object.__setattr__(self, "mount", np.asarray(self.mount, dtype=float))
        if self.offset.shape != (3,) or not np.all(np.isfinite(self.offset)):
            raise ConfigError("joint offset must be a finite 3-vector")


@dataclass(frozen=True)
class LinkParameterVector:
    """The ten inertial parameters of one link.

    Ordered as ``(Ixx, Iyy, Izz, Ixy, Iyz, Ixz, m, m*ax, m*ay, m*az)``
    with the inertia taken about the link frame origin and the first
    moment ``m*a`` pointing from the frame origin to the CoM.
    """

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.values.shape != (10,):
            raise ConfigError("link parameter vector must have 10 entries")
        if self.mass < 0:
            raise ConfigError(f"negative mass {self.mass}")

    @classmethod
    def from_com(
        cls, mass: float, com: np.ndarray, inertia_com: np.ndarray
    ) -> "LinkParameterVector":
        """Build from CoM-referred data via the parallel axis theorem.

        ``inertia_com`` is either a 6-vector in canonical order or a
        symmetric 3x3 matrix, about the CoM with link-frame axes.
        """
        com = np.asarray(com, dtype=float)
        ic = np.asarray(inertia_com, dtype=float)
        if ic.shape == (6,):
            ic = inertia_matrix(ic)
        if not np.allclose(ic, ic.T, atol=1e-12):
            raise ConfigError("CoM inertia matrix must be symmetric")
        if np.linalg.eigvalsh(ic).min() < -1e-9:
            # Offset/guess parameter sets are allowed to be unphysical.
            warnings.warn("CoM inertia is not positive semidefinite")
        frame_inertia = ic + mass * (com @ com * _EYE3 - np.outer(com, com))
        return cls(
            np.concatenate(
                [inertia_vector(frame_inertia), [mass], mass * com]
            )
        )

    @property
    def mass(self) -> float:
        return float(self.values[6])

    @property
    def first_moment(self) -> np.ndarray:
        """``m * a`` in the link frame, kg m."""
        return self.values[7:10].copy()

    @property
    def inertia(self) -> np.ndarray:
        """3x3 inertia about the link frame origin."""
        return inertia_matrix(self.values[:6])

    @property
    def com(self) -> np.ndarray:
        if self.mass == 0.0:
            return np.zeros(3)
        return self.first_moment / self.mass

    @property
    def inertia_com(self) -> np.ndarray:
        """3x3 inertia about the CoM (inverse parallel axis transform)."""
        a = self.com
        return self.inertia - self.mass * (a @ a * _EYE3 - np.outer(a, a))


@dataclass(frozen=True)
class JointLimits:
    """Symmetric motion limits of one identified joint (radians, seconds)."""

    position: tuple[float, float] = (-math.pi, math.pi)
    rate: float = math.pi
    acceleration: float = 4.0 * math.pi


@dataclass(frozen=True)
class BaseState:
    """Base pose and rates: position, Z-X-Y Euler angles and their rates."""

    position: np.ndarray
    euler: np.ndarray
    linear_velocity: np.ndarray
    euler_rates: np.ndarray

    def __post_init__(self):
        for name in ("position", "euler", "linear_velocity", "euler_rates"):
            value = np.asarray(getattr(self, name), dtype=float)
            if value.shape != (3,) or not np.all(np.isfinite(value)):
                raise ConfigError(f"BaseState.{name} must be a finite 3-vector")
            object.__setattr__(self, name, value)

    @classmethod
    def at_rest(cls) -> "BaseState":
        return cls(np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3))


@dataclass(frozen=True)
class Link:
    name: str
    geometry: JointGeometry | None
    params: LinkParameterVector
    is_wheel: bool = False


class RobotModel:
    """Immutable kinematic tree with inertial parameters and joint limits.

    ``n`` counts the identified (non-wheel) joints; link indices run base
    first, then arm links, then wheel links, with every parent index
    smaller than its child's.
    """

    def __init__(
        self,
        links: list[Link],
        joint_limits: list[JointLimits] | None = None,
        name: str = "robot",
    ):
        self.links: tuple[Link, ...] = tuple(links)
        self.name = name
        self._validate()
        if joint_limits is None:
            joint_limits = [JointLimits() for _ in range(self.n)]
        if len(joint_limits) != self.n:
            raise ConfigError(
                f"expected {self.n} joint limit entries, got {len(joint_limits)}"
            )
        self.joint_limits: tuple[JointLimits, ...] = tuple(joint_limits)

    def _validate(self):
        if not self.links:
            raise ConfigError("robot has no links")
        names = [link.name for link in self.links]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate link names")
        if self.links[0].geometry is not None:
            raise TopologyError("link 0 must be the parentless base")
        children: dict[int, list[int]] = {i: [] for i in range(len(self.links))}
        for j, link in enumerate(self.links[1:], start=1):
            geo = link.geometry
            if geo is None:
                raise TopologyError(f"link {j} ({link.name}) has no parent")
            if not 0 <= geo.parent < j:
                raise TopologyError(
                    f"link {j} ({link.name}) has parent index {geo.parent}; "
                    "parents must precede children"
                )
            if link.is_wheel and geo.parent != 0:
                raise TopologyError(f"wheel {link.name} must attach to the base")
            if not link.is_wheel and any(
                l.is_wheel for l in self.links[1:j]
            ):
                raise TopologyError(
                    "wheel links must come after all identified links"
                )
            if not link.is_wheel and not np.allclose(geo.mount, _EYE3):
                raise ConfigError(
                    f"link {link.name}: mount rotations are only supported "
                    "on wheel links"
                )
            children[geo.parent].append(j)
        # Tree property: DFS from the root reaches every link exactly once.
        seen: set[int] = set()
        stack = [0]
        while stack:
            i = stack.pop()
            if i in seen:
                raise TopologyError(f"link {i} reachable twice")
            seen.add(i)
            stack.extend(children[i])
        if len(seen) != len(self.links):
            raise TopologyError("some links are unreachable from the base")
        self._children = {i: tuple(c) for i, c in children.items()}

    # -- structure ---------------------------------------------------------

    @property
    def wheel_indices(self) -> tuple[int, ...]:
        return tuple(i for i, l in enumerate(self.links) if l.is_wheel)

    @property
    def identified_indices(self) -> tuple[int, ...]:
        return tuple(i for i, l in enumerate(self.links) if not l.is_wheel)

    @property
    def n(self) -> int:
        """Number of identified (non-wheel) joints."""
        return len(self.identified_indices) - 1

    @property
    def n_wheels(self) -> int:
        return len(self.wheel_indices)

    @property
    def n_moving(self) -> int:
        """All actuated joints: arms plus wheels."""
        return len(self.links) - 1

    def children(self, index: int) -> tuple[int, ...]:
        return self._children[index]

    def identified_children(self, index: int) -> tuple[int, ...]:
        return tuple(
            j for j in self._children[index] if not self.links[j].is_wheel
        )

    def subtree(self, index: int) -> tuple[int, ...]:
        """The link and all its descendants, in index order."""
        out, stack = [], [index]
        while stack:
            i = stack.pop()
            out.append(i)
            stack.extend(self._children[i])
        return tuple(sorted(out))

    # -- parameters --------------------------------------------------------

    def standard_parameters(self, include_wheels: bool = False) -> np.ndarray:
        """Stacked 10-per-link parameter vector over identified links.

        With ``include_wheels=True`` the wheel blocks are appended after
        the identified ones (model link order within each group).
        """
        indices = list(self.identified_indices)
        if include_wheels:
            indices += list(self.wheel_indices)
        return np.concatenate([self.links[i].params.values for i in indices])

    def with_link_parameters(
        self, params: list[LinkParameterVector]
    ) -> "RobotModel":
        """Copy of the model with identified-link parameters replaced."""
        ids = self.identified_indices
        if len(params) != len(ids):
            raise ConfigError(
                f"expected {len(ids)} parameter vectors, got {len(params)}"
            )
        new_links = list(self.links)
        for i, p in zip(ids, params):
            new_links[i] = replace(new_links[i], params=p)
        return RobotModel(new_links, list(self.joint_limits), self.name)


# ---------------------------------------------------------------------------
# Configuration documents
# ---------------------------------------------------------------------------


def _link_from_dict(index: int, doc: dict) -> Link:
    try:
        name = doc["name"]
        mass = float(doc["mass_kg"])
        com = np.asarray(doc["com_m"], dtype=float)
        icom = np.asarray(doc["inertia_com_kgm2"], dtype=float)
    except KeyError as exc:
        raise ConfigError(f"link {index}: missing key {exc}") from exc
    if com.shape != (3,):
        raise ConfigError(f"link {name}: com_m must have 3 entries")
    if icom.shape != (6,):
        raise ConfigError(
            f"link {name}: inertia_com_kgm2 must have 6 entries "
            f"ordered {INERTIA_ORDER}"
        )
    params = LinkParameterVector.from_com(mass, com, icom)
    parent = doc.get("parent")
    if parent is None:
        if index != 0:
            raise TopologyError(
                f"link {name}: only the first link may omit its parent"
            )
        return Link(name, None, params, is_wheel=bool(doc.get("is_wheel", False)))
    if "dh" in doc:
        dh = doc["dh"]
        alpha = math.radians(float(dh["alpha_deg"]))
        a, d = float(dh["a_m"]), float(dh["d_m"])
        twist = alpha
        offset = np.array(
            [a, -d * math.sin(alpha), d * math.cos(alpha)]
        )
    else:
        twist = math.radians(float(doc.get("twist_deg", 0.0)))
        offset = np.asarray(doc.get("offset_m", (0.0, 0.0, 0.0)), dtype=float)
    mount = _EYE3
    if "mount_rpy_deg" in doc:
        rx, ry, rz = (math.radians(float(v)) for v in doc["mount_rpy_deg"])
        mount = _rpy_matrix(rx, ry, rz)
    geometry = JointGeometry(int(parent), twist, offset, mount)
    return Link(name, geometry, params, is_wheel=bool(doc.get("is_wheel", False)))


def _limits_from_dict(doc: dict) -> JointLimits:
    lo, hi = doc.get("position_deg", (-180.0, 180.0))
    return JointLimits(
        position=(math.radians(float(lo)), math.radians(float(hi))),
        rate=math.radians(float(doc.get("rate_deg_s", 180.0))),
        acceleration=math.radians(float(doc.get("accel_deg_s2", 720.0))),
    )


def load_robot(source: str | Path | dict) -> RobotModel:
    """Load and validate a robot description from a JSON document.

    ``source`` may be a path to a JSON file or an already-parsed dict.
    Angles in the document are degrees; everything is stored in radians.
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        if not path.exists():
            raise ConfigError(f"robot file not found: {path}")
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    else:
        doc = source
    if "links" not in doc or not isinstance(doc["links"], list):
        raise ConfigError("robot document needs a 'links' array")
    links = [_link_from_dict(i, d) for i, d in enumerate(doc["links"])]
    model = RobotModel(links, None, name=doc.get("name", "robot"))
    limits_doc = doc.get("joint_limits")
    if limits_doc is not None:
        if len(limits_doc) != model.n:
            raise ConfigError(
                f"joint_limits has {len(limits_doc)} entries, expected {model.n}"
            )
        model = RobotModel(
            list(model.links),
            [_limits_from_dict(d) for d in limits_doc],
            model.name,
        )
    return model


def robot_to_dict(model: RobotModel) -> dict:
    """Serialize a model back into the JSON document schema."""
    links = []
    for link in model.links:
        entry: dict = {
            "name": link.name,
            "mass_kg": link.params.mass,
            "com_m": link.params.com.tolist(),
            "inertia_com_kgm2": inertia_vector(link.params.inertia_com).tolist(),
        }
        if link.geometry is None:
            entry["parent"] = None
        else:
            entry["parent"] = link.geometry.parent
            entry["twist_deg"] = math.degrees(link.geometry.twist)
            entry["offset_m"] = link.geometry.offset.tolist()
            if not np.allclose(link.geometry.mount, _EYE3):
                entry["mount_rpy_deg"] = _mount_rpy_deg(link.geometry.mount)
        if link.is_wheel:
            entry["is_wheel"] = True
        links.append(entry)
    limits = [
        {
            "position_deg": [math.degrees(l.position[0]), math.degrees(l.position[1])],
            "rate_deg_s": math.degrees(l.rate),
            "accel_deg_s2": math.degrees(l.acceleration),
        }
        for l in model.joint_limits
    ]
    return {"name": model.name, "links": links, "joint_limits": limits}


def _mount_rpy_deg(mount: np.ndarray) -> list[float]:
    """Euler Rx-Ry-Rz angles of a mount rotation, degrees."""
    ry = math.asin(max(-1.0, min(1.0, mount[0, 2])))
    if abs(math.cos(ry)) > 1e-9:
        rx = math.atan2(-mount[1, 2], mount[2, 2])
        rz = math.atan2(-mount[0, 1], mount[0, 0])
    else:
        rx = math.atan2(mount[1, 0], mount[1, 1])
        rz = 0.0
    return [math.degrees(rx), math.degrees(ry), math.degrees(rz)]


def save_robot(model: RobotModel, path: str | Path):
    Path(path).write_text(json.dumps(robot_to_dict(model), indent=2) + "\n")


# ---------------------------------------------------------------------------
# Built-in dual-arm fixture
# ---------------------------------------------------------------------------

# Per link: mass [kg], CoM [m], CoM inertia (xx, yy, zz, xy, yz, xz) [kg m^2].
# The L2 y-CoM is -0.04 m: the published parameter table prints -0.45 for
# this entry, which is inconsistent with the published minimal-parameter
# values it accompanies; -0.04 reproduces them exactly.
_FIXTURE_TRUE = [
    (2000.0, (0.2, 0.3, 0.4), (1200.0, 1200.0, 1200.0, 35.52, 40.45, 45.71)),
    (50.0, (0.6, 0.05, -0.07), (3.1, 1.89, 20.51, 1.9, 3.65, 3.9)),
    (40.0, (0.4, -0.04, -0.05), (1.15, 1.68, 18.67, 0.61, 1.75, 1.5)),
    (30.0, (0.7, 0.4, 0.3), (24.45, 28.56, 35.53, 9.78, 9.1, 10.23)),
    (50.0, (0.55, 0.04, -0.04), (1.85, 1.62, 17.05, 1.5, 2.25, 3.71)),
    (35.0, (0.45, 0.05, 0.05), (2.55, 1.84, 14.28, 2.9, 1.55, 1.27)),
    (60.0, (0.6, -0.5, -0.35), (12.24, 31.45, 23.77, 9.1, 8.52, 8.67)),
]

_FIXTURE_OFFSET = [
    (1500.0, (0.0, 0.0, 0.0), (1000.0, 1000.0, 1000.0, 25.0, 20.45, 65.71)),
    (30.0, (0.4, 0.0, 0.0), (2.0, 1.0, 10.0, 0.9, 2.65, 2.9)),
    (20.0, (0.7, 0.0, 0.0), (1.0, 1.0, 28.0, 1.2, 2.75, 2.5)),
    (50.0, (0.5, 0.2, 0.1), (14.0, 20.0, 20.0, 4.6, 3.1, 1.23)),
    (40.0, (0.4, 0.0, 0.0), (1.0, 2.0, 9.0, 1.0, 1.25, 6.71)),
    (25.0, (0.3, 0.0, 0.0), (1.0, 1.5, 19.0, 1.5, 0.55, 4.27)),
    (30.0, (0.5, 0.2, 0.2), (6.0, 20.0, 35.0, 15.0, 18.52, 4.67)),
]

# (name, parent, twist, offset): two 3-link arms mounted on top of the base.
_FIXTURE_GEOMETRY = [
    ("arm1_link1", 0, 0.0, (0.7, 0.3, 0.9)),
    ("arm1_link2", 1, math.pi / 2, (1.0, 0.0, 0.0)),
    ("arm1_link3", 2, 0.0, (1.0, 0.0, 0.0)),
    ("arm2_link1", 0, 0.0, (-0.3, 0.3, 0.9)),
    ("arm2_link2", 4, math.pi / 2, (1.0, 0.0, 0.0)),
    ("arm2_link3", 5, 0.0, (1.0, 0.0, 0.0)),
]

WHEEL_SPIN_INERTIA = 1.0  # kg m^2 about the spin axis

# Spin axes along base z, y and x; the x wheel needs a mount rotation since
# a twist alone only reaches axes in the parent's y-z plane.
_FIXTURE_WHEELS = [
    ("wheel_z", (0.0, 0.0, 0.0)),
    ("wheel_y", (-90.0, 0.0, 0.0)),
    ("wheel_x", (0.0, 90.0, 0.0)),
]

FIXTURE_NAME = "dual-arm-12dof"


def _fixture_links(rows) -> list[Link]:
    with warnings.catch_warnings():
        # Some published fixture inertias are not PSD; keep them verbatim.
        warnings.simplefilter("ignore")
        params = [LinkParameterVector.from_com(*row) for row in rows]
    links = [Link("base", None, params[0])]
    for (name, parent, twist, offset), p in zip(_FIXTURE_GEOMETRY, params[1:]):
        links.append(Link(name, JointGeometry(parent, twist, np.asarray(offset)), p))
    wheel_params = LinkParameterVector(
        np.array([0.0, 0.0, WHEEL_SPIN_INERTIA, 0, 0, 0, 0, 0, 0, 0])
    )
    for name, rpy in _FIXTURE_WHEELS:
        mount = _rpy_matrix(*(math.radians(v) for v in rpy))
        links.append(
            Link(
                name,
                JointGeometry(0, 0.0, np.zeros(3), mount),
                wheel_params,
                is_wheel=True,
            )
        )
    return links


def builtin_dual_arm() -> RobotModel:
    """The 12-DoF dual-arm fixture with true inertial parameters."""
    return RobotModel(
        _fixture_links(_FIXTURE_TRUE),
        [JointLimits() for _ in range(6)],
        name=FIXTURE_NAME,
    )


def offset_guess(model: RobotModel) -> RobotModel:
    """Replace the fixture's inertial parameters by the offset guess rows."""
    if len(model.identified_indices) != len(_FIXTURE_OFFSET):
        raise ConfigError("offset_guess is defined for the dual-arm fixture")
    with warnings.catch_warnings():
        # The offset rows are deliberately unphysical.
        warnings.simplefilter("ignore")
        params = [LinkParameterVector.from_com(*row) for row in _FIXTURE_OFFSET]
    return model.with_link_parameters(params)
