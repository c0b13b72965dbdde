"""Minimal inertial parameter identification of free-floating tree robots.

The package builds the momentum model of a tree-type free-floating robot
in linear form of its inertial parameters, reduces it to the minimal
(base) parameter set, designs exciting joint trajectories, simulates the
momentum-conserving response and estimates/validates the parameters from
pose and twist data alone.
"""

from .robot import (
    BaseState,
    JointGeometry,
    JointLimits,
    Link,
    LinkParameterVector,
    RobotModel,
    builtin_dual_arm,
    load_robot,
    offset_guess,
    save_robot,
)
from .minparam import MinimalBasis, minimal_basis, regressor
from .simulation import Dataset, NoiseSpec, add_noise, simulate

__version__ = "1.0.0"

__all__ = [
    "BaseState",
    "Dataset",
    "JointGeometry",
    "JointLimits",
    "Link",
    "LinkParameterVector",
    "MinimalBasis",
    "NoiseSpec",
    "RobotModel",
    "add_noise",
    "builtin_dual_arm",
    "load_robot",
    "minimal_basis",
    "offset_guess",
    "regressor",
    "save_robot",
    "simulate",
    "__version__",
]
