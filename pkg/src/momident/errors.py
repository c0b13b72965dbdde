"""Exception hierarchy shared across the package.

``ConfigError`` covers bad input files and schema violations (CLI exit
code 2), ``NumericalError`` covers runtime numerical failures such as
gimbal lock or a singular momentum system (CLI exit code 1).
"""


class MomidentError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(MomidentError):
    """Invalid configuration document, schema violation or missing file."""


class TopologyError(ConfigError):
    """Link graph is not a tree rooted at the base link."""


class NumericalError(MomidentError):
    """A numerical operation failed (singularity, non-convergence...)."""


class GimbalLockError(NumericalError):
    """Euler-rate map evaluated too close to the Z-X-Y singularity."""


class SingularSystemError(NumericalError):
    """The base momentum system is singular; parameters are unphysical."""


class UnderdeterminedWarning(UserWarning):
    """Regressor has fewer rows than identifiable parameters."""
