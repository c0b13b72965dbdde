"""Least-squares estimation, error metrics and validation predictions.

Estimation solves the overdetermined regressor equations by an orthogonal
factorization with column scaling (the columns span several orders of
magnitude).  Validation runs a Fourier-series joint trajectory through
the momentum-conserving response with estimated parameters, predicting
the base twist and the joint torques, and compares both against the
true-parameter predictions through RMS errors.

Torques come from subtree momentum rates: the motor torque of joint j is
the joint-axis component of ``d/dt l_sub - r_j x d/dt p_sub`` where the
sums run over the links distal of the joint.  Evaluated on the reduced
(minimal-parameter) momentum contributions this is exact: the folded
parameter pieces that the reduction moves across the joint carry zero
torque about its axis.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, NumericalError, UnderdeterminedWarning
from .excitation import condition_number, significant_singular_values
from .minparam import (
    MinimalBasis,
    _batched_states,
    batched_link_momentum,
)
from .robot import RobotModel
from .simulation import (
    StateSeries,
    momentum_response,
    series_to_dataset,
)


@dataclass
class EstimateResult:
    """Least-squares solution with rank diagnostics."""

    phi: np.ndarray
    rank: int
    deficient: bool
    null_space: np.ndarray | None  # columns span the unexcited directions
    residual_rms: float


def estimate(
    g_matrix: np.ndarray, rhs: np.ndarray, rcond: float = 1e-10
) -> EstimateResult:
    """Minimize ``||G phi - m||`` by SVD with per-column scaling.

    Columns are normalized to unit RMS before the solve and the solution
    rescaled afterwards; with rank deficiency the minimum-norm solution
    is returned together with the unexcited parameter directions.
    """
    rows, cols = g_matrix.shape
    if rows <= cols:
        warnings.warn(
            f"{rows} equations for {cols} parameters", UnderdeterminedWarning
        )
    scale = np.sqrt(np.mean(g_matrix**2, axis=0))
    scale[scale == 0.0] = 1.0
    scaled = g_matrix / scale
    solution, _, rank, _ = np.linalg.lstsq(scaled, rhs, rcond=rcond)
    phi = solution / scale
    deficient = rank < cols
    null_space = None
    if deficient:
        _, svals, vh = np.linalg.svd(scaled, full_matrices=False)
        null = vh[svals <= rcond * svals[0]].T / scale[:, None]
        null_space = null / np.linalg.norm(null, axis=0)
        warnings.warn(
            f"rank-deficient regressor: rank {rank} of {cols}; "
            "returning the minimum-norm solution",
            UnderdeterminedWarning,
        )
    residual = g_matrix @ phi - rhs
    return EstimateResult(
        phi=phi,
        rank=int(rank),
        deficient=deficient,
        null_space=null_space,
        residual_rms=float(np.sqrt(np.mean(residual**2))),
    )


@dataclass
class RelativeErrors:
    """Per-parameter relative errors with zero-truth entries excluded."""

    per_parameter: np.ndarray  # NaN where the truth is zero
    median: float
    maximum: float
    excluded: tuple[int, ...]


def relative_errors(
    phi_hat: np.ndarray, phi_true: np.ndarray, zero_tol: float = 1e-12
) -> RelativeErrors:
    """``|(phi - phi_hat) / phi|`` statistics against the known truth."""
    phi_hat = np.asarray(phi_hat, dtype=float)
    phi_true = np.asarray(phi_true, dtype=float)
    if phi_hat.shape != phi_true.shape:
        raise ValueError("estimate and truth must have equal length")
    errors = np.full(len(phi_true), np.nan)
    usable = np.abs(phi_true) > zero_tol
    errors[usable] = np.abs(
        (phi_true[usable] - phi_hat[usable]) / phi_true[usable]
    )
    finite = errors[usable]
    return RelativeErrors(
        per_parameter=errors,
        median=float(np.median(finite)) if finite.size else math.nan,
        maximum=float(np.max(finite)) if finite.size else math.nan,
        excluded=tuple(int(i) for i in np.flatnonzero(~usable)),
    )


def rms_error(series_a: np.ndarray, series_b: np.ndarray) -> float:
    """Root-mean-square difference of two equally long series."""
    a = np.asarray(series_a, dtype=float)
    b = np.asarray(series_b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("series lengths differ")
    return float(np.sqrt(np.mean((a - b) ** 2)))


# ---------------------------------------------------------------------------
# Validation trajectories
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FourierTrajectory:
    """Finite Fourier series joint trajectory for validation runs."""

    offsets: np.ndarray  # (J,)
    sin_coeffs: np.ndarray  # (J, H)
    cos_coeffs: np.ndarray  # (J, H)
    frequency: float  # base angular frequency, rad/s
    duration: float

    def __post_init__(self):
        for name in ("offsets", "sin_coeffs", "cos_coeffs"):
            object.__setattr__(
                self, name, np.atleast_1d(np.asarray(getattr(self, name), float))
            )
        if self.frequency <= 0:
            raise ConfigError("fourier base frequency must be positive")
        if self.sin_coeffs.ndim != 2 or self.sin_coeffs.shape[1] < 1:
            raise ConfigError("at least one harmonic required")

    @property
    def n_joints(self) -> int:
        return len(self.offsets)

    @property
    def n_harmonics(self) -> int:
        return self.sin_coeffs.shape[1]

    def sample(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        i = np.arange(1, self.n_harmonics + 1)
        phase = i * self.frequency * t
        q = (
            self.offsets
            + self.sin_coeffs @ np.sin(phase)
            + self.cos_coeffs @ np.cos(phase)
        )
        qd = self.sin_coeffs @ (i * self.frequency * np.cos(phase)) - (
            self.cos_coeffs @ (i * self.frequency * np.sin(phase))
        )
        return q, qd

    def to_dict(self) -> dict:
        return {
            "frequency_rad_s": self.frequency,
            "duration_s": self.duration,
            "offsets_deg": np.degrees(self.offsets).tolist(),
            "sin_deg": np.degrees(self.sin_coeffs).tolist(),
            "cos_deg": np.degrees(self.cos_coeffs).tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FourierTrajectory":
        try:
            return cls(
                offsets=np.radians(doc["offsets_deg"]),
                sin_coeffs=np.radians(doc["sin_deg"]),
                cos_coeffs=np.radians(doc["cos_deg"]),
                frequency=float(doc["frequency_rad_s"]),
                duration=float(doc["duration_s"]),
            )
        except KeyError as exc:
            raise ConfigError(f"fourier trajectory: missing key {exc}") from exc


# Fixed validation coefficients (degrees), two harmonics per arm joint.
_VALIDATION_TABLE_DEG = [
    # offset, (sin1, sin2), (cos1, cos2)
    (20.0, (8.0, -3.0), (5.0, 2.0)),
    (-35.0, (6.0, 4.0), (-7.0, 3.0)),
    (15.0, (-9.0, 2.0), (4.0, -5.0)),
    (40.0, (7.0, -4.0), (-6.0, 2.0)),
    (-25.0, (-5.0, 6.0), (8.0, -2.0)),
    (10.0, (4.0, 5.0), (-3.0, -6.0)),
]


def default_validation_trajectory(
    model: RobotModel, duration: float = 40.0, frequency: float = math.pi / 20.0
) -> FourierTrajectory:
    """Repository-default Fourier validation trajectory.

    Arm joints follow a fixed two-harmonic table with amplitudes below
    ten degrees; wheels stay parked.
    """
    rows = [_VALIDATION_TABLE_DEG[j % len(_VALIDATION_TABLE_DEG)] for j in range(model.n)]
    offsets = np.radians([r[0] for r in rows] + [0.0] * model.n_wheels)
    sin_c = np.radians([list(r[1]) for r in rows] + [[0.0, 0.0]] * model.n_wheels)
    cos_c = np.radians([list(r[2]) for r in rows] + [[0.0, 0.0]] * model.n_wheels)
    return FourierTrajectory(
        offsets=offsets,
        sin_coeffs=sin_c,
        cos_coeffs=cos_c,
        frequency=frequency,
        duration=duration,
    )


# ---------------------------------------------------------------------------
# Predictions from estimated parameters
# ---------------------------------------------------------------------------


def _full_parameter_vector(
    model: RobotModel, basis: MinimalBasis, phi_m: np.ndarray
) -> np.ndarray:
    """Embedded minimal parameters plus the known wheel parameters."""
    wheel_phi = [model.links[i].params.values for i in model.wheel_indices]
    return np.concatenate([basis.embed(phi_m)] + wheel_phi)


def predict_base_twist(
    model: RobotModel,
    basis: MinimalBasis,
    phi_m: np.ndarray,
    trajectory,
    *,
    duration: float | None = None,
    dt: float = 0.002,
    sample_rate: float = 50.0,
) -> StateSeries:
    """Base twist response predicted from minimal parameters.

    Identical momentum-conservation solve as the simulator, with the
    reduced matrices and ``phi_m`` in place of the standard form (the
    embedding into zero-padded standard slots evaluates exactly
    ``K_m @ phi_m``).
    """
    return momentum_response(
        model,
        _full_parameter_vector(model, basis, phi_m),
        trajectory,
        duration=duration,
        dt=dt,
        sample_rate=sample_rate,
        record_applied=False,
    )


@dataclass
class TorquePrediction:
    """Joint torque series predicted from minimal parameters."""

    time: np.ndarray
    torques: np.ndarray  # (N, n) arm joints
    series: StateSeries  # fine-grid state series used for differencing
    step: float  # central-difference step


def predict_joint_torques(
    model: RobotModel,
    basis: MinimalBasis,
    phi_m: np.ndarray,
    trajectory,
    *,
    duration: float | None = None,
    diff_step: float = 1e-3,
    sample_rate: float = 50.0,
    series: StateSeries | None = None,
    richardson_tol: float = 1e-5,
) -> TorquePrediction:
    """Arm joint torques along a trajectory from minimal parameters.

    The trajectory is integrated (or taken from ``series``) on a grid of
    ``diff_step`` seconds; subtree momentum sums of the reduced per-link
    contributions are centrally differenced along that grid and projected
    on the joint axes.  Torques are reported at ``sample_rate``.  A
    doubled-step comparison guards against a too-coarse grid; torques are
    linear in ``phi_m`` for a fixed state series.
    """
    if series is None:
        series = momentum_response(
            model,
            _full_parameter_vector(model, basis, phi_m),
            trajectory,
            duration=duration,
            dt=diff_step,
            sample_rate=1.0 / diff_step,
            record_applied=False,
        )
    dt = series.time[1] - series.time[0] if series.n_samples > 1 else diff_step
    dataset = series_to_dataset(series, model, 1.0 / dt, dt)
    rot, pos, vel, omg = _batched_states(model, dataset)
    phi_emb = basis.embed(phi_m)

    arm_links = list(basis.identified[1:])  # base carries no joint
    p_link = {}
    l_link = {}
    for b, link in enumerate(basis.identified):
        if link == 0:
            continue
        p_link[link], l_link[link] = batched_link_momentum(
            rot[link], pos[link], vel[link], omg[link], phi_emb[10 * b : 10 * b + 10]
        )

    n_samples = series.n_samples
    if n_samples < 5:
        raise NumericalError("need at least five samples to differentiate")
    torques_h = np.empty((n_samples - 4, len(arm_links)))
    torques_2h = np.empty_like(torques_h)
    inner = slice(2, n_samples - 2)
    for col, joint in enumerate(arm_links):
        sub = [i for i in model.subtree(joint) if not model.links[i].is_wheel]
        p_sub = sum(p_link[i] for i in sub)
        l_sub = sum(l_link[i] for i in sub)
        axis = rot[joint][inner, :, 2]
        r_j = pos[joint][inner]
        for target, h_steps in ((torques_h, 1), (torques_2h, 2)):
            scale = 1.0 / (2.0 * h_steps * dt)
            lo = slice(2 - h_steps, n_samples - 2 - h_steps)
            hi = slice(2 + h_steps, n_samples - 2 + h_steps)
            p_dot = (p_sub[hi] - p_sub[lo]) * scale
            l_dot = (l_sub[hi] - l_sub[lo]) * scale
            moment = l_dot - np.cross(r_j, p_dot)
            target[:, col] = np.einsum("ni,ni->n", axis, moment)
    mismatch = float(np.max(np.abs(torques_h - torques_2h))) if torques_h.size else 0.0
    if mismatch > richardson_tol * 4.0:
        # Doubling the step moves tau by 4x the halving change at O(h^2).
        raise NumericalError(
            f"torque differencing not converged: step-doubling changes "
            f"tau by {mismatch:.2e} N m (limit {richardson_tol * 4.0:.2e})"
        )
    stride = max(1, round(1.0 / (sample_rate * dt)))
    keep = np.arange(0, n_samples - 4, stride)
    return TorquePrediction(
        time=series.time[inner][keep],
        torques=torques_h[keep],
        series=series,
        step=dt,
    )


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


def parameter_units(basis: MinimalBasis) -> list[str]:
    """Physical unit of each minimal parameter."""
    units = ["kg*m^2"] * 6 + ["kg"] + ["kg*m"] * 3
    for _ in basis.identified[1:]:
        units += ["kg*m^2"] * 5 + ["kg*m"] * 2
    return units


@dataclass
class EstimationReport:
    """Everything the estimation stage reports for one case."""

    case: str
    phi_m: np.ndarray
    cond_number: float
    significant_svs: int
    rank: int
    deficient: bool
    residual_rms: float
    n_samples: int
    phi_true: np.ndarray | None = None
    errors: RelativeErrors | None = None
    units: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        doc = {
            "case": self.case,
            "phi_m": self.phi_m.tolist(),
            "cond_number": self.cond_number,
            "significant_svs": self.significant_svs,
            "rank": self.rank,
            "deficient": self.deficient,
            "residual_rms": self.residual_rms,
            "n_samples": self.n_samples,
            "units": self.units,
        }
        if self.phi_true is not None:
            doc["phi_true"] = self.phi_true.tolist()
        if self.errors is not None:
            per = self.errors.per_parameter
            doc["relative_errors"] = [
                None if math.isnan(v) else v for v in per.tolist()
            ]
            doc["eps_median"] = self.errors.median
            doc["eps_max"] = self.errors.maximum
            doc["excluded_parameters"] = list(self.errors.excluded)
        return doc

    def save(self, path: str | Path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    def to_csv(self) -> str:
        """Table-style export: index, unit, true, estimated, error."""
        lines = ["index,unit,true_value,estimated,relative_error_percent"]
        for i, value in enumerate(self.phi_m):
            unit = self.units[i] if i < len(self.units) else ""
            truth = "" if self.phi_true is None else f"{self.phi_true[i]:.6g}"
            err = ""
            if self.errors is not None:
                e = self.errors.per_parameter[i]
                err = "" if math.isnan(e) else f"{100.0 * e:.4g}"
            lines.append(f"{i + 1},{unit},{truth},{value:.6g},{err}")
        return "\n".join(lines) + "\n"


def build_report(
    g_matrix: np.ndarray,
    rhs: np.ndarray,
    basis: MinimalBasis,
    *,
    case: str = "",
    phi_true: np.ndarray | None = None,
    delta: float = 1.0 / 300.0,
    rcond: float = 1e-10,
) -> tuple[EstimationReport, EstimateResult]:
    """Estimate from a regressor system and assemble the report."""
    result = estimate(g_matrix, rhs, rcond=rcond)
    report = EstimationReport(
        case=case,
        phi_m=result.phi,
        cond_number=condition_number(g_matrix),
        significant_svs=significant_singular_values(g_matrix, delta),
        rank=result.rank,
        deficient=result.deficient,
        residual_rms=result.residual_rms,
        n_samples=len(rhs) // 6,
        phi_true=phi_true,
        errors=None if phi_true is None else relative_errors(result.phi, phi_true),
        units=parameter_units(basis),
    )
    return report, result


def save_parameters(phi_m: np.ndarray, path: str | Path, case: str = ""):
    Path(path).write_text(
        json.dumps({"case": case, "phi_m": np.asarray(phi_m).tolist()}, indent=2)
        + "\n"
    )


def load_parameters(path: str | Path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"parameter file not found: {path}")
    doc = json.loads(path.read_text())
    if "phi_m" not in doc:
        raise ConfigError(f"{path} does not contain a 'phi_m' entry")
    return np.asarray(doc["phi_m"], dtype=float)
