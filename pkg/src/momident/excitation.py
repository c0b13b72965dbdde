"""Exciting trajectory generation: direction combinations, cycloidal
intervals, seed parameters, constraints, objective and interval pruning.

A trajectory is a sequence of one-period cycloidal intervals.  In each
interval every actuated joint moves by a fixed range in the direction
prescribed by that interval's direction combination, so the whole
trajectory is parameterized by two numbers per joint (start and range)
plus the list of combinations.  The optimizer minimizes the regressor
condition number plus an inverse signal-power term, subject to linear
position constraints and bound constraints derived in closed form from
the cycloid's extremal rate and acceleration.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import ConfigError
from .minparam import MinimalBasis, minimal_basis, regressor
from .robot import JointLimits, RobotModel
from .simulation import momentum_response, series_to_dataset

logger = logging.getLogger(__name__)


def direction_combinations(n_joints: int) -> np.ndarray:
    """All sign patterns over the actuated joints, first joint fixed +1.

    Row ``i`` encodes the binary digits of ``i`` over joints 2..J, most
    significant digit first, with 0 mapping to +1 and 1 to -1; there are
    ``2**(J-1)`` rows.
    """
    if n_joints < 1:
        raise ValueError("need at least one joint")
    count = 2 ** (n_joints - 1)
    combos = np.ones((count, n_joints), dtype=int)
    for i in range(count):
        for bit in range(n_joints - 1):
            if (i >> (n_joints - 2 - bit)) & 1:
                combos[i, bit + 1] = -1
    return combos


def cycloid(
    theta_start: float | np.ndarray,
    theta_end: float | np.ndarray,
    period: float,
    t: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cycloidal position, rate and acceleration at time ``t`` in [0, T].

    Boundary rates and accelerations vanish; the rate keeps a single sign
    matching ``theta_end - theta_start`` and peaks at ``2 delta / T`` in
    the middle of the interval.
    """
    if t < 0.0 or t > period:
        raise ValueError(f"t={t} outside the interval [0, {period}]")
    delta = np.asarray(theta_end) - np.asarray(theta_start)
    phase = 2.0 * math.pi * t / period
    q = theta_start + delta * (t / period - math.sin(phase) / (2.0 * math.pi))
    qd = delta / period * (1.0 - math.cos(phase))
    qdd = 2.0 * math.pi * delta / period**2 * math.sin(phase)
    return q, qd, qdd


@dataclass(frozen=True)
class SeedParameters:
    """Per-joint start angle and (positive) range, radians."""

    start: np.ndarray
    span: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "start", np.asarray(self.start, dtype=float))
        object.__setattr__(self, "span", np.asarray(self.span, dtype=float))
        if self.start.shape != self.span.shape:
            raise ValueError("start and span must have equal length")
        if np.any(self.span <= 0):
            raise ValueError("range parameters must be positive")


@dataclass(frozen=True)
class IntervalTrajectory:
    """Concatenated cycloidal intervals for all actuated joints.

    ``knots[j, k]`` is joint j's position at the k-th interval boundary;
    consecutive knots differ by exactly the joint's range parameter.
    """

    knots: np.ndarray  # (J, K+1)
    period: float

    @property
    def n_joints(self) -> int:
        return self.knots.shape[0]

    @property
    def n_intervals(self) -> int:
        return self.knots.shape[1] - 1

    @property
    def duration(self) -> float:
        return self.n_intervals * self.period

    def interval_index(self, t: float) -> int:
        return min(int(t / self.period), self.n_intervals - 1)

    def sample(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        q, qd, _ = self.sample_full(t)
        return q, qd

    def sample_full(self, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        k = self.interval_index(t)
        tau = min(max(t - k * self.period, 0.0), self.period)
        return cycloid(self.knots[:, k], self.knots[:, k + 1], self.period, tau)


def expand_seed(
    seeds: SeedParameters, combos: np.ndarray, period: float
) -> IntervalTrajectory:
    """Build the interval endpoints from seeds and direction combinations.

    The first interval starts at the start parameter; every interval adds
    or subtracts the range according to its combination's sign for that
    joint, with positional continuity across intervals.
    """
    combos = np.asarray(combos)
    if combos.ndim != 2 or combos.shape[1] != len(seeds.start):
        raise ValueError("combination array must be (K, J)")
    steps = combos.T * seeds.span[:, None]
    knots = np.hstack(
        [seeds.start[:, None], seeds.start[:, None] + np.cumsum(steps, axis=1)]
    )
    return IntervalTrajectory(knots=knots, period=period)


@dataclass(frozen=True)
class ExcitationConfig:
    """Tunables of the excitation design stage."""

    weight: float = 1.0  # objective weighting of the inverse signal power
    period: float = 1.0  # interval duration, s
    samples_per_interval: int = 50
    u_max: int = 5  # pruning patience for rank-neutral intervals
    delta: float = 1.0 / 300.0  # significant singular value fraction
    wheel_start: float = 0.0
    wheel_span: float = 3.0 * math.pi
    sqp_maxiter: int = 30
    sqp_ftol: float = 1e-6
    fd_step: float = 1e-6  # finite-difference step of the optimizer
    span_floor: float = 1e-3  # lower bound factor on range parameters
    condition_sentinel: float = 1e-14  # sigma_min cutoff for infinite cost

    @property
    def objective_dt(self) -> float:
        return self.period / self.samples_per_interval

    @property
    def sample_rate(self) -> float:
        return self.samples_per_interval / self.period


@dataclass(frozen=True)
class SeedConstraints:
    """Bound and linear position constraints on the arm decision vector.

    The decision vector is ``x = [start_1..start_n, span_1..span_n]``.
    Position limits are exactly linear in the seeds because the interval
    endpoints are affine in them; rate and acceleration limits reduce to
    the closed-form upper bound on each range parameter.
    """

    bounds: list[tuple[float, float]]
    matrix: np.ndarray  # A x >= lower, row per constraint
    lower: np.ndarray
    span_max: np.ndarray

    def residual(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x - self.lower

    def satisfied(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        inside = all(
            lo - tol <= v <= hi + tol for v, (lo, hi) in zip(x, self.bounds)
        )
        return inside and bool(np.all(self.residual(x) >= -tol))


def span_upper_bound(limits: JointLimits, period: float) -> float:
    """Largest range parameter honoring rate and acceleration limits.

    The cycloid's extremal rate is ``2 d / T`` and extremal acceleration
    ``2 pi d / T^2``, so ``d <= min(T/2 rate, T^2/(2 pi) accel)``.
    """
    bound = min(
        period / 2.0 * limits.rate,
        period**2 / (2.0 * math.pi) * limits.acceleration,
    )
    if bound <= 0:
        raise ConfigError("joint limits admit no motion (range bound <= 0)")
    return bound


def constraint_set(
    limits: list[JointLimits], combos: np.ndarray, period: float
) -> SeedConstraints:
    """Constraints on the arm seeds for the given direction combinations."""
    n = len(limits)
    combos = np.asarray(combos)
    bounds: list[tuple[float, float]] = []
    span_max = np.array([span_upper_bound(l, period) for l in limits])
    rows = []
    lower = []
    for j, lim in enumerate(limits):
        lo, hi = lim.position
        cum = np.concatenate([[0.0], np.cumsum(combos[:, j])])
        c_min, c_max = cum.min(), cum.max()
        # start_j + c_max span_j <= hi  and  start_j + c_min span_j >= lo
        row = np.zeros(2 * n)
        row[j], row[n + j] = -1.0, -c_max
        rows.append(row)
        lower.append(-hi)
        row = np.zeros(2 * n)
        row[j], row[n + j] = 1.0, c_min
        rows.append(row)
        lower.append(lo)
    for lim in limits:
        bounds.append(lim.position)
    for j in range(n):
        bounds.append((span_max[j] * 1e-6, span_max[j]))
    return SeedConstraints(
        bounds=bounds,
        matrix=np.vstack(rows),
        lower=np.asarray(lower),
        span_max=span_max,
    )


def full_seeds(
    arm_seeds: SeedParameters, model: RobotModel, config: ExcitationConfig
) -> SeedParameters:
    """Append the predetermined wheel seeds to the arm seeds."""
    w = model.n_wheels
    return SeedParameters(
        start=np.concatenate([arm_seeds.start, np.full(w, config.wheel_start)]),
        span=np.concatenate([arm_seeds.span, np.full(w, config.wheel_span)]),
    )


def significant_singular_values(matrix: np.ndarray, delta: float) -> int:
    """Count of singular values above ``delta`` times the largest."""
    if matrix.size == 0 or not np.any(matrix):
        return 0
    svals = np.linalg.svd(matrix, compute_uv=False)
    return int(np.sum(svals > delta * svals[0]))


def condition_number(
    matrix: np.ndarray, sentinel: float = 1e-14
) -> float:
    """``sigma_max / sigma_min``; infinity when effectively rank deficient."""
    svals = np.linalg.svd(matrix, compute_uv=False)
    if svals[-1] < sentinel * svals[0]:
        return math.inf
    return float(svals[0] / svals[-1])


def _guess_regressor(
    seeds: SeedParameters,
    model: RobotModel,
    phi_guess: np.ndarray,
    combos: np.ndarray,
    config: ExcitationConfig,
    basis: MinimalBasis,
):
    """Regressor and signal channels from simulating the guess model."""
    trajectory = expand_seed(
        full_seeds(seeds, model, config)
        if len(seeds.start) == model.n
        else seeds,
        combos,
        config.period,
    )
    wheel_phi = np.concatenate(
        [model.links[i].params.values for i in model.wheel_indices]
    )
    phi_all = np.concatenate([phi_guess, wheel_phi])
    series = momentum_response(
        model,
        phi_all,
        trajectory,
        dt=config.objective_dt,
        sample_rate=config.sample_rate,
        record_applied=False,
    )
    dataset = series_to_dataset(series, model, config.sample_rate, config.objective_dt)
    g, _ = regressor(dataset, model, basis)
    signal_sq = (
        float(np.sum(series.linear_velocity**2))
        + float(np.sum(series.angular_velocity**2))
        + float(np.sum(series.joint_rates**2))
    )
    return g, signal_sq, series.n_samples


def objective(
    seeds: SeedParameters,
    model: RobotModel,
    phi_guess: np.ndarray,
    combos: np.ndarray,
    config: ExcitationConfig,
    basis: MinimalBasis | None = None,
) -> float:
    """Exciting-trajectory cost for the given seeds.

    ``kappa(G_m) + w N_t N_m / sum h^2`` where the regressor comes from
    simulating the guess model along the seed trajectory (base twist from
    momentum conservation) and ``h`` runs over all base twist components
    and joint rates.  Degenerate seeds yield an infinite sentinel.
    """
    if basis is None:
        basis = minimal_basis(model)
    g, signal_sq, n_samples = _guess_regressor(
        seeds, model, phi_guess, combos, config, basis
    )
    kappa = condition_number(g, config.condition_sentinel)
    if not math.isfinite(kappa) or signal_sq == 0.0:
        return math.inf
    n_channels = 6 + model.n_moving
    return kappa + config.weight * n_channels * n_samples / signal_sq


@dataclass
class SeedOptimization:
    """Result of one constrained seed optimization."""

    seeds: SeedParameters  # arm joints only
    cost: float
    converged: bool
    message: str
    n_evaluations: int
    initial_cost: float


def initial_seeds(model: RobotModel, config: ExcitationConfig) -> SeedParameters:
    """Default starting point: zero starts, half the admissible range."""
    span_max = np.array(
        [span_upper_bound(l, config.period) for l in model.joint_limits]
    )
    return SeedParameters(start=np.zeros(model.n), span=0.5 * span_max)


def optimize_seeds(
    model: RobotModel,
    phi_guess: np.ndarray,
    combos: np.ndarray,
    config: ExcitationConfig,
    start: SeedParameters | None = None,
) -> SeedOptimization:
    """Constrained SQP minimization of the excitation objective.

    Deterministic for a fixed starting point and configuration.  If the
    solver reports non-convergence the best evaluated point is returned
    with ``converged=False``.
    """
    basis = minimal_basis(model)
    constraints = constraint_set(list(model.joint_limits), combos, config.period)
    if start is None:
        start = initial_seeds(model, config)
    n = model.n
    x0 = np.concatenate([start.start, start.span])

    big = 1e18  # finite stand-in for the infinite sentinel inside SQP
    best = {"x": x0.copy(), "cost": math.inf, "evals": 0}

    def fun(x: np.ndarray) -> float:
        seeds = SeedParameters(
            start=x[:n], span=np.maximum(x[n:], constraints.span_max * 1e-9)
        )
        cost = objective(seeds, model, phi_guess, combos, config, basis)
        best["evals"] += 1
        if cost < best["cost"]:
            best["cost"], best["x"] = cost, x.copy()
        return min(cost, big)

    initial_cost = fun(x0)
    result = minimize(
        fun,
        x0,
        method="SLSQP",
        bounds=constraints.bounds,
        constraints=[
            {
                "type": "ineq",
                "fun": constraints.residual,
                "jac": lambda _x: constraints.matrix,
            }
        ],
        options={
            "maxiter": config.sqp_maxiter,
            "ftol": config.sqp_ftol,
            "eps": config.fd_step,
        },
    )
    x = result.x if result.fun <= best["cost"] else best["x"]
    cost = min(float(result.fun), best["cost"])
    if not result.success:
        logger.warning("seed optimization did not converge: %s", result.message)
    return SeedOptimization(
        seeds=SeedParameters(start=x[:n], span=x[n:]),
        cost=cost,
        converged=bool(result.success),
        message=str(result.message),
        n_evaluations=best["evals"],
        initial_cost=initial_cost,
    )


@dataclass
class PruneResult:
    """Outcome of the interval pruning pass."""

    kept: list[int]  # 1-based interval indices, strictly increasing
    ssv: list[int]  # significant singular values after each acceptance
    cond: list[float]  # condition number after each acceptance


def prune_intervals(
    g_matrix: np.ndarray,
    n_intervals: int,
    u_max: int = 5,
    delta: float = 1.0 / 300.0,
) -> PruneResult:
    """Greedy interval selection on an interval-blocked regressor.

    The rows of ``g_matrix`` must be grouped contiguously per interval.
    Intervals are kept while the row count does not exceed the column
    count; afterwards an interval is kept if it raises the number of
    significant singular values, lowers the condition number, or keeps
    the count unchanged for at most ``u_max`` consecutive acceptances
    (the patience counter resets on improvement or rejection).
    """
    rows, cols = g_matrix.shape
    if rows % n_intervals != 0:
        raise ValueError(
            f"{rows} rows cannot be split into {n_intervals} interval blocks"
        )
    block = rows // n_intervals

    def interval_rows(index: int) -> np.ndarray:
        return g_matrix[(index - 1) * block : index * block]

    i, u = 0, 0
    kept: list[int] = []
    accum = np.empty((0, cols))
    while accum.shape[0] <= cols:
        i += 1
        if i > n_intervals:
            break
        kept.append(i)
        accum = np.vstack([accum, interval_rows(i)])
    s_prev = significant_singular_values(accum, delta)
    cn_prev = condition_number(accum)
    ssv_hist, cond_hist = [s_prev], [cn_prev]
    while i < n_intervals:
        i += 1
        trial = np.vstack([accum, interval_rows(i)])
        s_now = significant_singular_values(trial, delta)
        cn_now = condition_number(trial)
        if (
            s_now > s_prev
            or cn_now < cn_prev
            or (s_now == s_prev and u <= u_max)
        ):
            kept.append(i)
            accum = trial
            if s_now == s_prev and u <= u_max:
                u += 1
            else:
                u = 0
            s_prev, cn_prev = s_now, cn_now
            ssv_hist.append(s_now)
            cond_hist.append(cn_now)
        else:
            u = 0
    return PruneResult(kept=kept, ssv=ssv_hist, cond=cond_hist)
