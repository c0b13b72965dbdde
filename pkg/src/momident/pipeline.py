"""End-to-end identification pipeline with file-based stage handoff.

Stages run in the published order: trajectory optimization over all
direction combinations (step 1), interval pruning (step 2),
re-optimization over the kept combinations (step 3), simulation of the
true system, optional measurement noise, least-squares estimation and
Fourier-trajectory validation.  Every stage writes its artifact before
the next starts, and all randomness derives from one seed.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .estimation import (
    build_report,
    default_validation_trajectory,
    predict_base_twist,
    predict_joint_torques,
    rms_error,
    save_parameters,
)
from .excitation import (
    ExcitationConfig,
    IntervalTrajectory,
    PruneResult,
    SeedParameters,
    direction_combinations,
    expand_seed,
    full_seeds,
    optimize_seeds,
    prune_intervals,
)
from .minparam import minimal_basis, regressor
from .robot import RobotModel, builtin_dual_arm, load_robot, offset_guess
from .simulation import NoiseSpec, add_noise, momentum_response, series_to_dataset, simulate

logger = logging.getLogger(__name__)


@dataclass
class PipelineConfig:
    """File paths, seeds and stage toggles of one pipeline run."""

    output_dir: Path
    robot_path: str | None = None  # None: built-in dual-arm fixture
    guess_path: str | None = None  # None: fixture offset parameters
    seed: int = 42
    max_combos: int = 64
    noise: bool = True
    skip_excite: bool = False
    trajectory_path: str | None = None
    figures: bool = False
    step1_maxiter: int = 12
    step3_maxiter: int = 25
    samples_per_interval: int = 50
    period: float = 1.0
    sim_dt: float = 0.002
    sample_rate: float = 50.0
    validation_duration: float = 40.0
    artifacts: dict = field(default_factory=dict)

    def excitation_config(self, maxiter: int) -> ExcitationConfig:
        return ExcitationConfig(
            period=self.period,
            samples_per_interval=self.samples_per_interval,
            sqp_maxiter=maxiter,
        )


def load_models(config: PipelineConfig) -> tuple[RobotModel, RobotModel]:
    """The (true/best-known) robot and the initial-guess robot."""
    if config.robot_path is None:
        model = builtin_dual_arm()
    else:
        model = load_robot(config.robot_path)
    if config.guess_path is None:
        guess = offset_guess(model) if model.name == "dual-arm-12dof" else model
    else:
        guess = load_robot(config.guess_path)
        if len(guess.links) != len(model.links):
            raise ConfigError("guess robot must share the model's topology")
    return model, guess


# ---------------------------------------------------------------------------
# Trajectory artifact
# ---------------------------------------------------------------------------


def trajectory_to_dict(
    seeds: SeedParameters,
    combo_indices: np.ndarray,
    combos: np.ndarray,
    config: ExcitationConfig,
) -> dict:
    """JSON form of an exciting trajectory (angles in degrees)."""
    return {
        "period_s": config.period,
        "sample_rate_hz": config.sample_rate,
        "combination_indices": [int(i) for i in combo_indices],
        "signs": np.asarray(combos, dtype=int).tolist(),
        "start_deg": np.degrees(seeds.start).tolist(),
        "range_deg": np.degrees(seeds.span).tolist(),
    }


def trajectory_from_dict(doc: dict) -> tuple[IntervalTrajectory, dict]:
    try:
        seeds = SeedParameters(
            start=np.radians(doc["start_deg"]),
            span=np.radians(doc["range_deg"]),
        )
        combos = np.asarray(doc["signs"], dtype=int)
        period = float(doc["period_s"])
    except KeyError as exc:
        raise ConfigError(f"trajectory document: missing key {exc}") from exc
    return expand_seed(seeds, combos, period), doc


def load_trajectory(path: str | Path) -> tuple[IntervalTrajectory, dict]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"trajectory file not found: {path}")
    return trajectory_from_dict(json.loads(path.read_text()))


def select_combinations(
    n_joints: int, max_combos: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic subsample of the direction combinations.

    Returns (1-based indices into the full enumeration, sign rows).  A
    seeded uniform draw keeps the per-joint sign balance that a prefix of
    the enumeration would lose.
    """
    combos = direction_combinations(n_joints)
    total = len(combos)
    if max_combos >= total:
        return np.arange(1, total + 1), combos
    rng = np.random.default_rng(seed)
    pick = np.sort(rng.choice(total, size=max_combos, replace=False))
    return pick + 1, combos[pick]


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------


def excite_stage(
    model: RobotModel,
    guess: RobotModel,
    config: PipelineConfig,
) -> tuple[IntervalTrajectory, dict]:
    """Steps 1-3: optimize, prune, re-optimize; writes three artifacts."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    phi_guess = guess.standard_parameters()
    indices, combos = select_combinations(
        model.n_moving, config.max_combos, config.seed
    )

    cfg1 = config.excitation_config(config.step1_maxiter)
    logger.info("step 1: optimizing over %d direction combinations", len(combos))
    step1 = optimize_seeds(model, phi_guess, combos, cfg1)
    seeds1 = full_seeds(step1.seeds, model, cfg1)
    doc1 = trajectory_to_dict(seeds1, indices, combos, cfg1)
    doc1["cost"] = step1.cost
    doc1["converged"] = step1.converged
    (out / "trajectory_step1.json").write_text(json.dumps(doc1, indent=2) + "\n")
    config.artifacts["trajectory_step1"] = out / "trajectory_step1.json"

    logger.info("step 2: pruning %d intervals", len(combos))
    trajectory1 = expand_seed(seeds1, combos, cfg1.period)
    wheel_phi = np.concatenate(
        [model.links[i].params.values for i in model.wheel_indices]
    )
    series = momentum_response(
        guess,
        np.concatenate([phi_guess, wheel_phi]),
        trajectory1,
        dt=cfg1.objective_dt,
        sample_rate=cfg1.sample_rate,
        record_applied=False,
    )
    dataset = series_to_dataset(series, guess, cfg1.sample_rate, cfg1.objective_dt)
    basis = minimal_basis(model)
    g_matrix, _ = regressor(dataset, guess, basis)
    prune = prune_intervals(g_matrix, len(combos), cfg1.u_max, cfg1.delta)
    kept_rows = np.asarray(prune.kept) - 1
    pruning_doc = {
        "kept_intervals": prune.kept,
        "kept_combination_indices": [int(indices[k]) for k in kept_rows],
        "n_candidates": len(combos),
        "ssv_history": prune.ssv,
        "cond_history": [None if math.isinf(c) else c for c in prune.cond],
    }
    (out / "pruning.json").write_text(json.dumps(pruning_doc, indent=2) + "\n")
    config.artifacts["pruning"] = out / "pruning.json"
    if config.figures:
        from . import plots

        plots.plot_pruning(prune.ssv, prune.cond, out / "figures" / "pruning.png")

    cfg3 = config.excitation_config(config.step3_maxiter)
    combos_kept = combos[kept_rows]
    logger.info("step 3: re-optimizing over %d kept combinations", len(combos_kept))
    step3 = optimize_seeds(model, phi_guess, combos_kept, cfg3, start=step1.seeds)
    seeds3 = full_seeds(step3.seeds, model, cfg3)
    doc3 = trajectory_to_dict(
        seeds3, np.asarray(indices)[kept_rows], combos_kept, cfg3
    )
    doc3["cost"] = step3.cost
    doc3["converged"] = step3.converged
    (out / "trajectory.json").write_text(json.dumps(doc3, indent=2) + "\n")
    config.artifacts["trajectory"] = out / "trajectory.json"
    return expand_seed(seeds3, combos_kept, cfg3.period), doc3


def run_pipeline(config: PipelineConfig) -> dict:
    """Execute all enabled stages; returns a summary dictionary."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    model, guess = load_models(config)
    basis = minimal_basis(model)
    phi_m_true = basis.matrix @ model.standard_parameters()
    summary: dict = {"seed": config.seed}

    if config.skip_excite:
        if config.trajectory_path is None:
            raise ConfigError("--skip-excite requires --trajectory")
        trajectory, doc = load_trajectory(config.trajectory_path)
        summary["trajectory"] = str(config.trajectory_path)
    else:
        trajectory, doc = excite_stage(model, guess, config)
        summary["trajectory"] = str(config.artifacts["trajectory"])
        summary["excite_cost"] = doc.get("cost")

    logger.info("simulating the exciting trajectory (%.0f s)", trajectory.duration)
    dataset = simulate(
        model,
        trajectory,
        dt=config.sim_dt,
        sample_rate=config.sample_rate,
    )
    dataset.save(out / "dataset.csv")
    config.artifacts["dataset"] = out / "dataset.csv"
    if config.noise:
        noisy = add_noise(dataset, NoiseSpec(seed=config.seed + 1))
        noisy.save(out / "dataset_noisy.csv")
        config.artifacts["dataset_noisy"] = out / "dataset_noisy.csv"
        estimation_input = noisy
    else:
        estimation_input = dataset

    logger.info("estimating minimal parameters")
    g_matrix, rhs = regressor(estimation_input, model, basis)
    report, _ = build_report(
        g_matrix,
        rhs,
        basis,
        case="case1" if config.noise else "noise-free",
        phi_true=phi_m_true,
    )
    report.save(out / "report.json")
    (out / "parameters_table.csv").write_text(report.to_csv())
    save_parameters(report.phi_m, out / "parameters_estimated.json", report.case)
    config.artifacts["report"] = out / "report.json"
    summary["eps_median"] = None if report.errors is None else report.errors.median
    summary["cond_number"] = report.cond_number
    summary["significant_svs"] = report.significant_svs
    if config.figures:
        from . import plots

        plots.plot_estimation(report, out / "figures" / "estimation.png")
        svals = np.linalg.svd(g_matrix, compute_uv=False)
        plots.plot_singular_values(
            svals, 1.0 / 300.0, out / "figures" / "singular_values.png"
        )

    logger.info("validating against the Fourier trajectory")
    validation = validate_parameters(
        model,
        basis,
        report.phi_m,
        phi_m_true,
        duration=config.validation_duration,
        output_dir=out,
        figures=config.figures,
    )
    config.artifacts["validation"] = out / "validation.json"
    summary["twist_rms"] = validation["twist_rms"]
    summary["torque_rms"] = validation["torque_rms"]
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return summary


def validate_parameters(
    model: RobotModel,
    basis,
    phi_m_hat: np.ndarray,
    phi_m_ref: np.ndarray,
    *,
    duration: float = 40.0,
    trajectory=None,
    output_dir: Path | None = None,
    figures: bool = False,
) -> dict:
    """Predict base twist and torques with two parameter sets and compare.

    ``phi_m_ref`` plays the ground truth (inverse dynamics with the true
    minimal parameters); RMS errors per channel summarize the match.
    """
    if trajectory is None:
        trajectory = default_validation_trajectory(model, duration=duration)
    twist_ref = predict_base_twist(
        model, basis, phi_m_ref, trajectory, duration=duration
    )
    twist_hat = predict_base_twist(
        model, basis, phi_m_hat, trajectory, duration=duration
    )
    torque_ref = predict_joint_torques(
        model, basis, phi_m_ref, trajectory, duration=duration
    )
    torque_hat = predict_joint_torques(
        model, basis, phi_m_hat, trajectory, duration=duration
    )
    twist_err = np.hstack(
        [
            twist_hat.linear_velocity - twist_ref.linear_velocity,
            twist_hat.angular_velocity - twist_ref.angular_velocity,
        ]
    )
    torque_err = torque_hat.torques - torque_ref.torques
    twist_rms = [
        rms_error(twist_hat.linear_velocity[:, k], twist_ref.linear_velocity[:, k])
        for k in range(3)
    ] + [
        rms_error(twist_hat.angular_velocity[:, k], twist_ref.angular_velocity[:, k])
        for k in range(3)
    ]
    torque_rms = [
        rms_error(torque_hat.torques[:, j], torque_ref.torques[:, j])
        for j in range(torque_err.shape[1])
    ]
    result = {"twist_rms": twist_rms, "torque_rms": torque_rms}
    if output_dir is not None:
        output_dir = Path(output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        n_torque = len(torque_err)
        table = np.hstack(
            [
                twist_ref.time[:, None],
                twist_err,
                np.vstack(
                    [
                        torque_err,
                        np.full(
                            (len(twist_err) - n_torque, torque_err.shape[1]), np.nan
                        ),
                    ]
                ),
            ]
        )
        header = ",".join(
            ["t"]
            + [f"twist_err_{c}" for c in ("vx", "vy", "vz", "wx", "wy", "wz")]
            + [f"torque_err_{j + 1}" for j in range(torque_err.shape[1])]
        )
        np.savetxt(
            output_dir / "errors.csv",
            table,
            delimiter=",",
            header=header,
            comments="",
            fmt="%.10g",
        )
        (output_dir / "validation.json").write_text(
            json.dumps(result, indent=2) + "\n"
        )
        if figures:
            from . import plots

            plots.plot_validation(
                twist_ref.time,
                twist_err,
                torque_err,
                output_dir / "figures" / "validation.png",
            )
    return result
