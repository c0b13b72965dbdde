"""Command line interface.

Subcommands mirror the pipeline stages (``model``, ``minparams``,
``excite``, ``simulate``, ``estimate``, ``validate``, ``pipeline``) with
file-based handoff between them.  Exit codes: 0 success, 1 numerical
failure, 2 configuration or I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, NumericalError
from .estimation import (
    FourierTrajectory,
    build_report,
    load_parameters,
    save_parameters,
)
from .minparam import appendix_report, minimal_basis, regressor
from .pipeline import (
    PipelineConfig,
    excite_stage,
    load_models,
    load_trajectory,
    run_pipeline,
    validate_parameters,
)
from .robot import RobotModel, builtin_dual_arm, load_robot, offset_guess, robot_to_dict, save_robot
from .simulation import Dataset, NoiseSpec, add_noise, simulate

logger = logging.getLogger("momident")


def _require_model(path: str | None) -> RobotModel:
    if path is None or path == "builtin":
        return builtin_dual_arm()
    return load_robot(path)


def _truth_vector(path: str, model: RobotModel):
    """Minimal-parameter truth from either a robot or a phi_m document."""
    doc = json.loads(Path(path).read_text())
    if "phi_m" in doc:
        return np.asarray(doc["phi_m"], dtype=float)
    truth_model = load_robot(doc)
    basis = minimal_basis(truth_model)
    return basis.matrix @ truth_model.standard_parameters()


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------


def cmd_model(args) -> int:
    if args.action == "emit-fixture":
        model = builtin_dual_arm()
        if args.offset:
            model = offset_guess(model)
        save_robot(model, args.out)
        print(f"wrote {args.out}")
        return 0
    model = _require_model(args.robot)
    print(json.dumps(robot_to_dict(model), indent=2))
    return 0


def cmd_minparams(args) -> int:
    model = _require_model(args.robot)
    basis = minimal_basis(model)
    text = appendix_report(model)
    if args.emit:
        Path(args.emit).write_text(text)
        print(f"wrote {args.emit} ({basis.size} minimal parameters)")
    else:
        print(text, end="")
    if args.matrix:
        header = ",".join(f"c{j + 1}" for j in range(basis.n_standard))
        np.savetxt(
            args.matrix, basis.matrix, delimiter=",", header=header,
            comments="", fmt="%.12g",
        )
        print(f"wrote {args.matrix}")
    return 0


def cmd_excite(args) -> int:
    config = PipelineConfig(
        output_dir=Path(args.out).parent if Path(args.out).parent != Path("") else Path("."),
        robot_path=args.robot,
        guess_path=args.guess,
        seed=args.seed,
        max_combos=args.max_combos,
        figures=args.figures is not None,
        step1_maxiter=args.step1_maxiter,
        step3_maxiter=args.step3_maxiter,
    )
    if args.figures:
        config.artifacts["figures_dir"] = Path(args.figures)
    model, guess = load_models(config)
    _, doc = excite_stage(model, guess, config)
    final = config.artifacts["trajectory"]
    if Path(args.out) != final:
        Path(args.out).write_text(json.dumps(doc, indent=2) + "\n")
    print(
        f"exciting trajectory: {len(doc['signs'])} intervals, "
        f"cost {doc['cost']:.1f} -> {args.out}"
    )
    return 0


def cmd_simulate(args) -> int:
    model = _require_model(args.robot)
    if args.params:
        params_model = load_robot(args.params)
        if len(params_model.links) != len(model.links):
            raise ConfigError("--params robot must share the topology")
        model = model.with_link_parameters(
            [params_model.links[i].params for i in params_model.identified_indices]
        )
    trajectory, _ = load_trajectory(args.trajectory)
    dataset = simulate(
        model, trajectory, dt=args.dt, sample_rate=args.sample_rate
    )
    if args.noise:
        dataset = add_noise(dataset, NoiseSpec(seed=args.seed))
    dataset.save(args.out)
    print(f"wrote {args.out} ({dataset.n_samples} samples)")
    return 0


def cmd_estimate(args) -> int:
    model = _require_model(args.robot)
    dataset = Dataset.load(args.dataset)
    basis = minimal_basis(model)
    g_matrix, rhs = regressor(dataset, model, basis)
    phi_true = _truth_vector(args.truth, model) if args.truth else None
    report, _ = build_report(
        g_matrix, rhs, basis, case=args.case, phi_true=phi_true
    )
    report.save(args.report)
    print(f"wrote {args.report}")
    if args.csv:
        Path(args.csv).write_text(report.to_csv())
        print(f"wrote {args.csv}")
    if args.params_out:
        save_parameters(report.phi_m, args.params_out, args.case)
        print(f"wrote {args.params_out}")
    if args.figures:
        from . import plots

        fig_dir = Path(args.figures)
        plots.plot_estimation(report, fig_dir / "estimation.png")
        svals = np.linalg.svd(g_matrix, compute_uv=False)
        plots.plot_singular_values(svals, 1.0 / 300.0, fig_dir / "singular_values.png")
        print(f"wrote figures to {fig_dir}")
    if report.errors is not None:
        print(
            f"eps_median = {100 * report.errors.median:.3f} %  "
            f"eps_max = {100 * report.errors.maximum:.2f} %"
        )
    return 0


def cmd_validate(args) -> int:
    model = _require_model(args.robot)
    basis = minimal_basis(model)
    phi_hat = load_parameters(args.params)
    if args.truth:
        phi_ref = _truth_vector(args.truth, model)
    else:
        phi_ref = basis.matrix @ model.standard_parameters()
    if args.trajectory:
        doc = json.loads(Path(args.trajectory).read_text())
        trajectory = FourierTrajectory.from_dict(doc)
        duration = trajectory.duration
    else:
        trajectory = None
        duration = args.duration
    out_dir = Path(args.out).parent if Path(args.out).name else Path(args.out)
    result = validate_parameters(
        model,
        basis,
        phi_hat,
        phi_ref,
        duration=duration,
        trajectory=trajectory,
        output_dir=out_dir,
        figures=args.figures is not None,
    )
    produced = out_dir / "errors.csv"
    if Path(args.out) != produced and Path(args.out).suffix == ".csv":
        produced.replace(args.out)
        print(f"wrote {args.out}")
    else:
        print(f"wrote {produced}")
    twist = ", ".join(f"{v:.3e}" for v in result["twist_rms"])
    torque = ", ".join(f"{v:.3e}" for v in result["torque_rms"])
    print(f"twist RMS errors:  {twist}")
    print(f"torque RMS errors: {torque}")
    return 0


def cmd_pipeline(args) -> int:
    config = PipelineConfig(
        output_dir=Path(args.out),
        robot_path=args.robot,
        guess_path=args.guess,
        seed=args.seed,
        max_combos=args.max_combos,
        noise=not args.no_noise,
        skip_excite=args.skip_excite,
        trajectory_path=args.trajectory,
        figures=args.figures,
        step1_maxiter=args.step1_maxiter,
        step3_maxiter=args.step3_maxiter,
        validation_duration=args.validation_duration,
    )
    summary = run_pipeline(config)
    print(json.dumps(summary, indent=2))
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="momident",
        description=(
            "Minimal inertial parameter identification of free-floating "
            "tree robots from pose/twist data"
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="log stage progress"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("model", help="emit or inspect robot descriptions")
    p.add_argument("action", choices=["emit-fixture", "show"])
    p.add_argument("--robot", help="robot JSON ('builtin' for the fixture)")
    p.add_argument("--offset", action="store_true",
                   help="emit the offset-guess parameter set")
    p.add_argument("--out", default="robot.json")
    p.set_defaults(func=cmd_model)

    p = sub.add_parser("minparams", help="minimal parameter expressions")
    p.add_argument("--robot", default="builtin")
    p.add_argument("--emit", help="write the expressions to this file")
    p.add_argument("--matrix", help="write the reduction matrix as CSV")
    p.set_defaults(func=cmd_minparams)

    p = sub.add_parser("excite", help="compute exciting trajectories")
    p.add_argument("--robot", default=None)
    p.add_argument("--guess", default=None,
                   help="robot JSON with the initial parameter guess")
    p.add_argument("--out", default="trajectory.json")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--max-combos", type=int, default=64,
                   help="cap on direction combinations (256 = full study)")
    p.add_argument("--step1-maxiter", type=int, default=12)
    p.add_argument("--step3-maxiter", type=int, default=25)
    p.add_argument("--figures", help="directory for rendered figures")
    p.set_defaults(func=cmd_excite)

    p = sub.add_parser("simulate", help="simulate the free-floating response")
    p.add_argument("--robot", default=None)
    p.add_argument("--params", help="robot JSON overriding inertial parameters")
    p.add_argument("--trajectory", required=True)
    p.add_argument("--noise", action="store_true")
    p.add_argument("--seed", type=int, default=43)
    p.add_argument("--dt", type=float, default=0.002)
    p.add_argument("--sample-rate", type=float, default=50.0)
    p.add_argument("--out", default="dataset.csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate minimal parameters")
    p.add_argument("--dataset", required=True)
    p.add_argument("--robot", default=None)
    p.add_argument("--truth", help="robot or phi_m JSON with true parameters")
    p.add_argument("--report", default="report.json")
    p.add_argument("--csv", help="table-style CSV export")
    p.add_argument("--params-out", help="write the estimate as a phi_m JSON")
    p.add_argument("--case", default="case1")
    p.add_argument("--figures", help="directory for rendered figures")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("validate", help="predict and compare kinematics/torques")
    p.add_argument("--params", required=True, help="estimated phi_m JSON")
    p.add_argument("--robot", default=None)
    p.add_argument("--truth", help="reference parameters (default: robot's)")
    p.add_argument("--trajectory", help="fourier trajectory JSON")
    p.add_argument("--duration", type=float, default=40.0)
    p.add_argument("--out", default="errors.csv")
    p.add_argument("--figures", help="directory for rendered figures")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("pipeline", help="run every stage end to end")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--robot", default=None)
    p.add_argument("--guess", default=None)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--max-combos", type=int, default=64)
    p.add_argument("--no-noise", action="store_true")
    p.add_argument("--skip-excite", action="store_true")
    p.add_argument("--trajectory", help="resume from this trajectory JSON")
    p.add_argument("--figures", action="store_true")
    p.add_argument("--step1-maxiter", type=int, default=12)
    p.add_argument("--step3-maxiter", type=int, default=25)
    p.add_argument("--validation-duration", type=float, default=40.0)
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
