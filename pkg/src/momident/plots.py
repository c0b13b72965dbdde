"""Figure rendering for the CLI report paths.

Every function writes one PNG file and returns its path; figures
accompany the delimited outputs of the corresponding stage (no live
plotting).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 150


def _finish(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def plot_pruning(ssv, cond, path: str | Path) -> Path:
    """Condition number and significant singular values vs kept intervals."""
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    count = np.arange(1, len(cond) + 1)
    finite = np.asarray(cond, dtype=float)
    finite[~np.isfinite(finite)] = np.nan
    ax1.semilogy(count, finite, "o-", ms=3)
    ax1.set_ylabel("condition number")
    ax1.grid(True, alpha=0.3)
    ax2.plot(count, ssv, "s-", ms=3, color="tab:orange")
    ax2.set_xlabel("kept intervals")
    ax2.set_ylabel("significant singular values")
    ax2.grid(True, alpha=0.3)
    return _finish(fig, path)


def plot_singular_values(svals, delta: float, path: str | Path) -> Path:
    """Regressor singular value spectrum with the significance cutoff."""
    svals = np.sort(np.asarray(svals))[::-1]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(np.arange(1, len(svals) + 1), svals, "o-", ms=3)
    ax.axhline(delta * svals[0], color="tab:red", ls="--",
               label=f"delta = {delta:.4g}")
    ax.set_xlabel("index")
    ax.set_ylabel("singular value")
    ax.legend()
    ax.grid(True, alpha=0.3)
    return _finish(fig, path)


def plot_estimation(report, path: str | Path) -> Path:
    """True vs estimated parameters and per-parameter relative error."""
    phi = np.asarray(report.phi_m)
    idx = np.arange(1, len(phi) + 1)
    if report.phi_true is None:
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.bar(idx, np.abs(phi), color="tab:blue")
        ax.set_yscale("log")
        ax.set_xlabel("minimal parameter index")
        ax.set_ylabel("|estimate|")
        return _finish(fig, path)
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 7), sharex=True)
    truth = np.asarray(report.phi_true)
    ax1.plot(idx, np.abs(truth), "o", ms=4, label="true")
    ax1.plot(idx, np.abs(phi), "x", ms=4, label="estimated")
    ax1.set_yscale("log")
    ax1.set_ylabel("|value|")
    ax1.legend()
    ax1.grid(True, alpha=0.3)
    errs = np.asarray(report.errors.per_parameter) * 100.0
    ax2.bar(idx, np.nan_to_num(errs), color="tab:red", alpha=0.8)
    ax2.set_yscale("log")
    ax2.set_xlabel("minimal parameter index")
    ax2.set_ylabel("relative error [%]")
    ax2.grid(True, alpha=0.3)
    return _finish(fig, path)


def plot_validation(time, twist_error, torque_error, path: str | Path) -> Path:
    """Prediction error trajectories for base twist and joint torques."""
    labels = ["v_x [m/s]", "v_y [m/s]", "v_z [m/s]",
              "w_x [rad/s]", "w_y [rad/s]", "w_z [rad/s]"]
    fig, axes = plt.subplots(3, 2, figsize=(9, 8))
    for k, ax in enumerate(axes.flat[:6]):
        ax.plot(time, twist_error[:, k], lw=0.8)
        ax.set_ylabel(labels[k])
        ax.grid(True, alpha=0.3)
    axes.flat[4].set_xlabel("t [s]")
    axes.flat[5].set_xlabel("t [s]")
    base = _finish(fig, path)

    n = torque_error.shape[1]
    rows = (n + 1) // 2
    fig, axes = plt.subplots(rows, 2, figsize=(9, 2.5 * rows), squeeze=False)
    t_torque = time[: len(torque_error)]
    for j in range(n):
        ax = axes.flat[j]
        ax.plot(t_torque, torque_error[:, j], lw=0.8, color="tab:green")
        ax.set_ylabel(f"tau_{j + 1} [N m]")
        ax.grid(True, alpha=0.3)
    for ax in axes.flat[n:]:
        ax.set_visible(False)
    torque_path = base.with_name(base.stem + "_torques" + base.suffix)
    _finish(fig, torque_path)
    return base
