"""Figure rendering for CLI reports.

All functions draw to files (Agg backend, no display) so runs on
headless machines produce the same artifacts as interactive ones.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .exceptions import DegenerateMetricError  # noqa: E402
from .metrics import r_squared  # noqa: E402

__all__ = [
    "plot_loss",
    "plot_prediction",
    "plot_schedule",
    "plot_tradeoff",
]

_DPI = 120


def plot_loss(train_mse, val_mse, path) -> None:
    """Training and validation MSE per epoch, log scale."""
    epochs = np.arange(1, len(train_mse) + 1)
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.semilogy(epochs, train_mse, label="train MSE", color="tab:blue")
    ax.semilogy(epochs, val_mse, label="validation MSE",
                color="tab:orange")
    ax.set_xlabel("epoch")
    ax.set_ylabel("MSE (Ah$^2$)")
    ax.set_title("Training progress")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def plot_prediction(targets, predictions, path) -> None:
    """Predicted vs true capacity loss with the identity line."""
    t = np.asarray(targets, dtype=float).ravel()
    p = np.asarray(predictions, dtype=float).ravel()
    fig, ax = plt.subplots(figsize=(5.5, 5.5))
    ax.scatter(t, p, s=12, alpha=0.6, color="tab:blue", edgecolors="none")
    lo = float(min(t.min(), p.min()))
    hi = float(max(t.max(), p.max()))
    pad = 0.05 * (hi - lo) if hi > lo else 1.0
    ax.plot([lo - pad, hi + pad], [lo - pad, hi + pad], "k--", lw=1,
            label="perfect fit")
    try:
        ax.set_title(f"Capacity-loss prediction (R$^2$ = "
                     f"{r_squared(p, t):.4f})")
    except (DegenerateMetricError, ValueError):
        ax.set_title("Capacity-loss prediction")
    ax.set_xlabel("true capacity loss (Ah)")
    ax.set_ylabel("predicted capacity loss (Ah)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def plot_schedule(schedule, pack, path) -> None:
    """Two panels: charging power against the tariff, and the battery
    energy trajectory against its bounds and terminal band."""
    T = len(schedule.u)
    t = np.arange(T)
    fig, (ax_p, ax_e) = plt.subplots(
        2, 1, figsize=(9.0, 6.5), sharex=True,
        gridspec_kw={"height_ratios": [3, 2]})

    colors = np.where(schedule.u >= 0, "tab:green", "tab:red")
    ax_p.bar(t, schedule.u, width=0.9, color=colors, alpha=0.8,
             label="charging power (kW)")
    ax_p.axhline(0.0, color="black", lw=0.8)
    ax_p.set_ylabel("power (kW)")
    ax_p.set_title(f"Smart-charging schedule (rho = {schedule.rho:g})")
    ax_a = ax_p.twinx()
    ax_a.step(t, schedule.alpha, where="mid", color="tab:purple", lw=1.5,
              label="tariff (EUR/kWh)")
    ax_a.set_ylabel("tariff (EUR/kWh)", color="tab:purple")
    ax_a.tick_params(axis="y", labelcolor="tab:purple")

    energy = np.concatenate([[pack.e0], schedule.energy_pu])
    ax_e.plot(np.arange(T + 1) - 0.5, energy, "-o", ms=3,
              color="tab:blue", label="energy (p.u.)")
    ax_e.axhline(pack.e_lo, color="gray", ls=":", lw=1)
    ax_e.axhline(pack.e_hi, color="gray", ls=":", lw=1)
    ax_e.axhspan(pack.e_des - pack.epsilon, pack.e_des + pack.epsilon,
                 xmin=0.96, color="tab:orange", alpha=0.6,
                 label="terminal band")
    ax_e.set_xlabel("interval")
    ax_e.set_ylabel("energy (p.u.)")
    ax_e.set_ylim(0.0, 1.0)
    ax_e.grid(True, alpha=0.3)
    ax_e.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def plot_tradeoff(points, path) -> None:
    """Degradation cost against electricity cost across the rho grid."""
    ok = [pt for pt in points if pt.error is None
          and np.isfinite(pt.theta1) and np.isfinite(pt.theta2)]
    fig, ax = plt.subplots(figsize=(6.5, 5.0))
    if ok:
        t1 = [pt.theta1 for pt in ok]
        t2 = [pt.theta2 for pt in ok]
        ax.plot(t1, t2, "-o", color="tab:blue", ms=5)
        for pt in ok:
            ax.annotate(f"{pt.rho:g}", (pt.theta1, pt.theta2),
                        textcoords="offset points", xytext=(6, 4),
                        fontsize=8)
    ax.set_xlabel(r"electricity cost $\theta^{(1)}$ (EUR)")
    ax.set_ylabel(r"degradation cost $\theta^{(2)}$ (EUR)")
    ax.set_title("Cost trade-off across user preference rho")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
