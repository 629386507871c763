"""Figure rendering: PNG files written next to the column data of each run."""
from __future__ import annotations

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def render_pair(pair, path) -> None:
    x = pair.grid.x
    fig, ax = plt.subplots(figsize=(6.0, 3.4))
    ax.plot(x, pair.f.samples, label="f", color="tab:blue")
    ax.plot(x, pair.g.samples, label="g", color="tab:red")
    ax.set_xlabel("x")
    ax.legend(frameon=False)
    ax.set_title("constrained minimizer")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_history(history, path) -> None:
    if len(history) == 0:
        return
    it = np.arange(1, len(history) + 1)
    fig, axes = plt.subplots(1, 2, figsize=(8.0, 3.2))
    axes[0].plot(it, history[:, 0], color="tab:blue")
    axes[0].set_xlabel("iteration")
    axes[0].set_ylabel("energy")
    axes[1].semilogy(it, np.maximum(history[:, 1], 1e-300), color="tab:red")
    axes[1].set_xlabel("iteration")
    axes[1].set_ylabel("residual")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_wave(wave, path) -> None:
    x = wave.grid.x
    fig, axes = plt.subplots(1, 2, figsize=(8.0, 3.2))
    axes[0].plot(x, wave.phi.samples, label="phi", color="tab:blue")
    axes[0].plot(x, wave.psi.samples, label="psi", color="tab:red")
    axes[0].set_xlabel("x")
    axes[0].legend(frameon=False)
    axes[0].set_title(f"traveling wave, omega={wave.omega:.4g}")
    for samples, color, label in (
        (wave.phi.samples, "tab:blue", "|phi|"),
        (np.abs(wave.psi.samples), "tab:red", "|psi|"),
    ):
        mag = np.maximum(np.abs(samples), 1e-300)
        axes[1].semilogy(x, mag, color=color, label=label, lw=0.9)
    axes[1].set_xlabel("x")
    axes[1].set_ylabel("magnitude")
    axes[1].legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_diagnostics(diag, path) -> None:
    fig, axes = plt.subplots(1, 2, figsize=(8.0, 3.2))
    h0 = diag.h_values[0]
    denom = abs(h0) if h0 != 0 else 1.0
    axes[0].semilogy(
        diag.times, np.maximum(np.abs(diag.h_values - h0) / denom, 1e-300), color="tab:blue"
    )
    axes[0].set_xlabel("t")
    axes[0].set_ylabel("relative H drift")
    if np.any(np.isfinite(diag.propagation_error)):
        axes[1].semilogy(
            diag.times, np.maximum(diag.propagation_error, 1e-300), color="tab:red"
        )
        axes[1].set_ylabel("propagation error")
    else:
        axes[1].plot(diag.times, diag.momentum, color="tab:green")
        axes[1].set_ylabel("momentum")
    axes[1].set_xlabel("t")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_bounds(mu_values, lowers, uppers, m_values, path) -> None:
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.plot(mu_values, np.abs(lowers), "s--", label="|lower bound|", color="tab:gray")
    ax.plot(mu_values, np.abs(uppers), "^--", label="|upper bound|", color="tab:orange")
    ax.plot(mu_values, np.abs(m_values), "o-", label="|m|", color="tab:blue")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("mu")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_sweep(rows, path) -> None:
    """Scaling curves from sweep rows (dicts with mu, m, omega, l2_ratio)."""
    if not rows:
        return
    mu = np.array([r["mu"] for r in rows])
    m = np.array([r["m"] for r in rows])
    om = np.array([abs(r["omega"]) for r in rows])
    ratio = np.array([r["l2_ratio"] for r in rows])
    fig, axes = plt.subplots(1, 3, figsize=(10.5, 3.2))
    axes[0].loglog(mu, np.abs(m), "o-", color="tab:blue")
    axes[0].set_xlabel("mu")
    axes[0].set_ylabel("|m|")
    axes[1].loglog(mu, om, "o-", color="tab:red")
    axes[1].set_xlabel("mu")
    axes[1].set_ylabel("|omega|")
    axes[2].semilogx(mu, ratio, "o-", color="tab:green")
    axes[2].set_xlabel("mu")
    axes[2].set_ylabel("l2 ratio")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
