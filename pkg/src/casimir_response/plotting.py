"""Optional figures rendered next to the CSV outputs (``--figures``).

matplotlib is imported lazily with the Agg backend, so the numerical core
never depends on it.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:  # pragma: no cover - depends on the environment
        raise RuntimeError("figures need matplotlib: pip install 'artifact[plot]'") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _style(ax, xlabel, ylabel):
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3, lw=0.5)
    for side in ("top", "right"):
        ax.spines[side].set_visible(False)


def _save(fig, path):
    # fixed metadata keeps reruns byte-stable
    fig.savefig(path, dpi=120, bbox_inches="tight", metadata={"Software": None})
    fig.clf()
    return Path(path)


def spectrum_figure(result, path):
    """e(w) on log-log axes with the fitted low-frequency power law."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    good = result.e_of_omega > 0
    ax.loglog(result.omega_grid[good], result.e_of_omega[good], "k-", lw=1.2, label="e(w)")
    fit = result.fit
    w = np.asarray(result.fit_omega)
    ax.loglog(w, fit.amplitude * w**fit.exponent, "r--", lw=1.0, label=f"fit p = {fit.exponent:.3f}")
    _style(ax, "omega [1/length]", "e(omega)")
    ax.legend(frameon=False)
    out = _save(fig, path)
    plt.close(fig)
    return out


def modes_figure(result, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    good = result.n_per_mode_density > 0
    ax.loglog(result.k_grid[good], result.n_per_mode_density[good], "b-", lw=1.2)
    _style(ax, "k [1/length]", "V N_k [length^3]")
    ax.set_title(f"kernel: {result.kernel}", fontsize=10)
    out = _save(fig, path)
    plt.close(fig)
    return out


def velocity_figure(k, magnitudes, classification, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    ax.loglog(k, magnitudes, "o-", ms=3, lw=1.0)
    _style(ax, "k [1/length]", "|beta~(k, w_k)| [length^4]")
    ax.set_title(str(classification), fontsize=10)
    out = _save(fig, path)
    plt.close(fig)
    return out


def potential_figure(r, phi, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    ax.plot(r, phi, "k-", lw=1.2)
    ax.axhline(0.0, color="0.6", lw=0.5)
    _style(ax, "r [length]", "Phi(r)")
    out = _save(fig, path)
    plt.close(fig)
    return out
