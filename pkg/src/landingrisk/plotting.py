"""Benchmark figures rendered off-screen with matplotlib."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_runtime_cdf(cdf: dict, path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    if cdf.get("undefined"):
        ax.text(0.5, 0.5, "no best-site cases with a clear difference", ha="center", va="center",
                transform=ax.transAxes)
    else:
        ax.step(np.asarray(cdf["t"]) / 1e3, cdf["F"], where="post")
        ax.axhline(cdf["pr_e1_given_e2"], ls="--", lw=0.8, color="grey")
        ax.set_ylim(0, 1.02)
    ax.set_xlabel("runtime [s]")
    ax.set_ylabel("cumulative probability")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def plot_risk_cdf(records, path, metric: str = "sigma_a") -> Path:
    """Empirical CDFs of the risk metric for both methods, converged cases only."""
    both = [r for r in records if r.search_ok and r.dubins_ok]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for label, vals in (("search", [r.search[metric] for r in both]),
                        ("Dubins", [r.dubins[metric] for r in both])):
        v = np.sort(np.asarray(vals, dtype=float))
        if v.size:
            ax.step(v, np.arange(1, v.size + 1) / v.size, where="post", label=label)
    ax.set_xlabel(f"{metric} [s]")
    ax.set_ylabel("fraction of scenarios")
    ax.grid(alpha=0.3)
    if both:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def plot_path(result, path, model=None) -> Path:
    """Ground track and altitude profile of a plan result, with the Dubins baseline if present."""
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(9, 3.8))
    for label, res in (("plan", result), ("Dubins", getattr(result, "dubins", None))):
        if res is None or res.path is None:
            continue
        p = res.path
        a1.plot(p.lon, p.lat, label=f"{label} ({res.method})" if label == "plan" else label)
        a2.plot(p.t, p.alt)
    if model is not None:
        for poly in list(model.corridors) + list(model.noflys):
            if "base" in poly.meta:
                base = np.asarray(poly.meta["base"])
                a1.fill(base[:, 1], base[:, 0], alpha=0.2, color="red" if poly.kind == "nofly" else "orange")
    a1.set_xlabel("lon [deg]")
    a1.set_ylabel("lat [deg]")
    a1.legend(fontsize=8)
    a2.set_xlabel("t [s]")
    a2.set_ylabel("altitude [ft]")
    for a in (a1, a2):
        a.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)
