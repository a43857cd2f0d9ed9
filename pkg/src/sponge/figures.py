"""Matplotlib diagnostic figures written alongside each command's CSV output."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

# Pinned metadata keeps PNG payloads byte-stable across reruns.
_META = {"Software": "sponge"}


def _save(fig, path):
    fig.savefig(path, dpi=110, metadata=_META)
    plt.close(fig)


def pressure_figure(spec, report, path, pressure_fn):
    smax = max(spec.d, report.s_star) * 1.25
    grid = np.linspace(0.0, smax, 160)
    vals = [pressure_fn(s)[0] for s in grid]
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.plot(grid, vals, lw=1.4)
    ax.axhline(1.0, color="gray", lw=0.8, ls="--")
    ax.axvline(report.s_star, color="crimson", lw=0.8)
    ax.annotate(f"root = {report.s_star:.6f}", (report.s_star, 1.0),
                textcoords="offset points", xytext=(6, 8), fontsize=8)
    ax.set_xlabel("s")
    ax.set_ylabel("expected pressure")
    ax.set_yscale("log")
    fig.tight_layout()
    _save(fig, path)


def cloud_figure(cloud, path):
    fig, ax = plt.subplots(figsize=(4.6, 4.6))
    if cloud.points.shape[1] == 2:
        ax.plot(cloud.points[:, 0], cloud.points[:, 1], ",", color="black", markersize=0.5)
        ax.set_aspect("equal")
    else:
        ax.hist(cloud.points[:, 0], bins=200, color="black")
    ax.set_title(f"{cloud.count} points, depth {cloud.depth}", fontsize=9)
    fig.tight_layout()
    _save(fig, path)


def boxcount_figure(fit, path):
    x = -np.log2(np.asarray(fit.radii))
    y = np.log2(np.asarray(fit.counts, dtype=float))
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    ax.plot(x, y, "o", ms=4)
    coef = np.polyfit(x, y, 1)
    ax.plot(x, np.polyval(coef, x), lw=1.0,
            label=f"slope {fit.slope:.3f} +- {fit.stderr:.3f}")
    ax.set_xlabel("-log2 r")
    ax.set_ylabel("log2 N_r")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def martingale_figure(stats, bound, path):
    ks = np.arange(1, stats.depth + 1)
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    ax.errorbar(ks, stats.means, yerr=3 * stats.ses, fmt="o-", capsize=3, label="mean X_k")
    ax.axhline(1.0, color="gray", lw=0.8, ls="--")
    second = stats.variances + stats.means**2
    ax.plot(ks, second, "s--", label="E(X_k^2)")
    ax.axhline(bound, color="crimson", lw=0.8, label=f"second-moment ceiling {bound:.4f}")
    ax.set_xlabel("super-level k")
    ax.set_xticks(ks)
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def transversality_figure(rows, C, path):
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    xs = [r.rho / min(r.alpha_lcp) for r in rows]
    ys = [max(r.p_hat, 1e-6) for r in rows]
    ax.plot(xs, ys, ".", ms=3, alpha=0.6, label="empirical")
    grid = np.geomspace(min(xs), max(xs), 64)
    ax.plot(grid, np.minimum(1.0, C * grid), lw=1.0, color="crimson",
            label=f"fitted bound, C = {C:.3g}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("rho / |alpha at common prefix|")
    ax.set_ylabel("conditional collision probability")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def energy_figure(points_by_t, path):
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    for t, pts in points_by_t.items():
        depths = [p.depth for p in pts]
        ests = [p.estimate for p in pts]
        ax.plot(depths, ests, "o-", label=f"t = {t:.4f}")
    ax.set_yscale("log")
    ax.set_xlabel("truncation depth (letters)")
    ax.set_ylabel("energy estimate")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def positivity_figure(meshes, estimates, path):
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    ax.plot(meshes, estimates, "o-")
    ax.set_xscale("log")
    ax.set_xlabel("mesh h")
    ax.set_ylabel("occupied-volume estimate")
    fig.tight_layout()
    _save(fig, path)
