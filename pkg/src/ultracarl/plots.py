"""SVG slices of the observation regions."""

from __future__ import annotations

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# fixed ids and no timestamp, so identical data gives identical files
matplotlib.rcParams["svg.hashsalt"] = "ultracarl"
matplotlib.rcParams["svg.fonttype"] = "none"
matplotlib.rcParams["path.simplify"] = False

CATEGORY_COLORS = {
    "outside D_p": "#c8c8c8",
    "dU n D_p only": "#e8b400",
    "Gamma_p": "#d62728",
}
DIFF_COLOR = "#000000"
W_COLOR = "#7fb3e6"


def categories(flags):
    cat = np.full(flags.in_D.shape, "outside D_p", dtype=object)
    cat[flags.in_D] = "dU n D_p only"
    cat[flags.gamma] = "Gamma_p"
    return cat


def _save(fig, path, description=""):
    meta = {"Date": None, "Creator": "ultracarl"}
    if description:
        meta["Description"] = description
    fig.savefig(path, format="svg", metadata=meta)
    plt.close(fig)


def _legend_handles(ax, with_w, with_diff):
    for name, col in CATEGORY_COLORS.items():
        ax.scatter([], [], s=12, color=col, label=name)
    if with_diff:
        ax.scatter([], [], s=14, marker="x", color=DIFF_COLOR, label="Gamma_p^eps differs")
    if with_w:
        ax.scatter([], [], s=6, marker="s", color=W_COLOR, label="W_p^eps")
    ax.legend(loc="upper right", fontsize=6, frameon=False)


def slice_svg(path, dom, p, samples, flags, k, volume=None, w_mask=None, title="", description=""):
    """Region categories on temporal slice ``k``; x1-x2 plane (n >= 2) or x-t plane (n = 1)."""
    fig, ax = plt.subplots(figsize=(4.2, 4.2))
    n = dom.sig.n
    sel = samples.slice_index == k if n > 1 else np.ones(len(samples), dtype=bool)
    if n > 2:
        # upper half in the last coordinate, projected
        sel &= samples.x[:, -1] >= np.median(samples.x[:, -1])
    cat = categories(flags)[sel]
    xs = samples.x[sel]
    ys = xs[:, 1] if n > 1 else samples.t[sel, 0]
    col = [CATEGORY_COLORS[c] for c in cat]
    has_w = volume is not None and w_mask is not None
    if has_w:
        vsel = w_mask & ((volume.slice_index == k) if n > 1 else True)
        if n > 2:
            vsel &= np.abs(volume.x[:, -1] - p.x[-1]) <= np.min(np.abs(volume.x[:, -1] - p.x[-1])) + 1e-12
        vy = volume.x[vsel, 1] if n > 1 else volume.t[vsel, 0]
        ax.scatter(volume.x[vsel, 0], vy, s=3, marker="s", color=W_COLOR, linewidths=0)
    ax.scatter(xs[:, 0], ys, s=10, c=col, linewidths=0)
    diff = (flags.gamma != flags.gamma_eps)[sel]
    if diff.any():
        ax.scatter(xs[diff, 0], ys[diff], s=14, marker="x", color=DIFF_COLOR, linewidths=0.8)
    px = p.x[0]
    py = p.x[1] if n > 1 else p.t[0]
    ax.scatter([px], [py], s=30, color="#1f4fd8", zorder=5)
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2" if n > 1 else "t1")
    ax.set_title(title, fontsize=8)
    _legend_handles(ax, has_w, diff.any())
    fig.tight_layout()
    _save(fig, path, description)


def unrolled_svg(path, samples, flags, title="", description=""):
    """Boundary chart parameter against t1, coloured by region."""
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    cat = categories(flags)
    ax.scatter(samples.angle, samples.t[:, 0], s=4, marker="s", c=[CATEGORY_COLORS[c] for c in cat],
               linewidths=0)
    diff = flags.gamma != flags.gamma_eps
    if diff.any():
        ax.scatter(samples.angle[diff], samples.t[diff, 0], s=6, marker="x", color=DIFF_COLOR, linewidths=0.6)
    ax.set_xlabel("boundary angle")
    ax.set_ylabel("t1")
    ax.set_title(title, fontsize=8)
    _legend_handles(ax, False, diff.any())
    fig.tight_layout()
    _save(fig, path, description)
