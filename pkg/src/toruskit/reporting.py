"""Artifact writers: deterministic CSV, JSON reports, and companion figures.

CSV floats are written with repr (shortest round-trip), so identical inputs
produce byte-identical files.  Every delimited artifact gets a matplotlib
figure rendered next to it (same stem, .png) unless plotting is disabled.
"""

from __future__ import annotations

import json
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def format_value(v) -> str:
    if isinstance(v, (bool,)):
        return "true" if v else "false"
    if isinstance(v, (int,)):
        return str(v)
    return repr(float(v))


def write_csv(path, header, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_value(v) for v in row) + "\n")


def write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def figure_path(csv_path) -> str:
    return os.path.splitext(csv_path)[0] + ".png"


def render_lines(path, x, series, xlabel, title, logy=False) -> None:
    """series: list of (label, values)."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for label, y in series:
        ax.plot(x, y, label=label, lw=1.2)
    ax.set_xlabel(xlabel)
    ax.set_title(title)
    if logy:
        ax.set_yscale("log")
    if len(series) > 1:
        ax.legend(frameon=False)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_heatmap(path, matrix, title) -> None:
    fig, ax = plt.subplots(figsize=(5.4, 4.6))
    im = ax.imshow(abs(matrix), cmap="viridis")
    fig.colorbar(im, ax=ax, label="|G|")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_bars(path, labels, values, ylabel, title, hline=None) -> None:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.bar(range(len(values)), values, color="#47609c")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    if hline is not None:
        ax.axhline(hline, color="crimson", ls="--", lw=1)
    if values and max(values) > 0:
        ax.set_yscale("log")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_trajectory(path, traj, title) -> None:
    fig, axes = plt.subplots(1, 2, figsize=(9.6, 4.2))
    if traj.x.shape[1] >= 2:
        axes[0].plot(traj.x[:, 0], traj.x[:, 1], ",", ms=1)
        axes[0].set_xlabel("x1")
        axes[0].set_ylabel("x2")
    else:
        axes[0].plot(traj.t, traj.x[:, 0], lw=0.8)
        axes[0].set_xlabel("t")
        axes[0].set_ylabel("x1")
    axes[0].set_title("wrapped trajectory")
    axes[1].plot(traj.t, traj.energies - traj.energies[0], lw=0.8, label="H - H(0)")
    axes[1].plot(traj.t, traj.f1 - traj.f1[0], lw=0.8, label="F1 - F1(0)")
    axes[1].set_xlabel("t")
    axes[1].legend(frameon=False)
    axes[1].set_title("conservation")
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
