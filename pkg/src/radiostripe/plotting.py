"""Figures written next to the CSV outputs (non-interactive backend)."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .scene import Deployment, Scenario  # noqa: E402

# Fixed metadata keeps the PNG bytes independent of the library version string.
_META = {"Software": None}


def _series(rows: Sequence[Mapping], key: str, x: str, y: str):
    groups: dict[str, tuple[list, list]] = {}
    for r in rows:
        xs, ys = groups.setdefault(str(r[key]), ([], []))
        xs.append(float(r[x]))
        ys.append(float(r[y]))
    return groups


def plot_sweep(rows: Sequence[Mapping], path: Path, xlabel: str, xscale: float = 1.0) -> Path:
    """Average minimum received power (dBm) against the sweep variable."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, (xs, ys) in _series(rows, "deployment", "sweep_value",
                                   "avg_min_power_dbm").items():
        ax.plot(np.array(xs) / xscale, ys, marker="o", label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("average minimum power [dBm]")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="png", metadata=_META)
    plt.close(fig)
    return path


def plot_nearfield(rows: Sequence[Mapping], path: Path, xlabel: str,
                   xscale: float = 1.0) -> Path:
    """Fresnel and Fraunhofer distances per array kind on a log axis."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, (xs, ys) in _series(rows, "array_kind", "x_value", "fraunhofer_m").items():
        ax.semilogy(np.array(xs) / xscale, ys, marker="o", label=f"{label} Fraunhofer")
    for label, (xs, ys) in _series(rows, "array_kind", "x_value", "fresnel_m").items():
        ax.semilogy(np.array(xs) / xscale, ys, marker="s", linestyle="--",
                    label=f"{label} Fresnel")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("distance [m]")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="png", metadata=_META)
    plt.close(fig)
    return path


def plot_layout(scenario: Scenario, deployments: Mapping[str, Deployment], path: Path) -> Path:
    """Top view of the room with hotspot discs and element positions."""
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.add_patch(plt.Rectangle((0, 0), scenario.room_width, scenario.room_depth,
                               fill=False, color="k"))
    for hs in scenario.hotspots:
        ax.add_patch(plt.Circle(hs.position[:2], hs.user_radius, alpha=0.2, color="tab:red"))
        ax.plot(*hs.position[:2], "x", color="tab:red")
    for label, dep in deployments.items():
        ax.plot(dep.elements[:, 0], dep.elements[:, 1], ".", markersize=3, label=label)
    ax.set_xlim(-0.2, scenario.room_width + 0.2)
    ax.set_ylim(-0.2, scenario.room_depth + 0.2)
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    if deployments:
        ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="png", metadata=_META)
    plt.close(fig)
    return path
