"""Trajectory snapshot figure: paths, zone overlays, attack markers."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.patches import Circle, Ellipse

from .io import load_events, load_meta, load_steps

_KIND_COLORS = {"sensing": "tab:red", "comm": "tab:blue", "direct-jam": "tab:purple"}


def _sigma_ellipse(mu, sigma, **kwargs):
    eigvals, eigvecs = np.linalg.eigh(np.asarray(sigma, dtype=float))
    angle = np.degrees(np.arctan2(eigvecs[1, -1], eigvecs[0, -1]))
    width, height = 2.0 * np.sqrt(np.maximum(eigvals[[1, 0]], 0.0))
    return Ellipse(mu, width, height, angle=angle, **kwargs)


def plot_trajectories(steps_path, events_path, meta_path, snapshots, out_path):
    """Render one panel per snapshot step; returns the output path.

    Zones come from the resolved config in meta.json: sensing zones as
    clearance-radius disks, communication zones as 1-sigma ellipses. Attack
    events up to each snapshot are drawn as '+' markers at the attacked
    robot's position, color-coded by kind.
    """
    meta = load_meta(meta_path)
    table = load_steps(steps_path)
    events = load_events(events_path)

    snapshots = [int(s) for s in snapshots]
    max_step = int(table.steps[-1]) if len(table.steps) else 0
    for snap in snapshots:
        if not 1 <= snap <= max_step:
            raise ValueError(f"snapshot step {snap} outside run range 1..{max_step}")

    config = meta["config"]
    fig, axes = plt.subplots(
        1, len(snapshots), figsize=(4.2 * len(snapshots), 4.2), squeeze=False
    )
    step_index = {int(s): k for k, s in enumerate(table.steps)}

    for ax, snap in zip(axes[0], snapshots):
        upto = step_index[snap] + 1
        for zone in config.get("sensing_zones", []):
            ax.add_patch(
                Circle(zone["mu"], zone["radius"], color="tab:red", alpha=0.25, lw=0)
            )
            ax.plot(*zone["mu"], marker="x", color="tab:red", ms=6)
        for zone in config.get("comm_zones", []):
            ax.add_patch(
                _sigma_ellipse(zone["mu"], zone["sigma"], color="tab:blue", alpha=0.25, lw=0)
            )
            ax.plot(*zone["mu"], marker="x", color="tab:blue", ms=6)
        for i in range(table.n_robots):
            path = table.robot_xy[:upto, i]
            ax.plot(path[:, 0], path[:, 1], "-", lw=1.4, label=f"R{i}")
            ax.plot(path[-1, 0], path[-1, 1], "o", ms=6, color=ax.lines[-1].get_color())
        for j in range(table.n_targets):
            path = table.target_xy[:upto, j]
            ax.plot(path[:, 0], path[:, 1], "--", lw=1.0, label=f"T{j}")
            ax.plot(path[-1, 0], path[-1, 1], "s", ms=5, color=ax.lines[-1].get_color())
        for k in range(len(events.step)):
            if events.step[k] <= snap:
                pos = table.robot_xy[step_index[int(events.step[k])], int(events.robot[k])]
                ax.plot(
                    pos[0], pos[1], "+",
                    color=_KIND_COLORS.get(events.kind[k], "k"),
                    ms=11, mew=2.2,
                )
        ax.set_title(f"step {snap}")
        ax.set_aspect("equal")
        ax.grid(alpha=0.3)
    axes[0][0].legend(loc="upper left", fontsize=8)
    fig.suptitle(config.get("name", "trajectories"))
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return out_path
