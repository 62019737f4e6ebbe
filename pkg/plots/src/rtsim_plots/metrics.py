"""Metric comparison figure: mean curves with +/- 1 std bands per mode."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .io import assert_step_alignment, assert_summary_flags, load_aggregate


def plot_metrics(aggregate_paths, labels, out_path, summary_path=None):
    """Two stacked panels (MSE, total covariance trace); returns out path.

    All numeric assertions run before rendering: schema declarations on each
    aggregate, identical step grids between modes, and (when a summary.json
    is supplied) the per-mode trace-monotonicity flags.
    """
    if len(aggregate_paths) != len(labels):
        raise ValueError("need exactly one label per aggregate file")
    aggregates = [load_aggregate(p, lbl) for p, lbl in zip(aggregate_paths, labels)]
    assert_step_alignment(aggregates)
    if summary_path is not None:
        assert_summary_flags(summary_path, labels)

    fig, (ax_mse, ax_trace) = plt.subplots(2, 1, figsize=(7, 7), sharex=True)
    for agg in aggregates:
        ax_mse.plot(agg.steps, agg.mse_mean, lw=1.6, label=agg.label)
        ax_mse.fill_between(
            agg.steps, agg.mse_mean - agg.mse_std, agg.mse_mean + agg.mse_std, alpha=0.25
        )
        ax_trace.plot(agg.steps, agg.trace_mean, lw=1.6, label=agg.label)
        ax_trace.fill_between(
            agg.steps, agg.trace_mean - agg.trace_std, agg.trace_mean + agg.trace_std,
            alpha=0.25,
        )
    ax_mse.set_ylabel("MSE (m$^2$)")
    ax_mse.set_yscale("log")
    ax_mse.grid(alpha=0.3)
    ax_mse.legend()
    ax_trace.set_ylabel("total covariance trace (m$^2$)")
    ax_trace.set_yscale("log")
    ax_trace.set_xlabel("step")
    ax_trace.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return out_path
