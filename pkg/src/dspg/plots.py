"""Figure rendering for penalty sweeps.

Renders the sweep summary the CSV rows feed: solve time against the penalty
level on the left axis, surviving nonzero count on the right axis.  Always
writes to file (no interactive backend required).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_STYLE = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 150,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
    "legend.fontsize": 9,
}


def render_sweep(rows, out_path) -> None:
    """Plot solve time and nonzero count against the penalty grid.

    ``rows`` are dicts with keys ``rho``, ``time_s``, ``nnz`` and ``status``;
    failed rows are skipped.  The x-axis switches to log scale when the grid
    spans more than a decade.
    """
    ok = [r for r in rows if r["status"] == "Converged"]
    if not ok:
        raise ValueError("no converged sweep rows to plot")
    rho = [r["rho"] for r in ok]
    times = [r["time_s"] for r in ok]
    nnz = [r["nnz"] for r in ok]
    with plt.rc_context(_STYLE):
        fig, ax_time = plt.subplots()
        ax_time.plot(rho, times, "o-", color="tab:blue", label="solve time")
        ax_time.set_xlabel(r"penalty level $\rho$")
        ax_time.set_ylabel("time (s)", color="tab:blue")
        ax_time.tick_params(axis="y", labelcolor="tab:blue")
        if min(rho) > 0 and max(rho) / min(rho) > 10:
            ax_time.set_xscale("log")
        ax_nnz = ax_time.twinx()
        ax_nnz.plot(rho, nnz, "s--", color="tab:brown", label="nonzeros")
        ax_nnz.set_ylabel("nonzero entries", color="tab:brown")
        ax_nnz.tick_params(axis="y", labelcolor="tab:brown")
        ax_nnz.grid(False)
        lines = ax_time.get_lines() + ax_nnz.get_lines()
        ax_time.legend(lines, [ln.get_label() for ln in lines], loc="best")
        fig.tight_layout()
        fig.savefig(out_path)
        plt.close(fig)
