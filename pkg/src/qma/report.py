"""Figure rendering for solver CSV logs.

Reads the fixed-header log written by `qma solve` and renders two PNGs:
the Newton residual history with the damping steps, and the continuity
path monitors (pogorelov_sup and min_eig against t).  Matplotlib loads
lazily with the Agg backend so the rest of the package never pays for it.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

LOG_COLUMNS = (
    "stage",
    "t",
    "newton_iter",
    "residual_linf",
    "A",
    "min_eig",
    "pogorelov_sup",
    "alpha",
)


def load_log(path):
    """Parse a solver CSV log into a float array of shape (rows, 8)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != list(LOG_COLUMNS):
            raise ValueError(
                f"{path}: expected solver log header {','.join(LOG_COLUMNS)}"
            )
        rows = [[float(x) for x in row] for row in reader]
    if not rows:
        raise ValueError(f"{path}: log has no data rows")
    return np.array(rows)


def render_log(log_path, out_dir):
    """Render residual.png and continuity.png; returns the written paths."""
    data = load_log(log_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    stage = data[:, 0].astype(int)
    t = data[:, 1]
    resid = data[:, 3]
    mineig = data[:, 5]
    pog = data[:, 6]
    alpha = data[:, 7]
    idx = np.arange(len(data))

    written = []

    fig, ax = plt.subplots(figsize=(7, 4.2))
    # stage-0 baseline can be exactly zero; keep semilogy happy
    ax.semilogy(idx, np.maximum(resid, 1e-18), marker=".", lw=1.0, color="tab:blue")
    for s in np.unique(stage)[1:]:
        ax.axvline(idx[stage == s][0] - 0.5, color="0.85", lw=0.8, zorder=0)
    ax.set_xlabel("iteration (stage boundaries in grey)")
    ax.set_ylabel("projected residual sup-norm", color="tab:blue")
    ax2 = ax.twinx()
    ax2.plot(idx, alpha, drawstyle="steps-mid", color="tab:orange", lw=1.0, alpha=0.7)
    ax2.set_ylabel("accepted step alpha", color="tab:orange")
    ax2.set_ylim(0.0, 1.05)
    fig.tight_layout()
    target = out / "residual.png"
    fig.savefig(target, dpi=110)
    plt.close(fig)
    written.append(target)

    # one point per stage: the row that closed it
    last = np.array([idx[stage == s][-1] for s in np.unique(stage)])
    fig, (top, bot) = plt.subplots(2, 1, figsize=(7, 5.2), sharex=True)
    top.plot(t[last], pog[last], marker="o", color="tab:red")
    top.set_ylabel("pogorelov_sup")
    bot.plot(t[last], mineig[last], marker="o", color="tab:green")
    bot.set_ylabel("min eigenvalue of U")
    bot.set_xlabel("continuity parameter t")
    fig.tight_layout()
    target = out / "continuity.png"
    fig.savefig(target, dpi=110)
    plt.close(fig)
    written.append(target)

    return written
