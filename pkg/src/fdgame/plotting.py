"""Figure rendering for the CLI report paths.

Figures go straight to files through the Agg backend; nothing is shown.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .core import DerivedConstants  # noqa: E402
from .poa import PoaPoint  # noqa: E402
from .throughput import BOUNDARIES, REGIMES, ThroughputOptimum  # noqa: E402

_COLORS = {"dR1": "#4c72b0", "dR2": "#dd8452", "dR3": "#55a868"}


def _finish(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_region(rows: Sequence[tuple[float, float, float, bool]], c: DerivedConstants,
                path: str | Path) -> Path:
    """Shade the feasible full-duplex interval against the half-duplex price."""
    feas = [r for r in rows if r[3]]
    fig, ax = plt.subplots(figsize=(5.5, 4))
    if feas:
        x = np.array([r[0] for r in feas])
        ax.fill_between(x, [r[1] for r in feas], [r[2] for r in feas],
                        color="#9ecae1", alpha=0.8, label="equilibria")
        ax.plot(x, [r[1] for r in feas], "k--", lw=1, label=r"$\pi_w = 0$")
        ax.plot(x, [r[2] for r in feas], "k-", lw=1, label=r"$\pi_{t_{hd}} = 0$")
    for v in (c.phi * c.p_cf, c.phi):
        ax.axvline(v, color="grey", lw=0.8, ls=":")
    ax.set_xlabel(r"$c_{hd}$")
    ax.set_ylabel(r"$\pi_{t_{fd}}$")
    ax.set_ylim(0, 1.02)
    ax.legend(loc="upper right", fontsize=8)
    return _finish(fig, path)


def plot_regimes(rows: Sequence[tuple[float, float, ThroughputOptimum]], beta: float,
                 path: str | Path) -> Path:
    """Scatter the throughput-optimal edge over the ``(iota_c, iota_f)`` plane."""
    fig, ax = plt.subplots(figsize=(5, 4.5))
    for b in BOUNDARIES:
        pts = [(ic, jf) for ic, jf, opt in rows if opt.boundary == b]
        if pts:
            ic, jf = zip(*pts)
            ax.scatter(ic, jf, s=18, marker="s", color=_COLORS[b], label=f"{b} ({REGIMES[b]})")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_xlabel(r"$\iota_c$")
    ax.set_ylabel(r"$\iota_f$")
    ax.set_title(rf"$\beta = {beta:g}$")
    ax.legend(loc="lower right", fontsize=8)
    return _finish(fig, path)


def plot_poa(points: Sequence[PoaPoint], path: str | Path, label: str | None = None) -> Path:
    fig, ax = plt.subplots(figsize=(5.5, 4))
    pts = [p for p in points if not math.isinf(p.poa)]
    ax.semilogy([p.pi_tfd for p in pts], [p.poa for p in pts], "-", label=label)
    ax.set_xlabel(r"$\pi_{t_{fd}}$")
    ax.set_ylabel("price of anarchy")
    ax.set_xlim(0, 1)
    if label:
        ax.legend()
    return _finish(fig, path)
