"""Figures for benchmark reports.  Rendered with the Agg backend straight to files."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .workloads.ping import PingReport  # noqa: E402

_COLOURS = {"direct": "#4c72b0", "bestowed": "#dd8452", "bestowed-atomic": "#55a868"}


def ping_figure(reports: Mapping[str, PingReport], path: Union[str, Path]) -> Path:
    """Two panels: median wall time per mode, and envelopes delivered (log scale)."""
    path = Path(path)
    modes = list(reports)
    colours = [_COLOURS.get(m, "#8172b2") for m in modes]
    fig, (left, right) = plt.subplots(1, 2, figsize=(9, 3.6))

    medians = [reports[m].median_seconds for m in modes]
    left.bar(modes, medians, color=colours)
    for i, m in enumerate(modes):
        xs = [i] * len(reports[m].samples)
        left.scatter(xs, [s.seconds for s in reports[m].samples], color="black", s=8, zorder=3)
    left.set_ylabel("seconds (median, dots are runs)")
    messages = reports[modes[0]].messages if modes else 0
    left.set_title(f"{messages} ping messages")

    right.bar(modes, [max(1, reports[m].envelopes) for m in modes], color=colours)
    right.set_yscale("log")
    right.set_ylabel("envelopes delivered")
    right.set_title("mailbox traffic")

    for ax in (left, right):
        ax.spines["top"].set_visible(False)
        ax.spines["right"].set_visible(False)
        ax.tick_params(axis="x", labelsize=8)
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
