"""Figures for run timelines and noninterference counterexamples."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .core import DUMMY, GlobalEvent, OutputEvent, OutputHiddenEvent  # noqa: E402


def _network_points(trace: Sequence[GlobalEvent]):
    """(ts, channel, kind) for each network event; kind is packet, dummy or hidden."""
    for ev in trace:
        match ev.beta:
            case OutputEvent(channel=ch, packet=p):
                yield ev.ts, ch, "dummy" if p == DUMMY else "packet"
            case OutputHiddenEvent(channel=ch):
                yield ev.ts, ch, "hidden"


_STYLE = {
    "packet": dict(marker="s", color="tab:blue", label="fragment"),
    "dummy": dict(marker="s", facecolor="none", edgecolor="tab:gray", label="dummy"),
    "hidden": dict(marker="s", color="tab:purple", label="payload hidden"),
}


def _draw_rows(ax, rows: list[tuple[str, Sequence[GlobalEvent]]]) -> None:
    seen = set()
    for y, (_, trace) in enumerate(rows):
        for ts, ch, kind in _network_points(trace):
            style = dict(_STYLE[kind])
            label = style.pop("label")
            ax.scatter([ts], [y], s=60, label=None if kind in seen else label, **style)
            ax.annotate(ch, (ts, y), textcoords="offset points", xytext=(0, 7), ha="center", fontsize=7)
            seen.add(kind)
    ax.set_yticks(range(len(rows)))
    ax.set_yticklabels([name for name, _ in rows])
    ax.set_ylim(-0.6, len(rows) - 0.4)
    ax.set_xlabel("timestamp")
    if seen:
        ax.legend(loc="upper right", fontsize=8)


def run_timeline(trace: Sequence[GlobalEvent], path: str | Path, title: str = "network events") -> None:
    """One row per channel, one marker per sent packet."""
    channels = sorted({ch for _, ch, _ in _network_points(trace)})
    rows = [(ch, [ev for ev in trace if ev.beta is not None and ev.beta.channel == ch]) for ch in channels]
    fig, ax = plt.subplots(figsize=(8, 1.2 + 0.6 * max(1, len(rows))))
    _draw_rows(ax, rows)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def ni_figure(verdict, path: str | Path) -> None:
    """Both observed traces of a counterexample, with the divergence marked."""
    fig, ax = plt.subplots(figsize=(8, 2.6))
    cx = verdict.counterexample
    if cx is None:
        ax.text(0.5, 0.5, f"{verdict.mode} check passed on {verdict.variants} configuration(s)",
                ha="center", va="center", transform=ax.transAxes)
        ax.set_axis_off()
    else:
        rows = [(cx.first.describe(), cx.first_trace), (cx.second.describe(), cx.second_trace)]
        _draw_rows(ax, rows)
        ax.axvline(cx.divergence_ts, color="tab:red", linestyle="--", linewidth=1)
        ax.set_title(f"{verdict.mode} observations diverge at ts={cx.divergence_ts}")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
