"""SVG panels for batch results: misclassification and consensus error curves."""
from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
from matplotlib.figure import Figure  # noqa: E402

from .harness import BatchResult  # noqa: E402

GOLDEN = (math.sqrt(5) - 1.0) / 2.0


def _figure(width: float = 6.0) -> Figure:
    return Figure(figsize=(width, width * GOLDEN), layout="constrained")


def _band(ax, t, batch: BatchResult, name: str, label: str) -> None:
    mean, se = batch.mean(name), batch.stderr(name)
    (line,) = ax.plot(t, mean, label=label, linewidth=1.2)
    ax.fill_between(t, mean - se, mean + se, color=line.get_color(), alpha=0.2, linewidth=0)


def _save(fig: Figure, path: Path) -> None:
    with matplotlib.rc_context({"svg.hashsalt": "trustnet", "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", metadata={"Date": None})


def plot_misclassification(batch: BatchResult, path: str | Path, title: str = "") -> Path:
    """Run-averaged misclassification frequencies and attack rate against time."""
    t = range(batch.config.horizon + 1)
    fig = _figure()
    ax = fig.add_subplot()
    _band(ax, t, batch, "legit_exclusion", "legitimate excluded")
    if batch.topology.n_malicious:
        _band(ax, t, batch, "malicious_inclusion", "malicious included")
        _band(ax, t, batch, "attack_rate", "attack rate")
    ax.axvline(batch.config.T0, color="0.5", linestyle=":", linewidth=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("frequency")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(title)
    ax.legend(frameon=False)
    _save(fig, Path(path))
    return Path(path)


def plot_consensus(batch: BatchResult, path: str | Path, title: str = "") -> Path:
    """Max disagreement and max deviation from the nominal value, log scale."""
    t = range(batch.config.horizon + 1)
    fig = _figure()
    ax = fig.add_subplot()
    for name, label in (("disagreement", "max distance to average"), ("deviation", "max deviation from nominal")):
        ax.semilogy(t, batch.mean(name), label=label, linewidth=1.2)
    ax.axvline(batch.config.T0, color="0.5", linestyle=":", linewidth=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("value")
    ax.set_title(title)
    ax.legend(frameon=False)
    _save(fig, Path(path))
    return Path(path)
