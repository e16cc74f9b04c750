"""Report figures. Rendered off-screen with the Agg backend."""

from __future__ import annotations

import os
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from kgsumm.metrics import MetricsReport  # noqa: E402

# fixed metadata keeps PNG bytes stable across runs
_SAVE_KW = {"dpi": 100, "metadata": {"Software": None}}

SCORE_LABELS = ("Ent P", "Ent R", "Ent F1", "Rel P", "Rel R", "Rel F1")


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp")
    fig.savefig(tmp, format="png", **_SAVE_KW)
    plt.close(fig)
    os.replace(tmp, path)
    return path


def plot_metrics(report: MetricsReport, path: str | os.PathLike, title: str = "") -> Path:
    """Grouped bars of the twelve untyped/typed scores, E Dup in the title."""
    data = report.to_json()
    keys = ("ent_p", "ent_r", "ent_f1", "rel_p", "rel_r", "rel_f1")
    x = np.arange(len(keys))
    fig, ax = plt.subplots(figsize=(7, 3.5))
    for offset, mode in ((-0.2, "untyped"), (0.2, "typed")):
        ax.bar(x + offset, [100 * data[mode][k] for k in keys], width=0.4, label=mode)
    ax.set_xticks(x)
    ax.set_xticklabels(SCORE_LABELS)
    ax.set_ylim(0, 100)
    ax.set_ylabel("score (%)")
    dup = data["e_dup"]
    ax.set_title(f"{title}  E Dup = {dup:.3f}" if dup is not None else f"{title}  E Dup = n/a")
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save(fig, Path(path))


def plot_per_document(
    doc_ids: Sequence[str], reports: Sequence[MetricsReport], path: str | os.PathLike
) -> Path:
    """Untyped entity and relation F1 of every document."""
    x = np.arange(len(doc_ids))
    fig, ax = plt.subplots(figsize=(max(4, 0.5 * len(doc_ids) + 2), 3.5))
    ax.plot(x, [r.untyped_entity.f1 for r in reports], "o-", label="untyped Ent F1")
    ax.plot(x, [r.untyped_relation.f1 for r in reports], "s--", label="untyped Rel F1")
    ax.set_xticks(x)
    ax.set_xticklabels(doc_ids, rotation=45, ha="right")
    ax.set_ylim(-0.05, 1.05)
    ax.set_ylabel("F1")
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save(fig, Path(path))


def plot_training(losses: Sequence[float], dev_scores, path: str | os.PathLike) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(np.arange(1, len(losses) + 1), losses, lw=0.8, label="train loss")
    ax.set_xlabel("step")
    ax.set_ylabel("mean NLL")
    if dev_scores:
        ax2 = ax.twinx()
        steps, f1 = zip(*dev_scores)
        ax2.plot(steps, f1, "o-", color="C1", label="dev typed Rel F1")
        ax2.set_ylabel("dev typed Rel F1")
        ax2.set_ylim(0, 1)
    ax.legend(frameon=False, loc="upper right")
    fig.tight_layout()
    return _save(fig, Path(path))
