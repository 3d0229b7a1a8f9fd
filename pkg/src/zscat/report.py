"""Delimited report files and their companion figures.

Every report path writes a TSV first and then renders a PNG next to it
(same stem), so runs leave both machine-readable and eyeball-able
artifacts.  Figures use the Agg backend; no display is needed.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .inference import DatasetReport
from .training import EpochMetrics


def write_training_metrics(path, metrics: list[EpochMetrics]) -> None:
    """One line per epoch: epoch, mean loss, binary accuracy."""
    with open(path, "w", encoding="utf-8") as f:
        f.write("epoch\tloss\taccuracy\n")
        for m in metrics:
            f.write(f"{m.epoch}\t{m.loss:.12g}\t{m.accuracy:.12g}\n")


def render_training_curves(path, metrics: list[EpochMetrics]) -> None:
    epochs = [m.epoch for m in metrics]
    fig, ax_loss = plt.subplots(figsize=(7, 4))
    ax_loss.plot(epochs, [m.loss for m in metrics], color="tab:red", label="mean loss")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("mean BCE loss", color="tab:red")
    ax_loss.tick_params(axis="y", labelcolor="tab:red")
    ax_acc = ax_loss.twinx()
    ax_acc.plot(epochs, [m.accuracy for m in metrics], color="tab:blue", label="accuracy")
    ax_acc.set_ylabel("binary accuracy", color="tab:blue")
    ax_acc.tick_params(axis="y", labelcolor="tab:blue")
    ax_acc.set_ylim(0.0, 1.05)
    ax_loss.set_title("training")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_eval_report(path, report: DatasetReport) -> None:
    """Per-class precision/recall table plus an overall accuracy row."""
    with open(path, "w", encoding="utf-8") as f:
        f.write("class\tprecision\trecall\ttp\tfp\tfn\n")
        for name, c in report.counts.items():
            f.write(f"{name}\t{c.precision:.6g}\t{c.recall:.6g}\t{c.tp}\t{c.fp}\t{c.fn}\n")
        f.write(f"overall\taccuracy={report.accuracy:.6g}\tmode={report.mode}"
                f"\ttotal={report.total}\t\t\n")


def render_eval_figure(path, report: DatasetReport) -> None:
    names = list(report.counts.keys())
    precision = [report.counts[n].precision for n in names]
    recall = [report.counts[n].recall for n in names]
    x = range(len(names))
    width = 0.38
    fig, ax = plt.subplots(figsize=(max(6, 1.2 * len(names)), 4))
    ax.bar([i - width / 2 for i in x], precision, width, label="precision")
    ax.bar([i + width / 2 for i in x], recall, width, label="recall")
    ax.set_xticks(list(x))
    ax.set_xticklabels(names, rotation=30, ha="right")
    ax.set_ylim(0.0, 1.05)
    ax.set_title(f"{report.mode} evaluation, accuracy {report.accuracy:.3f}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
