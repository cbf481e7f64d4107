"""Evaluation report rendering: per-frame CSV plus matplotlib figures."""

from __future__ import annotations

import csv
from pathlib import Path

from .pipeline import EvalReport


def write_report(report: EvalReport, out_dir: str | Path) -> list[Path]:
    """Write report.csv and summary figures; returns the created paths."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    created: list[Path] = []

    csv_path = out / "report.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame", "tp", "fp", "fn", "precision", "recall"])
        for row in report.per_frame:
            tp, fp, fn = row["tp"], row["fp"], row["fn"]
            precision = tp / (tp + fp) if tp + fp else 1.0
            recall = tp / (tp + fn) if tp + fn else 1.0
            writer.writerow(
                [row["frame"], tp, fp, fn, f"{precision:.4f}", f"{recall:.4f}"]
            )
    created.append(csv_path)

    frames = [row["frame"] for row in report.per_frame]
    tps = [row["tp"] for row in report.per_frame]
    fps = [row["fp"] for row in report.per_frame]
    fns = [row["fn"] for row in report.per_frame]

    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(frames, tps, label="true positives", color="tab:green")
    ax.plot(frames, fps, label="false positives", color="tab:red")
    ax.plot(frames, fns, label="false negatives", color="tab:orange")
    ax.set_xlabel("frame")
    ax.set_ylabel("count")
    ax.set_title("Per-frame detection outcomes")
    ax.legend()
    fig.tight_layout()
    counts_path = out / "report_counts.png"
    fig.savefig(counts_path, dpi=120)
    plt.close(fig)
    created.append(counts_path)

    cum_tp = cum_fp = cum_fn = 0
    precisions, recalls = [], []
    for tp, fp, fn in zip(tps, fps, fns):
        cum_tp += tp
        cum_fp += fp
        cum_fn += fn
        precisions.append(cum_tp / (cum_tp + cum_fp) if cum_tp + cum_fp else 1.0)
        recalls.append(cum_tp / (cum_tp + cum_fn) if cum_tp + cum_fn else 1.0)

    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(frames, precisions, label="cumulative precision", color="tab:blue")
    ax.plot(frames, recalls, label="cumulative recall", color="tab:purple")
    ax.axhline(report.precision, color="tab:blue", ls=":", lw=1)
    ax.axhline(report.recall, color="tab:purple", ls=":", lw=1)
    ax.set_xlabel("frame")
    ax.set_ylabel("rate")
    ax.set_ylim(0.0, 1.05)
    ax.set_title(
        f"Detection quality (precision {report.precision:.3f}, "
        f"recall {report.recall:.3f}, radius {report.match_radius:g} px)"
    )
    ax.legend()
    fig.tight_layout()
    rates_path = out / "report_rates.png"
    fig.savefig(rates_path, dpi=120)
    plt.close(fig)
    created.append(rates_path)
    return created
