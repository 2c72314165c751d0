"""Write experiment reports: CSV table, JSON sidecar and a PNG figure."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .faults import ExperimentReport

CSV_COLUMNS = ("experiment", "x", "y", "seed", "detail_ref")

_AXES = {
    "mining-curve": ("iterations I", "mined assertions"),
    "coverage": ("test vectors t", "error coverage"),
    "tradeoff": ("assertions k", "vectors to detection"),
}


def _num(v):
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return repr(v) if isinstance(v, float) else str(v)


def csv_text(report: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for exp, x, y, seed, ref in report.rows():
        w.writerow((exp, _num(x), _num(y), seed, ref))
    return buf.getvalue()


def sidecar_text(report: ExperimentReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def plot_report(report: ExperimentReport, path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5.0, 3.4), dpi=100)
    for name, points in report.series.items():
        if report.experiment == "mining-curve" and name == "simulations":
            continue
        if not points:
            continue
        xs, ys = zip(*points)
        ax.plot(xs, ys, marker="o", markersize=3, label=name)
    xlabel, ylabel = _AXES.get(report.experiment, ("x", "y"))
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if report.experiment == "mining-curve":
        ax.set_xscale("log", base=2)
    ax.set_title(f"{report.experiment}: {report.config.get('circuit', '')}")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="png", metadata={"Software": None})
    plt.close(fig)


def write_report(report: ExperimentReport, out_dir, stem: str | None = None,
                 figure: bool = True) -> dict:
    """Write ``<stem>.csv``, ``<stem>.json`` and optionally ``<stem>.png``; return the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = stem or report.experiment
    paths = {"csv": out / f"{stem}.csv", "json": out / f"{stem}.json"}
    paths["csv"].write_text(csv_text(report), encoding="utf-8")
    paths["json"].write_text(sidecar_text(report), encoding="utf-8")
    if figure:
        paths["png"] = out / f"{stem}.png"
        plot_report(report, paths["png"])
    return paths
