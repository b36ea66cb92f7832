"""Run reports: one machine-readable JSON file plus an aligned text table.

The JSON file keeps full float precision (it must re-parse to the exact
values); the text table rounds metrics to four decimals and timings to
three.  Labels go to their own file, one integer per line.
"""

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

METRIC_COLUMNS = ["Fscore", "Precision", "Recall", "NMI", "ARI", "ACC", "Purity"]


@dataclass
class RunReport:
    dataset: str
    n_samples: int
    n_views: int
    clusters: int
    config: dict
    converged: dict
    timings: dict
    metrics: dict | None = None
    labels_path: str | None = None

    def to_dict(self):
        return dataclasses.asdict(self)


def _config_dict(cfg):
    out = {}
    for key, value in dataclasses.asdict(cfg).items():
        if isinstance(value, np.ndarray):
            value = value.tolist()
        out[key] = value
    return out


def build_report(result, dataset, labels_path=None):
    """Assemble a RunReport from a pipeline result."""
    return RunReport(
        dataset=dataset.name,
        n_samples=dataset.n_samples,
        n_views=dataset.n_views,
        clusters=result.config.clusters,
        config=_config_dict(result.config),
        converged=dict(result.converged),
        timings={k: float(v) for k, v in result.timings.items()},
        metrics=None if result.metrics is None else dict(result.metrics),
        labels_path=labels_path,
    )


def format_table(report):
    """Human-readable summary with aligned columns."""
    lines = [
        "dataset: %s  (n=%d, views=%d, clusters=%d)"
        % (report.dataset, report.n_samples, report.n_views, report.clusters),
        "",
    ]
    if report.metrics is not None:
        width = max(len(m) for m in METRIC_COLUMNS)
        lines.append("metric".ljust(width) + "  value")
        for name in METRIC_COLUMNS:
            lines.append(name.ljust(width) + "  %.4f" % report.metrics[name])
        lines.append("")
    width = max(len(s) for s in report.timings)
    lines.append("stage".ljust(width) + "  seconds")
    for stage, seconds in report.timings.items():
        lines.append(stage.ljust(width) + "  %.3f" % seconds)
    lines.append("")
    for key, value in report.converged.items():
        lines.append("converged[%s] = %s" % (key, value))
    if report.labels_path:
        lines.append("labels: %s" % report.labels_path)
    return "\n".join(lines) + "\n"


def write_report(report, out_dir):
    """Write report.json and report.txt; returns their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / "report.json"
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    txt_path = out_dir / "report.txt"
    txt_path.write_text(format_table(report), encoding="utf-8")
    return json_path, txt_path


def write_outputs(result, dataset, out_dir):
    """Write labels.txt, report.json and report.txt for a finished run."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    labels_path = out_dir / "labels.txt"
    np.savetxt(labels_path, result.labels, fmt="%d")
    report = build_report(result, dataset, labels_path=labels_path.name)
    write_report(report, out_dir)
    return report


def write_bench_table(rows, out_dir):
    """Combined grid results: bench.csv (one row per run) plus bench.json."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    columns = ["norm", "gamma", "rho"] + METRIC_COLUMNS + ["seconds"]
    csv_path = out_dir / "bench.csv"
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(str(row[c]) for c in columns) + "\n")
    with open(out_dir / "bench.json", "w", encoding="utf-8") as fh:
        json.dump(rows, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path
