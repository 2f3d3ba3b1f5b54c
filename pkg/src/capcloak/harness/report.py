"""Result records and their on-disk forms.

All CSV output is deterministic: floats are written with ``repr`` (so a
re-parse reproduces them exactly), rows keep manifest order, and no
timestamps appear outside the provenance block.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..exceptions import ValidationError

CELL_FIELDS = (
    "cell", "method", "norm", "variant", "epsilon", "alpha", "iterations",
    "lambda1", "lambda2", "threshold", "samples_total", "samples_failed",
    "samples_retention", "torr", "rorr", "asr", "css",
    "mse", "mae", "psnr", "ssim",
)

SAMPLE_FIELDS = (
    "cell", "image_ref", "status", "error", "removal_ok", "retention_ok",
    "success", "css", "mse", "mae", "psnr", "ssim", "final_loss",
    "perturbation_norm", "caption_original", "caption_adversarial",
)

SUMMARY_CSV = "summary.csv"
PER_SAMPLE_CSV = "per_sample.csv"
VERDICTS_JSONL = "verdicts.jsonl"
TABLE_TXT = "table.txt"
PROVENANCE_JSON = "provenance.json"


def format_value(value):
    """Deterministic, exactly re-parseable CSV cell text."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_value(text):
    """Inverse of format_value for numeric cells ('' -> None)."""
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


@dataclass
class MetricReport:
    """Aggregate rows per cell plus the per-sample detail behind them."""

    rows: list = field(default_factory=list)
    samples: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    failed_cells: list = field(default_factory=list)

    def row_for(self, cell_id):
        for row in self.rows:
            if row["cell"] == cell_id:
                return row
        raise ValidationError(f"no aggregate row for cell {cell_id!r}")


class CsvAppender:
    """Incremental CSV writer that flushes after every row."""

    def __init__(self, path, fieldnames):
        self.path = Path(path)
        self.fieldnames = tuple(fieldnames)
        self._handle = open(self.path, "w", encoding="utf-8", newline="")
        self._writer = csv.DictWriter(
            self._handle, fieldnames=self.fieldnames, lineterminator="\n"
        )
        self._writer.writeheader()
        self._handle.flush()

    def append(self, row):
        self._writer.writerow(
            {k: format_value(row.get(k)) for k in self.fieldnames}
        )
        self._handle.flush()

    def close(self):
        if not self._handle.closed:
            self._handle.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class JsonlAppender:
    """Incremental JSON-lines writer, one flushed object per line."""

    def __init__(self, path):
        self.path = Path(path)
        self._handle = open(self.path, "w", encoding="utf-8")

    def append(self, obj):
        self._handle.write(json.dumps(obj, sort_keys=True) + "\n")
        self._handle.flush()

    def close(self):
        if not self._handle.closed:
            self._handle.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_csv(path, fieldnames, rows):
    with CsvAppender(path, fieldnames) as out:
        for row in rows:
            out.append(row)
    return Path(path)


def read_csv(path):
    with open(path, "r", encoding="utf-8", newline="") as handle:
        return [
            {k: parse_value(v) for k, v in row.items()}
            for row in csv.DictReader(handle)
        ]


def _fmt_cell(value, width, decimals=2):
    if value is None:
        text = "-"
    elif isinstance(value, float):
        text = f"{value:.{decimals}f}"
    else:
        text = str(value)
    return text.rjust(width)


def render_table(rows):
    """Human-readable success and quality tables, one row per cell."""
    lines = []
    header = f"{'cell':<20}{'TORR':>8}{'RORR':>8}{'ASR':>8}{'CSS':>10}"
    lines.append(header)
    lines.append("-" * len(header))
    for row in rows:
        lines.append(
            f"{row['cell']:<20}"
            + _fmt_cell(row["torr"], 8)
            + _fmt_cell(row["rorr"], 8)
            + _fmt_cell(row["asr"], 8)
            + _fmt_cell(row["css"], 10, decimals=4)
        )
    lines.append("")
    header = f"{'cell':<20}{'MSE':>10}{'MAE':>10}{'PSNR':>10}{'SSIM':>10}"
    lines.append(header)
    lines.append("-" * len(header))
    for row in rows:
        lines.append(
            f"{row['cell']:<20}"
            + _fmt_cell(row["mse"], 10)
            + _fmt_cell(row["mae"], 10)
            + _fmt_cell(row["psnr"], 10)
            + _fmt_cell(row["ssim"], 10)
        )
    return "\n".join(lines) + "\n"


def _plot_series(rows, x_field, columns, title, ylabel, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    by_cell = {}
    for row in rows:
        by_cell.setdefault(row["cell"], []).append(row)
    fig, ax = plt.subplots(figsize=(6, 4))
    for cell_id, cell_rows in sorted(by_cell.items()):
        xs = [r[x_field] for r in cell_rows]
        for column in columns:
            ys = [r[column] for r in cell_rows]
            if any(y is None for y in ys):
                continue
            label = column if len(by_cell) == 1 else f"{cell_id}:{column}"
            ax.plot(xs, ys, marker="o", label=label)
    ax.set_xlabel(x_field)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def plot_sweep(rows, x_field, output_dir):
    """Success-metric and image-quality series plots for one sweep."""
    output_dir = Path(output_dir)
    paths = [
        _plot_series(
            rows, x_field, ("torr", "rorr", "asr"),
            f"success metrics vs {x_field}", "rate (%)",
            output_dir / f"success_vs_{x_field}.png",
        ),
        _plot_series(
            rows, x_field, ("css",),
            f"caption similarity vs {x_field}", "cosine",
            output_dir / f"css_vs_{x_field}.png",
        ),
        _plot_series(
            rows, x_field, ("mse", "mae"),
            f"pixel error vs {x_field}", "error (0-255 scale)",
            output_dir / f"error_vs_{x_field}.png",
        ),
        _plot_series(
            rows, x_field, ("psnr", "ssim"),
            f"fidelity vs {x_field}", "dB / SSIMx100",
            output_dir / f"fidelity_vs_{x_field}.png",
        ),
    ]
    return paths


def emit_report(report, output_dir, formats=("csv", "table", "provenance")):
    """Write a report's files; returns the list of paths written.

    ``formats`` may include csv, table, provenance, and plots (plots
    need an ``x_field`` key in provenance naming the swept column).
    """
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        written.append(
            write_csv(output_dir / SUMMARY_CSV, CELL_FIELDS, report.rows)
        )
        written.append(
            write_csv(output_dir / PER_SAMPLE_CSV, SAMPLE_FIELDS, report.samples)
        )
    if "table" in formats:
        path = output_dir / TABLE_TXT
        path.write_text(render_table(report.rows), encoding="utf-8")
        written.append(path)
    if "provenance" in formats:
        path = output_dir / PROVENANCE_JSON
        path.write_text(
            json.dumps(report.provenance, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        written.append(path)
    if "plots" in formats:
        x_field = report.provenance.get("x_field")
        if x_field:
            written.extend(plot_sweep(report.rows, x_field, output_dir))
    return written
