"""Experiment orchestration over a manifest.

Runs every configured (method, norm, variant) cell against every
manifest sample, evaluates captions and image quality, and persists
results incrementally: each completed sample lands on disk (CSV row,
verdict lines, adversarial PNG) before the next one starts.  A failing
sample is recorded and excluded from aggregates; a cell aborts only
when every one of its samples fails.
"""

from __future__ import annotations

import platform
import sys
import warnings
from datetime import datetime, timezone
from pathlib import Path
from statistics import fmean

import numpy as np

from .. import __version__
from ..attacks import attack_from_config, perturbation_norm
from ..bundles import load_bundle
from ..exceptions import CapcloakError, ValidationError
from ..metrics.embeddings import load_table
from ..metrics.image import image_quality_report
from ..metrics.text import css, evaluate_sample
from ..objectives import spec_for_sample
from ..records import load_image, load_manifest, save_image
from .config import resolve_attack_config
from .report import (
    CELL_FIELDS,
    PER_SAMPLE_CSV,
    SAMPLE_FIELDS,
    VERDICTS_JSONL,
    CsvAppender,
    JsonlAppender,
    MetricReport,
)

IMAGES_DIR = "images"


def _resolve_image_path(manifest_path, image_ref):
    ref = Path(image_ref)
    if ref.is_absolute():
        return ref
    return Path(manifest_path).parent / ref


def _load_records(config):
    records = load_manifest(config.manifest)
    if not records:
        raise ValidationError("no samples")
    return records


def _vocabulary(records):
    return sorted({label for record in records for label in record.labels})


def _provenance(config, bundle, attack_configs):
    return {
        "config": config.to_dict(),
        "bundle": bundle.name,
        "embedding_table": config.wordvecs or "bundled",
        "attack_configs": {
            cell_id: cfg.to_dict() for cell_id, cfg in attack_configs.items()
        },
        "versions": {
            "package": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        "timestamp_utc": datetime.now(timezone.utc).isoformat(),
        "argv": list(sys.argv),
    }


def _sample_row(cell_id, record, *, status, error="", evaluation=None,
                css_value=None, quality=None, final_loss=None,
                pert_norm=None, caption_original=None, caption_adversarial=None):
    quality = quality or {}
    return {
        "cell": cell_id,
        "image_ref": record.image_ref,
        "status": status,
        "error": error,
        "removal_ok": None if evaluation is None else evaluation.removal_ok,
        "retention_ok": None if evaluation is None else evaluation.retention_ok,
        "success": None if evaluation is None else evaluation.success,
        "css": css_value,
        "mse": quality.get("mse"),
        "mae": quality.get("mae"),
        "psnr": quality.get("psnr"),
        "ssim": quality.get("ssim"),
        "final_loss": final_loss,
        "perturbation_norm": pert_norm,
        "caption_original": caption_original,
        "caption_adversarial": caption_adversarial,
    }


def _aggregate_cell(cell, attack_config, config, sample_rows, evaluations):
    ok_rows = [r for r in sample_rows if r["status"] == "ok"]
    total = len(sample_rows)
    failed = total - len(ok_rows)
    retention = [e for e in evaluations if e.retention_ok is not None]
    rorr = None
    if retention:
        rorr = 100.0 * fmean(e.retention_ok for e in retention)
    row = {
        "cell": cell.cell_id,
        "method": cell.method,
        "norm": cell.norm,
        "variant": cell.variant,
        "epsilon": attack_config.epsilon,
        "alpha": attack_config.alpha,
        "iterations": attack_config.iterations,
        "lambda1": config.lambda1,
        "lambda2": config.lambda2,
        "threshold": config.threshold,
        "samples_total": total,
        "samples_failed": failed,
        "samples_retention": len(retention),
        "torr": 100.0 * fmean(e.removal_ok for e in evaluations),
        "rorr": rorr,
        "asr": 100.0 * fmean(e.success for e in evaluations),
        "css": fmean(r["css"] for r in ok_rows),
        "mse": fmean(r["mse"] for r in ok_rows),
        "mae": fmean(r["mae"] for r in ok_rows),
        "psnr": fmean(r["psnr"] for r in ok_rows),
        "ssim": fmean(r["ssim"] for r in ok_rows),
    }
    assert set(row) == set(CELL_FIELDS)
    return row


def run_experiment(config, bundle=None, progress=None):
    """Run every cell of the experiment grid; returns a MetricReport.

    ``bundle`` may be injected (tests, sweeps); otherwise it is loaded
    from ``config.bundle``.  ``progress`` is an optional callable
    ``(cell_id, image_ref, status)``.
    """
    records = _load_records(config)
    output_dir = Path(config.output_dir)
    images_root = output_dir / IMAGES_DIR
    images_root.mkdir(parents=True, exist_ok=True)

    table = load_table(config.wordvecs)
    if bundle is None:
        bundle = load_bundle(config.bundle, labels=_vocabulary(records))

    attack_configs = {
        cell.cell_id: resolve_attack_config(config, cell)
        for cell in config.cells
    }
    report = MetricReport(
        provenance=_provenance(config, bundle, attack_configs)
    )

    with CsvAppender(output_dir / PER_SAMPLE_CSV, SAMPLE_FIELDS) as sample_out, \
            JsonlAppender(output_dir / VERDICTS_JSONL) as verdict_out:
        for cell in config.cells:
            attack_config = attack_configs[cell.cell_id]
            attack = attack_from_config(attack_config)
            (images_root / cell.cell_id).mkdir(exist_ok=True)
            cell_rows, evaluations = [], []
            last_error = None
            for record in records:
                try:
                    row, evaluation = _run_sample(
                        bundle, attack, cell, config, record, table,
                        images_root, verdict_out,
                    )
                except (CapcloakError, OSError) as exc:
                    last_error = str(exc)
                    warnings.warn(
                        f"{cell.cell_id}/{record.image_ref} failed: {exc}",
                        stacklevel=2,
                    )
                    row = _sample_row(
                        cell.cell_id, record, status="failed", error=str(exc)
                    )
                    evaluation = None
                if evaluation is not None:
                    evaluations.append(evaluation)
                cell_rows.append(row)
                sample_out.append(row)
                report.samples.append(row)
                if progress is not None:
                    progress(cell.cell_id, record.image_ref, row["status"])
            if not evaluations:
                message = (
                    f"cell {cell.cell_id}: all {len(records)} samples failed"
                    + (f"; last error: {last_error}" if last_error else "")
                )
                report.failed_cells.append(
                    {"cell": cell.cell_id, "error": message}
                )
                warnings.warn(message, stacklevel=2)
                continue
            report.rows.append(
                _aggregate_cell(cell, attack_config, config, cell_rows,
                                evaluations)
            )

    if not report.rows:
        raise CapcloakError(
            "every cell aborted: "
            + "; ".join(f["error"] for f in report.failed_cells)
        )
    return report


def _run_sample(bundle, attack, cell, config, record, table, images_root,
                verdict_out):
    image = load_image(_resolve_image_path(config.manifest, record.image_ref))
    spec = spec_for_sample(
        cell.variant, record, lambda1=config.lambda1, lambda2=config.lambda2
    )
    result = attack.run(bundle, image, spec)
    evaluation = evaluate_sample(
        result.generated_caption_adversarial, record, table,
        threshold=config.threshold,
    )
    css_value = css(
        bundle, result.generated_caption_adversarial, record.adv_caption_eval
    )
    quality = image_quality_report(image, result.adversarial_image)
    pert = perturbation_norm(result.adversarial_image - image, cell.norm)
    out_name = Path(record.image_ref).stem + ".png"
    save_image(result.adversarial_image, images_root / cell.cell_id / out_name)
    verdict_out.append({"cell": cell.cell_id, **evaluation.to_dict()})
    row = _sample_row(
        cell.cell_id, record, status="ok", evaluation=evaluation,
        css_value=css_value, quality=quality,
        final_loss=result.loss_trace[-1], pert_norm=pert,
        caption_original=result.generated_caption_original,
        caption_adversarial=result.generated_caption_adversarial,
    )
    return row, evaluation


def _format_point(value):
    text = repr(float(value))
    return text.replace(".", "p").replace("-", "m")


def _sweep(config, grid, field_name, bundle=None, progress=None):
    if not grid:
        raise ValidationError(f"{field_name} grid is empty")
    records = _load_records(config)
    if bundle is None:
        bundle = load_bundle(config.bundle, labels=_vocabulary(records))
    output_dir = Path(config.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    series = MetricReport(
        provenance={
            "config": config.to_dict(),
            "x_field": field_name,
            "grid": [float(v) for v in grid],
            "bundle": bundle.name,
            "timestamp_utc": datetime.now(timezone.utc).isoformat(),
        }
    )
    for value in grid:
        sub_dir = output_dir / f"{field_name}_{_format_point(value)}"
        overrides = {
            "output_dir": str(sub_dir),
            "epsilon_grid": (),
            "lambda1_grid": (),
        }
        if field_name == "epsilon":
            overrides["epsilon"] = float(value)
        else:
            # Sensitivity sweeps vary lambda1 with lambda2 held at 1.0.
            overrides["lambda1"] = float(value)
            overrides["lambda2"] = 1.0
        sub_config = config.replace(**overrides)
        sub_report = run_experiment(sub_config, bundle=bundle, progress=progress)
        for row in sub_report.rows:
            series.rows.append({field_name: float(value), **row})
        series.samples.extend(sub_report.samples)
        series.failed_cells.extend(sub_report.failed_cells)
    return series


def sweep_epsilon(config, grid=None, bundle=None, progress=None):
    """One full experiment per budget value, all else fixed."""
    grid = config.epsilon_grid if grid is None else tuple(grid)
    return _sweep(config, grid, "epsilon", bundle=bundle, progress=progress)


def sweep_lambda1(config, grid=None, bundle=None, progress=None):
    """One full experiment per lambda1 value, lambda2 pinned to 1.0."""
    grid = config.lambda1_grid if grid is None else tuple(grid)
    return _sweep(config, grid, "lambda1", bundle=bundle, progress=progress)


def evaluate_captions(manifest_path, captions, table=None, threshold=None,
                      bundle=None):
    """Metrics over precomputed adversarial captions (no attack runs).

    ``captions`` maps image_ref to the generated adversarial caption;
    every manifest record must be covered.  CSS columns are filled only
    when a bundle is supplied.
    """
    from ..metrics.text import DEFAULT_THRESHOLD, corpus_rates

    records = load_manifest(manifest_path)
    if not records:
        raise ValidationError("no samples")
    missing = [r.image_ref for r in records if r.image_ref not in captions]
    if missing:
        raise ValidationError(
            f"captions missing for {len(missing)} samples: {missing[:5]}"
        )
    table = table if table is not None else load_table(None)
    threshold = DEFAULT_THRESHOLD if threshold is None else threshold
    evaluations, rows = [], []
    for record in records:
        caption = captions[record.image_ref]
        evaluation = evaluate_sample(caption, record, table, threshold)
        evaluations.append(evaluation)
        css_value = None
        if bundle is not None:
            css_value = css(bundle, caption, record.adv_caption_eval)
        rows.append(
            _sample_row(
                "evaluate", record, status="ok", evaluation=evaluation,
                css_value=css_value, caption_adversarial=caption,
            )
        )
    removal, retention, success = corpus_rates(evaluations)
    summary = {
        "samples": len(records),
        "torr": 100.0 * removal,
        "rorr": None if retention is None else 100.0 * retention,
        "asr": 100.0 * success,
    }
    if bundle is not None:
        summary["css"] = fmean(r["css"] for r in rows)
    return summary, rows, evaluations
