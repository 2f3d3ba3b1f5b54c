"""Command-line interface.

Verbs:

* ``attack``            run the experiment grid over a manifest
* ``sweep-eps``         rerun the grid across a budget grid
* ``sweep-lambda``      rerun the grid across a lambda1 grid
* ``evaluate``          metrics only, over precomputed captions
* ``validate-manifest`` parse and check a manifest, nothing else

Flags mirror the experiment-config fields; ``--config`` loads a YAML
file first and explicit flags override it.  Exit code 0 only when every
requested cell completed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .exceptions import CapcloakError
from .harness.config import ExperimentConfig
from .harness.report import emit_report, render_table
from .harness.runner import (
    evaluate_captions,
    run_experiment,
    sweep_epsilon,
    sweep_lambda1,
)
from .metrics.embeddings import load_table
from .records import load_manifest


def _parse_grid(text):
    return tuple(float(part) for part in text.split(",") if part.strip())


def _add_config_flags(parser, *, grids=False):
    parser.add_argument("--config", help="YAML experiment config file")
    parser.add_argument("--manifest", help="JSONL sample manifest")
    parser.add_argument(
        "--bundle",
        help="model bundle: 'stub' or an adapter spec such as 'clip:<model>'",
    )
    parser.add_argument(
        "--cell", action="append", dest="cells", metavar="METHOD:NORM:VARIANT",
        help="experiment cell, repeatable (e.g. pgd:linf:cls)",
    )
    parser.add_argument("--lambda1", type=float, default=None)
    parser.add_argument("--lambda2", type=float, default=None)
    parser.add_argument("--epsilon", type=float, default=None,
                        help="budget override (defaults per method/norm)")
    parser.add_argument("--alpha", type=float, default=None,
                        help="step-size override")
    parser.add_argument("--iterations", type=int, default=None)
    parser.add_argument("--out", dest="output_dir", help="output directory")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threshold", type=float, default=None,
                        help="presence similarity threshold")
    parser.add_argument("--wordvecs", help="word-embedding table file")
    if grids:
        parser.add_argument("--eps-grid", type=_parse_grid, default=None,
                            metavar="E1,E2,...")
        parser.add_argument("--lambda-grid", type=_parse_grid, default=None,
                            metavar="L1,L2,...")


def _build_config(args):
    if args.config:
        config = ExperimentConfig.from_yaml(args.config)
    else:
        if not args.manifest:
            raise CapcloakError("either --config or --manifest is required")
        config = ExperimentConfig(manifest=args.manifest)
    overrides = {}
    direct = {
        "manifest": args.manifest,
        "bundle": args.bundle,
        "cells": tuple(args.cells) if args.cells else None,
        "lambda1": args.lambda1,
        "lambda2": args.lambda2,
        "epsilon": args.epsilon,
        "alpha": args.alpha,
        "iterations": args.iterations,
        "output_dir": args.output_dir,
        "seed": args.seed,
        "threshold": args.threshold,
        "wordvecs": args.wordvecs,
    }
    if getattr(args, "eps_grid", None) is not None:
        direct["epsilon_grid"] = args.eps_grid
    if getattr(args, "lambda_grid", None) is not None:
        direct["lambda1_grid"] = args.lambda_grid
    for key, value in direct.items():
        if value is not None:
            overrides[key] = value
    return config.replace(**overrides) if overrides else config


def _progress(stream):
    def callback(cell_id, image_ref, status):
        print(f"[{cell_id}] {image_ref}: {status}", file=stream)

    return callback


def _cmd_attack(args):
    config = _build_config(args)
    report = run_experiment(config, progress=_progress(sys.stderr))
    emit_report(report, config.output_dir)
    print(render_table(report.rows), end="")
    if report.failed_cells:
        for failure in report.failed_cells:
            print(f"error: {failure['error']}", file=sys.stderr)
        return 1
    return 0


def _cmd_sweep(args, which):
    config = _build_config(args)
    if which == "epsilon":
        series = sweep_epsilon(config, progress=_progress(sys.stderr))
    else:
        series = sweep_lambda1(config, progress=_progress(sys.stderr))
    series.provenance.setdefault("x_field", which)
    emit_report(series, config.output_dir,
                formats=("csv", "table", "provenance", "plots"))
    print(render_table(series.rows), end="")
    if series.failed_cells:
        for failure in series.failed_cells:
            print(f"error: {failure['error']}", file=sys.stderr)
        return 1
    return 0


def _load_captions(path):
    captions = {}
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if "image_ref" not in obj or "caption" not in obj:
                raise CapcloakError(
                    f"{path}:{lineno}: caption lines need image_ref and caption"
                )
            captions[obj["image_ref"]] = obj["caption"]
    return captions


def _cmd_evaluate(args):
    captions = _load_captions(args.captions)
    table = load_table(args.wordvecs)
    bundle = None
    if args.bundle:
        from .bundles import load_bundle

        records = load_manifest(args.manifest)
        labels = sorted({lbl for r in records for lbl in r.labels})
        bundle = load_bundle(args.bundle, labels=labels)
    summary, rows, _ = evaluate_captions(
        args.manifest, captions, table=table, threshold=args.threshold,
        bundle=bundle,
    )
    print(json.dumps(summary, indent=2, sort_keys=True))
    if args.out:
        from .harness.report import SAMPLE_FIELDS, write_csv

        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_csv(out_dir / "evaluation.csv", SAMPLE_FIELDS, rows)
    return 0


def _cmd_validate_manifest(args):
    records = load_manifest(args.manifest)
    print(f"OK: {len(records)} samples")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="capcloak",
        description="Targeted-omission attacks on image captioners, with "
        "their evaluation harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_attack = sub.add_parser("attack", help="run the experiment grid")
    _add_config_flags(p_attack)
    p_attack.set_defaults(func=_cmd_attack)

    p_eps = sub.add_parser("sweep-eps", help="sweep the attack budget")
    _add_config_flags(p_eps, grids=True)
    p_eps.set_defaults(func=lambda a: _cmd_sweep(a, "epsilon"))

    p_lam = sub.add_parser("sweep-lambda", help="sweep lambda1 (lambda2=1)")
    _add_config_flags(p_lam, grids=True)
    p_lam.set_defaults(func=lambda a: _cmd_sweep(a, "lambda1"))

    p_eval = sub.add_parser(
        "evaluate", help="metrics over precomputed adversarial captions"
    )
    p_eval.add_argument("--manifest", required=True)
    p_eval.add_argument("--captions", required=True,
                        help="JSONL with image_ref and caption per line")
    p_eval.add_argument("--threshold", type=float, default=None)
    p_eval.add_argument("--wordvecs", default=None)
    p_eval.add_argument("--bundle", default=None,
                        help="bundle for CSS (optional)")
    p_eval.add_argument("--out", default=None,
                        help="directory for evaluation.csv")
    p_eval.set_defaults(func=_cmd_evaluate)

    p_val = sub.add_parser("validate-manifest", help="check a manifest file")
    p_val.add_argument("--manifest", required=True)
    p_val.set_defaults(func=_cmd_validate_manifest)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CapcloakError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
