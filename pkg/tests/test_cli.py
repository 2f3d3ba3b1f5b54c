"""End-to-end command-line runs against the demo corpus."""

import json

import pytest
import yaml

from capcloak.cli import main
from capcloak.harness.report import read_csv
from capcloak.records import load_manifest, save_manifest


def write_captions(manifest_path, path, captions=None):
    records = load_manifest(manifest_path)
    lines = []
    for record in records:
        caption = record.adv_caption_train
        if captions is not None:
            caption = captions.get(record.image_ref, caption)
        lines.append(json.dumps(
            {"image_ref": record.image_ref, "caption": caption}
        ))
    path.write_text("\n".join(lines) + "\n")
    return path


class TestValidateManifest:
    def test_ok(self, demo_corpus, capsys):
        assert main(["validate-manifest", "--manifest", str(demo_corpus)]) == 0
        assert capsys.readouterr().out == "OK: 4 samples\n"

    def test_broken_manifest(self, tmp_path, capsys):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"image_ref": oops}\n')
        assert main(["validate-manifest", "--manifest", str(path)]) == 1
        err = capsys.readouterr().err
        assert err.startswith("error:")
        assert "line 1" in err

    def test_missing_file(self, tmp_path, capsys):
        missing = tmp_path / "nope.jsonl"
        assert main(["validate-manifest", "--manifest", str(missing)]) == 1
        assert capsys.readouterr().err.startswith("error:")


class TestAttack:
    def test_end_to_end(self, demo_corpus, tmp_path, capsys):
        out = tmp_path / "run"
        code = main([
            "attack", "--manifest", str(demo_corpus),
            "--cell", "fgsm:linf:cls", "--out", str(out),
        ])
        assert code == 0
        captured = capsys.readouterr()
        assert "fgsm-linf-cls" in captured.out
        assert "TORR" in captured.out
        for name in ("summary.csv", "per_sample.csv", "table.txt",
                     "provenance.json", "verdicts.jsonl"):
            assert (out / name).exists(), name
        rows = read_csv(out / "summary.csv")
        assert len(rows) == 1
        assert rows[0]["asr"] == 100.0

    def test_needs_manifest_or_config(self, capsys):
        assert main(["attack"]) == 1
        assert "either --config or --manifest" in capsys.readouterr().err

    def test_config_file_with_flag_overrides(self, demo_corpus, tmp_path,
                                             capsys):
        out = tmp_path / "run"
        config_path = tmp_path / "experiment.yaml"
        config_path.write_text(yaml.safe_dump({
            "manifest": str(demo_corpus),
            "cells": ["pgd:linf:cls"],
            "output_dir": str(out),
            "iterations": 40,
        }))
        code = main([
            "attack", "--config", str(config_path),
            "--cell", "pgd:linf:cap", "--iterations", "3",
        ])
        assert code == 0
        capsys.readouterr()
        provenance = json.loads((out / "provenance.json").read_text())
        assert list(provenance["attack_configs"]) == ["pgd-linf-cap"]
        assert provenance["attack_configs"]["pgd-linf-cap"]["iterations"] == 3

    def test_all_cells_aborting_exits_nonzero(self, tmp_path, capsys):
        manifest = tmp_path / "manifest.jsonl"
        from capcloak.records import SampleRecord

        save_manifest(
            [
                SampleRecord(
                    image_ref="gone.npy", labels=("cat", "couch"),
                    target_index=0, original_caption="a cat",
                    adv_caption_train="a couch", adv_caption_eval="a couch.",
                )
            ],
            manifest,
        )
        with pytest.warns(UserWarning):
            code = main([
                "attack", "--manifest", str(manifest),
                "--out", str(tmp_path / "run"),
            ])
        assert code == 1
        assert "every cell aborted" in capsys.readouterr().err


class TestEvaluate:
    def test_summary_and_csv(self, demo_corpus, tmp_path, capsys):
        captions = write_captions(demo_corpus, tmp_path / "captions.jsonl")
        out = tmp_path / "eval"
        code = main([
            "evaluate", "--manifest", str(demo_corpus),
            "--captions", str(captions), "--out", str(out),
        ])
        assert code == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["samples"] == 4
        assert summary["torr"] == 100.0
        assert summary["rorr"] == 100.0
        assert summary["asr"] == 100.0
        assert "css" not in summary
        rows = read_csv(out / "evaluation.csv")
        assert len(rows) == 4
        assert all(row["status"] == "ok" for row in rows)

    def test_bundle_enables_css(self, demo_corpus, tmp_path, capsys):
        captions = write_captions(demo_corpus, tmp_path / "captions.jsonl")
        code = main([
            "evaluate", "--manifest", str(demo_corpus),
            "--captions", str(captions), "--bundle", "stub",
        ])
        assert code == 0
        summary = json.loads(capsys.readouterr().out)
        assert 0.0 <= summary["css"] <= 1.0

    def test_malformed_caption_line(self, demo_corpus, tmp_path, capsys):
        path = tmp_path / "captions.jsonl"
        path.write_text('{"image_ref": "images/cat_couch.npy"}\n')
        code = main([
            "evaluate", "--manifest", str(demo_corpus),
            "--captions", str(path),
        ])
        assert code == 1
        assert "caption lines need image_ref and caption" in (
            capsys.readouterr().err
        )

    def test_incomplete_coverage(self, demo_corpus, tmp_path, capsys):
        captions = write_captions(demo_corpus, tmp_path / "captions.jsonl")
        lines = captions.read_text().splitlines()[1:]
        captions.write_text("\n".join(lines) + "\n")
        code = main([
            "evaluate", "--manifest", str(demo_corpus),
            "--captions", str(captions),
        ])
        assert code == 1
        assert "captions missing for 1" in capsys.readouterr().err


class TestSweeps:
    def test_eps_sweep_with_plots(self, demo_corpus, tmp_path, capsys):
        out = tmp_path / "sweep"
        code = main([
            "sweep-eps", "--manifest", str(demo_corpus),
            "--cell", "fgsm:linf:cls", "--eps-grid", "0.01,0.03",
            "--out", str(out),
        ])
        assert code == 0
        capsys.readouterr()
        rows = read_csv(out / "summary.csv")
        assert [row["epsilon"] for row in rows] == [0.01, 0.03]
        for name in ("success_vs_epsilon.png", "css_vs_epsilon.png",
                     "error_vs_epsilon.png", "fidelity_vs_epsilon.png"):
            assert (out / name).exists(), name
        assert (out / "epsilon_0p01" / "per_sample.csv").exists()
        assert (out / "epsilon_0p03" / "per_sample.csv").exists()

    def test_eps_sweep_needs_grid(self, demo_corpus, tmp_path, capsys):
        code = main([
            "sweep-eps", "--manifest", str(demo_corpus),
            "--out", str(tmp_path / "sweep"),
        ])
        assert code == 1
        assert "epsilon grid is empty" in capsys.readouterr().err

    def test_lambda_sweep(self, demo_corpus, tmp_path, capsys):
        out = tmp_path / "sweep"
        code = main([
            "sweep-lambda", "--manifest", str(demo_corpus),
            "--cell", "fgsm:linf:cls", "--lambda-grid", "0.5,1.0",
            "--out", str(out),
        ])
        assert code == 0
        capsys.readouterr()
        rows = read_csv(out / "summary.csv")
        assert [row["lambda1"] for row in rows] == [0.5, 1.0]
        assert all(row["lambda2"] == 1.0 for row in rows)
