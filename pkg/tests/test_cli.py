"""Command-line interface: exit codes, output files, determinism."""

import json
import os
import subprocess
import sys

import pytest

from protoshot.cli import main


def run_cli(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def synth_files(tmp_path):
    emb = tmp_path / "data.emb1"
    man = tmp_path / "data.jsonl"
    rc = run_cli(
        "synth", "--classes", 4, "--dim", 8, "--dev-rows", 20, "--eval-rows", 10,
        "--mean-scale", 3.0, "--sigma", 0.3, "--seed", 11,
        "--out-embeddings", emb, "--out-manifest", man,
    )
    assert rc == 0
    return emb, man


class TestInspect:
    def test_valid_pair(self, synth_files, capsys):
        emb, man = synth_files
        assert run_cli("inspect", "--embeddings", emb, "--manifest", man) == 0
        out = capsys.readouterr().out
        assert "rows: 120" in out
        assert "classes: 4" in out
        assert "dev=80" in out

    def test_truncated_embeddings_exit_2(self, synth_files, capsys):
        emb, man = synth_files
        data = emb.read_bytes()
        emb.write_bytes(data[:-3])
        rc = run_cli("inspect", "--embeddings", emb, "--manifest", man)
        assert rc == 2
        assert "payload" in capsys.readouterr().err

    def test_bind_mismatch_exit_2(self, synth_files, tmp_path, capsys):
        emb, man = synth_files
        short = tmp_path / "short.jsonl"
        lines = man.read_text().strip().splitlines()
        short.write_text("\n".join(lines[:-5]) + "\n")
        rc = run_cli("inspect", "--embeddings", emb, "--manifest", short)
        assert rc == 2
        assert "manifest" in capsys.readouterr().err

    def test_missing_file_exit_2(self, tmp_path, capsys):
        rc = run_cli(
            "inspect", "--embeddings", tmp_path / "nope.emb1",
            "--manifest", tmp_path / "nope.jsonl",
        )
        assert rc == 2


class TestRun:
    def test_separable_fixture_high_accuracy(self, synth_files, tmp_path, capsys):
        emb, man = synth_files
        out = tmp_path / "out"
        rc = run_cli(
            "run", "--embeddings", emb, "--manifest", man,
            "--method", "AVG", "--k", 5, "--seed", 1, "--out", out,
        )
        assert rc == 0
        summary = capsys.readouterr().out.strip()
        assert summary.startswith("accuracy=")
        assert float(summary.split("=")[1]) >= 0.95
        for name in ("report.jsonl", "runs.csv", "confusion.csv",
                     "confusion.png", "support.jsonl"):
            assert (out / name).exists()

    def test_full_mask_mi_matches_avg(self, synth_files, tmp_path, capsys):
        emb, man = synth_files
        rc = run_cli(
            "run", "--embeddings", emb, "--manifest", man, "--method", "AVG",
            "--k", 5, "--seed", 4, "--out", tmp_path / "avg", "--no-figures",
        )
        assert rc == 0
        avg_line = capsys.readouterr().out.strip()
        rc = run_cli(
            "run", "--embeddings", emb, "--manifest", man, "--method", "MI+AVG",
            "--ratio-k", 999, "--k", 5, "--seed", 4,
            "--out", tmp_path / "mi", "--no-figures",
        )
        assert rc == 0
        mi_line = capsys.readouterr().out.strip()
        assert avg_line == mi_line

    def test_rerun_byte_identical(self, synth_files, tmp_path):
        emb, man = synth_files
        args = (
            "run", "--embeddings", emb, "--manifest", man,
            "--method", "AVG", "--k", 5, "--seed", 42,
        )
        assert run_cli(*args, "--out", tmp_path / "r1") == 0
        assert run_cli(*args, "--out", tmp_path / "r2") == 0
        for name in ("report.jsonl", "runs.csv", "confusion.csv",
                     "confusion.png", "support.jsonl"):
            a = (tmp_path / "r1" / name).read_bytes()
            b = (tmp_path / "r2" / name).read_bytes()
            assert a == b, name

    def test_config_echo_includes_paths(self, synth_files, tmp_path):
        emb, man = synth_files
        out = tmp_path / "out"
        run_cli(
            "run", "--embeddings", emb, "--manifest", man, "--method", "AVG",
            "--k", 3, "--seed", 0, "--out", out, "--no-figures",
        )
        rep = json.loads((out / "report.jsonl").read_text().strip())
        assert rep["config"]["embeddings"] == str(emb)
        assert rep["config"]["method"] == "AVG"

    def test_zs_requires_protos(self, synth_files, tmp_path, capsys):
        emb, man = synth_files
        rc = run_cli(
            "run", "--embeddings", emb, "--manifest", man,
            "--method", "ZS-external", "--out", tmp_path / "zs",
        )
        assert rc == 2
        assert "protos" in capsys.readouterr().err


class TestSweep:
    def test_fig1_style_axis(self, synth_files, tmp_path):
        """Support sizes 2..15 produce a 14-row plot-ready CSV."""
        emb, man = synth_files
        out = tmp_path / "sw"
        values = ",".join(str(v) for v in range(2, 16))
        rc = run_cli(
            "sweep", "--embeddings", emb, "--manifest", man, "--method", "AVG",
            "--axis", "support-size", "--values", values, "--runs", 3,
            "--seed", 5, "--out", out,
        )
        assert rc == 0
        lines = (out / "sweep.csv").read_text().strip().splitlines()
        assert lines[0] == "value,mean,std"
        assert len(lines) == 1 + 14
        assert (out / "sweep.png").exists()
        assert (out / "runs.csv").exists()

    def test_k_axis_with_fraction_values(self, synth_files, tmp_path):
        """The conventional ratio set, including 1/2, sweeps end to end."""
        emb, man = synth_files
        out = tmp_path / "ksw"
        rc = run_cli(
            "sweep", "--embeddings", emb, "--manifest", man,
            "--method", "MI+AVG", "--k", 5, "--axis", "K",
            "--values", "1/2,1,2,4,8,16,32", "--runs", 2, "--seed", 3,
            "--out", out, "--no-figures",
        )
        assert rc == 0
        lines = (out / "sweep.csv").read_text().strip().splitlines()
        assert len(lines) == 1 + 7
        assert lines[1].startswith("0.5,")

    def test_parallel_matches_serial(self, synth_files, tmp_path):
        emb, man = synth_files
        args = (
            "sweep", "--embeddings", emb, "--manifest", man, "--method", "AVG",
            "--axis", "support-size", "--values", "2,5,10", "--runs", 4,
            "--seed", 9,
        )
        assert run_cli(*args, "--out", tmp_path / "s1", "--workers", 1) == 0
        assert run_cli(*args, "--out", tmp_path / "s2", "--workers", 4) == 0
        for name in ("sweep.csv", "runs.csv", "report.jsonl", "sweep.png"):
            assert (tmp_path / "s1" / name).read_bytes() == (
                tmp_path / "s2" / name
            ).read_bytes(), name


class TestKfold:
    def test_foldless_manifest_exit_2(self, synth_files, tmp_path, capsys):
        emb, man = synth_files
        rc = run_cli(
            "kfold", "--embeddings", emb, "--manifest", man,
            "--method", "AVG", "--out", tmp_path / "kf",
        )
        assert rc == 2
        assert "fold" in capsys.readouterr().err

    def test_five_folds(self, tmp_path, capsys):
        emb = tmp_path / "f.emb1"
        man = tmp_path / "f.jsonl"
        run_cli(
            "synth", "--classes", 3, "--dim", 6, "--dev-rows", 15,
            "--eval-rows", 5, "--sigma", 0.4, "--mean-scale", 3.0,
            "--folds", 5, "--seed", 2,
            "--out-embeddings", emb, "--out-manifest", man,
        )
        out = tmp_path / "kf"
        rc = run_cli(
            "kfold", "--embeddings", emb, "--manifest", man, "--method", "AVG",
            "--k", 5, "--seed", 3, "--out", out,
        )
        assert rc == 0
        assert "pooled_accuracy=" in capsys.readouterr().out
        lines = (out / "folds.csv").read_text().strip().splitlines()
        assert len(lines) == 1 + 5 + 1  # header, folds, pooled row
        for f in range(5):
            assert (out / f"support_fold{f}.jsonl").exists()
        assert (out / "folds.png").exists()


class TestSynthAndProtos:
    def test_synth_then_run_roundtrip(self, synth_files, tmp_path):
        emb, man = synth_files
        rc = run_cli(
            "run", "--embeddings", emb, "--manifest", man, "--method", "LDA",
            "--k", 10, "--seed", 0, "--out", tmp_path / "o", "--no-figures",
        )
        assert rc == 0

    def test_protos_build_show_and_zs_run(self, synth_files, tmp_path, capsys):
        emb, man = synth_files
        proto_path = tmp_path / "protos.emb1"
        rc = run_cli(
            "protos", "build", "--embeddings", emb, "--manifest", man,
            "--k", 10, "--seed", 6, "--out", proto_path,
        )
        assert rc == 0
        assert proto_path.exists()
        assert (tmp_path / "protos.emb1.classes").exists()
        assert (tmp_path / "protos.emb1.support.jsonl").exists()
        rc = run_cli("protos", "show", "--protos", proto_path, "--manifest", man)
        assert rc == 0
        assert "provenance: external" in capsys.readouterr().out
        rc = run_cli(
            "run", "--embeddings", emb, "--manifest", man,
            "--method", "ZS-external", "--protos", proto_path,
            "--seed", 1, "--out", tmp_path / "zs", "--no-figures",
        )
        assert rc == 0

    def test_manifest_carries_spec_header(self, synth_files):
        _, man = synth_files
        first = man.read_text().splitlines()[0]
        assert first.startswith("# synth {")


class TestConfigFile:
    def test_flags_override_config_file(self, synth_files, tmp_path, capsys):
        emb, man = synth_files
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"method": "LDA", "k": 3, "seed": 8}))
        out = tmp_path / "out"
        rc = run_cli(
            "--config", cfg, "run", "--embeddings", emb, "--manifest", man,
            "--method", "AVG", "--out", out, "--no-figures",
        )
        assert rc == 0
        rep = json.loads((out / "report.jsonl").read_text().strip())
        assert rep["config"]["method"] == "AVG"  # flag wins
        assert rep["config"]["k"] == 3  # config default applies
        assert rep["config"]["seed"] == 8

    def test_unknown_config_key_rejected(self, synth_files, tmp_path, capsys):
        emb, man = synth_files
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"bogus_key": 1}))
        rc = run_cli(
            "--config", cfg, "run", "--embeddings", emb, "--manifest", man,
            "--out", tmp_path / "x",
        )
        assert rc == 2


class TestConsoleScript:
    def test_module_invocation(self, synth_files):
        emb, man = synth_files
        proc = subprocess.run(
            [sys.executable, "-m", "protoshot.cli", "inspect",
             "--embeddings", str(emb), "--manifest", str(man)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert "rows: 120" in proc.stdout
