"""
Tests for the cadet command-line interface: exit codes, single stages
and run determinism.
"""

import hashlib

import pytest

from cadet import __version__
from cadet.cli import main, read_confusion_csv
from cadet.errors import ParseError


# =============================================================================
# Fixtures
# =============================================================================


SMALL_CONFIG = """\
# small cohort with frequent HIT episodes so every split sees orders
n_patients = 150
hit_event_rate = 0.2
decision_noise = 0.002
"""


@pytest.fixture
def small_cfg(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(SMALL_CONFIG, encoding="utf-8")
    return path


@pytest.fixture
def single_class_csv(tmp_path):
    path = tmp_path / "one_class.csv"
    path.write_text(
        "patient_id,state_index,a,b,decision\n"
        "P1,0,1.0,2.0,0\n"
        "P1,1,1.5,2.5,0\n"
        "P2,0,0.5,1.0,0\n",
        encoding="utf-8",
    )
    return path


def read_all(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir()) if p.is_file()}


# =============================================================================
# Exit codes
# =============================================================================


class TestExitCodes:
    """Tests for the 0/1/2 exit-code contract."""

    def test_version(self, capsys):
        """--version prints the version and exits 0."""
        assert main(["--version"]) == 0
        assert __version__ in capsys.readouterr().out

    def test_missing_command(self, capsys):
        """No subcommand is a usage error."""
        assert main([]) == 1

    def test_unknown_command(self, capsys):
        """Unknown subcommands are usage errors."""
        assert main(["frobnicate"]) == 1

    def test_missing_seed(self, tmp_path, capsys):
        """Stochastic commands require --seed."""
        assert main(["gen", "--out", str(tmp_path)]) == 1
        assert "--seed" in capsys.readouterr().err

    def test_negative_seed(self, tmp_path, capsys):
        """Seeds are non-negative."""
        assert main(["gen", "--seed", "-3", "--out", str(tmp_path)]) == 1

    def test_gamma_with_linear(self, single_class_csv, tmp_path, capsys):
        """--gamma only makes sense for the rbf kernel."""
        code = main([
            "train", "--data", str(single_class_csv), "--seed", "1",
            "--kernel", "linear", "--gamma", "0.5", "--out", str(tmp_path / "m"),
        ])
        assert code == 1

    def test_bad_balanced_flag(self, single_class_csv, tmp_path, capsys):
        """--balanced takes true or false."""
        code = main([
            "train", "--data", str(single_class_csv), "--seed", "1",
            "--balanced", "maybe", "--out", str(tmp_path / "m"),
        ])
        assert code == 1

    def test_single_class_training(self, single_class_csv, tmp_path, capsys):
        """Training on one decision value exits 2 naming the error."""
        code = main(["train", "--data", str(single_class_csv), "--seed", "1", "--out", str(tmp_path / "m")])
        assert code == 2
        assert "SingleClassData" in capsys.readouterr().err

    def test_missing_input_file(self, tmp_path, capsys):
        """Unreadable inputs exit 2."""
        code = main(["split", "--data", str(tmp_path / "nope.csv"), "--seed", "1", "--out", str(tmp_path / "s")])
        assert code == 2

    def test_malformed_csv(self, tmp_path, capsys):
        """A ragged dataset file exits 2 naming the row."""
        data = tmp_path / "ragged.csv"
        data.write_text(
            "patient_id,state_index,a,decision\nP1,0,1.0,0\nP2,0,2.0,1,7\n", encoding="utf-8"
        )
        code = main(["split", "--data", str(data), "--seed", "1", "--out", str(tmp_path / "s")])
        assert code == 2
        err = capsys.readouterr().err
        assert "ParseError" in err
        assert "row 2" in err

    def test_bad_config_line(self, tmp_path, capsys):
        """Config errors exit 2 with the line number."""
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("n_patients = 10\ncolour = blue\n", encoding="utf-8")
        assert main(["gen", "--config", str(cfg), "--seed", "1", "--out", str(tmp_path / "g")]) == 2
        assert "line 2" in capsys.readouterr().err

    @pytest.mark.parametrize("flag,value", [
        ("--target-specificity", "1.0"),
        ("--target-specificity", "0"),
        ("--target-specificity", "high"),
        ("--flip-fraction", "0"),
        ("--flip-fraction", "1.5"),
    ])
    def test_out_of_range_rates(self, flag, value, tmp_path, capsys):
        """Rates outside their range are usage errors."""
        code = main(["pipeline", "--seed", "1", flag, value, "--out", str(tmp_path / "run")])
        assert code == 1
        assert flag in capsys.readouterr().err
        assert not (tmp_path / "run").exists()

    def test_out_of_range_calibration_target(self, tmp_path, capsys):
        """calibrate rejects a target of 1 before reading anything."""
        code = main([
            "calibrate", "--model", str(tmp_path / "m.txt"), "--data", str(tmp_path / "c.csv"),
            "--target-specificity", "1", "--out", str(tmp_path / "o"),
        ])
        assert code == 1

    def test_evaluate_needs_inputs(self, tmp_path, capsys):
        """evaluate without --confusion needs model, data, seed and out."""
        assert main(["evaluate", "--out", str(tmp_path)]) == 1


# =============================================================================
# Confusion-only evaluation
# =============================================================================


class TestEvaluateConfusion:
    """Tests for evaluate --confusion."""

    def test_ppv_printed(self, tmp_path, capsys):
        """84 true and 453 false positives print a PPV of 15.6%."""
        path = tmp_path / "counts.csv"
        path.write_text("tp,fp\n84,453\n", encoding="utf-8")
        assert main(["evaluate", "--confusion", str(path)]) == 0
        assert "15.6%" in capsys.readouterr().out

    def test_named_rows(self, tmp_path):
        """Optional detector, tn and fn columns are read."""
        path = tmp_path / "counts.csv"
        path.write_text("detector,tp,fp,tn,fn\nsvm,136,1752,30000,138\n", encoding="utf-8")
        [(name, cm)] = read_confusion_csv(str(path))
        assert name == "svm"
        assert (cm.tp, cm.fp, cm.tn, cm.fn) == (136, 1752, 30000, 138)

    def test_bad_count(self, tmp_path):
        """Counts must be non-negative integers."""
        path = tmp_path / "counts.csv"
        path.write_text("tp,fp\n84,many\n", encoding="utf-8")
        with pytest.raises(ParseError) as exc:
            read_confusion_csv(str(path))
        assert exc.value.row == 1

    def test_writes_artifacts(self, tmp_path, capsys):
        """With --out, the summary and confusion table are written."""
        path = tmp_path / "counts.csv"
        path.write_text("tp,fp,tn,fn\n84,453,5000,90\n", encoding="utf-8")
        out = tmp_path / "report"
        assert main(["evaluate", "--confusion", str(path), "--out", str(out)]) == 0
        assert {"summary.txt", "confusion.csv", "manifest.txt"} <= set(read_all(out))


# =============================================================================
# Stages and determinism
# =============================================================================


class TestStages:
    """Tests running each stage from the command line."""

    def test_stage_by_stage(self, small_cfg, tmp_path, capsys):
        """gen, split, train, calibrate, evaluate and score chain together."""
        data, model, report, scored = (tmp_path / d for d in ("data", "model", "report", "scored"))
        assert main(["gen", "--config", str(small_cfg), "--seed", "11", "--out", str(data)]) == 0
        assert main(["split", "--data", str(data / "dataset.csv"), "--seed", "11", "--out", str(data)]) == 0
        assert main(["train", "--data", str(data / "train.csv"), "--seed", "11", "--out", str(model)]) == 0
        assert main([
            "calibrate", "--model", str(model / "model.txt"),
            "--data", str(data / "calib.csv"), "--out", str(model),
        ]) == 0
        assert main([
            "evaluate", "--model", str(model / "model.txt"), "--data", str(data / "test.csv"),
            "--calib", str(data / "calib.csv"), "--seed", "11", "--out", str(report),
        ]) == 0
        assert main([
            "score", "--model", str(model / "model.txt"),
            "--data", str(data / "test.csv"), "--out", str(scored),
        ]) == 0

        assert {"dataset.csv", "policy_trace.csv", "train.csv", "calib.csv", "test.csv"} <= set(read_all(data))
        assert {
            "roc.csv", "confusion.csv", "operating_points.csv",
            "alerts.csv", "summary.txt", "manifest.txt",
        } <= set(read_all(report))
        assert (scored / "verdicts.csv").read_text(encoding="utf-8").startswith(
            "patient_id,state_index,decision,score,is_anomaly\n"
        )
        manifest = (model / "manifest.txt").read_text(encoding="utf-8")
        assert "subcommand = calibrate" in manifest
        assert "result.threshold.value = " in manifest
        assert "svm" in capsys.readouterr().out

    def test_calibrate_rejects_uncalibrated_evaluate(self, small_cfg, tmp_path, capsys):
        """evaluate needs a calibrated model file."""
        data, model = tmp_path / "data", tmp_path / "model"
        main(["gen", "--config", str(small_cfg), "--seed", "3", "--out", str(data)])
        main(["split", "--data", str(data / "dataset.csv"), "--seed", "3", "--out", str(data)])
        main(["train", "--data", str(data / "train.csv"), "--seed", "3", "--out", str(model)])
        code = main([
            "evaluate", "--model", str(model / "model.txt"), "--data", str(data / "test.csv"),
            "--seed", "3", "--out", str(tmp_path / "report"),
        ])
        assert code == 2
        assert "FormatError" in capsys.readouterr().err

    def test_gen_deterministic_across_threads(self, small_cfg, tmp_path, capsys):
        """gen output bytes do not depend on --threads."""
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["gen", "--config", str(small_cfg), "--seed", "5", "--out", str(a)]) == 0
        assert main(["gen", "--config", str(small_cfg), "--seed", "5", "--threads", "4", "--out", str(b)]) == 0
        assert read_all(a) == read_all(b)

    def test_pipeline_twice_identical(self, small_cfg, tmp_path, capsys):
        """Two pipeline runs with one seed are byte-identical, threads or not."""
        runs = [tmp_path / "run1", tmp_path / "run2", tmp_path / "run3"]
        base = ["pipeline", "--config", str(small_cfg), "--seed", "20240101"]
        assert main(base + ["--out", str(runs[0])]) == 0
        assert main(base + ["--out", str(runs[1])]) == 0
        assert main(base + ["--threads", "3", "--out", str(runs[2])]) == 0
        first = read_all(runs[0])
        assert first == read_all(runs[1]) == read_all(runs[2])
        assert {"dataset.csv", "model.txt", "roc.csv", "confusion.csv", "summary.txt", "manifest.txt"} <= set(first)
        manifest = first["manifest.txt"].decode("utf-8")
        assert "seed = 20240101" in manifest
        assert "param.gen.n_patients = 150" in manifest
        assert f"input.config = {small_cfg}" in manifest
        assert "input.rules = builtin:hit_screening" in manifest

    def test_pipeline_records_rule_file(self, small_cfg, tmp_path, capsys):
        """A custom rule file is named and fingerprinted in the manifest."""
        rules = tmp_path / "drop_only.rules"
        text = "IF on_heparin >= 1 AND plt_drop_from_first >= 0.5 THEN 1\nDEFAULT 0\n"
        rules.write_text(text, encoding="utf-8")
        out = tmp_path / "run"
        assert main([
            "pipeline", "--config", str(small_cfg), "--seed", "8",
            "--rules", str(rules), "--out", str(out),
        ]) == 0
        manifest = (out / "manifest.txt").read_text(encoding="utf-8")
        assert f"input.rules = {rules}" in manifest
        assert f"input.config = {small_cfg}" in manifest
        digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
        assert f"param.evaluate.rules_sha256 = {digest}" in manifest

    def test_pipeline_bad_rule_file(self, small_cfg, tmp_path, capsys):
        """A broken rule file fails before anything is generated."""
        rules = tmp_path / "bad.rules"
        rules.write_text("IF nonsense THEN 1\n", encoding="utf-8")
        out = tmp_path / "run"
        code = main([
            "pipeline", "--config", str(small_cfg), "--seed", "8",
            "--rules", str(rules), "--out", str(out),
        ])
        assert code == 2
        assert not (out / "dataset.csv").exists()
