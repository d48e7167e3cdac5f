"""Tests for the CLI interface."""

import json
from pathlib import Path

import pytest

from spoofguard.cli import main

SMALL_CONFIG: dict[str, object] = {
    "synth": {"trajectories": 2, "duration_s": 30.0, "sigma_gps_m": 0.05},
    "train": {"epochs": 2},
    "campaign": {"instances_per_trajectory": 2},
}


def write_config(directory: Path, data: dict[str, object] = SMALL_CONFIG) -> str:
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / "config.json"
    path.write_text(json.dumps(data))
    return str(path)


@pytest.fixture(scope="module")
def pipeline_out(tmp_path_factory: pytest.TempPathFactory) -> Path:
    base = tmp_path_factory.mktemp("pipeline")
    out = base / "run"
    assert main(["pipeline", "--config", write_config(base), "--out", str(out)]) == 0
    return out


class TestCLIBasic:
    """Test basic CLI functionality."""

    def test_version(self, capsys: pytest.CaptureFixture[str]) -> None:
        assert main(["--version"]) == 0
        assert "spoofguard" in capsys.readouterr().out

    def test_no_command(self) -> None:
        assert main([]) == 1

    def test_unknown_attack_kind(self, tmp_path: Path) -> None:
        assert main(["inject", "--out", str(tmp_path), "--kind", "jamming"]) == 1

    def test_missing_config(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        assert main(["gen", "--config", str(tmp_path / "none.json"), "--out", str(tmp_path)]) == 1
        assert "config file not found" in capsys.readouterr().err

    def test_invalid_config_value(self, tmp_path: Path) -> None:
        config = write_config(tmp_path, {"synth": {"duration_s": 0}})
        assert main(["gen", "--config", config, "--out", str(tmp_path / "out")]) == 1

    def test_run_log_written(self, tmp_path: Path) -> None:
        out = tmp_path / "out"
        assert main(["gen", "--config", write_config(tmp_path), "--out", str(out)]) == 0
        assert "gen" in (out / "run.log").read_text()


class TestCLIGen:
    """Test synthetic data generation."""

    def test_writes_one_file_per_trajectory(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        out = tmp_path / "out"
        assert main(["gen", "--config", write_config(tmp_path), "--out", str(out)]) == 0
        files = sorted((out / "clean").glob("*.csv"))
        assert [f.name for f in files] == ["clean_00.csv", "clean_01.csv"]
        assert str(files[0]) in capsys.readouterr().out

    def test_deterministic(self, tmp_path: Path) -> None:
        config = write_config(tmp_path)
        assert main(["gen", "--config", config, "--out", str(tmp_path / "a")]) == 0
        assert main(["gen", "--config", config, "--out", str(tmp_path / "b")]) == 0
        a = (tmp_path / "a" / "clean" / "clean_01.csv").read_bytes()
        assert a == (tmp_path / "b" / "clean" / "clean_01.csv").read_bytes()

    def test_seed_override(self, tmp_path: Path) -> None:
        config = write_config(tmp_path)
        assert main(["gen", "--config", config, "--out", str(tmp_path / "a")]) == 0
        assert main(["gen", "--config", config, "--out", str(tmp_path / "b"), "--seed", "5"]) == 0
        a = (tmp_path / "a" / "clean" / "clean_00.csv").read_bytes()
        assert a != (tmp_path / "b" / "clean" / "clean_00.csv").read_bytes()


class TestCLIErrors:
    """Test exit codes for missing inputs."""

    def test_calibrate_without_data(self, tmp_path: Path) -> None:
        empty = tmp_path / "empty"
        empty.mkdir()
        assert main(["calibrate", "--data", str(empty), "--out", str(tmp_path / "out")]) == 2

    def test_detect_without_calibration(
        self, tmp_path: Path, tiny_csv: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        assert main(["detect", str(tiny_csv), "--out", str(tmp_path)]) == 2
        assert "spoofguard calibrate" in capsys.readouterr().err

    def test_evaluate_without_campaign(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        assert main(["evaluate", "--out", str(tmp_path)]) == 2
        assert "spoofguard inject" in capsys.readouterr().err

    def test_invalid_jobs(self, tmp_path: Path, tiny_csv: Path) -> None:
        assert main(["detect", str(tiny_csv), "--out", str(tmp_path), "--jobs", "0"]) == 1


class TestCLIPipeline:
    """Test the full experiment and its outputs."""

    def test_outputs(self, pipeline_out: Path) -> None:
        for name in ("calibration.json", "model.json", "loss_history.csv", "metrics.json", "table2.md",
                     "confusion.csv", "roc_points.csv", "run.log", "attacked/manifest.json"):
            assert (pipeline_out / name).exists(), name
        assert len(list((pipeline_out / "clean").glob("*.csv"))) == 2
        assert len(list((pipeline_out / "attacked").glob("*.csv"))) == 16
        assert len(list((pipeline_out / "verdicts").glob("*.csv"))) == 16

    def test_metrics_cover_every_kind(self, pipeline_out: Path) -> None:
        metrics = json.loads((pipeline_out / "metrics.json").read_text())
        assert set(metrics["summary"]) == {"turn_by_turn", "stop", "overshoot", "small_biased"}
        assert len(metrics["config_hash"]) == 16
        assert metrics["predictor"] == "kinematic"
        table = (pipeline_out / "table2.md").read_text()
        assert "| Multiple small biased | 4 |" in table

    def test_loss_history(self, pipeline_out: Path) -> None:
        lines = (pipeline_out / "loss_history.csv").read_text().splitlines()
        assert lines[0] == "epoch,train_mae,test_mae"
        assert len(lines) == 3

    def test_manifest(self, pipeline_out: Path) -> None:
        manifest = json.loads((pipeline_out / "attacked" / "manifest.json").read_text())
        assert manifest["counts"] == {"turn_by_turn": 4, "stop": 4, "overshoot": 4, "small_biased": 4}
        for entry in manifest["instances"]:
            assert (pipeline_out / entry["file"]).exists()

    def test_rerun_is_byte_identical(self, pipeline_out: Path, tmp_path: Path) -> None:
        out = tmp_path / "again"
        assert main(["pipeline", "--config", write_config(tmp_path), "--out", str(out)]) == 0
        for name in ("metrics.json", "table2.md", "confusion.csv", "calibration.json", "attacked/manifest.json"):
            assert (out / name).read_bytes() == (pipeline_out / name).read_bytes(), name

    def test_calibrate_rerun_is_identical(self, pipeline_out: Path, tmp_path: Path) -> None:
        out = tmp_path / "cal"
        data = str(pipeline_out / "clean")
        assert main(["calibrate", "--data", data, "--out", str(out)]) == 0
        first = (out / "calibration.json").read_bytes()
        assert main(["calibrate", "--data", data, "--out", str(out)]) == 0
        assert (out / "calibration.json").read_bytes() == first
        assert first == (pipeline_out / "calibration.json").read_bytes()

    def test_parallel_detection_matches_serial(self, pipeline_out: Path, tmp_path: Path) -> None:
        out = tmp_path / "par"
        (out / "verdicts").mkdir(parents=True)
        (out / "calibration.json").write_bytes((pipeline_out / "calibration.json").read_bytes())
        inputs = sorted(str(p) for p in (pipeline_out / "attacked").glob("stop-*.csv"))
        assert main(["detect", *inputs, "--out", str(out), "--jobs", "2"]) == 0
        for path in inputs:
            name = Path(path).stem + ".csv"
            assert (out / "verdicts" / name).read_bytes() == (pipeline_out / "verdicts" / name).read_bytes()

    def test_truncated_verdicts_rejected(self, pipeline_out: Path, tmp_path: Path) -> None:
        out = tmp_path / "trunc"
        for sub in ("attacked", "verdicts"):
            (out / sub).mkdir(parents=True)
            for f in (pipeline_out / sub).iterdir():
                (out / sub / f.name).write_bytes(f.read_bytes())
        victim = out / "verdicts" / "stop-00-0.csv"
        lines = victim.read_text().splitlines(keepends=True)
        victim.write_text("".join(lines[:-1]))
        assert main(["evaluate", "--out", str(out)]) == 2


@pytest.fixture(scope="module")
def default_out(tmp_path_factory: pytest.TempPathFactory) -> Path:
    out = tmp_path_factory.mktemp("defaults") / "run"
    assert main(["pipeline", "--out", str(out)]) == 0
    return out


class TestCLIDefaults:
    """Test the full experiment with no config file."""

    def test_every_instance_built(self, default_out: Path) -> None:
        manifest = json.loads((default_out / "attacked" / "manifest.json").read_text())
        assert manifest["counts"] == {"turn_by_turn": 25, "stop": 25, "overshoot": 25, "small_biased": 25}
        assert "| Multiple small biased | 25 |" in (default_out / "table2.md").read_text()

    def test_published_thresholds_are_used(self, default_out: Path) -> None:
        calibration = json.loads((default_out / "calibration.json").read_text())
        assert calibration["thresholds"] == {"disp_thresh_m": 1.79, "speed_thresh_mps": 2.91}

    @pytest.mark.parametrize(
        "kind,bound",
        [("turn_by_turn", 0.97), ("stop", 0.85), ("overshoot", 0.97), ("small_biased", 0.97)],
    )
    def test_detection_quality(self, default_out: Path, kind: str, bound: float) -> None:
        summary = json.loads((default_out / "metrics.json").read_text())["summary"][kind]
        assert summary["sensitivity"]["mean"] >= bound
        assert summary["specificity"]["mean"] >= 0.98
        assert summary["accuracy"]["mean"] >= 0.95

    def test_small_steps_are_classified(self, default_out: Path) -> None:
        confusion = json.loads((default_out / "metrics.json").read_text())["class_confusion"]
        counts = {(c["true"], c["predicted"]): c["windows"] for c in confusion}
        assert counts[("small_biased", "small_biased")] >= 0.97 * 25 * 101
