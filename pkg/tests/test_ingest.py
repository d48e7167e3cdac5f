"""Tests for CSV ingestion and windowing."""

import math
from pathlib import Path

import numpy as np
import pytest

from spoofguard.errors import DataValidationError
from spoofguard.geo import EARTH_RADIUS_M, local_displacement
from spoofguard.ingest import (
    CSV_COLUMNS,
    WindowSet,
    load_csv,
    make_windows,
    save_csv,
    window_arrays,
    window_count,
)
from spoofguard.models import Trajectory
from spoofguard.predictor import kinematic_arrays
from tests.helpers import drive, straight

HEADER = ",".join(CSV_COLUMNS)
GOOD_ROW = "0.0,10.0,0.0,37.39,-122.081,10.0,clean"


def write_rows(tmp_path: Path, *rows: str, header: str = HEADER) -> Path:
    path = tmp_path / "log.csv"
    path.write_text("\n".join([header, *rows]) + "\n")
    return path


class TestLoadCsv:
    """Test reading the CSV schema."""

    def test_fixture_loads(self, tiny_csv: Path) -> None:
        traj = load_csv(tiny_csv)
        assert len(traj) == 25
        assert traj.source == "tiny.csv"
        assert traj.lat[0] == pytest.approx(math.radians(37.39))
        assert traj.lon[0] == pytest.approx(math.radians(-122.081))
        assert np.all(traj.labels == "clean")
        assert traj.sample_rate_hz == pytest.approx(100.0)

    def test_fixture_has_two_windows(self, tiny_csv: Path) -> None:
        assert len(window_arrays(load_csv(tiny_csv))) == 2

    def test_round_trip(self, tmp_path: Path) -> None:
        traj = drive(seed=3, duration_s=5.0)
        loaded = load_csv(save_csv(traj, tmp_path / "drive.csv"))
        np.testing.assert_array_equal(loaded.t, traj.t)
        np.testing.assert_array_equal(loaded.speed, traj.speed)
        np.testing.assert_array_equal(loaded.yaw, traj.yaw)
        np.testing.assert_array_equal(loaded.gps_speed, traj.gps_speed)
        np.testing.assert_allclose(loaded.lat, traj.lat, rtol=1e-15)
        np.testing.assert_allclose(loaded.lon, traj.lon, rtol=1e-15)
        np.testing.assert_array_equal(loaded.labels, traj.labels)

    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(DataValidationError, match="not found"):
            load_csv(tmp_path / "nope.csv")

    def test_missing_column(self, tmp_path: Path) -> None:
        path = write_rows(tmp_path, "0.0,10.0,0.0,37.39,-122.081,clean", header="t_sec,speed_mps,yaw_rad,lat_deg,lon_deg,label")
        with pytest.raises(DataValidationError) as excinfo:
            load_csv(path)
        assert excinfo.value.field == "gps_speed_mps"

    def test_header_only(self, tmp_path: Path) -> None:
        with pytest.raises(DataValidationError, match="no data rows"):
            load_csv(write_rows(tmp_path))

    def test_non_numeric_value_names_row_and_field(self, tmp_path: Path) -> None:
        path = write_rows(
            tmp_path,
            GOOD_ROW,
            "0.01,10.0,0.0,37.39,-122.081,10.0,clean",
            "0.02,fast,0.0,37.39,-122.081,10.0,clean",
        )
        with pytest.raises(DataValidationError) as excinfo:
            load_csv(path)
        assert excinfo.value.row == 3
        assert excinfo.value.field == "speed_mps"
        assert "row 3" in str(excinfo.value)

    def test_empty_value(self, tmp_path: Path) -> None:
        path = write_rows(tmp_path, "0.0,10.0,,37.39,-122.081,10.0,clean")
        with pytest.raises(DataValidationError) as excinfo:
            load_csv(path)
        assert excinfo.value.field == "yaw_rad"

    def test_non_monotone_time(self, tmp_path: Path) -> None:
        path = write_rows(tmp_path, GOOD_ROW, "0.0,10.0,0.0,37.39,-122.081,10.0,clean")
        with pytest.raises(DataValidationError) as excinfo:
            load_csv(path)
        assert excinfo.value.row == 2
        assert excinfo.value.field == "t_sec"

    @pytest.mark.parametrize(
        "row,field",
        [
            ("0.0,10.0,0.0,91.0,-122.081,10.0,clean", "lat_deg"),
            ("0.0,10.0,0.0,37.39,-181.0,10.0,clean", "lon_deg"),
            ("0.0,-1.0,0.0,37.39,-122.081,10.0,clean", "speed_mps"),
            ("0.0,10.0,0.0,37.39,-122.081,-0.5,clean", "gps_speed_mps"),
            ("0.0,10.0,0.0,37.39,-122.081,10.0,jamming", "label"),
        ],
    )
    def test_invalid_values(self, tmp_path: Path, row: str, field: str) -> None:
        with pytest.raises(DataValidationError) as excinfo:
            load_csv(write_rows(tmp_path, row))
        assert excinfo.value.row == 1
        assert excinfo.value.field == field

    def test_save_writes_header_and_labels(self, tmp_path: Path) -> None:
        path = save_csv(straight(duration_s=0.5), tmp_path / "out" / "s.csv")
        lines = path.read_text().splitlines()
        assert lines[0] == HEADER
        assert len(lines) == 51
        assert lines[1].endswith(",clean")


class TestWindowing:
    """Test stride-10 window extraction."""

    @pytest.mark.parametrize("n,expected", [(0, 0), (1, 0), (10, 0), (11, 1), (20, 1), (21, 2), (2000, 199)])
    def test_window_count(self, n: int, expected: int) -> None:
        assert window_count(n) == expected

    def test_too_short(self) -> None:
        traj = straight(duration_s=0.1)
        assert len(traj) == 10
        with pytest.raises(DataValidationError, match="too short"):
            window_arrays(traj)

    def test_shapes_and_layout(self, straight_drive: Trajectory) -> None:
        ws = window_arrays(straight_drive)
        assert ws.features.shape == (199, 40)
        assert ws.targets.shape == (199, 2)
        np.testing.assert_array_equal(ws.starts[:3], [0, 10, 20])
        np.testing.assert_allclose(ws.features[:, :10], 10.0)
        np.testing.assert_allclose(ws.features[:, 10:20], 1.0)
        np.testing.assert_allclose(ws.features[:, 20:30], 0.0, atol=1e-15)
        np.testing.assert_allclose(ws.features[:, 30:], 0.01, rtol=1e-9)

    def test_targets_are_fix_to_fix_displacements(self) -> None:
        traj = drive(seed=4, duration_s=3.0, sigma_gps_m=0.5)
        ws = window_arrays(traj)
        for k in (0, 7, len(ws) - 1):
            start = traj.sample(10 * k).gps
            end = traj.sample(10 * k + 10).gps
            d = local_displacement(start, end)
            assert ws.targets[k, 0] == pytest.approx(d.dx, abs=1e-9)
            assert ws.targets[k, 1] == pytest.approx(d.dy, abs=1e-9)

    def test_speed_columns(self) -> None:
        traj = drive(seed=6, duration_s=30.0)
        ws = window_arrays(traj)
        k = 250
        own = slice(10 * k, 10 * k + 10)
        assert ws.speed_error[k] == pytest.approx(np.max(np.abs(traj.gps_speed[own] - traj.speed[own])))
        assert ws.gps_speed_mean[k] == pytest.approx(np.mean(traj.gps_speed[own]))
        assert ws.sensor_speed_mean[k] == pytest.approx(np.mean(traj.speed[own]))

    def test_noise_free_targets_match_dead_reckoning(self, straight_drive: Trajectory) -> None:
        ws = window_arrays(straight_drive)
        np.testing.assert_allclose(kinematic_arrays(ws.features), ws.targets, atol=5e-8)
        np.testing.assert_allclose(ws.targets[:, 0], 1.0, atol=5e-8)

    def test_far_jump_keeps_its_great_circle_length(self, straight_drive: Trajectory) -> None:
        lat = straight_drive.lat.copy()
        lat[500:] += 15_000.0 / EARTH_RADIUS_M
        moved = straight_drive.with_gps(lat, straight_drive.lon, straight_drive.gps_speed, straight_drive.labels)
        ws = window_arrays(moved)
        assert len(ws) == 199
        assert ws.targets[49, 1] == pytest.approx(15_000.0, rel=1e-6)
        assert ws.targets[49, 0] == pytest.approx(1.0, abs=5e-3)
        np.testing.assert_allclose(ws.targets[50:, 0], 1.0, atol=5e-3)
        np.testing.assert_allclose(ws.targets[50:, 1], 0.0, atol=1e-6)

    def test_make_windows_matches_arrays(self) -> None:
        traj = drive(seed=8, duration_s=2.0)
        ws = window_arrays(traj)
        windows = make_windows(traj)
        assert len(windows) == len(ws)
        for k, w in enumerate(windows):
            assert w.index == k
            np.testing.assert_array_equal(w.features, ws.features[k])
            assert (w.target.dx, w.target.dy) == (ws.targets[k, 0], ws.targets[k, 1])

    def test_window_set_helpers(self) -> None:
        a = window_arrays(straight(duration_s=1.0))
        b = window_arrays(straight(speed=5.0, duration_s=2.0))
        both = WindowSet.concatenate([a, b])
        assert len(both) == len(a) + len(b)
        tail = both.subset(np.arange(len(a), len(both)))
        np.testing.assert_array_equal(tail.features, b.features)
        rebuilt = WindowSet.from_windows(make_windows(straight(duration_s=1.0)))
        np.testing.assert_array_equal(rebuilt.features, a.features)
        np.testing.assert_array_equal(rebuilt.starts, a.starts)
