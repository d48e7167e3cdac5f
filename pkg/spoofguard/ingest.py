"""Read, validate, write and window trajectory logs."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from spoofguard.errors import DataValidationError
from spoofguard.geo import MAX_LOCAL_SEPARATION_M, local_displacement_arrays
from spoofguard.models import (
    WINDOW_SIZE,
    AttackClass,
    LocalDisplacement,
    PredictorWindow,
    Trajectory,
)

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("t_sec", "speed_mps", "yaw_rad", "lat_deg", "lon_deg", "gps_speed_mps", "label")

_LABELS = {c.value for c in AttackClass}


def load_csv(path: str | Path) -> Trajectory:
    """
    Load a trajectory log in the spoofguard CSV schema.

    Lat/lon are stored in degrees and converted to radians here.

    Raises:
        DataValidationError: Naming the 1-based data row and field of the
            first invalid value.
    """
    path = Path(path)
    if not path.exists():
        raise DataValidationError(f"file not found: {path}")

    columns: dict[str, list[float]] = {name: [] for name in CSV_COLUMNS[:-1]}
    labels: list[str] = []

    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        for name in CSV_COLUMNS:
            if name not in header:
                raise DataValidationError(f"{path.name}: missing column", field=name)

        previous_t = -math.inf
        for row_number, row in enumerate(reader, start=1):
            values = {name: _parse_float(row, name, row_number) for name in columns}
            _validate_row(values, previous_t, row_number)
            previous_t = values["t_sec"]
            for name, value in values.items():
                columns[name].append(value)

            label = (row.get("label") or "").strip()
            if label not in _LABELS:
                raise DataValidationError(f"unknown label {label!r}", row=row_number, field="label")
            labels.append(label)

    if not labels:
        raise DataValidationError(f"{path.name}: no data rows")

    logger.debug("Loaded %d samples from %s", len(labels), path)
    return Trajectory(
        t=np.array(columns["t_sec"]),
        speed=np.array(columns["speed_mps"]),
        yaw=np.array(columns["yaw_rad"]),
        lat=np.radians(np.array(columns["lat_deg"])),
        lon=np.radians(np.array(columns["lon_deg"])),
        gps_speed=np.array(columns["gps_speed_mps"]),
        labels=np.array(labels, dtype="U16"),
        source=path.name,
    )


def _parse_float(row: dict[str, str], name: str, row_number: int) -> float:
    raw = row.get(name)
    try:
        value = float(raw) if raw is not None else math.nan
    except ValueError:
        raise DataValidationError(f"non-numeric value {raw!r}", row=row_number, field=name) from None
    if not math.isfinite(value):
        raise DataValidationError(f"missing or non-finite value {raw!r}", row=row_number, field=name)
    return value


def _validate_row(values: dict[str, float], previous_t: float, row_number: int) -> None:
    if values["t_sec"] <= previous_t:
        raise DataValidationError("timestamps not strictly increasing", row=row_number, field="t_sec")
    if not -90.0 <= values["lat_deg"] <= 90.0:
        raise DataValidationError(f"latitude {values['lat_deg']} out of range", row=row_number, field="lat_deg")
    if not -180.0 <= values["lon_deg"] <= 180.0:
        raise DataValidationError(f"longitude {values['lon_deg']} out of range", row=row_number, field="lon_deg")
    for name in ("speed_mps", "gps_speed_mps"):
        if values[name] < 0:
            raise DataValidationError("negative speed", row=row_number, field=name)


def save_csv(traj: Trajectory, path: str | Path) -> Path:
    """Write a trajectory in the spoofguard CSV schema; floats use round-trip repr."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lat_deg = np.degrees(traj.lat)
    lon_deg = np.degrees(traj.lon)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for i in range(len(traj)):
            writer.writerow(
                (
                    repr(float(traj.t[i])),
                    repr(float(traj.speed[i])),
                    repr(float(traj.yaw[i])),
                    repr(float(lat_deg[i])),
                    repr(float(lon_deg[i])),
                    repr(float(traj.gps_speed[i])),
                    str(traj.labels[i]),
                )
            )
    return path


@dataclass(frozen=True, eq=False)
class WindowSet:
    """
    All predictor windows of a trajectory as arrays.

    features: (N, 40) in the order [speeds | cos_yaw | sin_yaw | dts]
    targets: (N, 2) GPS-derived (dx, dy) in meters
    starts: (N,) index of the first sample of each window
    speed_error: (N,) max |gps_speed - speed| over the window samples
    gps_speed_mean, sensor_speed_mean: (N,) window means
    """

    features: np.ndarray
    targets: np.ndarray
    starts: np.ndarray
    speed_error: np.ndarray
    gps_speed_mean: np.ndarray
    sensor_speed_mean: np.ndarray

    def __len__(self) -> int:
        return len(self.starts)

    def subset(self, indices: np.ndarray) -> WindowSet:
        return WindowSet(
            features=self.features[indices],
            targets=self.targets[indices],
            starts=self.starts[indices],
            speed_error=self.speed_error[indices],
            gps_speed_mean=self.gps_speed_mean[indices],
            sensor_speed_mean=self.sensor_speed_mean[indices],
        )

    @classmethod
    def concatenate(cls, sets: list[WindowSet]) -> WindowSet:
        return cls(
            features=np.concatenate([s.features for s in sets]),
            targets=np.concatenate([s.targets for s in sets]),
            starts=np.concatenate([s.starts for s in sets]),
            speed_error=np.concatenate([s.speed_error for s in sets]),
            gps_speed_mean=np.concatenate([s.gps_speed_mean for s in sets]),
            sensor_speed_mean=np.concatenate([s.sensor_speed_mean for s in sets]),
        )

    @classmethod
    def from_windows(cls, windows: list[PredictorWindow]) -> WindowSet:
        """Stack window records; speed columns are unknown and left at zero."""
        n = len(windows)
        return cls(
            features=np.array([w.features for w in windows]).reshape(n, 4 * WINDOW_SIZE),
            targets=np.array([(w.target.dx, w.target.dy) for w in windows]).reshape(n, 2),
            starts=np.array([w.index * WINDOW_SIZE for w in windows], dtype=np.int64),
            speed_error=np.zeros(n),
            gps_speed_mean=np.zeros(n),
            sensor_speed_mean=np.zeros(n),
        )


def window_count(n_samples: int) -> int:
    """Windows with a closing fix: window k needs sample 10k + 10."""
    return max(0, (n_samples - 1) // WINDOW_SIZE)


def window_arrays(traj: Trajectory) -> WindowSet:
    """
    Non-overlapping stride-10 windows of a trajectory.

    Window k covers samples [10k, 10k + 9]; its target is the GPS
    displacement from fix 10k to fix 10k + 10. Windows without a closing
    fix are dropped. A target longer than the local projection limit
    takes its great-circle length, so a far jump scores as a huge error
    instead of aborting the stream.

    Raises:
        DataValidationError: If the trajectory has fewer than 11 samples.
    """
    n_windows = window_count(len(traj))
    if n_windows == 0:
        raise DataValidationError(
            f"trajectory too short for a window: {len(traj)} samples, need {WINDOW_SIZE + 1}"
        )

    starts = np.arange(n_windows, dtype=np.int64) * WINDOW_SIZE
    idx = starts[:, None] + np.arange(WINDOW_SIZE)[None, :]

    speeds = traj.speed[idx]
    yaw = traj.yaw[idx]
    dts = traj.t[idx + 1] - traj.t[idx]
    features = np.concatenate([speeds, np.cos(yaw), np.sin(yaw), dts], axis=1)

    ends = starts + WINDOW_SIZE
    dx, dy = local_displacement_arrays(
        traj.lat[starts], traj.lon[starts], traj.lat[ends], traj.lon[ends], strict=False
    )
    far = np.flatnonzero(np.hypot(dx, dy) > MAX_LOCAL_SEPARATION_M)
    if far.size:
        logger.warning(
            "%d window(s) jump more than %.0f m, first at window %d; using great-circle length",
            far.size,
            MAX_LOCAL_SEPARATION_M,
            int(far[0]),
        )

    gps_speed = traj.gps_speed[idx]
    return WindowSet(
        features=features,
        targets=np.stack([dx, dy], axis=1),
        starts=starts,
        speed_error=np.max(np.abs(gps_speed - speeds), axis=1),
        gps_speed_mean=gps_speed.mean(axis=1),
        sensor_speed_mean=speeds.mean(axis=1),
    )


def make_windows(traj: Trajectory) -> list[PredictorWindow]:
    """Windows of a trajectory as PredictorWindow records."""
    ws = window_arrays(traj)
    n = WINDOW_SIZE
    return [
        PredictorWindow(
            speeds=row[:n],
            cos_yaw=row[n : 2 * n],
            sin_yaw=row[2 * n : 3 * n],
            dts=row[3 * n :],
            target=LocalDisplacement(float(target[0]), float(target[1])),
            index=k,
        )
        for k, (row, target) in enumerate(zip(ws.features, ws.targets))
    ]
