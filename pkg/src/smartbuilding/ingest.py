"""Dataset adapters, synthetic telemetry generation and timed stream replay."""

from __future__ import annotations

import csv
import math
import time as _time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import (
    BuildingLayout,
    ConfigurationError,
    DEFAULT_RANGES,
    Modality,
    Room,
    SensorReading,
    TimeWindow,
)
from .rng import derive_rng

NORMALIZED_HEADER = ["timestamp", "room_id", "device_id", "modality", "value"]


class FormatError(ValueError):
    """Raised when an input file does not match its documented layout."""


@dataclass(frozen=True, slots=True)
class RejectedRow:
    line_number: int
    reason: str


@dataclass(slots=True)
class LoadResult:
    readings: list[SensorReading]
    rejected: list[RejectedRow]


def load_normalized_csv(path: str | Path) -> LoadResult:
    """Read the platform's normalized CSV; bad rows are collected, not fatal."""
    path = Path(path)
    readings: list[SensorReading] = []
    rejected: list[RejectedRow] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file, expected header {','.join(NORMALIZED_HEADER)}")
        if [h.strip().lower() for h in header] != NORMALIZED_HEADER:
            raise FormatError(
                f"{path}: bad header {','.join(header)!r}, expected {','.join(NORMALIZED_HEADER)}"
            )
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                ts_raw, room_id, device_id, modality_raw, value_raw = row
                reading = SensorReading(
                    device_id=device_id.strip(),
                    room_id=room_id.strip(),
                    modality=Modality(modality_raw.strip().lower()),
                    value=float(value_raw),
                    timestamp=int(ts_raw),
                )
            except (ValueError, TypeError) as exc:
                rejected.append(RejectedRow(line_no, str(exc)))
                continue
            readings.append(reading)
    readings.sort(key=lambda r: (r.device_id, r.timestamp))
    return LoadResult(readings=readings, rejected=rejected)


def write_normalized_csv(readings: Iterable[SensorReading], path: str | Path) -> int:
    """Inverse of :func:`load_normalized_csv`; returns the row count."""
    path = Path(path)
    count = 0
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(NORMALIZED_HEADER)
        for r in readings:
            writer.writerow([r.timestamp, r.room_id, r.device_id, r.modality.value, repr(r.value)])
            count += 1
    return count


@dataclass(frozen=True, slots=True)
class OccupancyRecord:
    """One labeled environmental sample from the public occupancy dataset."""

    timestamp: int
    temperature: float
    humidity: float
    light: float
    co2: float
    occupancy_label: int

    def __post_init__(self) -> None:
        if self.occupancy_label not in (0, 1):
            raise ValueError(f"occupancy label must be 0 or 1, got {self.occupancy_label}")
        for name in ("temperature", "humidity", "light", "co2"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


_OCCUPANCY_COLUMNS = {
    "date": "date",
    "temperature": "temperature",
    "humidity": "humidity",
    "light": "light",
    "co2": "co2",
    "occupancy": "occupancy",
}


def _parse_occupancy_timestamp(raw: str) -> int:
    raw = raw.strip().strip('"')
    try:
        return int(raw)
    except ValueError:
        pass
    dt = datetime.fromisoformat(raw)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def load_occupancy_csv(path: str | Path) -> list[OccupancyRecord]:
    """Load the Kaggle-layout occupancy CSV (extra columns ignored)."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file")
        lookup: dict[str, int] = {}
        for idx, name in enumerate(header):
            key = name.strip().strip('"').lower()
            if key in _OCCUPANCY_COLUMNS and key not in lookup:
                lookup[key] = idx
        missing = [c for c in _OCCUPANCY_COLUMNS if c not in lookup]
        if missing:
            raise FormatError(f"{path}: missing required column(s): {', '.join(sorted(missing))}")
        records: list[OccupancyRecord] = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                records.append(
                    OccupancyRecord(
                        timestamp=_parse_occupancy_timestamp(row[lookup["date"]]),
                        temperature=float(row[lookup["temperature"]]),
                        humidity=float(row[lookup["humidity"]]),
                        light=float(row[lookup["light"]]),
                        co2=float(row[lookup["co2"]]),
                        occupancy_label=int(float(row[lookup["occupancy"]])),
                    )
                )
            except (ValueError, IndexError) as exc:
                raise FormatError(f"{path}:{line_no}: {exc}") from exc
    records.sort(key=lambda r: r.timestamp)
    return records


@dataclass(frozen=True, slots=True)
class DiurnalCurve:
    """24-hour sinusoidal baseline: mean + amplitude * sin(2π(h - phase)/24)."""

    mean: float
    amplitude: float = 0.0
    phase_hours: float = 0.0

    def value_at(self, epoch_s: int) -> float:
        hours = (epoch_s % 86_400) / 3600.0
        return self.mean + self.amplitude * math.sin(
            2.0 * math.pi * (hours - self.phase_hours) / 24.0
        )


@dataclass(frozen=True, slots=True)
class OccupiedEffect:
    co2_ramp_ppm_per_hour: float = 300.0
    temperature_offset: float = 0.8


@dataclass(frozen=True, slots=True)
class SyntheticProfile:
    """Parameters of the synthetic smart-office telemetry generator."""

    baselines: dict[Modality, DiurnalCurve]
    noise_sigma: float = 0.0
    # (weekday 0=Monday, start hour, end hour) occupied intervals
    occupancy_schedule: tuple[tuple[int, float, float], ...] = ()
    occupied_effect: OccupiedEffect = field(default_factory=OccupiedEffect)
    anomaly_rate: float = 0.0

    def __post_init__(self) -> None:
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if not 0.0 <= self.anomaly_rate <= 0.5:
            raise ValueError("anomaly rate must be in [0, 0.5]")
        object.__setattr__(self, "baselines", dict(self.baselines))
        object.__setattr__(
            self, "occupancy_schedule", tuple(tuple(iv) for iv in self.occupancy_schedule)
        )

    def occupied_since(self, epoch_s: int) -> float | None:
        """Hours since the active occupancy interval began, or None when empty."""
        dt = datetime.fromtimestamp(epoch_s, tz=timezone.utc)
        hour = dt.hour + dt.minute / 60.0 + dt.second / 3600.0
        for weekday, start, end in self.occupancy_schedule:
            if dt.weekday() == weekday and start <= hour < end:
                return hour - start
        return None


@dataclass(frozen=True, slots=True)
class AnomalyKey:
    device_id: str
    modality: Modality
    timestamp: int


@dataclass(slots=True)
class SyntheticResult:
    readings: list[SensorReading]
    anomaly_index: set[AnomalyKey]

    def is_injected(self, reading: SensorReading) -> bool:
        return AnomalyKey(reading.device_id, reading.modality, reading.timestamp) in self.anomaly_index


CADENCE_BOUNDS = (10, 3600)


def _inject_anomaly(rng: np.random.Generator, modality: Modality) -> float:
    """Either a negative sensor error code or a far out-of-range value."""
    if modality is Modality.MOTION:
        return float(rng.integers(2, 10))
    if rng.random() < 0.5:
        return -float(rng.uniform(1.0, 99.0))
    bounds = DEFAULT_RANGES[modality]
    return bounds.max_value * float(rng.uniform(1.5, 4.0))


def generate_synthetic(
    profile: SyntheticProfile,
    layout: BuildingLayout,
    window: TimeWindow,
    cadence_s: int = 60,
    rng_seed: int = 0,
) -> SyntheticResult:
    """Deterministic synthetic telemetry for every device in the layout.

    value(t) = baseline(t) + occupancy effect(t) + N(0, sigma), with anomalies
    injected point-wise at ``anomaly_rate`` and recorded in the ground-truth
    index.
    """
    if not CADENCE_BOUNDS[0] <= cadence_s <= CADENCE_BOUNDS[1]:
        raise ConfigurationError(
            f"cadence {cadence_s}s outside supported range {CADENCE_BOUNDS[0]}-{CADENCE_BOUNDS[1]}s"
        )
    ticks = range(window.start, window.end + 1, cadence_s)
    readings: list[SensorReading] = []
    index: set[AnomalyKey] = set()
    for room in layout.rooms:
        for device_id in sorted(room.device_ids):
            device = layout.devices[device_id]
            for modality in sorted(device.modalities, key=lambda m: m.value):
                rng = derive_rng(rng_seed, "synthetic", device_id, modality.value)
                for ts in ticks:
                    occupied_h = profile.occupied_since(ts)
                    if modality is Modality.MOTION:
                        value = 1.0 if occupied_h is not None else 0.0
                    else:
                        curve = profile.baselines.get(modality)
                        if curve is None:
                            continue
                        value = curve.value_at(ts)
                        if occupied_h is not None:
                            if modality is Modality.CO2:
                                value += profile.occupied_effect.co2_ramp_ppm_per_hour * occupied_h
                            elif modality is Modality.TEMPERATURE:
                                value += profile.occupied_effect.temperature_offset
                        if profile.noise_sigma > 0:
                            value += float(rng.normal(0.0, profile.noise_sigma))
                    if profile.anomaly_rate > 0 and rng.random() < profile.anomaly_rate:
                        value = _inject_anomaly(rng, modality)
                        index.add(AnomalyKey(device_id, modality, ts))
                    readings.append(
                        SensorReading(
                            device_id=device_id,
                            room_id=room.room_id,
                            modality=modality,
                            value=value,
                            timestamp=ts,
                        )
                    )
    readings.sort(key=lambda r: (r.timestamp, r.device_id, r.modality.value))
    return SyntheticResult(readings=readings, anomaly_index=index)


@dataclass(slots=True)
class ReplaySummary:
    delivered: int
    wall_seconds: float
    aborted: bool = False
    last_delivered_timestamp: int | None = None
    error: str | None = None


def replay_stream(
    readings: Sequence[SensorReading],
    speedup: float,
    sink: Callable[[SensorReading], None],
    sleep: Callable[[float], None] = _time.sleep,
) -> ReplaySummary:
    """Deliver readings to ``sink`` in timestamp order, delays scaled by 1/speedup.

    ``speedup=math.inf`` replays as fast as possible.  A sink exception aborts
    the replay; the summary records how far it got.
    """
    if not speedup > 0:
        raise ValueError("speedup must be > 0")
    ordered = sorted(readings, key=lambda r: r.timestamp)
    started = _time.monotonic()
    delivered = 0
    last_ts: int | None = None
    for i, reading in enumerate(ordered):
        if i > 0 and math.isfinite(speedup):
            gap = reading.timestamp - ordered[i - 1].timestamp
            if gap > 0:
                sleep(gap / speedup)
        try:
            sink(reading)
        except Exception as exc:  # noqa: BLE001 - sink failures abort, not crash
            return ReplaySummary(
                delivered=delivered,
                wall_seconds=_time.monotonic() - started,
                aborted=True,
                last_delivered_timestamp=last_ts,
                error=f"{type(exc).__name__}: {exc}",
            )
        delivered += 1
        last_ts = reading.timestamp
    return ReplaySummary(
        delivered=delivered,
        wall_seconds=_time.monotonic() - started,
        last_delivered_timestamp=last_ts,
    )
