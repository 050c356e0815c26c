"""Shared building vocabulary: readings, rooms, devices and plausibility rules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping


class ConfigurationError(ValueError):
    """Raised when a required configuration entry is missing or inconsistent."""


class ContractError(ValueError):
    """Raised when a caller violates an operation precondition."""


class Modality(str, Enum):
    """The five sensed quantities, each with a fixed engineering unit."""

    TEMPERATURE = "temperature"
    HUMIDITY = "humidity"
    CO2 = "co2"
    LIGHT = "light"
    MOTION = "motion"

    @property
    def unit(self) -> str:
        return _UNITS[self]


_UNITS = {
    Modality.TEMPERATURE: "°C",
    Modality.HUMIDITY: "%RH",
    Modality.CO2: "ppm",
    Modality.LIGHT: "lux",
    Modality.MOTION: "bool",
}


class DeviceKind(str, Enum):
    ENVIRONMENTAL = "environmental"
    MOTION_SWITCH = "motion_switch"


ENVIRONMENTAL_MODALITIES = frozenset(
    {Modality.TEMPERATURE, Modality.HUMIDITY, Modality.CO2, Modality.LIGHT}
)


@dataclass(frozen=True, slots=True)
class SensorReading:
    """One timestamped measurement from one device in one room.

    ``timestamp`` is UTC epoch seconds; ``value`` is in the modality's unit.
    Non-finite values and negative timestamps are rejected at construction.
    """

    device_id: str
    room_id: str
    modality: Modality
    value: float
    timestamp: int

    def __post_init__(self) -> None:
        if not isinstance(self.value, (int, float)) or not math.isfinite(self.value):
            raise ValueError(f"reading value must be finite, got {self.value!r}")
        ts = self.timestamp
        if not isinstance(ts, (int, float)) or not math.isfinite(ts) or ts < 0:
            raise ValueError(f"timestamp must be finite epoch seconds >= 0, got {ts!r}")
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "timestamp", int(ts))


@dataclass(frozen=True, slots=True)
class Room:
    room_id: str
    name: str
    device_ids: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "device_ids", frozenset(self.device_ids))


@dataclass(frozen=True, slots=True)
class Device:
    device_id: str
    kind: DeviceKind
    modalities: frozenset[Modality] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        mods = frozenset(self.modalities)
        object.__setattr__(self, "modalities", mods)
        if self.kind is DeviceKind.ENVIRONMENTAL:
            if not mods <= ENVIRONMENTAL_MODALITIES:
                raise ValueError(
                    f"environmental device {self.device_id} may only report "
                    f"temperature/humidity/co2/light, got {sorted(m.value for m in mods)}"
                )
        elif mods != frozenset({Modality.MOTION}):
            raise ValueError(f"motion switch {self.device_id} must report exactly motion")


@dataclass(frozen=True, slots=True)
class BuildingLayout:
    """Rooms plus the devices they contain; device ids must not repeat across rooms."""

    rooms: tuple[Room, ...]
    devices: Mapping[str, Device]

    def __post_init__(self) -> None:
        object.__setattr__(self, "rooms", tuple(self.rooms))
        object.__setattr__(self, "devices", dict(self.devices))
        seen: dict[str, str] = {}
        room_ids = set()
        for room in self.rooms:
            if room.room_id in room_ids:
                raise ValueError(f"duplicate room_id {room.room_id}")
            room_ids.add(room.room_id)
            for dev_id in room.device_ids:
                if dev_id in seen:
                    raise ValueError(
                        f"device {dev_id} appears in both {seen[dev_id]} and {room.room_id}"
                    )
                seen[dev_id] = room.room_id
                if dev_id not in self.devices:
                    raise ValueError(f"room {room.room_id} references unknown device {dev_id}")

    def room(self, room_id: str) -> Room | None:
        for room in self.rooms:
            if room.room_id == room_id:
                return room
        return None

    def room_of_device(self, device_id: str) -> Room | None:
        for room in self.rooms:
            if device_id in room.device_ids:
                return room
        return None


@dataclass(frozen=True, slots=True)
class TimeWindow:
    """Closed interval [start, end] in epoch seconds."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise ValueError(f"window start {self.start} after end {self.end}")

    def contains(self, ts: int) -> bool:
        return self.start <= ts <= self.end

    @property
    def duration(self) -> int:
        return self.end - self.start


@dataclass(frozen=True, slots=True)
class PlausibilityRange:
    """Physically credible bounds for one modality.

    Negative values on non-motion modalities are sensor error codes and are
    implausible even when the range itself dips below zero.
    """

    modality: Modality
    min_value: float
    max_value: float

    def __post_init__(self) -> None:
        if not self.min_value < self.max_value:
            raise ValueError(f"range for {self.modality.value} needs min < max")


# Indoor defaults; override per deployment through configuration.
DEFAULT_RANGES: dict[Modality, PlausibilityRange] = {
    Modality.TEMPERATURE: PlausibilityRange(Modality.TEMPERATURE, -10.0, 50.0),
    Modality.HUMIDITY: PlausibilityRange(Modality.HUMIDITY, 0.0, 100.0),
    Modality.CO2: PlausibilityRange(Modality.CO2, 300.0, 5000.0),
    Modality.LIGHT: PlausibilityRange(Modality.LIGHT, 0.0, 100_000.0),
}


def is_plausible(
    reading: SensorReading, ranges: Mapping[Modality, PlausibilityRange] | None = None
) -> bool:
    """True when the reading is physically credible.

    Motion readings are plausible exactly when the value is 0 or 1.  Other
    modalities must fall inside their configured range and must not carry a
    negative sensor-error code.
    """
    if reading.modality is Modality.MOTION:
        return reading.value in (0.0, 1.0)
    ranges = DEFAULT_RANGES if ranges is None else ranges
    rng = ranges.get(reading.modality)
    if rng is None:
        raise ConfigurationError(f"no plausibility range configured for {reading.modality.value}")
    if reading.value < 0:
        return False
    return rng.min_value <= reading.value <= rng.max_value


def merge_ranges(
    overrides: Iterable[PlausibilityRange],
) -> dict[Modality, PlausibilityRange]:
    """Default ranges with per-modality overrides applied."""
    merged = dict(DEFAULT_RANGES)
    for rng in overrides:
        merged[rng.modality] = rng
    return merged
