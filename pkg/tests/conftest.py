import pytest

from smartbuilding.core import BuildingLayout, Device, DeviceKind, Modality, Room
from smartbuilding.ingest import DiurnalCurve, OccupiedEffect, SyntheticProfile


@pytest.fixture
def office_layout() -> BuildingLayout:
    return BuildingLayout(
        rooms=(
            Room("roomA", "Room A", frozenset({"env-a", "motion-a"})),
            Room("roomB", "Room B", frozenset({"env-b"})),
        ),
        devices={
            "env-a": Device(
                "env-a",
                DeviceKind.ENVIRONMENTAL,
                frozenset({Modality.TEMPERATURE, Modality.HUMIDITY, Modality.CO2}),
            ),
            "motion-a": Device("motion-a", DeviceKind.MOTION_SWITCH, frozenset({Modality.MOTION})),
            "env-b": Device(
                "env-b",
                DeviceKind.ENVIRONMENTAL,
                frozenset({Modality.TEMPERATURE, Modality.HUMIDITY, Modality.CO2}),
            ),
        },
    )


@pytest.fixture
def quiet_profile() -> SyntheticProfile:
    return SyntheticProfile(
        baselines={
            Modality.TEMPERATURE: DiurnalCurve(mean=21.0),
            Modality.HUMIDITY: DiurnalCurve(mean=45.0),
            Modality.CO2: DiurnalCurve(mean=520.0),
        },
        noise_sigma=0.0,
        occupancy_schedule=(),
        occupied_effect=OccupiedEffect(),
        anomaly_rate=0.0,
    )


# 2024-01-01 00:00:00 UTC, a Monday
EPOCH_2024 = 1_704_067_200


@pytest.fixture
def epoch_2024() -> int:
    return EPOCH_2024
