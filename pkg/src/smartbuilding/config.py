"""Run configuration: one YAML file, flag overrides win, unknown keys rejected."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Any

import yaml

from .core import BuildingLayout, ConfigurationError, Device, DeviceKind, Modality, Room
from .ingest import DiurnalCurve, OccupiedEffect, SyntheticProfile


@dataclass(slots=True)
class PathsConfig:
    data_dir: str = "data"
    model_dir: str = "models"
    log_dir: str = "logs"


@dataclass(slots=True)
class DeviceConfig:
    device_id: str = ""
    kind: str = "environmental"
    modalities: list[str] = field(
        default_factory=lambda: ["temperature", "humidity", "co2", "light"]
    )


@dataclass(slots=True)
class RoomConfig:
    room_id: str = ""
    name: str = ""
    devices: list[DeviceConfig] = field(default_factory=list)


@dataclass(slots=True)
class BaselineConfig:
    mean: float = 0.0
    amplitude: float = 0.0
    phase_hours: float = 0.0


@dataclass(slots=True)
class OccupiedEffectConfig:
    co2_ramp_ppm_per_hour: float = 300.0
    temperature_offset: float = 0.8


@dataclass(slots=True)
class SyntheticConfig:
    cadence_s: int = 60
    duration_s: int = 172_800  # two days
    start_epoch_s: int | None = None  # None: anchor the window at "now"
    noise_sigma: float = 0.4
    anomaly_rate: float = 0.02
    baselines: dict[str, BaselineConfig] = field(
        default_factory=lambda: {
            "temperature": BaselineConfig(mean=21.0, amplitude=2.0, phase_hours=9.0),
            "humidity": BaselineConfig(mean=45.0, amplitude=5.0, phase_hours=6.0),
            "co2": BaselineConfig(mean=520.0, amplitude=60.0, phase_hours=10.0),
            "light": BaselineConfig(mean=300.0, amplitude=250.0, phase_hours=8.0),
        }
    )
    # (weekday, start hour, end hour); all week so now-anchored demo windows
    # always contain both occupancy classes
    occupancy: list[list[float]] = field(
        default_factory=lambda: [[d, 8.0, 18.0] for d in range(7)]
    )
    occupied_effect: OccupiedEffectConfig = field(default_factory=OccupiedEffectConfig)


@dataclass(slots=True)
class GridsConfig:
    anomaly: dict[str, list] = field(default_factory=dict)
    forecast: dict[str, list] = field(default_factory=dict)
    presence: dict[str, list] = field(default_factory=dict)


@dataclass(slots=True)
class DataspaceConfig:
    provider_id: str = "building-operator"
    consumer_id: str = "monitoring-app"
    allowed_participants: list[str] = field(default_factory=lambda: ["monitoring-app"])
    purpose: str = "indoor-climate-monitoring"
    expiry_s: int | None = None  # seconds after registration; None: no expiry
    max_request_rate: int | None = None


@dataclass(slots=True)
class NodeConfig:
    node_id: str = ""
    tier: str = "edge"
    cpu: float = 4.0
    memory_mb: float = 4096.0
    latency_ms: float = 5.0


@dataclass(slots=True)
class DeploymentConfig:
    service_id: str = ""
    cpu: float = 1.0
    memory_mb: float = 512.0
    preference: str = "any"
    latency_bound_ms: float | None = None
    data_dependencies: list[str] = field(default_factory=list)
    replicas: int = 1


@dataclass(slots=True)
class ServiceConfig:
    port: int = 8000
    cadence_s: int = 60
    retention_s: int | None = None


@dataclass(slots=True)
class RunConfig:
    rng_seed: int = 7
    paths: PathsConfig = field(default_factory=PathsConfig)
    building: list[RoomConfig] = field(default_factory=list)
    synthetic: SyntheticConfig = field(default_factory=SyntheticConfig)
    grids: GridsConfig = field(default_factory=GridsConfig)
    dataspace: DataspaceConfig = field(default_factory=DataspaceConfig)
    nodes: list[NodeConfig] = field(default_factory=list)
    deployments: list[DeploymentConfig] = field(default_factory=list)
    service: ServiceConfig = field(default_factory=ServiceConfig)


def default_building() -> list[RoomConfig]:
    rooms = []
    for room_id, name in (
        ("rdRoom", "R&D Room"),
        ("wdRoom", "Web Development Room"),
        ("meetingRoom", "Meeting Room"),
        ("kitchenRoom", "Kitchen"),
    ):
        rooms.append(
            RoomConfig(
                room_id=room_id,
                name=name,
                devices=[
                    DeviceConfig(device_id=f"sensirion-{room_id}", kind="environmental"),
                    DeviceConfig(
                        device_id=f"shelly-{room_id}", kind="motion_switch",
                        modalities=["motion"],
                    ),
                ],
            )
        )
    return rooms


def default_nodes() -> list[NodeConfig]:
    return [
        NodeConfig(node_id="edge-0", tier="edge", cpu=4.0, memory_mb=4096.0, latency_ms=5.0),
        NodeConfig(node_id="edge-1", tier="edge", cpu=2.0, memory_mb=2048.0, latency_ms=8.0),
        NodeConfig(node_id="cloud-0", tier="cloud", cpu=32.0, memory_mb=65536.0, latency_ms=60.0),
    ]


def default_deployments() -> list[DeploymentConfig]:
    deps = ["smart-office-telemetry"]
    return [
        DeploymentConfig(
            service_id="anomaly-service", cpu=1.0, memory_mb=512.0,
            preference="edge_preferred", latency_bound_ms=20.0, data_dependencies=deps,
        ),
        DeploymentConfig(
            service_id="forecast-service", cpu=2.0, memory_mb=1024.0,
            preference="edge_preferred", data_dependencies=deps,
        ),
        DeploymentConfig(
            service_id="presence-service", cpu=1.0, memory_mb=512.0,
            preference="edge_preferred", data_dependencies=deps,
        ),
        DeploymentConfig(
            service_id="building-service", cpu=2.0, memory_mb=2048.0,
            preference="cloud_preferred",
        ),
    ]


def default_config() -> RunConfig:
    cfg = RunConfig()
    cfg.building = default_building()
    cfg.nodes = default_nodes()
    cfg.deployments = default_deployments()
    return cfg


def _merge_into(obj: Any, doc: dict, path: str) -> None:
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{path or 'config'}: expected a mapping, got {type(doc).__name__}")
    valid = {f.name: f for f in fields(obj)}
    for key, value in doc.items():
        if key not in valid:
            raise ConfigurationError(f"unknown configuration key {path + key!r}")
        current = getattr(obj, key)
        if is_dataclass(current) and isinstance(value, dict):
            _merge_into(current, value, f"{path}{key}.")
        elif key == "building":
            setattr(obj, key, [_room_from_doc(v, f"{path}building[]") for v in value])
        elif key == "nodes":
            setattr(obj, key, [_node_from_doc(v, f"{path}nodes[]") for v in value])
        elif key == "deployments":
            deployments = []
            for dep_doc in value:
                dep = DeploymentConfig()
                _merge_into(dep, dep_doc, f"{path}deployments[].")
                deployments.append(dep)
            setattr(obj, key, deployments)
        elif key == "baselines":
            baselines = {}
            for mod, curve in value.items():
                bc = BaselineConfig()
                _merge_into(bc, curve, f"{path}baselines.{mod}.")
                baselines[mod] = bc
            setattr(obj, key, baselines)
        else:
            setattr(obj, key, value)


def _room_from_doc(doc: dict, path: str) -> RoomConfig:
    room = RoomConfig()
    valid = {f.name for f in fields(room)}
    for key, value in doc.items():
        if key not in valid:
            raise ConfigurationError(f"unknown configuration key {path}.{key!r}")
        if key == "devices":
            devices = []
            for dev_doc in value:
                dev = DeviceConfig()
                _merge_into(dev, dev_doc, f"{path}.devices[].")
                devices.append(dev)
            room.devices = devices
        else:
            setattr(room, key, value)
    return room


def _node_from_doc(doc: dict, path: str) -> NodeConfig:
    node = NodeConfig()
    _merge_into(node, doc, f"{path}.")
    return node


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then file values, then flag overrides."""
    cfg = default_config()
    if path is not None:
        doc = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        _merge_into(cfg, doc, "")
    for dotted, value in (overrides or {}).items():
        target = cfg
        *parents, leaf = dotted.split(".")
        for part in parents:
            if not hasattr(target, part):
                raise ConfigurationError(f"unknown configuration key {dotted!r}")
            target = getattr(target, part)
        if not hasattr(target, leaf):
            raise ConfigurationError(f"unknown configuration key {dotted!r}")
        setattr(target, leaf, value)
    return cfg


def build_layout(cfg: RunConfig) -> BuildingLayout:
    rooms = []
    devices: dict[str, Device] = {}
    for room_cfg in cfg.building:
        ids = []
        for dev in room_cfg.devices:
            device = Device(
                device_id=dev.device_id,
                kind=DeviceKind(dev.kind),
                modalities=frozenset(Modality(m) for m in dev.modalities),
            )
            devices[device.device_id] = device
            ids.append(device.device_id)
        rooms.append(Room(room_id=room_cfg.room_id, name=room_cfg.name, device_ids=frozenset(ids)))
    return BuildingLayout(rooms=tuple(rooms), devices=devices)


def build_profile(cfg: RunConfig) -> SyntheticProfile:
    syn = cfg.synthetic
    return SyntheticProfile(
        baselines={
            Modality(m): DiurnalCurve(c.mean, c.amplitude, c.phase_hours)
            for m, c in syn.baselines.items()
        },
        noise_sigma=syn.noise_sigma,
        occupancy_schedule=tuple((int(d), float(a), float(b)) for d, a, b in syn.occupancy),
        occupied_effect=OccupiedEffect(
            co2_ramp_ppm_per_hour=syn.occupied_effect.co2_ramp_ppm_per_hour,
            temperature_offset=syn.occupied_effect.temperature_offset,
        ),
        anomaly_rate=syn.anomaly_rate,
    )
