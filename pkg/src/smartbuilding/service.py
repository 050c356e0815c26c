"""Consumer-side monitoring API.

Serves room, sensor and forecast views out of the local series store and the
trained models.  The store is filled through dataspace transfers only; this
service never reads a provider's data directly.
"""

from __future__ import annotations

import json
import time as _time
from dataclasses import dataclass, field
from pathlib import Path
from threading import RLock
from typing import Callable

import numpy as np
from fastapi import FastAPI, Query
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .core import BuildingLayout, Device, DeviceKind, Modality, Room, SensorReading, TimeWindow
from .models.densenet import DenseNetModel, densenet_forward
from .models.iforest import IsolationForestModel, iforest_classify_many
from .models.persist import load_model
from .models.rforest import RandomForestModel, rforest_predict
from .pipeline import WINDOW_LEN, denormalize, normalize
from .store import SeriesStore

OCCUPANCY_FEATURES = (Modality.TEMPERATURE, Modality.HUMIDITY, Modality.CO2)
STALENESS_CADENCE_FACTOR = 2


def layout_to_doc(layout: BuildingLayout) -> dict:
    return {
        "rooms": [
            {
                "room_id": room.room_id,
                "name": room.name,
                "devices": [
                    {
                        "device_id": d,
                        "kind": layout.devices[d].kind.value,
                        "modalities": sorted(m.value for m in layout.devices[d].modalities),
                    }
                    for d in sorted(room.device_ids)
                ],
            }
            for room in layout.rooms
        ]
    }


def layout_from_doc(doc: dict) -> BuildingLayout:
    rooms = []
    devices: dict[str, Device] = {}
    for room_doc in doc["rooms"]:
        device_ids = []
        for dev in room_doc["devices"]:
            device = Device(
                device_id=dev["device_id"],
                kind=DeviceKind(dev["kind"]),
                modalities=frozenset(Modality(m) for m in dev["modalities"]),
            )
            devices[device.device_id] = device
            device_ids.append(device.device_id)
        rooms.append(
            Room(room_id=room_doc["room_id"], name=room_doc["name"], device_ids=frozenset(device_ids))
        )
    return BuildingLayout(rooms=tuple(rooms), devices=devices)


@dataclass(slots=True)
class ServiceState:
    store: SeriesStore
    layout: BuildingLayout
    cadence_s: int = 60
    presence_model: RandomForestModel | None = None
    anomaly_models: dict[Modality, IsolationForestModel] = field(default_factory=dict)
    forecast_models: dict[Modality, DenseNetModel] = field(default_factory=dict)
    clock: Callable[[], float] = _time.time
    swap_lock: RLock = field(default_factory=RLock)

    def load_models(self, model_dir: str | Path) -> None:
        """Pick up any model files present; swapping is atomic per model slot."""
        model_dir = Path(model_dir)
        with self.swap_lock:
            presence_path = model_dir / "presence.json"
            if presence_path.exists():
                self.presence_model = load_model(presence_path)
            for modality in Modality:
                anomaly_path = model_dir / f"anomaly_{modality.value}.json"
                if anomaly_path.exists():
                    self.anomaly_models[modality] = load_model(anomaly_path)
                forecast_path = model_dir / f"forecast_{modality.value}.json"
                if forecast_path.exists():
                    self.forecast_models[modality] = load_model(forecast_path)

    @classmethod
    def from_dir(cls, state_dir: str | Path, clock: Callable[[], float] = _time.time) -> "ServiceState":
        state_dir = Path(state_dir)
        layout = layout_from_doc(
            json.loads((state_dir / "layout.json").read_text(encoding="utf-8"))
        )
        meta_path = state_dir / "service.json"
        cadence = 60
        retention = None
        if meta_path.exists():
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
            cadence = meta.get("cadence_s", 60)
            retention = meta.get("retention_s")
        store = SeriesStore(
            journal_path=state_dir / "store.jsonl", retention_s=retention, clock=clock
        )
        state = cls(store=store, layout=layout, cadence_s=cadence, clock=clock)
        model_dir = state_dir / "models"
        if model_dir.exists():
            state.load_models(model_dir)
        return state


def room_feature_window(
    state: ServiceState, room: Room
) -> tuple[np.ndarray | None, int | None, str | None]:
    """Latest per-room (temperature, humidity, co2) means, or why they are missing.

    Per modality the latest reading of every device in the room is averaged;
    the window is incomplete when a modality is absent or older than
    2x the configured cadence.
    """
    now = state.clock()
    values = []
    as_of = None
    for modality in OCCUPANCY_FEATURES:
        per_device = []
        newest = None
        for device_id in sorted(room.device_ids):
            device = state.layout.devices.get(device_id)
            if device is None or modality not in device.modalities:
                continue
            latest = state.store.latest(device_id, modality)
            if latest is None:
                continue
            ts, value = latest
            per_device.append(value)
            newest = ts if newest is None else max(newest, ts)
        if not per_device:
            return None, None, f"no {modality.value} readings for room"
        if now - newest > STALENESS_CADENCE_FACTOR * state.cadence_s:
            return None, None, f"latest {modality.value} reading is stale"
        values.append(float(np.mean(per_device)))
        as_of = newest if as_of is None else max(as_of, newest)
    return np.array(values), as_of, None


def room_status(state: ServiceState, room: Room) -> dict:
    features, as_of, explanation = room_feature_window(state, room)
    if features is None:
        return {
            "room_id": room.room_id,
            "occupancy": "Unknown",
            "probability": None,
            "as_of": as_of,
            "explanation": explanation,
        }
    with state.swap_lock:
        model = state.presence_model
    if model is None:
        return {
            "room_id": room.room_id,
            "occupancy": "Unknown",
            "probability": None,
            "as_of": as_of,
            "explanation": "no presence model loaded",
        }
    label, probability = rforest_predict(model, model.scale(features))
    return {
        "room_id": room.room_id,
        "occupancy": "Occupied" if label == 1 else "Empty",
        "probability": probability,
        "as_of": as_of,
        "explanation": None,
    }


def create_app(state: ServiceState, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="smartbuilding", version="0.1.0")
    app.state.service = state

    def error(status: int, message: str, **extra):
        return JSONResponse(status_code=status, content={"error": message, **extra})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/metrics/summary")
    def metrics_summary():
        stats = state.store.stats()
        stats["rooms"] = len(state.layout.rooms)
        return stats

    @app.get("/rooms")
    def rooms():
        return {
            "rooms": [
                {
                    "room_id": room.room_id,
                    "name": room.name,
                    "device_count": len(room.device_ids),
                }
                for room in sorted(state.layout.rooms, key=lambda r: r.room_id)
            ]
        }

    @app.get("/rooms/{room_id}")
    def room_view(room_id: str):
        room = state.layout.room(room_id)
        if room is None:
            return error(404, "unknown room", room_id=room_id)
        status = room_status(state, room)
        status["name"] = room.name
        status["sensors"] = [
            {
                "device_id": device_id,
                "kind": state.layout.devices[device_id].kind.value,
                "modalities": sorted(
                    m.value for m in state.layout.devices[device_id].modalities
                ),
            }
            for device_id in sorted(room.device_ids)
        ]
        return status

    @app.get("/sensors/{device_id}/data")
    def sensor_data(
        device_id: str,
        modality: str,
        start: int | None = Query(None, alias="from"),
        end: int | None = Query(None, alias="to"),
    ):
        device = state.layout.devices.get(device_id)
        if device is None:
            return error(404, "unknown device", device_id=device_id)
        try:
            mod = Modality(modality)
        except ValueError:
            return error(400, f"unknown modality {modality!r}")
        start = 0 if start is None else start
        end = 2**62 if end is None else end
        if start > end:
            return error(400, "window start is after end", **{"from": start, "to": end})
        series = state.store.query(device_id, mod, TimeWindow(start, end))
        with state.swap_lock:
            model = state.anomaly_models.get(mod)
        anomalies: list[int] = []
        if model is not None and series:
            rows = np.array([[v] for _, v in series])
            flags = iforest_classify_many(model, rows)
            anomalies = [int(t) for (t, _), flagged in zip(series, flags) if flagged]
        return {
            "device_id": device_id,
            "modality": mod.value,
            "series": [{"timestamp": int(t), "value": v} for t, v in series],
            "anomalies": anomalies,
        }

    @app.get("/sensors/{device_id}/forecast")
    def sensor_forecast(device_id: str, modality: str, horizon: int = 5):
        device = state.layout.devices.get(device_id)
        if device is None:
            return error(404, "unknown device", device_id=device_id)
        try:
            mod = Modality(modality)
        except ValueError:
            return error(400, f"unknown modality {modality!r}")
        if not 1 <= horizon <= 60:
            return error(400, "horizon must be between 1 and 60 steps", horizon=horizon)
        with state.swap_lock:
            model = state.forecast_models.get(mod)
        if model is None:
            return error(409, f"no forecast model loaded for {mod.value}")
        entries = state.store.query(device_id, mod, TimeWindow(0, 2**62))
        if len(entries) < WINDOW_LEN:
            return error(
                409,
                f"need at least {WINDOW_LEN} readings to forecast",
                available=len(entries),
                required=WINDOW_LEN,
            )
        lo = model.norm_min if model.norm_min is not None else 0.0
        hi = model.norm_max if model.norm_max is not None else 1.0
        recent = [v for _, v in entries[-WINDOW_LEN:]]
        window = list(normalize(np.array(recent), lo, hi))
        last_ts = entries[-1][0]
        out = []
        for step in range(1, horizon + 1):
            predicted = float(densenet_forward(model, np.array(window[-WINDOW_LEN:])))
            window.append(predicted)
            out.append(
                {
                    "timestamp": int(last_ts + step * state.cadence_s),
                    "value": float(denormalize(predicted, lo, hi)),
                }
            )
        return {"device_id": device_id, "modality": mod.value, "forecast": out}

    if static_dir is not None and Path(static_dir).exists():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="dashboard")

    return app


def transfer_sink(store: SeriesStore) -> Callable[[SensorReading], None]:
    """Sink suitable for dataspace transfers: every delivery lands in the store."""

    def sink(reading: SensorReading) -> None:
        store.append(reading)

    return sink
