"""Append-ordered time-series store with a disk journal.

Readings live in per-(device, modality) sorted arrays; range queries bisect
on timestamps.  Every accepted append is written to a newline-delimited JSON
log first, so the store survives a restart by replaying it.
"""

from __future__ import annotations

import json
import time as _time
from bisect import bisect_left, bisect_right, insort
from pathlib import Path
from threading import RLock
from typing import Callable, Iterator

from .core import Modality, SensorReading, TimeWindow


class RetentionError(ValueError):
    """Raised for appends older than the configured retention horizon."""


class SeriesStore:
    def __init__(
        self,
        journal_path: str | Path | None = None,
        retention_s: int | None = None,
        clock: Callable[[], float] = _time.time,
    ):
        self._series: dict[tuple[str, Modality], list[tuple[int, float, str]]] = {}
        self._lock = RLock()
        self._retention_s = retention_s
        self._clock = clock
        self._appends = 0
        self._queries = 0
        self._journal_path = Path(journal_path) if journal_path else None
        self._journal_fh = None
        if self._journal_path is not None:
            self._journal_path.parent.mkdir(parents=True, exist_ok=True)
            if self._journal_path.exists():
                self._replay()
            self._journal_fh = self._journal_path.open("a", encoding="utf-8")

    def _replay(self) -> None:
        with self._journal_path.open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                doc = json.loads(line)
                self._insert(
                    SensorReading(
                        device_id=doc["device_id"],
                        room_id=doc["room_id"],
                        modality=Modality(doc["modality"]),
                        value=doc["value"],
                        timestamp=doc["timestamp"],
                    )
                )

    def _insert(self, reading: SensorReading) -> None:
        key = (reading.device_id, reading.modality)
        entries = self._series.setdefault(key, [])
        item = (reading.timestamp, reading.value, reading.room_id)
        if not entries or entries[-1][0] <= reading.timestamp:
            entries.append(item)
        else:
            insort(entries, item)

    def append(self, reading: SensorReading) -> None:
        """Durably record one reading; rejects readings beyond retention."""
        with self._lock:
            if self._retention_s is not None:
                horizon = self._clock() - self._retention_s
                if reading.timestamp < horizon:
                    raise RetentionError(
                        f"reading at {reading.timestamp} is older than the "
                        f"{self._retention_s}s retention horizon"
                    )
            if self._journal_fh is not None:
                self._journal_fh.write(
                    json.dumps(
                        {
                            "device_id": reading.device_id,
                            "room_id": reading.room_id,
                            "modality": reading.modality.value,
                            "value": reading.value,
                            "timestamp": reading.timestamp,
                        }
                    )
                    + "\n"
                )
                self._journal_fh.flush()
            self._insert(reading)
            self._appends += 1

    def query(
        self, device_id: str, modality: Modality, window: TimeWindow
    ) -> list[tuple[int, float]]:
        """All readings with window.start <= t <= window.end, ascending."""
        with self._lock:
            self._queries += 1
            entries = self._series.get((device_id, modality), [])
            lo = bisect_left(entries, (window.start, float("-inf"), ""))
            hi = bisect_right(entries, (window.end, float("inf"), "￿"))
            return [(t, v) for t, v, _ in entries[lo:hi]]

    def latest(self, device_id: str, modality: Modality) -> tuple[int, float] | None:
        with self._lock:
            entries = self._series.get((device_id, modality), [])
            if not entries:
                return None
            t, v, _ = entries[-1]
            return t, v

    def devices(self) -> list[str]:
        with self._lock:
            return sorted({device for device, _ in self._series})

    def modalities_of(self, device_id: str) -> list[Modality]:
        with self._lock:
            return sorted(
                (m for d, m in self._series if d == device_id), key=lambda m: m.value
            )

    def count(self) -> int:
        with self._lock:
            return sum(len(v) for v in self._series.values())

    def stats(self) -> dict:
        with self._lock:
            return {
                "readings_total": self.count(),
                "devices": len({d for d, _ in self._series}),
                "appends": self._appends,
                "queries": self._queries,
            }

    def iter_all(self) -> Iterator[SensorReading]:
        with self._lock:
            items = [
                (t, device, modality, value, room)
                for (device, modality), entries in self._series.items()
                for t, value, room in entries
            ]
        items.sort()
        for t, device, modality, value, room in items:
            yield SensorReading(
                device_id=device, room_id=room, modality=modality, value=value, timestamp=t
            )

    def close(self) -> None:
        with self._lock:
            if self._journal_fh is not None:
                self._journal_fh.close()
                self._journal_fh = None
