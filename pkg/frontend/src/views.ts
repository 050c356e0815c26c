// Pure render functions: API payload in, HTML string out. No fetching, no
// client-side occupancy or anomaly computation; the service is the single
// source of truth.

import type {
  RoomsPayload,
  RoomStatusPayload,
  SensorDataPayload,
} from "./api.js";
import { routeHash, WINDOW_PRESETS } from "./state.js";

export function escapeHtml(value: unknown): string {
  return String(value)
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function formatTimestamp(epochSeconds: number): string {
  return new Date(epochSeconds * 1000).toISOString().replace("T", " ").slice(0, 19);
}

export function renderRooms(payload: RoomsPayload): string {
  if (payload.rooms.length === 0) {
    return `<p class="empty-state">No rooms are being monitored yet.</p>`;
  }
  const tiles = payload.rooms
    .map((room) => {
      const href = routeHash({ kind: "room", roomId: room.room_id });
      return (
        `<div class="room-tile" data-room-id="${escapeHtml(room.room_id)}">` +
        `<h3>${escapeHtml(room.name)}</h3>` +
        `<p class="meta">${room.device_count} device${room.device_count === 1 ? "" : "s"}</p>` +
        `<a class="view-sensors" href="${href}">View Sensors</a>` +
        `</div>`
      );
    })
    .join("");
  return `<div class="room-grid">${tiles}</div>`;
}

export function renderRoom(payload: RoomStatusPayload): string {
  const badgeClass = payload.occupancy.toLowerCase();
  const tooltip =
    payload.occupancy === "Unknown" && payload.explanation
      ? ` title="${escapeHtml(payload.explanation)}"`
      : "";
  const probability =
    payload.probability === null
      ? ""
      : `<span class="probability">p=${payload.probability.toFixed(2)}</span>`;
  const asOf =
    payload.as_of === null
      ? ""
      : `<span class="as-of">as of ${formatTimestamp(payload.as_of)}</span>`;
  const sensors = payload.sensors
    .map((sensor) => {
      const first = sensor.modalities[0] ?? "temperature";
      const href = routeHash({
        kind: "sensor",
        deviceId: sensor.device_id,
        modality: first,
      });
      const modalities = sensor.modalities.map(escapeHtml).join(", ");
      return (
        `<li class="sensor-row" data-device-id="${escapeHtml(sensor.device_id)}">` +
        `<code>${escapeHtml(sensor.device_id)}</code>` +
        `<span class="kind">${escapeHtml(sensor.kind)}</span>` +
        `<span class="modalities">${modalities}</span>` +
        `<a class="view-data" href="${href}">View Data</a>` +
        `</li>`
      );
    })
    .join("");
  return (
    `<section class="room-view">` +
    `<header><h2>${escapeHtml(payload.name ?? payload.room_id)}</h2>` +
    `<span class="badge ${badgeClass}"${tooltip}>${payload.occupancy}</span>` +
    `${probability}${asOf}</header>` +
    `<ul class="sensor-list">${sensors}</ul>` +
    `<a class="back" href="${routeHash({ kind: "rooms" })}">&larr; All rooms</a>` +
    `</section>`
  );
}

const CHART_WIDTH = 640;
const CHART_HEIGHT = 220;
const PAD = 24;

function chartSvg(payload: SensorDataPayload): string {
  const series = payload.series;
  if (series.length === 0) {
    return `<p class="empty-state">No readings in the selected window.</p>`;
  }
  const anomalous = new Set(payload.anomalies);
  const times = series.map((p) => p.timestamp);
  const values = series.map((p) => p.value);
  const tMin = Math.min(...times);
  const tMax = Math.max(...times);
  const vMin = Math.min(...values);
  const vMax = Math.max(...values);
  const x = (t: number) =>
    tMax === tMin
      ? CHART_WIDTH / 2
      : PAD + ((t - tMin) / (tMax - tMin)) * (CHART_WIDTH - 2 * PAD);
  const y = (v: number) =>
    vMax === vMin
      ? CHART_HEIGHT / 2
      : CHART_HEIGHT - PAD - ((v - vMin) / (vMax - vMin)) * (CHART_HEIGHT - 2 * PAD);
  const line = series
    .map((p) => `${x(p.timestamp).toFixed(1)},${y(p.value).toFixed(1)}`)
    .join(" ");
  const points = series
    .map((p) => {
      const mark = anomalous.has(p.timestamp);
      const cls = mark ? "pt anomaly-mark" : "pt";
      const r = mark ? 5 : 2;
      return (
        `<circle class="${cls}" data-ts="${p.timestamp}" ` +
        `cx="${x(p.timestamp).toFixed(1)}" cy="${y(p.value).toFixed(1)}" r="${r}"/>`
      );
    })
    .join("");
  return (
    `<svg class="chart" viewBox="0 0 ${CHART_WIDTH} ${CHART_HEIGHT}" ` +
    `role="img" aria-label="sensor readings over time">` +
    `<polyline class="series-line" fill="none" points="${line}"/>` +
    points +
    `</svg>`
  );
}

export function renderWindowSelector(selectedSeconds: number): string {
  const options = WINDOW_PRESETS.map((preset) => {
    const selected = preset.seconds === selectedSeconds ? " selected" : "";
    return `<option value="${preset.seconds}"${selected}>${preset.label}</option>`;
  }).join("");
  return `<select class="window-select" aria-label="time window">${options}</select>`;
}

export function renderSensor(payload: SensorDataPayload, windowSeconds: number): string {
  const anomalous = new Set(payload.anomalies);
  const rows = payload.series
    .map((p) => {
      const cls = anomalous.has(p.timestamp) ? ` class="anomaly-row"` : "";
      return (
        `<tr${cls}><td>${formatTimestamp(p.timestamp)}</td>` +
        `<td>${escapeHtml(p.value.toFixed(3))}</td></tr>`
      );
    })
    .join("");
  return (
    `<section class="sensor-view" data-device-id="${escapeHtml(payload.device_id)}">` +
    `<header><h2><code>${escapeHtml(payload.device_id)}</code> &mdash; ` +
    `${escapeHtml(payload.modality)}</h2>${renderWindowSelector(windowSeconds)}</header>` +
    chartSvg(payload) +
    `<table class="raw-table"><thead><tr><th>Timestamp (UTC)</th><th>Value</th></tr></thead>` +
    `<tbody>${rows}</tbody></table>` +
    `<a class="back" href="#/rooms">&larr; All rooms</a>` +
    `</section>`
  );
}

export function renderError(message: string): string {
  return `<p class="error">${escapeHtml(message)}</p>`;
}
