// Bootstrap: hash routing, polling, latest-wins fetch cancellation and DOM
// injection. All rendering is delegated to the pure functions in views.ts.

import { ApiClient } from "./api.js";
import {
  makeViewState,
  parseRoute,
  ViewState,
  windowEndingNow,
  WINDOW_PRESETS,
} from "./state.js";
import { renderError, renderRoom, renderRooms, renderSensor } from "./views.js";

const api = new ApiClient("");
const app = document.getElementById("app")!;

let state: ViewState = makeViewState(
  parseRoute(location.hash),
  windowEndingNow(Date.now() / 1000, WINDOW_PRESETS[2]!.seconds),
  10,
);
let windowSpanSeconds = WINDOW_PRESETS[2]!.seconds;
let inFlight: AbortController | null = null;

async function refresh(): Promise<void> {
  // latest wins: a navigation or poll cancels the previous in-flight fetch
  inFlight?.abort();
  const controller = new AbortController();
  inFlight = controller;
  try {
    switch (state.route.kind) {
      case "rooms": {
        const payload = await api.rooms(controller.signal);
        if (!controller.signal.aborted) app.innerHTML = renderRooms(payload);
        break;
      }
      case "room": {
        const payload = await api.room(state.route.roomId, controller.signal);
        if (!controller.signal.aborted) app.innerHTML = renderRoom(payload);
        break;
      }
      case "sensor": {
        const payload = await api.sensorData(
          state.route.deviceId,
          state.route.modality,
          state.window.from,
          state.window.to,
          controller.signal,
        );
        if (!controller.signal.aborted) {
          app.innerHTML = renderSensor(payload, windowSpanSeconds);
        }
        break;
      }
    }
  } catch (err) {
    if ((err as Error).name === "AbortError") return;
    app.innerHTML = renderError(`request failed: ${(err as Error).message}`);
  }
}

function onNavigate(): void {
  state = makeViewState(
    parseRoute(location.hash),
    windowEndingNow(Date.now() / 1000, windowSpanSeconds),
    state.pollSeconds,
  );
  void refresh();
}

app.addEventListener("change", (event) => {
  const target = event.target as HTMLElement;
  if (target.classList.contains("window-select")) {
    windowSpanSeconds = Number((target as HTMLSelectElement).value);
    onNavigate(); // widen/narrow the window and refetch
  }
});

window.addEventListener("hashchange", onNavigate);
window.setInterval(() => {
  state = makeViewState(
    state.route,
    windowEndingNow(Date.now() / 1000, windowSpanSeconds),
    state.pollSeconds,
  );
  void refresh();
}, state.pollSeconds * 1000);
onNavigate();
