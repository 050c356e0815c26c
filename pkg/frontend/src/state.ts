// View state: where the user is, which time window is selected, how often to
// poll. The UI below is a pure function of (state, last payloads).

export type Route =
  | { kind: "rooms" }
  | { kind: "room"; roomId: string }
  | { kind: "sensor"; deviceId: string; modality: string };

export interface TimeWindow {
  from: number;
  to: number;
}

export const MIN_POLL_SECONDS = 5;

export interface ViewState {
  route: Route;
  window: TimeWindow;
  pollSeconds: number;
}

export function makeWindow(from: number, to: number): TimeWindow {
  if (from > to) {
    throw new Error(`window from ${from} is after to ${to}`);
  }
  return { from, to };
}

export function windowEndingNow(nowSeconds: number, spanSeconds: number): TimeWindow {
  return makeWindow(Math.floor(nowSeconds - spanSeconds), Math.floor(nowSeconds));
}

export function makeViewState(
  route: Route,
  window: TimeWindow,
  pollSeconds: number = MIN_POLL_SECONDS,
): ViewState {
  if (pollSeconds < MIN_POLL_SECONDS) {
    throw new Error(`polling interval must be >= ${MIN_POLL_SECONDS}s`);
  }
  return { route, window, pollSeconds };
}

export function parseRoute(hash: string): Route {
  const parts = hash.replace(/^#\/?/, "").split("/").filter((p) => p.length > 0);
  if (parts.length === 0 || parts[0] === "rooms") {
    return { kind: "rooms" };
  }
  if (parts[0] === "room" && parts.length >= 2) {
    return { kind: "room", roomId: decodeURIComponent(parts[1]!) };
  }
  if (parts[0] === "sensor" && parts.length >= 3) {
    return {
      kind: "sensor",
      deviceId: decodeURIComponent(parts[1]!),
      modality: decodeURIComponent(parts[2]!),
    };
  }
  return { kind: "rooms" };
}

export function routeHash(route: Route): string {
  switch (route.kind) {
    case "rooms":
      return "#/rooms";
    case "room":
      return `#/room/${encodeURIComponent(route.roomId)}`;
    case "sensor":
      return `#/sensor/${encodeURIComponent(route.deviceId)}/${encodeURIComponent(route.modality)}`;
  }
}

// Window presets offered by the sensor view selector, in seconds.
export const WINDOW_PRESETS: ReadonlyArray<{ label: string; seconds: number }> = [
  { label: "1 hour", seconds: 3600 },
  { label: "6 hours", seconds: 6 * 3600 },
  { label: "24 hours", seconds: 24 * 3600 },
  { label: "48 hours", seconds: 48 * 3600 },
];
