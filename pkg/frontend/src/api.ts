// Typed client for the building-service HTTP contract. Every view fetches
// through this module; nothing else in the dashboard talks to the network.

export interface RoomSummary {
  room_id: string;
  name: string;
  device_count: number;
}

export interface RoomsPayload {
  rooms: RoomSummary[];
}

export type Occupancy = "Occupied" | "Empty" | "Unknown";

export interface SensorInfo {
  device_id: string;
  kind: string;
  modalities: string[];
}

export interface RoomStatusPayload {
  room_id: string;
  name?: string;
  occupancy: Occupancy;
  probability: number | null;
  as_of: number | null;
  explanation: string | null;
  sensors: SensorInfo[];
}

export interface SeriesPoint {
  timestamp: number;
  value: number;
}

export interface SensorDataPayload {
  device_id: string;
  modality: string;
  series: SeriesPoint[];
  anomalies: number[];
}

export interface ForecastPayload {
  device_id: string;
  modality: string;
  forecast: SeriesPoint[];
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async get<T>(path: string, signal?: AbortSignal): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, { signal });
    const body = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, body?.error ?? response.statusText);
    }
    return body as T;
  }

  rooms(signal?: AbortSignal): Promise<RoomsPayload> {
    return this.get("/rooms", signal);
  }

  room(roomId: string, signal?: AbortSignal): Promise<RoomStatusPayload> {
    return this.get(`/rooms/${encodeURIComponent(roomId)}`, signal);
  }

  sensorData(
    deviceId: string,
    modality: string,
    from: number,
    to: number,
    signal?: AbortSignal,
  ): Promise<SensorDataPayload> {
    const params = new URLSearchParams({
      modality,
      from: String(from),
      to: String(to),
    });
    return this.get(`/sensors/${encodeURIComponent(deviceId)}/data?${params}`, signal);
  }

  forecast(
    deviceId: string,
    modality: string,
    horizon: number,
    signal?: AbortSignal,
  ): Promise<ForecastPayload> {
    const params = new URLSearchParams({ modality, horizon: String(horizon) });
    return this.get(`/sensors/${encodeURIComponent(deviceId)}/forecast?${params}`, signal);
  }
}
