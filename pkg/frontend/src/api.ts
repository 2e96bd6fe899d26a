/**
 * Typed client for the analysis service. Pure transport: no analysis logic
 * lives client-side, and every payload shape mirrors the server JSON.
 */

export interface ChannelRow {
  label: string;
  physical_dim: string;
  sample_rate_hz: number;
  hemisphere: string;
  region: string;
  region_description: string;
}

export interface RecordingInfo {
  patient: { name: string; sex: string; age: string };
  start_datetime: string;
  duration_s: number;
  channels: ChannelRow[];
  age_note: { band: string; text: string } | null;
  warnings: string[];
}

export interface ChannelSignal {
  times: number[];
  values: number[];
  downsampled: boolean;
}

export interface SignalResponse {
  recording_id: string;
  t_start_s: number;
  t_end_s: number;
  channels: Record<string, ChannelSignal>;
}

export interface EventInterval {
  channel: string;
  t_start_s: number;
  t_end_s: number;
  label: string;
  confidence: number;
}

export interface DetectResponse {
  artifact_id: string;
  events: EventInterval[];
  stats: {
    coarse_windows: number;
    escalated_windows: number;
    fine_windows: number;
    channels: number;
  };
}

export interface Statement {
  text: string;
  provenance: string[];
}

export interface EventEntry {
  event: EventInterval;
  description: string;
  provenance: string[];
}

export interface ReportDraft {
  basic_info: Record<string, unknown>;
  basic_info_provenance: string[];
  background_activity: Statement[];
  abnormal_events: EventEntry[];
  impression: Statement[];
  tool_results: Array<Record<string, unknown> & { id: string }>;
}

export interface ReportResponse {
  draft_artifact_id: string;
  report_artifact_id: string;
  report_text: string;
}

export interface QueryResponse {
  answer: string;
  trace_id: string;
}

export interface ArtifactEnvelope {
  artifact_id: string;
  kind: string;
  content_type: "json" | "text";
  created: string;
  body: unknown;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function parseError(resp: Response): Promise<ApiError> {
  let detail = resp.statusText;
  try {
    const doc = await resp.json();
    if (doc && doc.detail) {
      detail = typeof doc.detail === "string" ? doc.detail : JSON.stringify(doc.detail);
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(resp.status, detail);
}

export class EegDeskApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!resp.ok) {
      throw await parseError(resp);
    }
    return (await resp.json()) as T;
  }

  uploadRecording(bytes: ArrayBuffer | Uint8Array): Promise<{ recording_id: string }> {
    const body: BodyInit = bytes instanceof Uint8Array ? new Uint8Array(bytes).buffer as ArrayBuffer : bytes;
    return this.request("/recordings", {
      method: "POST",
      headers: { "content-type": "application/octet-stream" },
      body,
    });
  }

  recordingInfo(recordingId: string): Promise<RecordingInfo> {
    return this.request(`/recordings/${recordingId}/info`);
  }

  signal(
    recordingId: string,
    t0: number,
    t1: number,
    channels?: string[],
    raw = false,
  ): Promise<SignalResponse> {
    const params = new URLSearchParams({ from: String(t0), to: String(t1) });
    if (channels && channels.length > 0) {
      params.set("channels", channels.join(","));
    }
    if (raw) {
      params.set("raw", "true");
    }
    return this.request(`/recordings/${recordingId}/signal?${params.toString()}`);
  }

  detect(recordingId: string, target = "seiz"): Promise<DetectResponse> {
    return this.request(`/recordings/${recordingId}/detect`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ target }),
    });
  }

  report(recordingId: string): Promise<ReportResponse> {
    return this.request(`/recordings/${recordingId}/report`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ mode: "template" }),
    });
  }

  recordingArtifact(recordingId: string, artifactId: string): Promise<ArtifactEnvelope> {
    return this.request(`/recordings/${recordingId}/artifacts/${artifactId}`);
  }

  createSession(recordingId: string): Promise<{ session_id: string; recording_id: string }> {
    return this.request("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ recording_id: recordingId }),
    });
  }

  query(sessionId: string, task: string): Promise<QueryResponse> {
    return this.request(`/sessions/${sessionId}/query`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ task }),
    });
  }

  trace(sessionId: string, traceId: string): Promise<ArtifactEnvelope> {
    return this.request(`/sessions/${sessionId}/trace/${traceId}`);
  }
}
