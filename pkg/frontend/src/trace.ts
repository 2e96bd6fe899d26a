/**
 * Trace decoding: the server exports traces as line-delimited JSON records.
 * The transcript renders these steps in server order; replaying the stored
 * body always reproduces the same list.
 */

export interface TraceStepView {
  index: number;
  kind: "tool_call" | "final_answer" | "malformed";
  tool: string | null;
  argumentsText: string;
  thought: string;
  ok: boolean | null;
  observationDigest: string;
}

interface RawStep {
  index: number;
  thought: string;
  action: { action?: string; tool?: string; arguments?: Record<string, unknown>; answer?: string };
  observation: Record<string, unknown> | null;
}

function digestObservation(observation: Record<string, unknown> | null): string {
  if (observation === null) {
    return "";
  }
  if (observation.error) {
    return `${observation.error_type}: ${observation.error}`;
  }
  const payload = observation.payload as Record<string, unknown> | undefined;
  if (!payload) {
    return "ok";
  }
  const windows = payload.windows as unknown[] | undefined;
  if (Array.isArray(windows)) {
    return `${windows.length} window result(s)`;
  }
  return `${Object.keys(payload).length} field(s)`;
}

/** Parse a trace artifact body (jsonl text) into ordered step views. */
export function stepsFromTraceBody(body: string): TraceStepView[] {
  const steps: TraceStepView[] = [];
  for (const line of body.split("\n")) {
    const trimmed = line.trim();
    if (!trimmed) {
      continue;
    }
    const doc = JSON.parse(trimmed) as Partial<RawStep> & { summary?: unknown };
    if (doc.summary !== undefined || doc.action === undefined) {
      continue; // trailing budget summary record
    }
    const raw = doc as RawStep;
    const kind = (raw.action.action ?? "malformed") as TraceStepView["kind"];
    steps.push({
      index: raw.index,
      kind,
      tool: raw.action.tool ?? null,
      argumentsText: raw.action.arguments ? JSON.stringify(raw.action.arguments) : "",
      thought: raw.thought ?? "",
      ok: raw.observation === null ? null : raw.observation.ok === true,
      observationDigest: digestObservation(raw.observation),
    });
  }
  return steps;
}
