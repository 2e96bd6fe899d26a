import { describe, expect, it } from "vitest";

import { ApiError, EegDeskApi, type FetchLike } from "../src/api.js";
import { stepsFromTraceBody } from "../src/trace.js";
import { SCRIPTED_TRACE_BODY } from "./fixtures.js";

describe("request shaping", () => {
  it("builds the signal query string", async () => {
    const seen: string[] = [];
    const fetchImpl: FetchLike = async (input) => {
      seen.push(input);
      return Response.json({ recording_id: "r", t_start_s: 0, t_end_s: 1, channels: {} });
    };
    const api = new EegDeskApi("http://svc", fetchImpl);
    await api.signal("r1", 0, 10, ["F4-C4", "C3"], true);
    expect(seen[0]).toBe(
      "http://svc/recordings/r1/signal?from=0&to=10&channels=F4-C4%2CC3&raw=true",
    );
  });

  it("maps non-2xx responses to ApiError with the server detail", async () => {
    const fetchImpl: FetchLike = async () =>
      new Response(JSON.stringify({ detail: "no recording 'x'" }), { status: 404 });
    const api = new EegDeskApi("http://svc", fetchImpl);
    await expect(api.recordingInfo("x")).rejects.toMatchObject({
      name: "ApiError",
      status: 404,
      message: "no recording 'x'",
    });
  });

  it("keeps the status text when the error body is not JSON", async () => {
    const fetchImpl: FetchLike = async () =>
      new Response("<html>oops</html>", { status: 500, statusText: "Server Error" });
    const api = new EegDeskApi("http://svc", fetchImpl);
    try {
      await api.recordingInfo("x");
      expect.unreachable();
    } catch (err) {
      expect(err).toBeInstanceOf(ApiError);
      expect((err as ApiError).status).toBe(500);
    }
  });
});

describe("trace decoding", () => {
  it("parses the captured server export", () => {
    const steps = stepsFromTraceBody(SCRIPTED_TRACE_BODY);
    expect(steps).toHaveLength(3);
    expect(steps[0]!.tool).toBe("slowSeizBckg");
    expect(steps[0]!.ok).toBe(true);
    expect(steps[0]!.observationDigest).toContain("window result");
    expect(steps[2]!.kind).toBe("final_answer");
  });

  it("skips blank lines and the summary record", () => {
    const body = SCRIPTED_TRACE_BODY + "\n\n";
    expect(stepsFromTraceBody(body)).toHaveLength(3);
  });

  it("marks failed observations", () => {
    const line = JSON.stringify({
      index: 0,
      thought: "",
      action: { action: "tool_call", tool: "compute_psd", arguments: { t_start_s: 0, t_end_s: 120 } },
      observation: {
        tool: "compute_psd",
        ok: false,
        error_type: "WindowTooLong",
        error: "segment is 120 s",
      },
    });
    const steps = stepsFromTraceBody(line + "\n");
    expect(steps[0]!.ok).toBe(false);
    expect(steps[0]!.observationDigest).toContain("WindowTooLong");
  });
});
