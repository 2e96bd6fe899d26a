/**
 * Chat panel controller: submits tasks, fetches the resulting trace, and
 * renders the answer with its expandable tool-call steps. The server
 * serializes queries per session; a 409 or 503 surfaces as an inline
 * banner with retry, never a crash.
 */

import { ApiError, type EegDeskApi } from "./api.js";
import type { TranscriptEntry, ViewState } from "./state.js";
import { stepsFromTraceBody } from "./trace.js";

export interface ChatView {
  setSendEnabled(enabled: boolean): void;
  setBusy(busy: boolean): void;
  showBanner(kind: "retry" | "error", message: string): void;
  clearBanner(): void;
  renderEntry(entry: TranscriptEntry): void;
}

export class ChatPanel {
  constructor(
    private readonly api: EegDeskApi,
    private readonly state: ViewState,
    private readonly view: ChatView,
  ) {}

  /** Empty input keeps send disabled; so does a missing session. */
  canSend(text: string): boolean {
    return text.trim().length > 0 && this.state.sessionId !== null && !this.busy;
  }

  private busy = false;

  onInputChanged(text: string): void {
    this.view.setSendEnabled(this.canSend(text));
  }

  async submit(text: string): Promise<TranscriptEntry | null> {
    if (!this.canSend(text)) {
      return null;
    }
    const sessionId = this.state.sessionId!;
    this.busy = true;
    this.view.setBusy(true);
    this.view.setSendEnabled(false);
    this.view.clearBanner();
    try {
      const reply = await this.api.query(sessionId, text.trim());
      const traceArtifact = await this.api.trace(sessionId, reply.trace_id);
      const steps = stepsFromTraceBody(String(traceArtifact.body));
      const entry: TranscriptEntry = {
        task: text.trim(),
        answer: reply.answer,
        steps,
        traceId: reply.trace_id,
      };
      this.state.appendTranscript(entry);
      this.view.renderEntry(entry);
      return entry;
    } catch (err) {
      if (err instanceof ApiError && (err.status === 409 || err.status === 503)) {
        const reason =
          err.status === 409 ? "another query is still running" : "backend unavailable";
        this.view.showBanner("retry", `Request not accepted: ${reason}. Retry shortly.`);
        return null;
      }
      this.view.showBanner("error", err instanceof Error ? err.message : String(err));
      return null;
    } finally {
      this.busy = false;
      this.view.setBusy(false);
      this.view.setSendEnabled(this.canSend(text));
    }
  }
}
