/**
 * Client view state: active ids, visible window, channel selection, event
 * overlay toggle, and the chat transcript. The visible window is always
 * clamped inside the recording and the transcript preserves server order.
 */

import type { EventInterval } from "./api.js";
import type { TimeWindow } from "./timeline.js";
import type { TraceStepView } from "./trace.js";

export interface TranscriptEntry {
  task: string;
  answer: string;
  steps: TraceStepView[];
  traceId: string;
}

const MIN_WINDOW_S = 0.25;

export class ViewState {
  recordingId: string | null = null;
  sessionId: string | null = null;
  durationS = 0;
  selectedChannels: string[] = [];
  overlayEnabled = true;
  events: EventInterval[] = [];
  prefillTask = "";

  private window: TimeWindow = { t0: 0, t1: 0 };
  private transcript: TranscriptEntry[] = [];
  private listeners: Array<() => void> = [];

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) {
      listener();
    }
  }

  loadRecording(recordingId: string, durationS: number, channels: string[]): void {
    this.recordingId = recordingId;
    this.durationS = durationS;
    this.selectedChannels = [...channels];
    this.window = { t0: 0, t1: Math.min(durationS, 30) };
    this.events = [];
    this.transcript = [];
    this.emit();
  }

  get visibleWindow(): TimeWindow {
    return { ...this.window };
  }

  /** Clamp the requested window inside [0, duration], keeping t0 < t1. */
  setWindow(t0: number, t1: number): TimeWindow {
    let lo = Math.max(0, Math.min(t0, t1));
    let hi = Math.min(this.durationS, Math.max(t0, t1));
    if (hi - lo < MIN_WINDOW_S) {
      hi = Math.min(this.durationS, lo + MIN_WINDOW_S);
      lo = Math.max(0, hi - MIN_WINDOW_S);
    }
    this.window = { t0: lo, t1: hi };
    this.emit();
    return this.visibleWindow;
  }

  /** Center the window on an event and prefill a follow-up question. */
  jumpToEvent(event: EventInterval, paddingS = 2.0): void {
    this.setWindow(event.t_start_s - paddingS, event.t_end_s + paddingS);
    this.prefillTask =
      `What happened on ${event.channel} between ${event.t_start_s} and ` +
      `${event.t_end_s} seconds?`;
    this.emit();
  }

  appendTranscript(entry: TranscriptEntry): void {
    this.transcript.push(entry);
    this.emit();
  }

  get transcriptEntries(): readonly TranscriptEntry[] {
    return this.transcript;
  }

  setEvents(events: EventInterval[]): void {
    this.events = [...events];
    this.emit();
  }

  toggleOverlay(): void {
    this.overlayEnabled = !this.overlayEnabled;
    this.emit();
  }
}
