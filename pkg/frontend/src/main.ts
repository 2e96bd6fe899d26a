/**
 * Browser bootstrap: wires the controllers to the page. This is the only
 * module that touches the real DOM; everything it delegates to is covered
 * by the headless test suite.
 */

import { EegDeskApi, type EventInterval } from "./api.js";
import { ChatPanel, type ChatView } from "./chat.js";
import { ReportView } from "./report.js";
import { ViewState, type TranscriptEntry } from "./state.js";
import { TraceViewer } from "./traceview.js";

const api = new EegDeskApi("");
const state = new ViewState();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function renderSteps(entry: TranscriptEntry): HTMLElement {
  const details = document.createElement("details");
  const summary = document.createElement("summary");
  summary.textContent = `${entry.steps.length} step(s)`;
  details.appendChild(summary);
  for (const step of entry.steps) {
    const line = document.createElement("div");
    line.className = "trace-step";
    line.textContent =
      step.kind === "tool_call"
        ? `#${step.index} ${step.tool}(${step.argumentsText}) -> ${step.observationDigest}`
        : `#${step.index} ${step.kind}`;
    details.appendChild(line);
  }
  return details;
}

function chatView(): ChatView {
  const transcript = el<HTMLDivElement>("transcript");
  const send = el<HTMLButtonElement>("send");
  const banner = el<HTMLDivElement>("banner");
  return {
    setSendEnabled(enabled) {
      send.disabled = !enabled;
    },
    setBusy(busy) {
      send.textContent = busy ? "..." : "Send";
    },
    showBanner(kind, message) {
      banner.textContent = message;
      banner.className = `banner ${kind}`;
      banner.hidden = false;
    },
    clearBanner() {
      banner.hidden = true;
    },
    renderEntry(entry) {
      const block = document.createElement("div");
      block.className = "turn";
      const q = document.createElement("p");
      q.className = "task";
      q.textContent = entry.task;
      const a = document.createElement("p");
      a.className = "answer";
      a.textContent = entry.answer;
      block.append(q, a, renderSteps(entry));
      transcript.appendChild(block);
      block.scrollIntoView({ block: "end" });
    },
  };
}

async function redrawSignal(viewer: TraceViewer): Promise<void> {
  if (!state.recordingId) {
    return;
  }
  const window = state.visibleWindow;
  const signal = await api.signal(
    state.recordingId,
    window.t0,
    window.t1,
    state.selectedChannels,
  );
  viewer.draw(signal, state.events, window, state.overlayEnabled);
}

async function boot(): Promise<void> {
  const canvas = el<HTMLCanvasElement>("strips");
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    throw new Error("no 2d context");
  }
  const viewer = new TraceViewer(ctx, canvas.width, canvas.height);
  const panel = new ChatPanel(api, state, chatView());
  const report = new ReportView(api);
  const input = el<HTMLInputElement>("task");
  const upload = el<HTMLInputElement>("edf");

  viewer.onEventClick = (event: EventInterval) => {
    state.jumpToEvent(event);
    input.value = state.prefillTask;
  };
  canvas.addEventListener("click", (e) => {
    const box = canvas.getBoundingClientRect();
    viewer.handleClick(e.clientX - box.left, e.clientY - box.top);
  });

  upload.addEventListener("change", async () => {
    const file = upload.files?.[0];
    if (!file) {
      return;
    }
    const { recording_id } = await api.uploadRecording(await file.arrayBuffer());
    const info = await api.recordingInfo(recording_id);
    state.loadRecording(
      recording_id,
      info.duration_s,
      info.channels.map((c) => c.label),
    );
    const session = await api.createSession(recording_id);
    state.sessionId = session.session_id;
    el<HTMLSpanElement>("recording-label").textContent =
      `${recording_id} (${info.duration_s} s, ${info.channels.length} ch)`;
    await redrawSignal(viewer);
  });

  el<HTMLButtonElement>("detect").addEventListener("click", async () => {
    if (!state.recordingId) {
      return;
    }
    const result = await api.detect(state.recordingId);
    state.setEvents(result.events);
    await redrawSignal(viewer);
  });

  el<HTMLButtonElement>("overlay-toggle").addEventListener("click", async () => {
    state.toggleOverlay();
    await redrawSignal(viewer);
  });

  for (const [id, factor] of [
    ["zoom-in", 0.5],
    ["zoom-out", 2.0],
  ] as const) {
    el<HTMLButtonElement>(id).addEventListener("click", async () => {
      const w = state.visibleWindow;
      const mid = (w.t0 + w.t1) / 2;
      const half = ((w.t1 - w.t0) * factor) / 2;
      state.setWindow(mid - half, mid + half);
      await redrawSignal(viewer);
    });
  }

  el<HTMLButtonElement>("load-report").addEventListener("click", async () => {
    if (!state.recordingId) {
      return;
    }
    await report.load(state.recordingId);
    const pane = el<HTMLDivElement>("report-pane");
    pane.textContent = "";
    for (const section of report.sections()) {
      const h = document.createElement("h3");
      h.textContent = section.title;
      pane.appendChild(h);
      for (const item of section.items) {
        const p = document.createElement("p");
        p.textContent = item.text;
        p.title = report
          .provenanceDetails(item.provenance)
          .map((tr) => `${tr.id}: ${tr.tool}`)
          .join("\n");
        pane.appendChild(p);
      }
    }
  });

  el<HTMLButtonElement>("export-report").addEventListener("click", () => {
    const blob = new Blob([report.exportText()], { type: "text/plain" });
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = "eeg-report.txt";
    a.click();
    URL.revokeObjectURL(a.href);
  });

  input.addEventListener("input", () => panel.onInputChanged(input.value));
  el<HTMLFormElement>("chat-form").addEventListener("submit", async (e) => {
    e.preventDefault();
    const entry = await panel.submit(input.value);
    if (entry) {
      input.value = "";
      panel.onInputChanged("");
    }
  });
}

document.addEventListener("DOMContentLoaded", () => {
  void boot();
});
