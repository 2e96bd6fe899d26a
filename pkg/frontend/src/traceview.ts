/**
 * Multi-channel strip viewer. Geometry (channel rows, polylines, event
 * overlay rectangles, hit testing) is computed by pure functions; drawing
 * is a thin pass over a 2D context so everything interesting is testable
 * without a browser.
 */

import type { ChannelSignal, EventInterval, SignalResponse } from "./api.js";
import { eventColor } from "./palette.js";
import { eventSpanPixels, hmsTicks, type TimeWindow, timeToPixel } from "./timeline.js";

export interface Rect {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface ChannelRowLayout {
  channel: string;
  rect: Rect;
}

const AXIS_HEIGHT_PX = 18;

export function channelRows(
  channels: string[],
  widthPx: number,
  heightPx: number,
): ChannelRowLayout[] {
  const usable = Math.max(0, heightPx - AXIS_HEIGHT_PX);
  const rowH = channels.length > 0 ? usable / channels.length : 0;
  return channels.map((channel, i) => ({
    channel,
    rect: { x: 0, y: i * rowH, w: widthPx, h: rowH },
  }));
}

export interface OverlayRect {
  event: EventInterval;
  rect: Rect;
  color: string;
}

/**
 * Shaded spans for events on visible channels. Each span's horizontal
 * extent pixel-maps the event's [start, end] through the current window.
 */
export function overlayRects(
  events: EventInterval[],
  rows: ChannelRowLayout[],
  window: TimeWindow,
  widthPx: number,
): OverlayRect[] {
  const rowByChannel = new Map(rows.map((r) => [r.channel, r.rect]));
  const rects: OverlayRect[] = [];
  for (const event of events) {
    const targets =
      event.channel === "all" ? [...rowByChannel.values()] : [rowByChannel.get(event.channel)];
    const span = eventSpanPixels(event, window, widthPx);
    if (!span) {
      continue;
    }
    for (const rowRect of targets) {
      if (!rowRect) {
        continue;
      }
      rects.push({
        event,
        rect: { x: span.x0, y: rowRect.y, w: span.x1 - span.x0, h: rowRect.h },
        color: eventColor(event.label),
      });
    }
  }
  return rects;
}

/** Event under a pixel position, topmost-first; null when none. */
export function eventAt(
  x: number,
  y: number,
  overlays: OverlayRect[],
): EventInterval | null {
  for (let i = overlays.length - 1; i >= 0; i -= 1) {
    const { rect, event } = overlays[i]!;
    if (x >= rect.x && x <= rect.x + rect.w && y >= rect.y && y <= rect.y + rect.h) {
      return event;
    }
  }
  return null;
}

export interface Polyline {
  channel: string;
  points: Array<{ x: number; y: number }>;
}

/** Sample polylines per channel, vertically centered in each row. */
export function signalPolylines(
  signal: SignalResponse,
  rows: ChannelRowLayout[],
  window: TimeWindow,
  widthPx: number,
): Polyline[] {
  const lines: Polyline[] = [];
  for (const row of rows) {
    const channel: ChannelSignal | undefined = signal.channels[row.channel];
    if (!channel || channel.values.length === 0) {
      continue;
    }
    let peak = 1e-9;
    for (const v of channel.values) {
      peak = Math.max(peak, Math.abs(v));
    }
    const mid = row.rect.y + row.rect.h / 2;
    const scale = (row.rect.h * 0.45) / peak;
    const points = channel.times.map((t, i) => ({
      x: timeToPixel(t, window, widthPx),
      y: mid - channel.values[i]! * scale,
    }));
    lines.push({ channel: row.channel, points });
  }
  return lines;
}

/** Minimal subset of CanvasRenderingContext2D the viewer draws with. */
export interface DrawContext {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  font: string;
}

export class TraceViewer {
  onEventClick: ((event: EventInterval) => void) | null = null;

  private lastOverlays: OverlayRect[] = [];

  constructor(
    private readonly ctx: DrawContext,
    private readonly widthPx: number,
    private readonly heightPx: number,
  ) {}

  draw(
    signal: SignalResponse,
    events: EventInterval[],
    window: TimeWindow,
    overlayEnabled: boolean,
  ): void {
    const ctx = this.ctx;
    ctx.clearRect(0, 0, this.widthPx, this.heightPx);
    const rows = channelRows(Object.keys(signal.channels), this.widthPx, this.heightPx);

    ctx.fillStyle = "#f8fafc";
    ctx.fillRect(0, 0, this.widthPx, this.heightPx);

    this.lastOverlays = overlayEnabled
      ? overlayRects(events, rows, window, this.widthPx)
      : [];
    for (const overlay of this.lastOverlays) {
      ctx.fillStyle = overlay.color;
      ctx.fillRect(overlay.rect.x, overlay.rect.y, overlay.rect.w, overlay.rect.h);
    }

    ctx.strokeStyle = "#0f172a";
    for (const line of signalPolylines(signal, rows, window, this.widthPx)) {
      ctx.beginPath();
      line.points.forEach((p, i) => (i === 0 ? ctx.moveTo(p.x, p.y) : ctx.lineTo(p.x, p.y)));
      ctx.stroke();
    }

    ctx.fillStyle = "#334155";
    ctx.font = "11px sans-serif";
    for (const row of rows) {
      ctx.fillText(row.channel, 4, row.rect.y + 12);
    }
    const axisY = this.heightPx - 4;
    for (const tick of hmsTicks(window)) {
      const x = timeToPixel(tick.t, window, this.widthPx);
      ctx.fillText(tick.label, x + 2, axisY);
    }
  }

  handleClick(x: number, y: number): void {
    const hit = eventAt(x, y, this.lastOverlays);
    if (hit && this.onEventClick) {
      this.onEventClick(hit);
    }
  }
}
