/**
 * Time axis geometry: seconds <-> pixels, hh:mm:ss tick generation, and
 * event-span mapping. Everything here is pure so overlay placement can be
 * verified numerically.
 */

export interface TimeWindow {
  t0: number;
  t1: number;
}

export function timeToPixel(t: number, window: TimeWindow, widthPx: number): number {
  const span = window.t1 - window.t0;
  if (span <= 0) {
    return 0;
  }
  return ((t - window.t0) / span) * widthPx;
}

export function pixelToTime(x: number, window: TimeWindow, widthPx: number): number {
  if (widthPx <= 0) {
    return window.t0;
  }
  return window.t0 + (x / widthPx) * (window.t1 - window.t0);
}

export interface PixelSpan {
  x0: number;
  x1: number;
}

/** Pixel span of a time interval, clipped to the visible window. */
export function eventSpanPixels(
  span: { t_start_s: number; t_end_s: number },
  window: TimeWindow,
  widthPx: number,
): PixelSpan | null {
  const t0 = Math.max(span.t_start_s, window.t0);
  const t1 = Math.min(span.t_end_s, window.t1);
  if (t1 <= t0) {
    return null;
  }
  return {
    x0: timeToPixel(t0, window, widthPx),
    x1: timeToPixel(t1, window, widthPx),
  };
}

export function formatHms(seconds: number): string {
  const total = Math.round(seconds);
  const h = Math.floor(total / 3600);
  const m = Math.floor((total % 3600) / 60);
  const s = total % 60;
  const pad = (n: number) => String(n).padStart(2, "0");
  return `${pad(h)}:${pad(m)}:${pad(s)}`;
}

const TICK_STEPS_S = [1, 2, 5, 10, 15, 30, 60, 120, 300, 600, 900, 1800, 3600];

export interface Tick {
  t: number;
  label: string;
}

/** Ticks at a round step so at most maxTicks land inside the window. */
export function hmsTicks(window: TimeWindow, maxTicks = 10): Tick[] {
  const span = window.t1 - window.t0;
  if (span <= 0) {
    return [];
  }
  let step = TICK_STEPS_S[TICK_STEPS_S.length - 1]!;
  for (const candidate of TICK_STEPS_S) {
    if (span / candidate <= maxTicks) {
      step = candidate;
      break;
    }
  }
  const ticks: Tick[] = [];
  const first = Math.ceil(window.t0 / step) * step;
  for (let t = first; t <= window.t1 + 1e-9; t += step) {
    ticks.push({ t, label: formatHms(t) });
  }
  return ticks;
}
