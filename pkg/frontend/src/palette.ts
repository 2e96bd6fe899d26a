/** Fixed event color palette, keyed by label. Unknown labels fall back to
 * the neutral accent so overlays are always visible. */

export const EVENT_COLORS: Record<string, string> = {
  seiz: "rgba(220, 38, 38, 0.35)", // red
  artf: "rgba(217, 119, 6, 0.35)", // amber
  eyem: "rgba(37, 99, 235, 0.35)", // blue
  muscle: "rgba(124, 58, 237, 0.35)", // violet
  slow: "rgba(5, 150, 105, 0.35)", // green
};

export const FALLBACK_EVENT_COLOR = "rgba(100, 116, 139, 0.35)";

export function eventColor(label: string): string {
  return EVENT_COLORS[label] ?? FALLBACK_EVENT_COLOR;
}
