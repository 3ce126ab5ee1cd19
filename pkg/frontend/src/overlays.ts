// Detection overlay helpers: polygons arrive in source-image pixels and
// scale client-side to whatever size the image is displayed at.

import type { Counts, Detection } from "./types.js";

export const CLASS_COLORS: Record<string, string> = {
  short_wall: "#4d9de0",
  railing: "#e15554",
  stairs: "#3bb273",
};

export function scalePolygon(
  polygon: [number, number][],
  imageSize: [number, number],
  displaySize: [number, number],
): [number, number][] {
  const [imageW, imageH] = imageSize;
  const [displayW, displayH] = displaySize;
  const fx = displayW / imageW;
  const fy = displayH / imageH;
  return polygon.map(([x, y]) => [x * fx, y * fy]);
}

export function polygonPoints(polygon: [number, number][]): string {
  return polygon.map(([x, y]) => `${x},${y}`).join(" ");
}

/** Count label in the fixed [small walls, rails, stairs] order. */
export function countsLabel(counts: Counts): string {
  return `[${counts.short_wall}, ${counts.railing}, ${counts.stairs}]`;
}

export function detectionColor(detection: Detection): string {
  return CLASS_COLORS[detection.class] ?? "#999999";
}

export function percent(value: number | null): string {
  return value === null ? "n/a" : `${(value * 100).toFixed(1)}%`;
}
