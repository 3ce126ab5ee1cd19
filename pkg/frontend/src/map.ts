// Marker layer math for the candidate map.
//
// Candidates live within a couple of kilometers of each other, so a local
// equirectangular projection around the dataset centroid is plenty: east
// and north offsets in meters become the map's x/y plane (y up). No tile
// server is involved; the map is a self-contained pan/zoom canvas.

import type { CandidateView, Status } from "./types.js";

const METERS_PER_DEGREE = 111320;

export const STATUS_COLORS: Record<Status, string> = {
  candidate: "#e0a100",
  verified_true: "#2e9e52",
  verified_false: "#cc4433",
};

export interface Origin {
  lat: number;
  lon: number;
}

export interface Marker {
  id: string;
  x: number; // meters east of origin
  y: number; // meters north of origin
  radius: number;
  color: string;
  selected: boolean;
  total: number;
}

export function centroid(candidates: CandidateView[]): Origin {
  if (candidates.length === 0) return { lat: 0, lon: 0 };
  let lat = 0;
  let lon = 0;
  for (const c of candidates) {
    lat += c.point.lat;
    lon += c.point.lon;
  }
  return { lat: lat / candidates.length, lon: lon / candidates.length };
}

export function project(point: { lat: number; lon: number }, origin: Origin): { x: number; y: number } {
  const x = (point.lon - origin.lon) * METERS_PER_DEGREE * Math.cos((origin.lat * Math.PI) / 180);
  const y = (point.lat - origin.lat) * METERS_PER_DEGREE;
  return { x, y };
}

/** Marker area tracks the hit count; radius is clamped so small and huge
 * counts both stay readable. */
export function markerRadius(total: number): number {
  const radius = 4 + Math.sqrt(Math.max(0, total)) * 1.2;
  return Math.min(radius, 18);
}

export function buildMarkers(
  candidates: CandidateView[],
  origin: Origin,
  selectedId: string | null,
): Marker[] {
  return candidates.map((candidate) => {
    const { x, y } = project(candidate.point, origin);
    return {
      id: candidate.id,
      x,
      y,
      radius: markerRadius(candidate.counts.total),
      color: STATUS_COLORS[candidate.status],
      selected: candidate.id === selectedId,
      total: candidate.counts.total,
    };
  });
}

/** Pan/zoom transform between map meters and screen pixels (y down). */
export class Viewport {
  scale = 1; // pixels per meter
  centerX = 0; // meters
  centerY = 0;

  constructor(public width: number, public height: number) {}

  /** Fit all markers with a margin; a lone marker gets a sane default zoom. */
  fit(markers: Marker[], margin = 40): void {
    if (markers.length === 0) {
      this.scale = 1;
      this.centerX = 0;
      this.centerY = 0;
      return;
    }
    const xs = markers.map((m) => m.x);
    const ys = markers.map((m) => m.y);
    const minX = Math.min(...xs);
    const maxX = Math.max(...xs);
    const minY = Math.min(...ys);
    const maxY = Math.max(...ys);
    this.centerX = (minX + maxX) / 2;
    this.centerY = (minY + maxY) / 2;
    const spanX = Math.max(maxX - minX, 1);
    const spanY = Math.max(maxY - minY, 1);
    this.scale = Math.min(
      (this.width - 2 * margin) / spanX,
      (this.height - 2 * margin) / spanY,
    );
  }

  toScreen(x: number, y: number): { sx: number; sy: number } {
    return {
      sx: this.width / 2 + (x - this.centerX) * this.scale,
      sy: this.height / 2 - (y - this.centerY) * this.scale,
    };
  }

  toWorld(sx: number, sy: number): { x: number; y: number } {
    return {
      x: this.centerX + (sx - this.width / 2) / this.scale,
      y: this.centerY - (sy - this.height / 2) / this.scale,
    };
  }

  panByPixels(dx: number, dy: number): void {
    this.centerX -= dx / this.scale;
    this.centerY += dy / this.scale;
  }

  zoomAt(sx: number, sy: number, factor: number): void {
    const anchor = this.toWorld(sx, sy);
    this.scale *= factor;
    const moved = this.toWorld(sx, sy);
    this.centerX += anchor.x - moved.x;
    this.centerY += anchor.y - moved.y;
  }
}

/** Hit test in screen space; topmost (last drawn) marker wins. */
export function markerAt(
  markers: Marker[],
  viewport: Viewport,
  sx: number,
  sy: number,
): Marker | null {
  for (let i = markers.length - 1; i >= 0; i -= 1) {
    const marker = markers[i]!;
    const { sx: mx, sy: my } = viewport.toScreen(marker.x, marker.y);
    const hitRadius = marker.radius + 3;
    if ((sx - mx) ** 2 + (sy - my) ** 2 <= hitRadius ** 2) return marker;
  }
  return null;
}
