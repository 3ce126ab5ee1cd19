// DOM wiring: SVG candidate map on the left, detail panel on the right,
// stats footer below. All numbers displayed verbatim from the API.

import { HttpReviewApi } from "./api.js";
import { actionForKey } from "./keyboard.js";
import { buildMarkers, centroid, markerAt, Viewport, type Marker, type Origin } from "./map.js";
import { countsLabel, detectionColor, percent, polygonPoints, scalePolygon } from "./overlays.js";
import { ReviewSession } from "./state.js";
import type { CandidateView, StreetSlot } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const DISPLAY_WIDTH = 320;

const api = new HttpReviewApi("");
const session = new ReviewSession(api);

const mapSvg = document.getElementById("map") as unknown as SVGSVGElement;
const detailPanel = document.getElementById("detail")!;
const statsFooter = document.getElementById("stats")!;
const banner = document.getElementById("banner")!;
const pendingBadge = document.getElementById("pending")!;
const filterSelect = document.getElementById("filter-status") as HTMLSelectElement;
const minTotalInput = document.getElementById("filter-min-total") as HTMLInputElement;

let origin: Origin = { lat: 0, lon: 0 };
let viewport = new Viewport(800, 600);
let markers: Marker[] = [];
let fitted = false;

function showBanner(message: string): void {
  banner.textContent = message;
  banner.classList.remove("hidden");
}

function hideBanner(): void {
  banner.classList.add("hidden");
}

function resizeViewport(): void {
  const rect = mapSvg.getBoundingClientRect();
  viewport.width = Math.max(rect.width, 100);
  viewport.height = Math.max(rect.height, 100);
}

function renderMap(): void {
  resizeViewport();
  const visible = session.visible();
  markers = buildMarkers(visible, origin, session.selectedId);
  while (mapSvg.firstChild) mapSvg.removeChild(mapSvg.firstChild);

  if (markers.length === 0) {
    const hint = document.createElementNS(SVG_NS, "text");
    hint.setAttribute("x", String(viewport.width / 2));
    hint.setAttribute("y", String(viewport.height / 2));
    hint.setAttribute("class", "map-hint");
    hint.setAttribute("text-anchor", "middle");
    hint.textContent = "no candidates match the current filter";
    mapSvg.appendChild(hint);
    return;
  }
  if (!fitted) {
    viewport.fit(markers);
    fitted = true;
  }
  for (const marker of markers) {
    const { sx, sy } = viewport.toScreen(marker.x, marker.y);
    const circle = document.createElementNS(SVG_NS, "circle");
    circle.setAttribute("cx", String(sx));
    circle.setAttribute("cy", String(sy));
    circle.setAttribute("r", String(marker.radius));
    circle.setAttribute("fill", marker.color);
    circle.setAttribute("class", marker.selected ? "marker selected" : "marker");
    circle.addEventListener("click", () => session.select(marker.id));
    const tooltip = document.createElementNS(SVG_NS, "title");
    tooltip.textContent = `${marker.id} (${marker.total} hits)`;
    circle.appendChild(tooltip);
    mapSvg.appendChild(circle);
  }
}

function slotFigure(candidate: CandidateView, slot: StreetSlot): HTMLElement {
  const figure = document.createElement("figure");
  figure.className = "street-slot";
  if (!slot.available) {
    const placeholder = document.createElement("div");
    placeholder.className = "placeholder";
    placeholder.textContent = "no coverage";
    figure.appendChild(placeholder);
    return figure;
  }
  const [imageW, imageH] = slot.image_size;
  const displayH = Math.round((imageH / imageW) * DISPLAY_WIDTH);

  const wrapper = document.createElement("div");
  wrapper.className = "overlay-wrap";
  const img = document.createElement("img");
  img.src = api.imageUrl(candidate.id, slot.slot);
  img.width = DISPLAY_WIDTH;
  img.height = displayH;
  wrapper.appendChild(img);

  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${DISPLAY_WIDTH} ${displayH}`);
  svg.setAttribute("class", "overlay");
  for (const detection of slot.detections) {
    const polygon = document.createElementNS(SVG_NS, "polygon");
    const scaled = scalePolygon(detection.polygon, slot.image_size, [DISPLAY_WIDTH, displayH]);
    polygon.setAttribute("points", polygonPoints(scaled));
    polygon.setAttribute("stroke", detectionColor(detection));
    polygon.setAttribute("fill", detectionColor(detection));
    polygon.setAttribute("fill-opacity", "0.15");
    const tooltip = document.createElementNS(SVG_NS, "title");
    tooltip.textContent = `${detection.class} ${(detection.confidence * 100).toFixed(0)}%`;
    polygon.appendChild(tooltip);
    svg.appendChild(polygon);
  }
  wrapper.appendChild(svg);
  figure.appendChild(wrapper);

  const caption = document.createElement("figcaption");
  caption.textContent = `${slot.slot} — ${slot.detections.length} detections`;
  figure.appendChild(caption);
  return figure;
}

function renderDetail(): void {
  const candidate = session.selected();
  detailPanel.replaceChildren();
  if (candidate === null) {
    const hint = document.createElement("p");
    hint.className = "hint";
    hint.textContent = "select a marker, then A to accept / R to reject";
    detailPanel.appendChild(hint);
    return;
  }

  const header = document.createElement("div");
  header.className = `detail-header ${candidate.status}`;
  const title = document.createElement("h2");
  title.textContent = countsLabel(candidate.counts);
  header.appendChild(title);
  const subtitle = document.createElement("p");
  subtitle.textContent =
    `${candidate.point.lat.toFixed(6)}, ${candidate.point.lon.toFixed(6)} — ` +
    `${candidate.status} — total ${candidate.counts.total} — ` +
    `p=${candidate.probability.toFixed(3)}`;
  header.appendChild(subtitle);
  detailPanel.appendChild(header);

  if (candidate.sat.available) {
    const figure = document.createElement("figure");
    figure.className = "sat-slot";
    const img = document.createElement("img");
    img.src = api.imageUrl(candidate.id, "sat");
    img.width = DISPLAY_WIDTH;
    figure.appendChild(img);
    const caption = document.createElement("figcaption");
    const probs = candidate.sat.quadrant_probs;
    caption.textContent = probs === null
      ? "satellite"
      : `satellite — quadrants ${probs.map((p) => p.toFixed(2)).join(" / ")}`;
    figure.appendChild(caption);
    detailPanel.appendChild(figure);
  }

  const streets = document.createElement("div");
  streets.className = "street-grid";
  for (const slot of candidate.street) {
    streets.appendChild(slotFigure(candidate, slot));
  }
  detailPanel.appendChild(streets);
}

function renderStats(): void {
  const stats = session.stats;
  if (stats === null) {
    statsFooter.textContent = "";
    return;
  }
  const verified = stats.n_verified_true + stats.n_verified_false;
  statsFooter.textContent =
    `${stats.n_coordinates} coordinates — ${stats.n_positive} positive — ` +
    `${stats.n_verified_true}/${verified} true — precision ${percent(stats.precision)}`;
}

function renderPending(): void {
  const pending = session.pendingCount();
  if (pending === 0) {
    pendingBadge.classList.add("hidden");
    pendingBadge.textContent = "";
    return;
  }
  pendingBadge.classList.remove("hidden");
  pendingBadge.textContent = session.isRetrying()
    ? `${pending} verdict(s) pending — retrying…`
    : `${pending} verdict(s) syncing`;
}

session.subscribe((event) => {
  switch (event.kind) {
    case "loaded":
      renderMap();
      renderDetail();
      break;
    case "updated":
      renderMap();
      renderDetail();
      break;
    case "selected":
      renderMap();
      renderDetail();
      break;
    case "stats":
      renderStats();
      break;
    case "queue":
      renderPending();
      break;
    case "error":
      showBanner(`API error: ${event.message}`);
      break;
  }
});

mapSvg.addEventListener("wheel", (event) => {
  event.preventDefault();
  const rect = mapSvg.getBoundingClientRect();
  const factor = event.deltaY < 0 ? 1.2 : 1 / 1.2;
  viewport.zoomAt(event.clientX - rect.left, event.clientY - rect.top, factor);
  renderMap();
});

let dragging = false;
let lastSx = 0;
let lastSy = 0;
mapSvg.addEventListener("pointerdown", (event) => {
  dragging = true;
  lastSx = event.clientX;
  lastSy = event.clientY;
});
window.addEventListener("pointermove", (event) => {
  if (!dragging) return;
  viewport.panByPixels(event.clientX - lastSx, event.clientY - lastSy);
  lastSx = event.clientX;
  lastSy = event.clientY;
  renderMap();
});
window.addEventListener("pointerup", () => {
  dragging = false;
});

window.addEventListener("keydown", (event) => {
  if (event.target instanceof HTMLInputElement || event.target instanceof HTMLSelectElement) {
    return;
  }
  const action = actionForKey(event.key);
  if (action === null) return;
  event.preventDefault();
  switch (action) {
    case "accept":
    case "reject": {
      const selected = session.selected();
      if (selected !== null) {
        session.submitVerdict(selected.id, action === "accept");
        session.selectStep(1);
      }
      break;
    }
    case "next":
      session.selectStep(1);
      break;
    case "prev":
      session.selectStep(-1);
      break;
    case "clear":
      session.select(null);
      break;
  }
});

filterSelect.addEventListener("change", () => {
  const status = filterSelect.value === "" ? undefined : (filterSelect.value as never);
  session.setFilter({ ...session.filter, status });
});

minTotalInput.addEventListener("change", () => {
  const minTotal = minTotalInput.value === "" ? undefined : Number(minTotalInput.value);
  session.setFilter({ ...session.filter, minTotal });
});

window.addEventListener("resize", renderMap);

// Stalled verdicts retry on a visible timer; load failures surface in the
// banner rather than looping silently.
setInterval(() => {
  if (session.pendingCount() > 0) void session.retry();
}, 4000);

session.load().then(hideBanner).catch(() => {
  showBanner("API unreachable — is `spotfinder review serve` running?");
});
