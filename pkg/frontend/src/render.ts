// Canvas trail rendering and the verdict/status panels. The coordinate
// mapping is pure so it can be tested without a canvas.

import { selectedDeviationMm, verdictRows, type TrailPoint, type ViewState } from "./state.js";

// one fixed, distinguishable hue per beat; legend stays visible
export const BEAT_COLORS = ["#e4572e", "#2e86ab", "#44af69", "#b07cc6"];

export interface Viewport {
  width: number;
  height: number;
  /** world-frame window, meters (frontal plane) */
  xMin: number;
  xMax: number;
  yMin: number;
  yMax: number;
}

export const DEFAULT_VIEWPORT: Omit<Viewport, "width" | "height"> = {
  xMin: -0.3,
  xMax: 0.4,
  yMin: -0.1,
  yMax: 0.45,
};

export function toScreen(point: TrailPoint, view: Viewport): { px: number; py: number } {
  const px = ((point.x - view.xMin) / (view.xMax - view.xMin)) * view.width;
  // canvas y grows downward
  const py = (1 - (point.y - view.yMin) / (view.yMax - view.yMin)) * view.height;
  return { px, py };
}

export function beatColor(beatPhase: number, beatsPerBar: number): string {
  const beat = Math.min(Math.floor(beatPhase), beatsPerBar - 1);
  return BEAT_COLORS[beat % BEAT_COLORS.length];
}

export function drawTrail(
  ctx: CanvasRenderingContext2D,
  state: ViewState,
  view: Viewport,
): void {
  ctx.clearRect(0, 0, view.width, view.height);
  const trail = state.trail;
  if (trail.length === 0) return;
  ctx.lineWidth = 2;
  ctx.lineCap = "round";
  for (let i = 1; i < trail.length; i++) {
    const a = toScreen(trail[i - 1], view);
    const b = toScreen(trail[i], view);
    ctx.strokeStyle = beatColor(trail[i].beatPhase, state.beatsPerBar);
    // older segments fade out toward the tail
    ctx.globalAlpha = 0.25 + 0.75 * (i / trail.length);
    ctx.beginPath();
    ctx.moveTo(a.px, a.py);
    ctx.lineTo(b.px, b.py);
    ctx.stroke();
  }
  ctx.globalAlpha = 1;
  const head = toScreen(trail[trail.length - 1], view);
  ctx.fillStyle = "#111";
  ctx.beginPath();
  ctx.arc(head.px, head.py, 5, 0, 2 * Math.PI);
  ctx.fill();
}

export function renderLegend(container: HTMLElement, beatsPerBar: number): void {
  container.replaceChildren();
  for (let beat = 0; beat < beatsPerBar; beat++) {
    const item = document.createElement("span");
    item.className = "legend-item";
    const swatch = document.createElement("span");
    swatch.className = "legend-swatch";
    swatch.style.backgroundColor = BEAT_COLORS[beat % BEAT_COLORS.length];
    item.append(swatch, document.createTextNode(`beat ${beat + 1}`));
    container.append(item);
  }
}

export function renderVerdict(panel: HTMLElement, state: ViewState): void {
  panel.replaceChildren();
  const verdict = state.lastVerdict;
  const heading = document.createElement("h3");
  if (verdict === null) {
    heading.textContent = "No bar analyzed yet";
    panel.append(heading);
    return;
  }
  heading.textContent = `Bar ${verdict.barIndex + 1}: ${verdict.chosen}`;
  panel.append(heading);

  const deviation = selectedDeviationMm(state);
  if (deviation !== null) {
    const readout = document.createElement("p");
    readout.className = "deviation-readout";
    readout.textContent =
      `vs ${state.selectedReference}: ${deviation.toFixed(1)} mm mean deviation`;
    panel.append(readout);
  }

  const table = document.createElement("table");
  for (const row of verdictRows(state)) {
    const tr = document.createElement("tr");
    if (row.chosen) tr.className = "chosen";
    else if (row.selected) tr.className = "selected";
    const label = document.createElement("td");
    label.textContent = row.label;
    const mean = document.createElement("td");
    mean.textContent = `${row.meanMm.toFixed(1)} mm`;
    tr.append(label, mean);
    table.append(tr);
  }
  panel.append(table);
}

export function renderBanner(el: HTMLElement, state: ViewState): void {
  const text =
    state.connection === "live"
      ? state.banner ?? ""
      : state.connection === "connecting"
        ? "connecting…"
        : "disconnected";
  el.textContent = text;
  el.className = `banner ${state.connection}`;
}
