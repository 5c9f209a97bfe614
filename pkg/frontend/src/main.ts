// Wiring: socket -> pure ingest -> state; requestAnimationFrame renders the
// latest state and never sits between the two.

import { postAction } from "./api.js";
import {
  DEFAULT_VIEWPORT,
  drawTrail,
  renderBanner,
  renderLegend,
  renderVerdict,
  type Viewport,
} from "./render.js";
import { ingest, initialState, type ViewState } from "./state.js";
import { StreamSocket } from "./socket.js";
import { MOVEMENT_CLASSES } from "./types.js";

let state: ViewState = initialState();
let socket: StreamSocket | null = null;
let verdictStamp = 0; // re-render the panel only when the verdict changes

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (found === null) throw new Error(`missing element #${id}`);
  return found as T;
}

function toast(text: string): void {
  const box = el<HTMLDivElement>("toasts");
  const item = document.createElement("div");
  item.className = "toast";
  item.textContent = text;
  box.append(item);
  setTimeout(() => item.remove(), 4000);
}

function controlBase(): string {
  return el<HTMLInputElement>("control-url").value.replace(/\/$/, "");
}

function wireControls(): void {
  const select = el<HTMLSelectElement>("reference-select");
  for (const mc of MOVEMENT_CLASSES) {
    const option = document.createElement("option");
    option.value = mc;
    option.textContent = mc;
    select.append(option);
  }
  select.addEventListener("change", async () => {
    const result = await postAction(controlBase(), "/session/reference", select.value);
    if (result.ok) {
      state = { ...state, selectedReference: select.value as ViewState["selectedReference"] };
      verdictStamp = 0; // refresh the deviation readout
    } else {
      select.value = state.selectedReference;
      toast(result.error ?? "reference change failed");
    }
  });

  const record = el<HTMLButtonElement>("record-toggle");
  record.addEventListener("click", async () => {
    const next = !state.recording;
    const result = await postAction(controlBase(), "/session/recording", next);
    if (result.ok) {
      state = { ...state, recording: Boolean(result.value) };
      record.textContent = state.recording ? "stop recording" : "start recording";
      record.classList.toggle("recording", state.recording);
    } else {
      toast(result.error ?? "recording toggle failed");
    }
  });

  const tempo = el<HTMLInputElement>("tempo-input");
  tempo.value = String(state.tempoBpm);
  tempo.addEventListener("change", async () => {
    const value = Number(tempo.value);
    const result = await postAction(controlBase(), "/session/tempo", value);
    if (result.ok) {
      state = { ...state, tempoBpm: value };
    } else {
      tempo.value = String(state.tempoBpm);
      toast(result.error ?? "tempo change rejected");
    }
  });

  el<HTMLButtonElement>("connect-button").addEventListener("click", () => {
    socket?.stop();
    socket = new StreamSocket(el<HTMLInputElement>("stream-url").value, {
      onConnection: (connection) => {
        state = { ...state, connection };
      },
      onBatch: (messages) => {
        for (const msg of messages) {
          state = ingest(msg, state);
        }
      },
    });
    socket.start();
  });
}

function renderLoop(): void {
  const canvas = el<HTMLCanvasElement>("trail-canvas");
  const ctx = canvas.getContext("2d");
  if (ctx === null) throw new Error("canvas 2d context unavailable");
  const view: Viewport = {
    width: canvas.width,
    height: canvas.height,
    ...DEFAULT_VIEWPORT,
  };

  const frame = () => {
    drawTrail(ctx, state, view);
    renderBanner(el("banner"), state);
    const stamp = state.lastVerdict === null ? 0 : state.lastVerdict.barIndex + 1;
    if (stamp !== verdictStamp) {
      verdictStamp = stamp;
      renderVerdict(el("verdict-panel"), state);
    }
    requestAnimationFrame(frame);
  };
  requestAnimationFrame(frame);
}

window.addEventListener("load", () => {
  renderLegend(el("legend"), state.beatsPerBar);
  renderVerdict(el("verdict-panel"), state);
  wireControls();
  renderLoop();
});
