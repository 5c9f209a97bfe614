// View state and its pure ingest transition. Same (message, state) in,
// same state out — no clocks, no I/O — so transitions snapshot-test cleanly.

import type { BarAnalysisMessage, MovementClass, StreamMessage } from "./types.js";

export type ConnectionState = "disconnected" | "connecting" | "live";

export interface TrailPoint {
  t: number;
  /** Frontal projection: world X (lateral). */
  x: number;
  /** Frontal projection: world Y (vertical). */
  y: number;
  /** Position within the bar in beats, [0, beatsPerBar). */
  beatPhase: number;
}

export interface Verdict {
  barIndex: number;
  chosen: string;
  ranking: BarAnalysisMessage["ranking"];
  shiftUsed: number;
}

export interface ViewState {
  connection: ConnectionState;
  trail: TrailPoint[];
  trailCap: number;
  tempoBpm: number;
  beatsPerBar: number;
  recording: boolean;
  selectedReference: MovementClass;
  lastVerdict: Verdict | null;
  banner: string | null;
}

export const TRAIL_CAP = 512;

export function initialState(overrides: Partial<ViewState> = {}): ViewState {
  return {
    connection: "disconnected",
    trail: [],
    trailCap: TRAIL_CAP,
    tempoBpm: 76,
    beatsPerBar: 4,
    recording: false,
    selectedReference: "control",
    lastVerdict: null,
    banner: null,
    ...overrides,
  };
}

/** Beat position of a timestamp: (t mod barLength) / beatLength. */
export function beatPhase(t: number, tempoBpm: number, beatsPerBar: number): number {
  const beatLength = 60 / tempoBpm;
  const barLength = beatsPerBar * beatLength;
  const intoBar = ((t % barLength) + barLength) % barLength;
  return intoBar / beatLength;
}

/**
 * Pure state transition for one stream message.
 *
 * pose: appended to the trail (oldest evicted at the cap); a timestamp at
 * or before the trail head means the source restarted, which starts a
 * fresh trail. bar_analysis: replaces the verdict, ranking kept exactly as
 * received. status: shown in the banner. Any valid message implies the
 * connection is live.
 */
export function ingest(msg: StreamMessage, state: ViewState): ViewState {
  switch (msg.type) {
    case "pose": {
      const last = state.trail.length > 0 ? state.trail[state.trail.length - 1] : null;
      let trail = state.trail;
      if (last !== null && msg.t <= last.t) {
        trail = []; // stream restarted; trail times must strictly increase
      }
      const point: TrailPoint = {
        t: msg.t,
        x: msg.tip[0],
        y: msg.tip[1],
        beatPhase: beatPhase(msg.t, state.tempoBpm, state.beatsPerBar),
      };
      const appended = [...trail, point];
      const overflow = appended.length - state.trailCap;
      return {
        ...state,
        connection: "live",
        trail: overflow > 0 ? appended.slice(overflow) : appended,
      };
    }
    case "bar_analysis":
      return {
        ...state,
        connection: "live",
        lastVerdict: {
          barIndex: msg.bar_index,
          chosen: msg.chosen,
          ranking: msg.ranking,
          shiftUsed: msg.shift_used,
        },
      };
    case "status":
      return { ...state, connection: "live", banner: msg.text };
  }
}

/** Deviation entries for the verdict panel, in received (ascending) order. */
export function verdictRows(state: ViewState): Array<{
  label: string;
  meanMm: number;
  selected: boolean;
  chosen: boolean;
}> {
  if (state.lastVerdict === null) return [];
  return state.lastVerdict.ranking.map((entry) => ({
    label: entry.label,
    meanMm: entry.mean_m * 1000,
    selected: entry.label === state.selectedReference,
    chosen: entry.label === state.lastVerdict!.chosen,
  }));
}

/** Deviation of the last bar against the currently selected reference. */
export function selectedDeviationMm(state: ViewState): number | null {
  if (state.lastVerdict === null) return null;
  const entry = state.lastVerdict.ranking.find(
    (r) => r.label === state.selectedReference,
  );
  return entry ? entry.mean_m * 1000 : null;
}
