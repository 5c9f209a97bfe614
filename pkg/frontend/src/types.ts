// Wire schema of the stream endpoint: one JSON object per message with
// field names fixed by the service (`type`, `t`, `palm`, `tip`,
// `bar_index`, `ranking`, `chosen`, `text`).

export interface PoseMessage {
  type: "pose";
  t: number;
  palm: [number, number, number];
  tip: [number, number, number];
}

export interface RankingEntry {
  label: string;
  mean_m: number;
  max_m: number;
  per_beat_m: number[];
}

export interface BarAnalysisMessage {
  type: "bar_analysis";
  bar_index: number;
  ranking: RankingEntry[];
  chosen: string;
  shift_used: number;
}

export interface StatusMessage {
  type: "status";
  text: string;
}

export type StreamMessage = PoseMessage | BarAnalysisMessage | StatusMessage;

export const MOVEMENT_CLASSES = [
  "control",
  "knee",
  "waist",
  "feet",
  "wrist",
  "upper_arm",
] as const;

export type MovementClass = (typeof MOVEMENT_CLASSES)[number];

function isVec3(value: unknown): value is [number, number, number] {
  return (
    Array.isArray(value) &&
    value.length === 3 &&
    value.every((v) => typeof v === "number" && Number.isFinite(v))
  );
}

function isRankingEntry(value: unknown): value is RankingEntry {
  if (typeof value !== "object" || value === null) return false;
  const entry = value as Record<string, unknown>;
  return (
    typeof entry.label === "string" &&
    typeof entry.mean_m === "number" &&
    typeof entry.max_m === "number" &&
    Array.isArray(entry.per_beat_m) &&
    entry.per_beat_m.every((v) => typeof v === "number")
  );
}

/** Validate a decoded JSON value against the stream schema. */
export function parseStreamMessage(value: unknown): StreamMessage | null {
  if (typeof value !== "object" || value === null) return null;
  const msg = value as Record<string, unknown>;
  switch (msg.type) {
    case "pose":
      if (typeof msg.t === "number" && Number.isFinite(msg.t) &&
          isVec3(msg.palm) && isVec3(msg.tip)) {
        return { type: "pose", t: msg.t, palm: msg.palm, tip: msg.tip };
      }
      return null;
    case "bar_analysis":
      if (typeof msg.bar_index === "number" &&
          typeof msg.chosen === "string" &&
          typeof msg.shift_used === "number" &&
          Array.isArray(msg.ranking) && msg.ranking.every(isRankingEntry)) {
        return {
          type: "bar_analysis",
          bar_index: msg.bar_index,
          ranking: msg.ranking as RankingEntry[],
          chosen: msg.chosen,
          shift_used: msg.shift_used,
        };
      }
      return null;
    case "status":
      if (typeof msg.text === "string") {
        return { type: "status", text: msg.text };
      }
      return null;
    default:
      return null;
  }
}

/** Decode one wire line; null when malformed. */
export function decodeStreamMessage(raw: string): StreamMessage | null {
  try {
    return parseStreamMessage(JSON.parse(raw));
  } catch {
    return null;
  }
}
