// Wire mirror of the core's event envelopes and display snapshots. The UI
// holds no state of its own: everything rendered comes from the latest
// display payload, so parsing is strict and malformed input is dropped.

export const TOPICS = [
  "pose",
  "zone",
  "nav",
  "detection",
  "display",
  "command",
  "status",
] as const;

export type Topic = (typeof TOPICS)[number];

export interface EventEnvelope {
  payload: unknown;
  seq: number;
  timestamp: number;
  topic: Topic;
}

export interface IngredientBox {
  label: string;
  slot: number;
}

export interface StepBubble {
  text: string;
  index: number;
  highlighted: boolean;
}

export interface DisplayView {
  recipeId: string | null;
  title: string;
  boxes: IngredientBox[];
  bubbles: StepBubble[];
  detail: string;
  // -1 / 0 between sessions; the view shows the splash then
  currentStep: number;
  stepCount: number;
  dialZonePx: Array<[number, number]>;
}

/** Parse one text frame into an envelope, or null if it is not one. */
export function decodeEnvelope(text: string): EventEnvelope | null {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) return null;
  const keys = Object.keys(doc).sort();
  if (keys.join(",") !== "payload,seq,timestamp,topic") return null;
  const { payload, seq, timestamp, topic } = doc as Record<string, unknown>;
  if (typeof seq !== "number" || !Number.isInteger(seq) || seq < 0) return null;
  if (typeof timestamp !== "number" || !Number.isFinite(timestamp)) return null;
  if (!(TOPICS as readonly string[]).includes(topic as string)) return null;
  return { payload, seq, timestamp, topic: topic as Topic };
}

/** Canonical JSON: keys sorted at every level, no whitespace, finite numbers. */
export function canonicalJson(value: unknown): string {
  if (value === null || typeof value === "boolean" || typeof value === "string") {
    return JSON.stringify(value);
  }
  if (typeof value === "number") {
    if (!Number.isFinite(value)) throw new Error("non-finite number");
    return JSON.stringify(value);
  }
  if (Array.isArray(value)) {
    return "[" + value.map(canonicalJson).join(",") + "]";
  }
  if (typeof value === "object") {
    const obj = value as Record<string, unknown>;
    const parts = Object.keys(obj)
      .sort()
      .map((k) => JSON.stringify(k) + ":" + canonicalJson(obj[k]));
    return "{" + parts.join(",") + "}";
  }
  throw new Error(`not serializable: ${typeof value}`);
}

export function encodeEnvelope(env: EventEnvelope): string {
  if (!Number.isInteger(env.seq) || env.seq < 0) throw new Error("seq must be a non-negative integer");
  if (!Number.isFinite(env.timestamp)) throw new Error("timestamp must be finite");
  if (!(TOPICS as readonly string[]).includes(env.topic)) throw new Error(`unknown topic ${env.topic}`);
  return canonicalJson({
    payload: env.payload,
    seq: env.seq,
    timestamp: env.timestamp,
    topic: env.topic,
  });
}

/** Validate a display payload into a view model, or null if malformed. */
export function displayViewFromPayload(payload: unknown): DisplayView | null {
  if (typeof payload !== "object" || payload === null || Array.isArray(payload)) return null;
  const p = payload as Record<string, unknown>;
  if (p.recipe_id !== null && typeof p.recipe_id !== "string") return null;
  if (typeof p.title !== "string" || typeof p.detail !== "string") return null;
  if (typeof p.current_step !== "number" || !Number.isInteger(p.current_step)) return null;
  if (typeof p.step_count !== "number" || !Number.isInteger(p.step_count) || p.step_count < 0) return null;
  if (!Array.isArray(p.boxes) || !Array.isArray(p.bubbles) || !Array.isArray(p.dial_zone_px)) return null;

  const boxes: IngredientBox[] = [];
  for (const row of p.boxes) {
    if (!Array.isArray(row) || row.length !== 2) return null;
    const [label, slot] = row;
    if (typeof label !== "string" || typeof slot !== "number" || !Number.isInteger(slot)) return null;
    boxes.push({ label, slot });
  }

  const bubbles: StepBubble[] = [];
  for (const row of p.bubbles) {
    if (!Array.isArray(row) || row.length !== 3) return null;
    const [text, index, highlighted] = row;
    if (typeof text !== "string" || typeof index !== "number" || !Number.isInteger(index)) return null;
    if (typeof highlighted !== "boolean") return null;
    bubbles.push({ text, index, highlighted });
  }

  const dialZonePx: Array<[number, number]> = [];
  for (const pt of p.dial_zone_px) {
    if (!Array.isArray(pt) || pt.length !== 2) return null;
    const [x, y] = pt;
    if (typeof x !== "number" || typeof y !== "number" || !Number.isFinite(x) || !Number.isFinite(y)) return null;
    dialZonePx.push([x, y]);
  }

  return {
    recipeId: (p.recipe_id as string | null) ?? null,
    title: p.title,
    boxes,
    bubbles,
    detail: p.detail,
    currentStep: p.current_step,
    stepCount: p.step_count,
    dialZonePx,
  };
}
