import { readFileSync } from "node:fs";
import { dirname, resolve } from "node:path";
import { DisplayView, EventEnvelope, decodeEnvelope, displayViewFromPayload } from "../src/model.js";

// under the jsdom environment import.meta.url is not a file: URL, but its
// pathname is still this file's location on disk
const GOLDEN_LOG = resolve(dirname(new URL(import.meta.url).pathname), "../../fixtures/guacamole_golden.log");

/** All envelopes of the recorded cooking session, in log order. */
export function goldenEnvelopes(): EventEnvelope[] {
  const lines = readFileSync(GOLDEN_LOG, "utf-8")
    .split("\n")
    .filter((line) => line.length > 0);
  return lines.map((line) => {
    const env = decodeEnvelope(line);
    if (env === null) throw new Error(`unparseable log line: ${line.slice(0, 60)}`);
    return env;
  });
}

export function goldenDisplayViews(): DisplayView[] {
  return goldenEnvelopes()
    .filter((env) => env.topic === "display")
    .map((env) => {
      const view = displayViewFromPayload(env.payload);
      if (view === null) throw new Error("golden display payload did not validate");
      return view;
    });
}

/** The session's first display payload (4 ingredients, step 0). */
export function activeDisplayPayload(): Record<string, unknown> {
  const env = goldenEnvelopes().find((e) => e.topic === "display");
  if (env === undefined) throw new Error("golden log has no display event");
  return env.payload as Record<string, unknown>;
}

/** Same session at a different step, bubbles and detail re-derived. */
export function displayPayloadAtStep(step: number): Record<string, unknown> {
  const base = activeDisplayPayload();
  const bubbles = (base.bubbles as Array<[string, number, boolean]>).map(
    ([text, index]) => [text, index, index === step] as [string, number, boolean],
  );
  return { ...base, bubbles, current_step: step, detail: `detail for step ${step}` };
}

export function idleDisplayPayload(): Record<string, unknown> {
  const base = activeDisplayPayload();
  return {
    recipe_id: null,
    title: "",
    boxes: [],
    bubbles: [],
    detail: "",
    current_step: -1,
    step_count: 0,
    dial_zone_px: base.dial_zone_px,
  };
}

/** Poll until cond holds; fails the test on timeout. */
export async function until(cond: () => boolean, timeoutMs = 5000, label = "condition"): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (cond()) return;
    await new Promise((resolve) => setTimeout(resolve, 10));
  }
  throw new Error(`timed out after ${timeoutMs} ms waiting for ${label}`);
}

export function highlightedIndices(root: HTMLElement): number[] {
  return Array.from(root.querySelectorAll(".bubble.highlighted")).map((node) =>
    Number((node as HTMLElement).dataset.index),
  );
}
