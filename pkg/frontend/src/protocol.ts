// proto 1 message and event shapes (see docs/protocol.md)

import type { ModelDoc } from "./model.js";

export type EventDoc =
  | { t: number; type: "move"; dx: number; dy: number }
  | { t: number; type: "down" }
  | { t: number; type: "up" }
  | { t: number; type: "key"; char: string }
  | { t: number; type: "touch_down"; x: number; y: number }
  | { t: number; type: "touch_up"; x: number; y: number }
  | { t: number; type: "touch_move"; x: number; y: number };

export interface AttackSpecDoc {
  variant: "element_driven" | "confirmation_driven";
  target_element: string;
  malicious_value: number | string;
  step_interval_ms?: number;
  element_wait_ms?: number;
}

export interface ApplyFrame {
  kind: "apply";
  seq: number;
  events: EventDoc[];
  model?: ModelDoc;
}

export interface DebugFrame {
  kind: "debug";
  estimate: {
    top_state: string;
    top_prob: number;
    state_probs: Record<string, number>;
    tracker_count: number;
    region: [number, number, number, number][];
  };
  snapshot: unknown;
}

export interface FaultFrame {
  kind: "fault";
  fatal: boolean;
  error: string;
}

export interface OutcomeFrame {
  kind: "outcome";
  outcome: {
    launched: boolean;
    success: boolean;
    visible_ms: number;
    injected_event_count: number;
  };
  decision_log: string;
  oracle_hash: string;
}

export type ServerFrame = ApplyFrame | DebugFrame | FaultFrame | OutcomeFrame;

export function parseFrame(text: string): ServerFrame {
  const doc = JSON.parse(text) as ServerFrame;
  if (!doc || typeof doc !== "object" || !("kind" in doc)) {
    throw new Error("malformed frame");
  }
  return doc;
}

export function openFrame(model: string, spec: AttackSpecDoc | null,
                          config: Record<string, unknown>,
                          debug: boolean): string {
  return JSON.stringify({ kind: "open", proto: 1, model, spec, config, debug });
}

export function eventFrame(event: EventDoc): string {
  return JSON.stringify({ kind: "event", event });
}

export const DEBUG_FRAME = JSON.stringify({ kind: "debug" });
export const OUTCOME_FRAME = JSON.stringify({ kind: "outcome" });
