// Local mirror of the terminal oracle. Only server "apply" frames may be
// fed to it: the user's own raw input never mutates this state. Its
// canonical string and hash must match the server's byte for byte.

import {
  DEFAULT_CLEAR_KEY, ElementDoc, ModelDoc, clampCursor, elementAt,
  sliderValueAt, stateById,
} from "./model.js";
import type { EventDoc } from "./protocol.js";

export const DRAG_THRESHOLD_PX = 10;

function fmtNumber(v: number): string {
  // shortest round-trip decimal; integers with no point (matches the server)
  return Number.isInteger(v) ? String(v) : String(v);
}

export function parseFieldValue(el: ElementDoc, raw: number | string | undefined): number {
  const dom = el.value_domain;
  if (!dom) throw new Error(`${el.id} has no value domain`);
  const [lo, hi] = dom;
  if (raw === undefined) return lo;
  const parsed = typeof raw === "number" ? raw : Number.parseFloat(raw);
  if (Number.isNaN(parsed)) return lo;
  return Math.min(Math.max(parsed, lo), hi);
}

export class TerminalMirror {
  state: string;
  cx: number;
  cy: number;
  focused: string | null = null;
  pressed = false;
  pressRawDx = 0;
  dragging: string | null = null;
  values = new Map<string, number | string>();
  committed = new Map<string, number>();

  constructor(readonly model: ModelDoc) {
    this.state = model.start_state;
    this.cx = model.initial_cursor?.x ?? 0;
    this.cy = model.initial_cursor?.y ?? 0;
  }

  private moveCursor(nx: number, ny: number): void {
    [this.cx, this.cy] = clampCursor(this.model, nx, ny);
    if (this.dragging !== null) {
      const el = stateById(this.model, this.state).elements
        .find((e) => e.id === this.dragging);
      if (el) this.values.set(el.id, sliderValueAt(el, this.cx));
    }
  }

  private commit(): void {
    for (const el of stateById(this.model, this.state).elements) {
      if (el.is_target && el.value_domain) {
        this.committed.set(el.id, parseFieldValue(el, this.values.get(el.id)));
      }
    }
  }

  private fireClick(): void {
    const el = elementAt(this.model, this.state, this.cx, this.cy);
    if (el === null) {
      this.focused = null;
      return;
    }
    if (el.kind === "text_field") {
      this.focused = el.id;
      return;
    }
    if (el.kind === "slider") {
      this.focused = null;
      this.values.set(el.id, sliderValueAt(el, this.cx));
      return;
    }
    if (el.is_confirmation) this.commit();
    if (el.transition_to !== undefined) this.state = el.transition_to;
    this.focused = null;
  }

  private onKey(char: string): void {
    if (this.focused === null) return;
    const el = stateById(this.model, this.state).elements
      .find((e) => e.id === this.focused);
    if (!el) return;
    const clearKeys = el.clear_keys ?? [DEFAULT_CLEAR_KEY];
    let text = this.values.get(el.id) ?? "";
    if (typeof text !== "string") text = String(text);
    if (clearKeys.includes(char)) {
      text = "";
    } else if (char.length === 1 && char >= " " && char !== "") {
      if (el.value_domain && !"0123456789.".includes(char)) return;
      text += char;
    } else {
      return;
    }
    this.values.set(el.id, text);
  }

  apply(e: EventDoc): void {
    switch (e.type) {
      case "move": {
        this.moveCursor(this.cx + e.dx, this.cy + e.dy);
        if (this.pressed) this.pressRawDx += e.dx;
        break;
      }
      case "touch_move": {
        const raw = e.x - this.cx;
        this.moveCursor(e.x, e.y);
        if (this.pressed) this.pressRawDx += raw;
        break;
      }
      case "down":
      case "touch_down": {
        if (e.type === "touch_down") this.moveCursor(e.x, e.y);
        if (this.pressed) break; // duplicate press ignored
        this.pressed = true;
        this.pressRawDx = 0;
        const el = elementAt(this.model, this.state, this.cx, this.cy);
        if (el && el.kind === "slider") {
          this.dragging = el.id;
          this.values.set(el.id, sliderValueAt(el, this.cx));
        }
        break;
      }
      case "up":
      case "touch_up": {
        if (e.type === "touch_up") this.moveCursor(e.x, e.y);
        if (!this.pressed) break; // stray release ignored
        const rawDx = this.pressRawDx;
        this.pressed = false;
        this.dragging = null;
        this.pressRawDx = 0;
        if (Math.abs(rawDx) < DRAG_THRESHOLD_PX) this.fireClick();
        break;
      }
      case "key":
        this.onKey(e.char);
        break;
    }
  }

  canonicalString(): string {
    const fmt = (v: number | string): string =>
      typeof v === "string" ? `s:${v}` : `n:${fmtNumber(v)}`;
    const entries = (m: Map<string, number | string>): string =>
      [...m.entries()].sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0))
        .map(([k, v]) => `${k}=${fmt(v)}`).join(",");
    return `state=${this.state};cursor=${this.cx},${this.cy};` +
      `focus=${this.focused ?? "-"};pressed=${this.pressed ? 1 : 0};` +
      `dragging=${this.dragging ?? "-"};values=[${entries(this.values)}];` +
      `committed=[${entries(this.committed)}]`;
  }

  async hash(): Promise<string> {
    const data = new TextEncoder().encode(this.canonicalString());
    const digest = await crypto.subtle.digest("SHA-256", data);
    return [...new Uint8Array(digest)]
      .map((b) => b.toString(16).padStart(2, "0")).join("");
  }
}
