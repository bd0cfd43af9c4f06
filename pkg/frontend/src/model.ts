// UI model document types and geometry helpers, mirroring the service's
// model JSON. Containment is half-open: [x, x+w) x [y, y+h).

export type ElementKind = "button" | "text_field" | "slider" | "multiple_choice";

export interface ElementDoc {
  id: string;
  kind: ElementKind;
  rect: [number, number, number, number];
  transition_to?: string;
  is_target?: boolean;
  is_confirmation?: boolean;
  value_domain?: [number, number, number];
  a_priori_weight?: number;
  clear_keys?: string[];
  label?: string;
}

export interface StateDoc {
  id: string;
  elements: ElementDoc[];
  label?: string;
}

export interface ModelDoc {
  model_version: number;
  id: string;
  screen: { width: number; height: number };
  start_state: string;
  target_states: string[];
  initial_cursor?: { x: number; y: number };
  states: StateDoc[];
}

export const DEFAULT_CLEAR_KEY = "";

export function stateById(model: ModelDoc, id: string): StateDoc {
  const st = model.states.find((s) => s.id === id);
  if (!st) throw new Error(`unknown state ${id}`);
  return st;
}

export function rectContains(rect: [number, number, number, number],
                             x: number, y: number): boolean {
  const [rx, ry, rw, rh] = rect;
  return rx <= x && x < rx + rw && ry <= y && y < ry + rh;
}

// the unique transition-bearing element containing the point wins; any
// other containing element is the fallback
export function elementAt(model: ModelDoc, stateId: string,
                          x: number, y: number): ElementDoc | null {
  let fallback: ElementDoc | null = null;
  for (const el of stateById(model, stateId).elements) {
    if (rectContains(el.rect, x, y)) {
      if (el.transition_to !== undefined) return el;
      if (fallback === null) fallback = el;
    }
  }
  return fallback;
}

// slider value for a cursor column: linear map over the rect, clamped,
// rounded half-up onto the step grid (must match the terminal exactly)
export function sliderValueAt(el: ElementDoc, x: number): number {
  const dom = el.value_domain;
  if (!dom) throw new Error(`${el.id} has no value domain`);
  const [lo, hi, step] = dom;
  const [rx, , rw] = [el.rect[0], el.rect[1], el.rect[2]];
  const rel = Math.min(Math.max(x, rx), rx + rw - 1) - rx;
  const frac = rw > 1 ? rel / (rw - 1) : 0;
  const raw = lo + frac * (hi - lo);
  const steps = Math.floor((raw - lo) / step + 0.5);
  return Math.min(Math.max(lo + steps * step, lo), hi);
}

// inverse: a column whose cursor position maps to the value (band middle)
export function sliderThumbX(el: ElementDoc, value: number): number {
  const dom = el.value_domain;
  if (!dom) throw new Error(`${el.id} has no value domain`);
  const [lo, hi] = dom;
  const [rx, , rw] = [el.rect[0], el.rect[1], el.rect[2]];
  if (hi === lo) return rx;
  let guess = rx + Math.round(((value - lo) / (hi - lo)) * (rw - 1));
  guess = Math.min(Math.max(guess, rx), rx + rw - 1);
  let left = guess;
  while (left - 1 >= rx && sliderValueAt(el, left - 1) === value) left--;
  let right = guess;
  while (right + 1 < rx + rw && sliderValueAt(el, right + 1) === value) right++;
  return Math.floor((left + right) / 2);
}

export function clampCursor(model: ModelDoc, x: number, y: number): [number, number] {
  return [Math.min(Math.max(x, 0), model.screen.width - 1),
          Math.min(Math.max(y, 0), model.screen.height - 1)];
}
