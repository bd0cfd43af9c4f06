// Canvas renderer: the screen mirrors the model geometry exactly
// (1 CSS pixel = 1 model pixel).

import { ElementDoc, ModelDoc, sliderThumbX, stateById } from "./model.js";
import type { TerminalMirror } from "./oracle.js";
import type { DebugFrame } from "./protocol.js";

const COLORS = {
  background: "#10151c",
  panel: "#1b2430",
  button: "#2e4a66",
  buttonEdge: "#5d86ad",
  confirm: "#7a3131",
  field: "#22303f",
  fieldEdge: "#4f6a85",
  track: "#394b5e",
  thumb: "#9fc2e0",
  text: "#dce7f2",
  dim: "#8b9bac",
  cursor: "#ffd166",
  overlayRegion: "rgba(255, 99, 99, 0.45)",
  overlayText: "#ff9f9f",
};

function drawElement(ctx: CanvasRenderingContext2D, el: ElementDoc,
                     mirror: TerminalMirror): void {
  const [x, y, w, h] = el.rect;
  ctx.font = "14px sans-serif";
  ctx.textBaseline = "middle";
  if (el.kind === "button" || el.kind === "multiple_choice") {
    ctx.fillStyle = el.is_confirmation ? COLORS.confirm : COLORS.button;
    ctx.fillRect(x, y, w, h);
    ctx.strokeStyle = COLORS.buttonEdge;
    ctx.strokeRect(x + 0.5, y + 0.5, w - 1, h - 1);
    ctx.fillStyle = COLORS.text;
    ctx.textAlign = "center";
    ctx.fillText(el.label ?? el.id, x + w / 2, y + h / 2, w - 8);
    return;
  }
  if (el.kind === "text_field") {
    ctx.fillStyle = COLORS.field;
    ctx.fillRect(x, y, w, h);
    ctx.strokeStyle = mirror.focused === el.id ? COLORS.cursor : COLORS.fieldEdge;
    ctx.strokeRect(x + 0.5, y + 0.5, w - 1, h - 1);
    const value = mirror.values.get(el.id);
    ctx.fillStyle = COLORS.text;
    ctx.textAlign = "left";
    ctx.fillText(String(value ?? ""), x + 8, y + h / 2, w - 16);
    ctx.fillStyle = COLORS.dim;
    ctx.fillText(el.label ?? el.id, x, y - 12);
    return;
  }
  // slider: track plus thumb at the current value's column
  const dom = el.value_domain ?? [0, 1, 1];
  const value = Number(mirror.values.get(el.id) ?? dom[0]);
  ctx.fillStyle = COLORS.panel;
  ctx.fillRect(x, y, w, h);
  ctx.fillStyle = COLORS.track;
  ctx.fillRect(x, y + h / 2 - 3, w, 6);
  const thumb = sliderThumbX(el, value);
  ctx.fillStyle = COLORS.thumb;
  ctx.fillRect(thumb - 5, y + 6, 10, h - 12);
  ctx.fillStyle = COLORS.dim;
  ctx.textAlign = "left";
  ctx.fillText(`${el.label ?? el.id}: ${value}`, x, y - 12);
}

export function render(ctx: CanvasRenderingContext2D, model: ModelDoc,
                       mirror: TerminalMirror,
                       overlay: DebugFrame | null = null): void {
  ctx.fillStyle = COLORS.background;
  ctx.fillRect(0, 0, model.screen.width, model.screen.height);
  const state = stateById(model, mirror.state);
  ctx.fillStyle = COLORS.text;
  ctx.font = "bold 22px sans-serif";
  ctx.textAlign = "left";
  ctx.textBaseline = "top";
  ctx.fillText(state.label ?? state.id, 40, 30);
  ctx.font = "13px sans-serif";
  ctx.fillStyle = COLORS.dim;
  ctx.fillText(`state: ${state.id}`, 40, 64);
  for (const el of state.elements) drawElement(ctx, el, mirror);

  if (overlay) {
    for (const [x, y, w, h] of overlay.estimate.region) {
      ctx.fillStyle = COLORS.overlayRegion;
      ctx.fillRect(x, y, Math.max(w, 2), Math.max(h, 2));
    }
    ctx.fillStyle = COLORS.overlayText;
    ctx.font = "12px monospace";
    ctx.textAlign = "left";
    ctx.textBaseline = "top";
    const probs = Object.entries(overlay.estimate.state_probs)
      .sort(([, a], [, b]) => b - a).slice(0, 6);
    probs.forEach(([sid, p], i) => {
      ctx.fillText(`${sid.padEnd(18)} ${p.toFixed(3)}`, 700, 30 + i * 16);
    });
    ctx.fillText(`trackers: ${overlay.estimate.tracker_count}`, 700,
                 30 + probs.length * 16);
  }

  // cursor crosshair
  ctx.strokeStyle = COLORS.cursor;
  ctx.beginPath();
  ctx.moveTo(mirror.cx - 8, mirror.cy);
  ctx.lineTo(mirror.cx + 8, mirror.cy);
  ctx.moveTo(mirror.cx, mirror.cy - 8);
  ctx.lineTo(mirror.cx, mirror.cy + 8);
  ctx.stroke();
}
