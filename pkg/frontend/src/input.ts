// Raw input capture. Pointer lock gives relative deltas so the demo
// faithfully exhibits location uncertainty; touch mode maps taps to
// absolute coordinates instead. The captured events are only SENT --
// the local screen changes exclusively through server apply frames.

import type { EventDoc } from "./protocol.js";

export interface InputOptions {
  touch?: boolean;
  now?: () => number;
}

export function attachInput(canvas: HTMLCanvasElement,
                            send: (e: EventDoc) => void,
                            opts: InputOptions = {}): () => void {
  const now = opts.now ?? (() => performance.now());
  const t0 = now();
  let lastT = 0;
  const stamp = (): number => {
    const t = Math.max(Math.round(now() - t0), lastT);
    lastT = t;
    return t;
  };

  const onMouseMove = (ev: MouseEvent): void => {
    if (document.pointerLockElement !== canvas) return;
    if (ev.movementX || ev.movementY) {
      send({ t: stamp(), type: "move", dx: ev.movementX, dy: ev.movementY });
    }
  };
  const onMouseDown = (ev: MouseEvent): void => {
    if (document.pointerLockElement !== canvas) {
      canvas.requestPointerLock();
      ev.preventDefault();
      return;
    }
    send({ t: stamp(), type: "down" });
  };
  const onMouseUp = (): void => {
    if (document.pointerLockElement !== canvas) return;
    send({ t: stamp(), type: "up" });
  };
  const onKeyDown = (ev: KeyboardEvent): void => {
    if (ev.key === "a" && (ev.ctrlKey || ev.metaKey)) {
      send({ t: stamp(), type: "key", char: "" });
      ev.preventDefault();
      return;
    }
    if (ev.key.length === 1 && !ev.ctrlKey && !ev.metaKey) {
      send({ t: stamp(), type: "key", char: ev.key });
    }
  };

  const touchPoint = (ev: PointerEvent): [number, number] => {
    const box = canvas.getBoundingClientRect();
    return [Math.round(ev.clientX - box.left), Math.round(ev.clientY - box.top)];
  };
  const onPointerDown = (ev: PointerEvent): void => {
    const [x, y] = touchPoint(ev);
    send({ t: stamp(), type: "touch_down", x, y });
  };
  const onPointerMove = (ev: PointerEvent): void => {
    if (ev.buttons === 0) return;
    const [x, y] = touchPoint(ev);
    send({ t: stamp(), type: "touch_move", x, y });
  };
  const onPointerUp = (ev: PointerEvent): void => {
    const [x, y] = touchPoint(ev);
    send({ t: stamp(), type: "touch_up", x, y });
  };

  if (opts.touch) {
    canvas.addEventListener("pointerdown", onPointerDown);
    canvas.addEventListener("pointermove", onPointerMove);
    canvas.addEventListener("pointerup", onPointerUp);
  } else {
    document.addEventListener("mousemove", onMouseMove);
    canvas.addEventListener("mousedown", onMouseDown);
    document.addEventListener("mouseup", onMouseUp);
  }
  document.addEventListener("keydown", onKeyDown);

  return () => {
    document.removeEventListener("mousemove", onMouseMove);
    canvas.removeEventListener("mousedown", onMouseDown);
    document.removeEventListener("mouseup", onMouseUp);
    canvas.removeEventListener("pointerdown", onPointerDown);
    canvas.removeEventListener("pointermove", onPointerMove);
    canvas.removeEventListener("pointerup", onPointerUp);
    document.removeEventListener("keydown", onKeyDown);
  };
}
