// Browser bootstrap: connect to the interposer service, render the modeled
// terminal, route captured input through the session, animate injected
// sequences on their frame timestamps, and optionally show the estimator's
// debug overlay (press "o"). Press "End" to close the session.

import { SessionClient, wrapWebSocket } from "./client.js";
import { attachInput } from "./input.js";
import { render } from "./render.js";
import type { AttackSpecDoc, DebugFrame, EventDoc } from "./protocol.js";

function statusLine(text: string): void {
  const el = document.getElementById("status");
  if (el) el.textContent = text;
}

function specFromQuery(params: URLSearchParams): AttackSpecDoc | null {
  const target = params.get("target");
  if (!target) return null;
  const value = params.get("value") ?? "185";
  return {
    variant: params.get("variant") === "element_driven"
      ? "element_driven" : "confirmation_driven",
    target_element: target,
    malicious_value: Number.isNaN(Number(value)) ? value : Number(value),
    step_interval_ms: Number(params.get("speed") ?? "10"),
  };
}

interface Burst {
  events: EventDoc[];
  startedAt: number;  // wall clock, ms
  baseT: number;      // first event timestamp
  fromX: number;
  fromY: number;
}

export function boot(): void {
  const params = new URLSearchParams(location.search);
  const url = params.get("service") ?? "ws://127.0.0.1:8791/";
  const debugWanted = params.get("debug") === "1";
  const touch = params.get("touch") === "1";

  const canvas = document.getElementById("screen") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("no canvas context");

  let overlay: DebugFrame | null = null;
  let overlayOn = false;
  let burst: Burst | null = null;

  const ws = new WebSocket(url);
  const client: SessionClient = new SessionClient(
    wrapWebSocket(ws), {
      onReady(model) {
        canvas.width = model.screen.width;
        canvas.height = model.screen.height;
        statusLine(`session open (${model.id}); click the screen to capture`
          + ` the mouse, press o for the overlay, End to finish`);
        draw();
        attachInput(canvas, (e) => client.sendEvent(e), { touch });
      },
      onApplied(events) {
        // a multi-event frame is an injected sequence: animate the cursor
        // along its own timestamps (the mirror state is already final)
        if (events.length > 2 && client.mirror) {
          let dx = 0;
          let dy = 0;
          for (const e of events) {
            if (e.type === "move") { dx += e.dx; dy += e.dy; }
          }
          burst = {
            events,
            startedAt: performance.now(),
            baseT: events[0].t,
            fromX: client.mirror.cx - dx,
            fromY: client.mirror.cy - dy,
          };
          requestAnimationFrame(animate);
        } else {
          draw();
        }
      },
      onDebug(frame) {
        overlay = frame;
        draw();
      },
      onFault(frame) {
        statusLine(`fault: ${frame.error}${frame.fatal ? " (session closed)" : ""}`);
      },
      onOutcome(frame) {
        void (async () => {
          const local = client.mirror ? await client.mirror.hash() : "n/a";
          const match = local === frame.oracle_hash ? "MATCH" : "MISMATCH";
          statusLine(`outcome: launched=${frame.outcome.launched}`
            + ` success=${frame.outcome.success}`
            + ` visible=${frame.outcome.visible_ms}ms; oracle hash ${match}`);
        })();
      },
      onClosed() {
        statusLine("disconnected; input frozen");
      },
    });

  function draw(cursorOverride: [number, number] | null = null): void {
    if (!client.model || !client.mirror || !ctx) return;
    if (cursorOverride) {
      const [cx, cy] = [client.mirror.cx, client.mirror.cy];
      [client.mirror.cx, client.mirror.cy] = cursorOverride;
      render(ctx, client.model, client.mirror, overlayOn ? overlay : null);
      [client.mirror.cx, client.mirror.cy] = [cx, cy];
    } else {
      render(ctx, client.model, client.mirror, overlayOn ? overlay : null);
    }
  }

  function animate(): void {
    if (!burst) return;
    const elapsed = performance.now() - burst.startedAt;
    let x = burst.fromX;
    let y = burst.fromY;
    let done = true;
    for (const e of burst.events) {
      if (e.t - burst.baseT > elapsed) { done = false; break; }
      if (e.type === "move") { x += e.dx; y += e.dy; }
    }
    if (done) {
      burst = null;
      draw();
    } else {
      draw([x, y]);
      requestAnimationFrame(animate);
    }
  }

  document.addEventListener("keydown", (ev) => {
    if (ev.key === "o") {
      overlayOn = !overlayOn;
      if (overlayOn && debugWanted) client.requestDebug();
      draw();
    }
    if (ev.key === "End") client.requestOutcome();
  });
  if (debugWanted) {
    setInterval(() => {
      if (overlayOn && !client.closed) client.requestDebug();
    }, 400);
  }

  ws.addEventListener("open", () => {
    client.open("pacemaker", specFromQuery(params), {}, debugWanted);
  });
}

boot();
