// Session client: streams raw events to the service and applies the
// returned post-decision stream (and nothing else) to the local mirror.
// Frames are handled strictly in arrival order; a disconnect freezes input.

import { TerminalMirror } from "./oracle.js";
import {
  AttackSpecDoc, DEBUG_FRAME, DebugFrame, EventDoc, FaultFrame,
  OUTCOME_FRAME, OutcomeFrame, ServerFrame, eventFrame, openFrame, parseFrame,
} from "./protocol.js";
import type { ModelDoc } from "./model.js";

export interface FrameSocket {
  send(text: string): void;
  close(): void;
  onMessage(cb: (text: string) => void): void;
  onClose(cb: () => void): void;
}

export interface SessionHandlers {
  onReady?(model: ModelDoc): void;
  onApplied?(events: EventDoc[]): void;
  onDebug?(frame: DebugFrame): void;
  onFault?(frame: FaultFrame): void;
  onOutcome?(frame: OutcomeFrame): void;
  onClosed?(): void;
}

export class SessionClient {
  readonly applied: EventDoc[] = [];
  mirror: TerminalMirror | null = null;
  model: ModelDoc | null = null;
  closed = false;
  private lastSentT = 0;

  constructor(private socket: FrameSocket,
              private handlers: SessionHandlers = {}) {
    socket.onMessage((text) => this.handle(parseFrame(text)));
    socket.onClose(() => {
      this.closed = true;
      this.handlers.onClosed?.();
    });
  }

  open(model: string, spec: AttackSpecDoc | null = null,
       config: Record<string, unknown> = {}, debug = false): void {
    this.socket.send(openFrame(model, spec, config, debug));
  }

  sendEvent(event: EventDoc): void {
    if (this.closed || this.mirror === null) return;
    // the service requires non-decreasing timestamps
    if (event.t < this.lastSentT) event = { ...event, t: this.lastSentT };
    this.lastSentT = event.t;
    this.socket.send(eventFrame(event));
  }

  requestDebug(): void {
    if (!this.closed) this.socket.send(DEBUG_FRAME);
  }

  requestOutcome(): void {
    if (!this.closed) this.socket.send(OUTCOME_FRAME);
  }

  private handle(frame: ServerFrame): void {
    switch (frame.kind) {
      case "apply": {
        if (frame.model) {
          this.model = frame.model;
          this.mirror = new TerminalMirror(frame.model);
          this.handlers.onReady?.(frame.model);
        }
        if (this.mirror) {
          for (const ev of frame.events) {
            this.mirror.apply(ev);
            this.applied.push(ev);
          }
        }
        if (frame.events.length) this.handlers.onApplied?.(frame.events);
        break;
      }
      case "debug":
        this.handlers.onDebug?.(frame);
        break;
      case "fault":
        this.handlers.onFault?.(frame);
        if (frame.fatal) this.closed = true;
        break;
      case "outcome":
        this.handlers.onOutcome?.(frame);
        this.closed = true;
        break;
    }
  }
}

export function wrapWebSocket(ws: WebSocket): FrameSocket {
  let onMessage: (text: string) => void = () => undefined;
  let onClose: () => void = () => undefined;
  ws.addEventListener("message", (ev) => onMessage(String(ev.data)));
  ws.addEventListener("close", () => onClose());
  ws.addEventListener("error", () => onClose());
  return {
    send: (text) => ws.send(text),
    close: () => ws.close(),
    onMessage: (cb) => { onMessage = cb; },
    onClose: (cb) => { onClose = cb; },
  };
}
