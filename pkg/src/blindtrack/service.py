"""Interposer session service.

Exposes the interposer over a persistent WebSocket channel speaking JSON
text frames (``proto: 1``).  A client opens one session per connection,
streams raw input events, and receives for each the exact post-decision
event list its terminal mirror must execute.  The server replays the same
stream through its own oracle, so outcomes and state hashes are computed
server-side.  See docs/protocol.md for the byte-level framing.
"""

from __future__ import annotations

import argparse
import itertools
import json
import socketserver
import sys
import threading
from pathlib import Path
from typing import Optional

from .attack import (
    AttackError, AttackSpec, Inject, InterposerSession, OutcomeTracker,
    applied_events,
)
from .estimator import EstimatorConfig
from .events import (
    ButtonDown, ButtonUp, InputEvent, Key, MouseMove, TouchDown, TouchMove,
    TouchUp,
)
from .terminal import state_hash
from .ui_model import ModelError, UiModel, load_model_file, model_to_json
from .wsproto import ServerConnection, WsError

PROTO_VERSION = 1

_CONFIG_KEYS = ("transition_scheme", "element_detection", "detection_scale",
                "a_priori", "target_prob_threshold", "prune_epsilon",
                "max_trackers", "drag_threshold_px", "merge_same_state")


class ProtocolError(Exception):
    pass


def event_to_json(e: InputEvent) -> dict:
    p = e.payload
    match p:
        case MouseMove(dx, dy):
            return {"t": e.t_ms, "type": "move", "dx": dx, "dy": dy}
        case ButtonDown():
            return {"t": e.t_ms, "type": "down"}
        case ButtonUp():
            return {"t": e.t_ms, "type": "up"}
        case Key(char):
            return {"t": e.t_ms, "type": "key", "char": char}
        case TouchDown(x, y):
            return {"t": e.t_ms, "type": "touch_down", "x": x, "y": y}
        case TouchUp(x, y):
            return {"t": e.t_ms, "type": "touch_up", "x": x, "y": y}
        case TouchMove(x, y):
            return {"t": e.t_ms, "type": "touch_move", "x": x, "y": y}
    raise ProtocolError(f"unknown payload {p!r}")


def event_from_json(doc: dict) -> InputEvent:
    try:
        t = int(doc["t"])
        kind = doc["type"]
        if kind == "move":
            return InputEvent(t, MouseMove(int(doc["dx"]), int(doc["dy"])))
        if kind == "down":
            return InputEvent(t, ButtonDown())
        if kind == "up":
            return InputEvent(t, ButtonUp())
        if kind == "key":
            char = doc["char"]
            if not isinstance(char, str) or len(char) != 1:
                raise ProtocolError("key char must be a single character")
            return InputEvent(t, Key(char))
        if kind in ("touch_down", "touch_up", "touch_move"):
            cls = {"touch_down": TouchDown, "touch_up": TouchUp,
                   "touch_move": TouchMove}[kind]
            return InputEvent(t, cls(int(doc["x"]), int(doc["y"])))
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"malformed event: {exc}") from None
    raise ProtocolError(f"unknown event type {doc.get('type')!r}")


def spec_from_json(doc: Optional[dict]) -> Optional[AttackSpec]:
    if doc is None:
        return None
    try:
        return AttackSpec(
            variant=doc["variant"],
            target_element=doc["target_element"],
            malicious_value=doc["malicious_value"],
            step_interval_ms=int(doc.get("step_interval_ms", 10)),
            element_wait_ms=int(doc.get("element_wait_ms", 1000)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"malformed attack spec: {exc}") from None


def config_from_json(doc: Optional[dict]) -> EstimatorConfig:
    doc = doc or {}
    unknown = set(doc) - set(_CONFIG_KEYS)
    if unknown:
        raise ProtocolError(f"unknown config keys {sorted(unknown)}")
    try:
        return EstimatorConfig(**doc)
    except (TypeError, ValueError) as exc:
        raise ProtocolError(f"bad config: {exc}") from None


_session_ids = itertools.count(1)


class _SessionState:
    def __init__(self, model: UiModel, session: InterposerSession):
        self.model = model
        self.session = session
        self.tracker = OutcomeTracker(model, session.spec, session.target_el)
        self.session_id = f"s{next(_session_ids)}"
        self.seq = 0
        self.last_client_t: Optional[int] = None

    def apply_frame(self, decisions) -> dict:
        events = []
        for d in decisions:
            injected = isinstance(d, Inject)
            for ev in applied_events(d):
                self.tracker.step(ev, injected)
                events.append(event_to_json(ev))
        self.seq += 1
        return {"kind": "apply", "seq": self.seq, "events": events}


class BlindtrackHandler(socketserver.BaseRequestHandler):
    def handle(self) -> None:  # one connection == at most one session
        try:
            conn = ServerConnection(self.request)
        except (WsError, OSError):
            return
        state: Optional[_SessionState] = None
        debug_enabled = False
        try:
            while True:
                raw = conn.recv_text()
                if raw is None:
                    return
                try:
                    doc = json.loads(raw)
                    if not isinstance(doc, dict):
                        raise ProtocolError("frame must be a JSON object")
                    kind = doc.get("kind")
                    if kind == "open":
                        if state is not None:
                            raise ProtocolError("session already open")
                        if doc.get("proto") != PROTO_VERSION:
                            raise ProtocolError(
                                f"unsupported proto {doc.get('proto')!r}")
                        model_id = str(doc.get("model", ""))
                        path = Path(self.server.models_dir) / f"{model_id}.model"
                        if not path.is_file():
                            raise ProtocolError(f"unknown model {model_id!r}")
                        model = load_model_file(path)
                        spec = spec_from_json(doc.get("spec"))
                        cfg = config_from_json(doc.get("config"))
                        session = InterposerSession(model, spec, cfg)
                        state = _SessionState(model, session)
                        debug_enabled = bool(self.server.debug
                                             and doc.get("debug", False))
                        frame = state.apply_frame([])
                        frame["session"] = state.session_id
                        frame["model"] = model_to_json(model)
                        conn.send_text(json.dumps(frame))
                    elif kind == "event":
                        if state is None:
                            raise ProtocolError("event before open")
                        event = event_from_json(doc.get("event", {}))
                        if state.last_client_t is not None \
                                and event.t_ms < state.last_client_t:
                            raise ProtocolError("out-of-order event")
                        state.last_client_t = event.t_ms
                        decisions = state.session.feed(event)
                        conn.send_text(json.dumps(state.apply_frame(decisions)))
                    elif kind == "debug":
                        if state is None:
                            raise ProtocolError("debug before open")
                        if not debug_enabled:
                            conn.send_text(json.dumps({
                                "kind": "fault", "fatal": False,
                                "error": "debug disabled"}))
                            continue
                        est = state.session.est
                        estimate = est.estimate()
                        conn.send_text(json.dumps({
                            "kind": "debug",
                            "estimate": {
                                "top_state": estimate.top_state,
                                "top_prob": estimate.top_prob,
                                "state_probs": estimate.state_probs,
                                "tracker_count": estimate.tracker_count,
                                "region": [[r.x, r.y, r.w, r.h]
                                           for r in estimate.combined_region.rects],
                            },
                            "snapshot": json.loads(est.snapshot()),
                        }))
                    elif kind == "outcome":
                        if state is None:
                            raise ProtocolError("outcome before open")
                        flushed = state.session.finish()
                        if flushed:
                            conn.send_text(json.dumps(state.apply_frame(flushed)))
                        launched = any(isinstance(d, Inject)
                                       for d in state.session.decisions)
                        outcome = state.tracker.outcome(launched)
                        conn.send_text(json.dumps({
                            "kind": "outcome",
                            "outcome": {
                                "launched": outcome.launched,
                                "success": outcome.success,
                                "visible_ms": outcome.visible_ms,
                                "injected_event_count": outcome.injected_event_count,
                            },
                            "decision_log": state.session.decision_log(),
                            "oracle_hash": state_hash(state.tracker.oracle),
                        }))
                        return
                    else:
                        raise ProtocolError(f"unknown frame kind {kind!r}")
                except (ProtocolError, AttackError, ModelError,
                        json.JSONDecodeError) as exc:
                    conn.send_text(json.dumps({
                        "kind": "fault", "fatal": True, "error": str(exc)}))
                    return
        except (WsError, OSError):
            return
        finally:
            conn.close()


class BlindtrackServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, listen: tuple[str, int], models_dir: str,
                 debug: bool = False):
        super().__init__(listen, BlindtrackHandler)
        self.models_dir = models_dir
        self.debug = debug

    def serve_in_thread(self) -> threading.Thread:
        thread = threading.Thread(target=self.serve_forever, daemon=True)
        thread.start()
        return thread


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="blindtrack-service",
        description="interposer session service (WebSocket, proto 1)")
    parser.add_argument("--listen", default="127.0.0.1:8791",
                        help="HOST:PORT to bind")
    parser.add_argument("--models", required=True, help="model file directory")
    parser.add_argument("--debug", action="store_true",
                        help="allow estimator debug snapshots")
    args = parser.parse_args(argv)
    host, _, port = args.listen.rpartition(":")
    try:
        server = BlindtrackServer((host or "127.0.0.1", int(port)),
                                  args.models, args.debug)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"listening on {args.listen} (models: {args.models}, "
          f"debug: {'on' if args.debug else 'off'})", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
