"""Streaming a session through the live interposer service.

Starts the WebSocket service in-process, opens a session with a
confirmation-driven attack spec, streams a synthetic trace event by event,
and shows that the client mirror (fed only by the returned apply frames)
ends bit-identical to the server's oracle.
"""

import json

from blindtrack import (
    AttackSpec, CONFIRMATION_DRIVEN, UserProfile, apply_event, boot_state,
    bundled_model_path, generate, load_model_file, pacemaker_goal, state_hash,
)
from blindtrack.service import BlindtrackServer, event_from_json, event_to_json
from blindtrack.ui_model import repo_root
from blindtrack.wsproto import ClientConnection

model = load_model_file(bundled_model_path())
trace = generate(model, UserProfile(), pacemaker_goal(), seed=5)

server = BlindtrackServer(("127.0.0.1", 0), str(repo_root() / "models"),
                          debug=True)
server.serve_in_thread()
host, port = server.server_address
print(f"service listening on {host}:{port}")

conn = ClientConnection(host, port)
conn.send_text(json.dumps({
    "kind": "open", "proto": 1, "model": "pacemaker", "debug": True,
    "spec": {"variant": CONFIRMATION_DRIVEN, "target_element": "rate_slider",
             "malicious_value": 185.0, "step_interval_ms": 10}}))
ack = json.loads(conn.recv_text())
print(f"session open, model has {len(ack['model']['states'])} states")

mirror = boot_state(model)
applied = 0
for e in trace.events:
    conn.send_text(json.dumps({"kind": "event", "event": event_to_json(e)}))
    frame = json.loads(conn.recv_text())
    for doc in frame["events"]:
        mirror = apply_event(model, mirror, event_from_json(doc))
        applied += 1

conn.send_text(json.dumps({"kind": "debug"}))
debug = json.loads(conn.recv_text())
print(f"debug snapshot: top={debug['estimate']['top_state']} "
      f"p={debug['estimate']['top_prob']:.2f} "
      f"region rects={len(debug['estimate']['region'])}")

conn.send_text(json.dumps({"kind": "outcome"}))
frame = json.loads(conn.recv_text())
if frame["kind"] == "apply":
    for doc in frame["events"]:
        mirror = apply_event(model, mirror, event_from_json(doc))
        applied += 1
    frame = json.loads(conn.recv_text())
print(f"outcome: {frame['outcome']}")
print(f"applied {applied} events on the mirror; hashes match:",
      frame["oracle_hash"] == state_hash(mirror))
conn.close()
server.shutdown()
server.server_close()
