import json

import pytest

from blindtrack.attack import AttackSpec, CONFIRMATION_DRIVEN, run_session
from blindtrack.estimator import Estimator, EstimatorConfig
from blindtrack.service import BlindtrackServer, event_to_json
from blindtrack.trace import UserProfile, generate, pacemaker_goal
from blindtrack.ui_model import bundled_model_path, repo_root
from blindtrack.wsproto import ClientConnection

SPEC_JSON = {"variant": CONFIRMATION_DRIVEN, "target_element": "rate_slider",
             "malicious_value": 185.0, "step_interval_ms": 10}


@pytest.fixture(scope="module")
def server():
    srv = BlindtrackServer(("127.0.0.1", 0), str(repo_root() / "models"),
                           debug=True)
    srv.serve_in_thread()
    yield srv
    srv.shutdown()
    srv.server_close()


def connect(server):
    host, port = server.server_address
    return ClientConnection(host, port)


def send(conn, doc):
    conn.send_text(json.dumps(doc))
    raw = conn.recv_text()
    assert raw is not None, "server closed unexpectedly"
    return json.loads(raw)


def open_session(conn, spec=None, debug=False, config=None):
    reply = send(conn, {"kind": "open", "proto": 1, "model": "pacemaker",
                        "spec": spec, "config": config or {}, "debug": debug})
    assert reply["kind"] == "apply" and reply["seq"] == 1
    assert reply["model"]["id"] == "pacemaker"
    return reply


def test_event_before_open_faults(server):
    conn = connect(server)
    reply = send(conn, {"kind": "event",
                        "event": {"t": 0, "type": "move", "dx": 1, "dy": 1}})
    assert reply["kind"] == "fault" and reply["fatal"]
    conn.close()


def test_unknown_model_faults(server):
    conn = connect(server)
    reply = send(conn, {"kind": "open", "proto": 1, "model": "nope"})
    assert reply["kind"] == "fault" and "unknown model" in reply["error"]
    conn.close()


def test_bad_proto_faults(server):
    conn = connect(server)
    reply = send(conn, {"kind": "open", "proto": 2, "model": "pacemaker"})
    assert reply["kind"] == "fault"
    conn.close()


def test_out_of_order_event_faults(server):
    conn = connect(server)
    open_session(conn)
    send(conn, {"kind": "event", "event": {"t": 100, "type": "move", "dx": 1, "dy": 0}})
    reply = send(conn, {"kind": "event", "event": {"t": 50, "type": "move", "dx": 1, "dy": 0}})
    assert reply["kind"] == "fault" and reply["fatal"]
    conn.close()


def test_debug_gated(server, pacemaker):
    conn = connect(server)
    open_session(conn, debug=False)
    reply = send(conn, {"kind": "debug"})
    assert reply["kind"] == "fault" and not reply["fatal"]
    # session still alive after the refusal
    reply = send(conn, {"kind": "event",
                        "event": {"t": 5, "type": "move", "dx": 3, "dy": 4}})
    assert reply["kind"] == "apply"
    conn.close()


def test_debug_snapshot_matches_library(server, pacemaker):
    conn = connect(server)
    open_session(conn, debug=True)
    moves = [{"t": 10, "type": "move", "dx": 40, "dy": -25},
             {"t": 30, "type": "move", "dx": -10, "dy": 5}]
    for m in moves:
        send(conn, {"kind": "event", "event": m})
    reply = send(conn, {"kind": "debug"})
    assert reply["kind"] == "debug"

    est = Estimator.init_known(pacemaker, "menu", cursor=pacemaker.initial_cursor)
    from blindtrack.events import InputEvent, MouseMove
    est.observe(InputEvent(10, MouseMove(40, -25)))
    est.observe(InputEvent(30, MouseMove(-10, 5)))
    expect = est.estimate()
    assert reply["estimate"]["top_state"] == expect.top_state
    assert reply["estimate"]["region"] == [
        [r.x, r.y, r.w, r.h] for r in expect.combined_region.rects]
    assert reply["snapshot"]["trackers"] == json.loads(est.snapshot())["trackers"]
    conn.close()


def test_streaming_equals_library_path(server, pacemaker):
    """The service must produce a byte-identical decision log to run_session
    for the same trace and spec."""
    trace = generate(pacemaker, UserProfile(), pacemaker_goal(), seed=21)
    spec = AttackSpec(**{"variant": SPEC_JSON["variant"],
                         "target_element": SPEC_JSON["target_element"],
                         "malicious_value": SPEC_JSON["malicious_value"],
                         "step_interval_ms": SPEC_JSON["step_interval_ms"]})
    lib_outcome, lib_log, lib_applied = run_session(pacemaker, trace, spec)

    conn = connect(server)
    open_session(conn, spec=SPEC_JSON)
    applied = []
    for e in trace.events:
        reply = send(conn, {"kind": "event", "event": event_to_json(e)})
        assert reply["kind"] == "apply"
        applied.extend(reply["events"])
    reply = send(conn, {"kind": "outcome"})
    if reply["kind"] == "apply":  # a final flush frame may precede the outcome
        applied.extend(reply["events"])
        reply = json.loads(conn.recv_text())
    assert reply["kind"] == "outcome"
    assert reply["decision_log"] == lib_log
    assert reply["outcome"]["launched"] and reply["outcome"]["success"]
    assert reply["outcome"]["visible_ms"] == lib_outcome.visible_ms
    assert reply["outcome"]["injected_event_count"] == lib_outcome.injected_event_count
    assert applied == [event_to_json(e) for e in lib_applied]
    conn.close()


def test_server_oracle_hash_matches_mirror(server, pacemaker):
    """A client replaying exactly the apply frames reaches the same terminal
    state hash the server reports."""
    from blindtrack.service import event_from_json
    from blindtrack.terminal import apply_event, boot_state, state_hash

    trace = generate(pacemaker, UserProfile(), pacemaker_goal(), seed=22)
    conn = connect(server)
    open_session(conn, spec=SPEC_JSON)
    mirror = boot_state(pacemaker)
    for e in trace.events:
        reply = send(conn, {"kind": "event", "event": event_to_json(e)})
        for ev_doc in reply["events"]:
            mirror = apply_event(pacemaker, mirror, event_from_json(ev_doc))
    reply = send(conn, {"kind": "outcome"})
    if reply["kind"] == "apply":
        for ev_doc in reply["events"]:
            mirror = apply_event(pacemaker, mirror, event_from_json(ev_doc))
        reply = json.loads(conn.recv_text())
    assert reply["oracle_hash"] == state_hash(mirror)
    assert mirror.state == "done"
    conn.close()


def test_second_open_faults(server):
    conn = connect(server)
    open_session(conn)
    reply = send(conn, {"kind": "open", "proto": 1, "model": "pacemaker"})
    assert reply["kind"] == "fault" and reply["fatal"]
    conn.close()
