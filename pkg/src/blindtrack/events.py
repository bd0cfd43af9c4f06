"""Input events and the line-oriented trace file format.

A trace is the only thing the blind device sees: timestamped relative
mouse events, key events, or absolute touch events.  The file format is
one event per line (``t_ms kind args``) after a small key/value header,
chosen for diffability and streaming parsing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union


@dataclass(frozen=True, slots=True)
class MouseMove:
    dx: int
    dy: int


@dataclass(frozen=True, slots=True)
class ButtonDown:
    pass


@dataclass(frozen=True, slots=True)
class ButtonUp:
    pass


@dataclass(frozen=True, slots=True)
class Key:
    char: str


@dataclass(frozen=True, slots=True)
class TouchDown:
    x: int
    y: int


@dataclass(frozen=True, slots=True)
class TouchUp:
    x: int
    y: int


@dataclass(frozen=True, slots=True)
class TouchMove:
    x: int
    y: int


Payload = Union[MouseMove, ButtonDown, ButtonUp, Key, TouchDown, TouchUp, TouchMove]

RELATIVE_MOUSE = "relative_mouse"
ABSOLUTE_TOUCH = "absolute_touch"

_RELATIVE_ONLY = (MouseMove, ButtonDown, ButtonUp)
_ABSOLUTE_ONLY = (TouchDown, TouchUp, TouchMove)


@dataclass(frozen=True, slots=True)
class InputEvent:
    t_ms: int
    payload: Payload

    def shifted(self, ms: int) -> "InputEvent":
        return InputEvent(self.t_ms + ms, self.payload)


@dataclass(frozen=True)
class TraceMeta:
    model_id: str
    input_mode: str = RELATIVE_MOUSE
    seed: Optional[int] = None


@dataclass(frozen=True)
class Trace:
    meta: TraceMeta
    events: tuple[InputEvent, ...]


class TraceError(Exception):
    pass


TRACE_VERSION = 1


def _encode_char(ch: str) -> str:
    code = ord(ch)
    if 0x21 <= code <= 0x7e and ch != "\\":
        return ch
    if code <= 0xFF:
        return f"\\x{code:02x}"
    return f"\\u{code:04x}"


def _decode_char(tok: str) -> str:
    if len(tok) == 1:
        return tok
    if tok.startswith("\\x") and len(tok) == 4:
        return chr(int(tok[2:], 16))
    if tok.startswith("\\u") and len(tok) == 6:
        return chr(int(tok[2:], 16))
    raise ValueError(f"bad key token {tok!r}")


def event_to_line(e: InputEvent) -> str:
    p = e.payload
    match p:
        case MouseMove(dx, dy):
            return f"{e.t_ms} move {dx} {dy}"
        case ButtonDown():
            return f"{e.t_ms} down"
        case ButtonUp():
            return f"{e.t_ms} up"
        case Key(char):
            return f"{e.t_ms} key {_encode_char(char)}"
        case TouchDown(x, y):
            return f"{e.t_ms} touch_down {x} {y}"
        case TouchUp(x, y):
            return f"{e.t_ms} touch_up {x} {y}"
        case TouchMove(x, y):
            return f"{e.t_ms} touch_move {x} {y}"
    raise TraceError(f"unknown payload {p!r}")


def _int_token(tok: str, what: str) -> int:
    # strict integers: fractional deltas and coordinates are rejected
    try:
        return int(tok)
    except ValueError:
        raise ValueError(f"{what} must be an integer, got {tok!r}") from None


def line_to_event(line: str) -> InputEvent:
    parts = line.split()
    if len(parts) < 2:
        raise ValueError(f"malformed event line {line!r}")
    t_ms = _int_token(parts[0], "timestamp")
    kind, args = parts[1], parts[2:]
    if kind == "move" and len(args) == 2:
        return InputEvent(t_ms, MouseMove(_int_token(args[0], "dx"),
                                          _int_token(args[1], "dy")))
    if kind == "down" and not args:
        return InputEvent(t_ms, ButtonDown())
    if kind == "up" and not args:
        return InputEvent(t_ms, ButtonUp())
    if kind == "key" and len(args) == 1:
        return InputEvent(t_ms, Key(_decode_char(args[0])))
    if kind in ("touch_down", "touch_up", "touch_move") and len(args) == 2:
        x = _int_token(args[0], "x")
        y = _int_token(args[1], "y")
        cls = {"touch_down": TouchDown, "touch_up": TouchUp, "touch_move": TouchMove}[kind]
        return InputEvent(t_ms, cls(x, y))
    raise ValueError(f"malformed event line {line!r}")


def check_mode(payload: Payload, input_mode: str) -> bool:
    if isinstance(payload, _RELATIVE_ONLY):
        return input_mode == RELATIVE_MOUSE
    if isinstance(payload, _ABSOLUTE_ONLY):
        return input_mode == ABSOLUTE_TOUCH
    return True  # keys are valid in both modes


def serialize_trace(trace: Trace) -> bytes:
    lines = [
        f"trace_version: {TRACE_VERSION}",
        f"model: {trace.meta.model_id}",
        f"input_mode: {trace.meta.input_mode}",
    ]
    if trace.meta.seed is not None:
        lines.append(f"seed: {trace.meta.seed}")
    lines.append("---")
    lines.extend(event_to_line(e) for e in trace.events)
    return ("\n".join(lines) + "\n").encode()


def parse_trace(data: bytes | str) -> Trace:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    header: dict[str, str] = {}
    lines = data.splitlines()
    i = 0
    for i, line in enumerate(lines):
        if line.strip() == "---":
            break
        if not line.strip():
            continue
        if ":" not in line:
            raise TraceError(f"malformed header line {line!r}")
        key, _, value = line.partition(":")
        header[key.strip()] = value.strip()
    else:
        raise TraceError("missing '---' header terminator")
    if header.get("trace_version") != str(TRACE_VERSION):
        raise TraceError(f"unsupported trace_version {header.get('trace_version')!r}")
    mode = header.get("input_mode", RELATIVE_MOUSE)
    if mode not in (RELATIVE_MOUSE, ABSOLUTE_TOUCH):
        raise TraceError(f"unknown input_mode {mode!r}")
    meta = TraceMeta(
        model_id=header.get("model", "model"),
        input_mode=mode,
        seed=int(header["seed"]) if "seed" in header else None,
    )
    events: list[InputEvent] = []
    last_t = None
    for index, line in enumerate(lines[i + 1:]):
        if not line.strip():
            continue
        try:
            event = line_to_event(line)
        except ValueError as exc:
            raise TraceError(f"event {index}: {exc}") from None
        if last_t is not None and event.t_ms < last_t:
            raise TraceError(f"event {index}: timestamp regression "
                             f"{event.t_ms} < {last_t}")
        if not check_mode(event.payload, mode):
            raise TraceError(f"event {index}: payload not allowed in "
                             f"{mode} trace")
        last_t = event.t_ms
        events.append(event)
    return Trace(meta=meta, events=tuple(events))
