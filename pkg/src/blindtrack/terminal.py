"""Ground-truth terminal simulator.

Executes event streams against a UiModel exactly as the modeled terminal
would: deterministic transitions, click-to-focus text fields, sliders that
track horizontal cursor motion while pressed.  Serves as the oracle for
estimator soundness and attack verification.

Gesture rule shared with the blind estimator: a press/release pair whose
accumulated raw horizontal movement stays under the drag threshold fires a
plain click at the release position; larger horizontal movement is a drag
gesture and fires no click.  Both sides classify from the raw event stream,
so they can never disagree.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Union

from .events import (
    ButtonDown, ButtonUp, InputEvent, Key, MouseMove, TouchDown, TouchMove,
    TouchUp, Trace,
)
from .geometry import Point
from .ui_model import SLIDER, TEXT_FIELD, UiElement, UiModel, element_at

DRAG_THRESHOLD_PX = 10

Value = Union[float, str]


class TerminalError(Exception):
    pass


@dataclass(frozen=True)
class TerminalState:
    state: str
    cursor: Point
    focused_element: Optional[str] = None
    values: dict[str, Value] = field(default_factory=dict)
    committed: dict[str, float] = field(default_factory=dict)
    event_log: tuple[InputEvent, ...] = ()
    # toolkit-internal gesture bookkeeping
    pressed: bool = False
    press_raw_dx: int = 0
    dragging: Optional[str] = None


def boot_state(model: UiModel) -> TerminalState:
    cursor = model.initial_cursor or Point(0, 0)
    return TerminalState(state=model.start_state, cursor=cursor)


def slider_value_at(el: UiElement, x: int) -> float:
    """Slider value for cursor column x: linear map over the slider rect,
    clamped to the rect, rounded half-up to the step grid."""
    dom = el.value_domain
    assert dom is not None
    rect = el.rect
    rel = min(max(x, rect.x), rect.x + rect.w - 1) - rect.x
    frac = rel / (rect.w - 1) if rect.w > 1 else 0.0
    raw = dom.lo + frac * (dom.hi - dom.lo)
    steps = math.floor((raw - dom.lo) / dom.step + 0.5)
    return min(max(dom.lo + steps * dom.step, dom.lo), dom.hi)


def slider_columns_for(el: UiElement, value: float) -> tuple[int, int]:
    """Inclusive column band [x_lo, x_hi] inside the slider rect whose
    cursor positions all map to the given value."""
    dom = el.value_domain
    assert dom is not None
    rect = el.rect
    if dom.hi == dom.lo:
        return rect.x, rect.x + rect.w - 1
    frac = (value - dom.lo) / (dom.hi - dom.lo)
    guess = rect.x + round(frac * (rect.w - 1))
    guess = min(max(guess, rect.x), rect.x + rect.w - 1)
    if slider_value_at(el, guess) != value:
        found = None
        for delta in range(1, rect.w):
            for cand in (guess - delta, guess + delta):
                if rect.x <= cand < rect.x + rect.w and slider_value_at(el, cand) == value:
                    found = cand
                    break
            if found is not None:
                break
        if found is None:
            raise TerminalError(f"value {value} unreachable on slider {el.id}")
        guess = found
    lo = guess
    while lo - 1 >= rect.x and slider_value_at(el, lo - 1) == value:
        lo -= 1
    hi = guess
    while hi + 1 < rect.x + rect.w and slider_value_at(el, hi + 1) == value:
        hi += 1
    return lo, hi


def parse_field_value(el: UiElement, text: Value | None) -> float:
    """Committed numeric value of a text field (or slider passthrough)."""
    dom = el.value_domain
    assert dom is not None
    if text is None:
        return dom.lo
    if isinstance(text, (int, float)):
        return dom.clamp(float(text))
    try:
        parsed = float(text)
    except ValueError:
        return dom.lo
    return dom.clamp(parsed)


def _clamp_cursor(model: UiModel, x: int, y: int) -> Point:
    return Point(min(max(x, 0), model.screen_width - 1),
                 min(max(y, 0), model.screen_height - 1))


def _with_cursor_motion(model: UiModel, t: TerminalState, nx: int, ny: int) -> TerminalState:
    cursor = _clamp_cursor(model, nx, ny)
    values = t.values
    if t.dragging is not None:
        el = model.state(t.state).element(t.dragging)
        values = dict(values)
        values[t.dragging] = slider_value_at(el, cursor.x)
    return replace(t, cursor=cursor, values=values)


def _commit(model: UiModel, t: TerminalState) -> dict[str, float]:
    committed = dict(t.committed)
    for el in model.state(t.state).elements:
        if el.is_target and el.value_domain is not None:
            committed[el.id] = parse_field_value(el, t.values.get(el.id))
    return committed


def _fire_click(model: UiModel, t: TerminalState) -> TerminalState:
    el = element_at(model, t.state, t.cursor)
    if el is None:
        return replace(t, focused_element=None)
    if el.kind == TEXT_FIELD:
        return replace(t, focused_element=el.id)
    if el.kind == SLIDER:
        values = dict(t.values)
        values[el.id] = slider_value_at(el, t.cursor.x)
        return replace(t, focused_element=None, values=values)
    # buttons and multiple-choice options
    committed = _commit(model, t) if el.is_confirmation else t.committed
    state = el.transition_to if el.transition_to is not None else t.state
    return replace(t, state=state, focused_element=None, committed=committed)


def _on_key(model: UiModel, t: TerminalState, char: str) -> TerminalState:
    # keys with no focused field are dropped by the terminal
    if t.focused_element is None:
        return t
    el = model.state(t.state).element(t.focused_element)
    text = t.values.get(el.id, "")
    if not isinstance(text, str):
        text = str(text)
    if char in el.clear_keys:
        text = ""
    elif len(char) == 1 and char.isprintable():
        if el.value_domain is not None and char not in "0123456789.":
            return t  # numeric fields accept digits and point only
        text = text + char
    else:
        return t
    values = dict(t.values)
    values[el.id] = text
    return replace(t, values=values)


def apply_event(model: UiModel, t: TerminalState, e: InputEvent,
                drag_threshold: int = DRAG_THRESHOLD_PX) -> TerminalState:
    """Deterministic single-event transition; identical interaction always
    causes the identical result."""
    p = e.payload
    match p:
        case MouseMove(dx, dy):
            nxt = _with_cursor_motion(model, t, t.cursor.x + dx, t.cursor.y + dy)
            if t.pressed:
                nxt = replace(nxt, press_raw_dx=t.press_raw_dx + dx)
        case TouchMove(x, y):
            raw = x - t.cursor.x
            nxt = _with_cursor_motion(model, t, x, y)
            if t.pressed:
                nxt = replace(nxt, press_raw_dx=t.press_raw_dx + raw)
        case ButtonDown() | TouchDown():
            if isinstance(p, TouchDown):
                t = _with_cursor_motion(model, t, p.x, p.y)
            if t.pressed:
                nxt = t  # duplicate press: ignored
            else:
                nxt = replace(t, pressed=True, press_raw_dx=0)
                el = element_at(model, t.state, t.cursor)
                if el is not None and el.kind == SLIDER:
                    values = dict(t.values)
                    values[el.id] = slider_value_at(el, t.cursor.x)
                    nxt = replace(nxt, dragging=el.id, values=values)
        case ButtonUp() | TouchUp():
            if isinstance(p, TouchUp):
                t = _with_cursor_motion(model, t, p.x, p.y)
            if not t.pressed:
                nxt = t  # stray release: ignored
            else:
                nxt = replace(t, pressed=False, dragging=None, press_raw_dx=0)
                if abs(t.press_raw_dx) < drag_threshold:
                    nxt = _fire_click(model, nxt)
        case Key(char):
            nxt = _on_key(model, t, char)
        case _:
            raise TerminalError(f"malformed event {e!r}")
    return replace(nxt, event_log=nxt.event_log + (e,))


def run_trace(model: UiModel, trace: Trace,
              boot: Optional[TerminalState] = None,
              drag_threshold: int = DRAG_THRESHOLD_PX) -> list[TerminalState]:
    """Fold of apply_event; element [i] is the state after i events."""
    state = boot if boot is not None else boot_state(model)
    out = [state]
    for e in trace.events:
        state = apply_event(model, state, e, drag_threshold)
        out.append(state)
    return out


def canonical_state_string(t: TerminalState) -> str:
    def fmt(v: Value) -> str:
        if isinstance(v, str):
            return "s:" + v
        f = float(v)
        return "n:" + (str(int(f)) if f == int(f) else repr(f))

    values = ",".join(f"{k}={fmt(v)}" for k, v in sorted(t.values.items()))
    committed = ",".join(f"{k}={fmt(v)}" for k, v in sorted(t.committed.items()))
    return (f"state={t.state};cursor={t.cursor.x},{t.cursor.y};"
            f"focus={t.focused_element or '-'};pressed={int(t.pressed)};"
            f"dragging={t.dragging or '-'};values=[{values}];"
            f"committed=[{committed}]")


def state_hash(t: TerminalState) -> str:
    return hashlib.sha256(canonical_state_string(t).encode()).hexdigest()
