"""Synthetic user traces and touchscreen conversion.

The generator simulates a user operating the terminal: straight-line noisy
pointer segments, click/drag/type gestures per a scripted task, occasional
misfired gestures over empty screen areas, and detour navigation so trace
lengths match the configured click-count distribution.  Generation is a
pure function of (model, profile, goal, seed); the produced trace always
completes its task under oracle replay.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Optional, Union

from .events import (
    ABSOLUTE_TOUCH, RELATIVE_MOUSE, ButtonDown, ButtonUp, InputEvent, Key,
    MouseMove, TouchDown, TouchMove, TouchUp, Trace, TraceError, TraceMeta,
    parse_trace, serialize_trace,
)
from .geometry import Point, Rect
from .terminal import (
    TerminalState, apply_event, boot_state, slider_columns_for,
)
from .ui_model import (
    BUTTON, MULTIPLE_CHOICE, SLIDER, TEXT_FIELD, UiElement, UiModel,
    element_at,
)

__all__ = [
    "ABSOLUTE_TOUCH", "RELATIVE_MOUSE", "GoalStep", "Trace", "TraceError",
    "TraceMeta", "UserProfile", "UnreachableGoalError", "generate",
    "pacemaker_goal", "parse_trace", "serialize_trace", "to_touchscreen",
]


class UnreachableGoalError(Exception):
    pass


@dataclass(frozen=True)
class UserProfile:
    error_rate: float = 0.07
    mean_clicks: float = 29.0
    sd_clicks: float = 22.0
    min_clicks: int = 10
    # lognormal think time; median 2000ms / sigma 0.4 keeps ~95% of
    # inter-click gaps above one second
    inter_click_median_ms: float = 2000.0
    inter_click_sigma: float = 0.4
    pointing_noise_px: float = 6.0
    move_step_ms: tuple[int, int] = (20, 60)


@dataclass(frozen=True)
class GoalStep:
    element_id: str
    value: Optional[Union[float, str]] = None


def pacemaker_goal() -> list[GoalStep]:
    """The bundled terminal's scripted task: look up the matching patient,
    copy their settings to the programming screen, program, finish."""
    return [
        GoalStep("btn_patients"),
        GoalStep("btn_patient_adams"),
        GoalStep("btn_adams_back"),
        GoalStep("btn_patients_back"),
        GoalStep("btn_programming"),
        GoalStep("threshold_field", "2.5"),
        GoalStep("amplitude_slider", 3.5),
        GoalStep("rate_slider", 120.0),
        GoalStep("btn_program"),
        GoalStep("btn_notice_ok"),
        GoalStep("btn_complete"),
    ]


def _bounce_pairs(model: UiModel, state_id: str) -> list[tuple[str, str]]:
    """Detour options from a state: (outbound element, return element) where
    the outbound click can be undone with a single return click."""
    pairs = []
    for el in model.state(state_id).elements:
        if not el.triggers_transition or el.is_confirmation:
            continue
        for back in model.state(el.transition_to).elements:
            if back.triggers_transition and back.transition_to == state_id \
                    and not back.is_confirmation:
                pairs.append((el.id, back.id))
                break
    return pairs


def _poke_targets(model: UiModel, state_id: str) -> list[str]:
    """Harmless padding clicks: buttons without transitions or values."""
    return [el.id for el in model.state(state_id).elements
            if el.kind in (BUTTON, MULTIPLE_CHOICE)
            and not el.triggers_transition and not el.is_confirmation]


def _value_pokes(model: UiModel, state_id: str) -> list[str]:
    """In-state fidgeting that cannot change anything: re-grabbing a slider
    at its current value or focusing a text field without typing."""
    return [el.id for el in model.state(state_id).elements
            if el.kind in (SLIDER, TEXT_FIELD)]


class _UserSim:
    def __init__(self, model: UiModel, profile: UserProfile, rng: random.Random):
        self.model = model
        self.profile = profile
        self.rng = rng
        self.sim = boot_state(model)
        self.t = 0
        self.events: list[InputEvent] = []
        self.clicks = 0

    def _emit(self, payload) -> None:
        e = InputEvent(self.t, payload)
        self.events.append(e)
        self.sim = apply_event(self.model, self.sim, e)

    def _advance(self, ms: float) -> None:
        self.t += max(1, int(ms))

    def think(self) -> None:
        p = self.profile
        self._advance(self.rng.lognormvariate(math.log(p.inter_click_median_ms),
                                              p.inter_click_sigma))

    def _move_step(self) -> None:
        lo, hi = self.profile.move_step_ms
        self._advance(self.rng.randint(lo, hi))

    def move_to(self, x: int, y: int) -> None:
        x = min(max(x, 0), self.model.screen_width - 1)
        y = min(max(y, 0), self.model.screen_height - 1)
        cur = self.sim.cursor
        dist = math.hypot(x - cur.x, y - cur.y)
        n = max(1, int(dist / 110))
        for i in range(1, n + 1):
            frac = i / n
            if i == n:
                wx, wy = x, y
            else:
                noise = self.profile.pointing_noise_px * 2
                wx = int(cur.x + (x - cur.x) * frac + self.rng.gauss(0, noise))
                wy = int(cur.y + (y - cur.y) * frac + self.rng.gauss(0, noise))
                wx = min(max(wx, 0), self.model.screen_width - 1)
                wy = min(max(wy, 0), self.model.screen_height - 1)
            here = self.sim.cursor
            if wx == here.x and wy == here.y:
                continue
            self._move_step()
            self._emit(MouseMove(wx - here.x, wy - here.y))

    def press(self) -> None:
        self._emit(ButtonDown())

    def release(self) -> None:
        self._advance(self.rng.randint(40, 120))
        self._emit(ButtonUp())
        self.clicks += 1

    def click_at(self, x: int, y: int) -> None:
        self.move_to(x, y)
        self.press()
        if self.rng.random() < 0.3:
            # sub-threshold jiggle while the button is held
            self._advance(self.rng.randint(10, 30))
            self._emit(MouseMove(self.rng.randint(-2, 2), self.rng.randint(-2, 2)))
        self.release()

    def _point_in_rect(self, rect: Rect) -> tuple[int, int]:
        # inset keeps the release inside the element even after the held
        # jiggle (clicks fire at the release position)
        inset = 3 if rect.w > 8 and rect.h > 8 else 0
        cx = rect.x + (rect.w - 1) / 2
        cy = rect.y + (rect.h - 1) / 2
        sd = self.profile.pointing_noise_px
        x = int(round(self.rng.gauss(cx, sd)))
        y = int(round(self.rng.gauss(cy, sd)))
        x = min(max(x, rect.x + inset), rect.x2 - 1 - inset)
        y = min(max(y, rect.y + inset), rect.y2 - 1 - inset)
        return x, y

    def click_element(self, el: UiElement) -> None:
        self.click_at(*self._point_in_rect(el.rect))

    def drag_slider(self, el: UiElement, value: float) -> None:
        # grab the thumb at the slider's current value, then drag it over
        current = self.sim.values.get(el.id, el.value_domain.lo)
        cur_lo, cur_hi = slider_columns_for(el, float(current))
        grab_x = (cur_lo + cur_hi) // 2 + int(self.rng.gauss(0, 3))
        grab_x = min(max(grab_x, el.rect.x), el.rect.x + el.rect.w - 1)
        _, y = self._point_in_rect(el.rect)
        self.move_to(grab_x, y)
        self.press()
        lo, hi = slider_columns_for(el, float(value))
        tx = (lo + hi) // 2
        if self.rng.random() < 0.5:
            # overshoot and settle, like a human adjusting a slider
            over = tx + self.rng.randint(-40, 40)
            over = min(max(over, el.rect.x), el.rect.x + el.rect.w - 1)
            if over != self.sim.cursor.x:
                self._move_step()
                self._emit(MouseMove(over - self.sim.cursor.x, 0))
        if tx != self.sim.cursor.x:
            self._move_step()
            self._emit(MouseMove(tx - self.sim.cursor.x, 0))
        self.release()

    def type_text(self, el: UiElement, text: str) -> None:
        self.click_element(el)
        for ch in text:
            self._advance(self.rng.randint(100, 260))
            self._emit(Key(ch))

    def background_click(self) -> None:
        for _ in range(400):
            x = self.rng.randrange(3, self.model.screen_width - 3)
            y = self.rng.randrange(3, self.model.screen_height - 3)
            # jiggle-safe: the whole held-click wobble range stays off-element
            clear = all(
                element_at(self.model, self.sim.state, Point(x + jx, y + jy)) is None
                for jx in (-3, 0, 3) for jy in (-3, 0, 3))
            if clear:
                self.click_at(x, y)
                return
        # a state fully covered by elements has no background to miss into
        return

    def run_step(self, step: GoalStep) -> None:
        state = self.model.state(self.sim.state)
        try:
            el = state.element(step.element_id)
        except KeyError:
            raise UnreachableGoalError(
                f"goal element {step.element_id!r} not present in state "
                f"{self.sim.state!r}") from None
        if el.kind == SLIDER:
            self.drag_slider(el, float(step.value))
        elif el.kind == TEXT_FIELD:
            self.type_text(el, str(step.value))
        else:
            self.click_element(el)


def generate(model: UiModel, profile: UserProfile,
             goal: list[GoalStep], seed: int) -> Trace:
    rng = random.Random(seed)
    user = _UserSim(model, profile, rng)
    target_clicks = int(round(rng.gauss(profile.mean_clicks, profile.sd_clicks)))
    target_clicks = max(target_clicks, profile.min_clicks, len(goal))
    # padding gestures spread uniformly over the task, not front/back loaded
    slots = [0] * len(goal)
    for _ in range(target_clicks - len(goal)):
        slots[rng.randrange(len(goal))] += 1

    carry = 0
    for i, step in enumerate(goal):
        burn = slots[i] + carry
        carry = 0
        while burn >= 1:
            state = model.state(user.sim.state)
            bounces = _bounce_pairs(model, user.sim.state)
            pokes = _poke_targets(model, user.sim.state)
            fidgets = _value_pokes(model, user.sim.state)
            kinds = []
            if pokes:
                kinds.append("poke")
            if fidgets:
                kinds.append("fidget")
            if bounces and burn >= 2:
                kinds += ["bounce", "bounce"]
            if not kinds:
                break
            kind = rng.choice(kinds)
            if kind == "poke":
                user.think()
                user.click_element(state.element(rng.choice(pokes)))
                burn -= 1
            elif kind == "fidget":
                el = state.element(rng.choice(fidgets))
                user.think()
                if el.kind == SLIDER:
                    current = user.sim.values.get(el.id, el.value_domain.lo)
                    user.drag_slider(el, float(current))
                else:
                    user.click_element(el)  # focus only, no typing
                burn -= 1
            else:
                out_id, back_id = rng.choice(bounces)
                user.think()
                user.run_step(GoalStep(out_id))
                user.think()
                user.run_step(GoalStep(back_id))
                burn -= 2
        carry += burn
        if rng.random() < profile.error_rate:
            user.think()
            user.background_click()
        user.think()
        user.run_step(step)

    return Trace(meta=TraceMeta(model_id=model.id, input_mode=RELATIVE_MOUSE,
                                seed=seed),
                 events=tuple(user.events))


def to_touchscreen(model: UiModel, trace: Trace,
                   boot: Optional[TerminalState] = None) -> Trace:
    """Touchscreen variant of a relative-mouse trace: movement information
    is dropped and press/drag/release events gain the absolute coordinates
    an oracle replay observes; key events are preserved."""
    if trace.meta.input_mode != RELATIVE_MOUSE:
        raise TraceError("to_touchscreen expects a relative-mouse trace")
    state = boot if boot is not None else boot_state(model)
    out: list[InputEvent] = []
    for e in trace.events:
        prev = state
        state = apply_event(model, state, e)
        match e.payload:
            case MouseMove():
                if prev.pressed:
                    out.append(InputEvent(e.t_ms, TouchMove(state.cursor.x, state.cursor.y)))
            case ButtonDown():
                if not prev.pressed:
                    out.append(InputEvent(e.t_ms, TouchDown(state.cursor.x, state.cursor.y)))
            case ButtonUp():
                if prev.pressed:
                    out.append(InputEvent(e.t_ms, TouchUp(state.cursor.x, state.cursor.y)))
            case Key():
                out.append(e)
    return Trace(meta=TraceMeta(model_id=trace.meta.model_id,
                                input_mode=ABSOLUTE_TOUCH,
                                seed=trace.meta.seed),
                 events=tuple(out))
