"""The interposer: per-event pass/block/delay/inject decisions.

Sessions anchor the estimator at the boot state and cursor (reboot
anchoring), track the user blindly, and launch one of two techniques:

* element-driven: strike shortly after the user edits the target element,
  leaving the malicious value on screen until the user confirms;
* confirmation-driven: swallow the user's confirmation click, set the
  malicious value, confirm with a synthesized click, then restore the
  user's own value so nothing looks changed.

Injected moves always sum to zero so the cursor lands back exactly where
the user left it; plans refuse to fire when residual location uncertainty
cannot guarantee the landing or the exact value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .estimator import Estimator, EstimatorConfig
from .events import (
    RELATIVE_MOUSE, ButtonDown, ButtonUp, InputEvent, Key, MouseMove, Trace,
    event_to_line,
)
from .geometry import Point, Rect, Region, area, fits_within, union
from .terminal import (
    TerminalState, apply_event, boot_state, parse_field_value,
    slider_columns_for, slider_value_at,
)
from .ui_model import (
    BUTTON, MULTIPLE_CHOICE, SLIDER, TEXT_FIELD, UiElement, UiModel,
)

ELEMENT_DRIVEN = "element_driven"
CONFIRMATION_DRIVEN = "confirmation_driven"

SPEED_PRESETS_MS = (5, 10, 62, 125, 250)


class AttackError(Exception):
    pass


class RegionTooLargeError(AttackError):
    pass


@dataclass(frozen=True)
class AttackSpec:
    variant: str
    target_element: str
    malicious_value: Union[float, str]
    step_interval_ms: int = 10
    element_wait_ms: int = 1000

    def __post_init__(self) -> None:
        if self.variant not in (ELEMENT_DRIVEN, CONFIRMATION_DRIVEN):
            raise ValueError(f"unknown attack variant {self.variant!r}")
        if self.step_interval_ms <= 0:
            raise ValueError("step_interval_ms must be positive")
        if self.element_wait_ms < 0:
            raise ValueError("element_wait_ms must be >= 0")


@dataclass(frozen=True)
class AttackOutcome:
    launched: bool
    success: bool
    visible_ms: int
    injected_event_count: int


@dataclass(frozen=True)
class Pass:
    event: InputEvent


@dataclass(frozen=True)
class Block:
    event: InputEvent


@dataclass(frozen=True)
class Delay:
    event: InputEvent
    ms: int


@dataclass(frozen=True)
class Inject:
    events: tuple[InputEvent, ...]


Decision = Union[Pass, Block, Delay, Inject]


def decision_to_lines(d: Decision) -> list[str]:
    if isinstance(d, Pass):
        return ["pass " + event_to_line(d.event)]
    if isinstance(d, Block):
        return ["block " + event_to_line(d.event)]
    if isinstance(d, Delay):
        return [f"delay {d.ms} " + event_to_line(d.event)]
    if isinstance(d, Inject):
        return ["inject " + event_to_line(e) for e in d.events]
    raise AttackError(f"unknown decision {d!r}")


def applied_events(d: Decision) -> list[InputEvent]:
    """The events the terminal actually executes for a decision."""
    if isinstance(d, Pass):
        return [d.event]
    if isinstance(d, Block):
        return []
    if isinstance(d, Delay):
        return [d.event.shifted(d.ms)]
    if isinstance(d, Inject):
        return list(d.events)
    raise AttackError(f"unknown decision {d!r}")


def resolve_target(model: UiModel, spec: AttackSpec) -> tuple[str, UiElement]:
    """Locate the spec's target element within the model's target states and
    validate the malicious value against its domain."""
    for state_id in sorted(model.target_states):
        for el in model.state(state_id).elements:
            if el.id == spec.target_element:
                if not el.is_target:
                    raise AttackError(f"{el.id!r} is not an attack element")
                if el.value_domain is not None:
                    value = spec.malicious_value
                    try:
                        numeric = float(value)
                    except (TypeError, ValueError):
                        raise AttackError(
                            f"malicious value {value!r} is not numeric") from None
                    if not el.value_domain.contains(numeric):
                        raise AttackError(
                            f"malicious value {numeric} outside domain of {el.id!r}")
                    if el.kind == SLIDER and not el.value_domain.on_grid(numeric):
                        raise AttackError(
                            f"malicious value {numeric} not on the step grid "
                            f"of {el.id!r}")
                return state_id, el
    raise AttackError(
        f"element {spec.target_element!r} not found in any target state")


def corner_sweep(screen: Rect, start_ms: int = 0, interval_ms: int = 0,
                 max_step: int = 127) -> list[InputEvent]:
    """Movement totalling (-width, -height): cursor clamping pins the
    pointer to the top-left corner regardless of where it started."""
    events = []
    remaining_x = -screen.w
    remaining_y = -screen.h
    t = start_ms
    while remaining_x or remaining_y:
        dx = max(remaining_x, -max_step)
        dy = max(remaining_y, -max_step)
        events.append(InputEvent(t, MouseMove(dx, dy)))
        remaining_x -= dx
        remaining_y -= dy
        t += interval_ms
    return events


def _region_within(r: Region, rect: Rect) -> bool:
    return not r.is_empty and all(
        rect.x <= m.x and m.x2 <= rect.x2 and rect.y <= m.y and m.y2 <= rect.y2
        for m in r.rects)


class _PlanBuilder:
    """Accumulates an injected event sequence while proving that no screen
    clamping can occur for any cursor position consistent with the
    starting uncertainty region."""

    def __init__(self, model: UiModel, from_region: Region,
                 start_ms: int, interval_ms: int):
        bb = from_region.bounding_box()
        if bb is None:
            raise RegionTooLargeError("empty uncertainty region")
        self.screen = model.screen
        self.bb = bb
        self.center = bb.center()
        self.cum_dx = 0
        self.cum_dy = 0
        self.t = start_ms
        self.interval = interval_ms
        self.events: list[InputEvent] = []

    def _emit(self, payload) -> None:
        self.events.append(InputEvent(self.t, payload))
        self.t += self.interval

    def move_by(self, dx: int, dy: int) -> None:
        ndx, ndy = self.cum_dx + dx, self.cum_dy + dy
        if not (0 <= self.bb.x + ndx and self.bb.x2 + ndx <= self.screen.w
                and 0 <= self.bb.y + ndy and self.bb.y2 + ndy <= self.screen.h):
            raise RegionTooLargeError(
                "injected movement could clamp at the screen edge")
        self.cum_dx, self.cum_dy = ndx, ndy
        self._emit(MouseMove(dx, dy))

    def move_center_to(self, target: Point) -> None:
        self.move_by(target.x - (self.center.x + self.cum_dx),
                     target.y - (self.center.y + self.cum_dy))

    def click(self) -> None:
        self._emit(ButtonDown())
        self._emit(ButtonUp())

    def key(self, ch: str) -> None:
        self._emit(Key(ch))

    def landing_columns(self) -> tuple[int, int]:
        """Worst-case cursor column range at the current plan position."""
        return self.bb.x + self.cum_dx, self.bb.x2 - 1 + self.cum_dx

    def require_inside(self, rect: Rect) -> None:
        if not (rect.x <= self.bb.x + self.cum_dx
                and self.bb.x2 + self.cum_dx <= rect.x2
                and rect.y <= self.bb.y + self.cum_dy
                and self.bb.y2 + self.cum_dy <= rect.y2):
            raise RegionTooLargeError(
                f"region too large to guarantee landing inside {rect}")

    def move_back(self) -> None:
        self.move_by(-self.cum_dx, -self.cum_dy)


def _set_value_steps(plan: _PlanBuilder, el: UiElement, value: Union[float, str]) -> None:
    """Steps that provably leave the element holding the value, for every
    cursor position consistent with the plan's uncertainty."""
    if el.kind in (BUTTON, MULTIPLE_CHOICE):
        plan.move_center_to(el.rect.center())
        plan.require_inside(el.rect)
        plan.click()
        return
    if el.kind == TEXT_FIELD:
        plan.move_center_to(el.rect.center())
        plan.require_inside(el.rect)
        plan.click()
        plan.key(el.clear_keys[0])
        for ch in str(value):
            plan.key(ch)
        return
    if el.kind == SLIDER:
        numeric = float(value)
        plan.move_center_to(el.rect.center())
        plan.require_inside(el.rect)
        plan._emit(ButtonDown())
        lo, hi = slider_columns_for(el, numeric)
        target_x = (lo + hi) // 2
        plan.move_by(target_x - (plan.center.x + plan.cum_dx), 0)
        wl, wr = plan.landing_columns()
        for x in (wl, wr):
            if slider_value_at(el, x) != numeric:
                raise RegionTooLargeError(
                    f"region too large to guarantee slider value {numeric}")
        plan._emit(ButtonUp())
        return
    raise AttackError(f"cannot set a value on element kind {el.kind!r}")


def value_injection_plan(model: UiModel, state_id: str, element_id: str,
                         from_region: Region, value: Union[float, str],
                         start_ms: int = 0, interval_ms: int = 10) -> list[InputEvent]:
    """Relative-event sequence that lands inside the element for every point
    of from_region, sets the value, and returns the cursor by the exact
    inverse displacement (net displacement zero)."""
    el = model.state(state_id).element(element_id)
    if not fits_within(from_region, el.rect):
        raise RegionTooLargeError(
            f"region too large to guarantee landing on {element_id!r}")
    plan = _PlanBuilder(model, from_region, start_ms, interval_ms)
    _set_value_steps(plan, el, value)
    plan.move_back()
    return plan.events


class InterposerSession:
    """Synchronous per-event interposer: decisions for event N are final
    before event N+1 is consumed."""

    def __init__(self, model: UiModel, spec: Optional[AttackSpec] = None,
                 cfg: Optional[EstimatorConfig] = None):
        self.model = model
        self.spec = spec
        cfg = cfg or EstimatorConfig()
        if cfg.input_mode != RELATIVE_MOUSE:
            raise AttackError("the interposer drives relative-mouse sessions")
        # reboot anchoring: sessions start at the boot state and cursor
        self.est = Estimator.init_known(model, model.start_state,
                                        cursor=model.initial_cursor, cfg=cfg)
        self.decisions: list[Decision] = []
        self.last_applied_t = 0
        self.struck = False
        self._blocking = False
        self._strike_at: Optional[int] = None
        self._strike_plan: Optional[list[InputEvent]] = None
        if spec is not None:
            self.target_state, self.target_el = resolve_target(model, spec)
            confirms = [el for el in model.state(self.target_state).elements
                        if el.is_confirmation]
            self.confirm_el = confirms[0] if confirms else None
            if spec.variant == CONFIRMATION_DRIVEN and self.confirm_el is None:
                raise AttackError("confirmation-driven attack needs a "
                                  "confirmation element in the target state")
        else:
            self.target_state = None
            self.target_el = None
            self.confirm_el = None
        # blind beliefs about the user's interaction with the target element
        self._believed_value: Optional[Union[float, str]] = None
        self._target_edited = False
        self._believed_text = ""
        self._focus_on_target = False

    # -- helpers --------------------------------------------------------

    def _target_region(self) -> Region:
        return union(tr.region for tr in self.est.trackers
                     if tr.state == self.target_state)

    def _ready(self) -> bool:
        return self.spec is not None and self.est.attack_ready(self.target_state)

    def _emit(self, d: Decision) -> None:
        self.decisions.append(d)
        for e in applied_events(d):
            self.last_applied_t = max(self.last_applied_t, e.t_ms)
            self.est.observe(e)

    def _pass_through(self, e: InputEvent) -> None:
        if e.t_ms < self.last_applied_t:
            self._emit(Delay(e, self.last_applied_t - e.t_ms))
        else:
            self._emit(Pass(e))

    def _user_value(self) -> Union[float, str]:
        """Best belief of the value the user left on the target element;
        untouched elements display their domain floor / empty text."""
        if self.target_el.kind == TEXT_FIELD:
            return self._believed_text
        if self._believed_value is not None:
            return self._believed_value
        if self._target_edited:
            # edited under too much uncertainty: an exact restore cannot
            # be guaranteed, so the strike must not fire
            raise RegionTooLargeError("user slider value not exactly known")
        return self.target_el.value_domain.lo

    # -- strike construction ---------------------------------------------

    def _element_strike(self, start_ms: int) -> list[InputEvent]:
        region = self._target_region()
        return value_injection_plan(
            self.model, self.target_state, self.target_el.id, region,
            self.spec.malicious_value, start_ms=start_ms,
            interval_ms=self.spec.step_interval_ms)

    def _confirmation_strike(self, start_ms: int) -> list[InputEvent]:
        """Set malicious value, confirm with a synthesized click, then put
        the user's own value back; cursor returns to where it was."""
        region = self._target_region()
        plan = _PlanBuilder(self.model, region, start_ms,
                            self.spec.step_interval_ms)
        _set_value_steps(plan, self.target_el, self.spec.malicious_value)
        # synthesized confirmation click from the user's own position
        plan.move_back()
        plan.require_inside(self.confirm_el.rect)
        plan.click()
        # restore: navigate back to the target state if confirming left it
        nav_back = None
        if self.confirm_el.transition_to is not None \
                and self.confirm_el.transition_to != self.target_state:
            interim = self.model.state(self.confirm_el.transition_to)
            for el in interim.elements:
                if el.transition_to == self.target_state and not el.is_confirmation:
                    nav_back = el
                    break
            if nav_back is None:
                raise AttackError(
                    "no single-click path back to the target state for the "
                    "value restore")
            plan.move_center_to(nav_back.rect.center())
            plan.require_inside(nav_back.rect)
            plan.click()
        _set_value_steps(plan, self.target_el, self._user_value())
        plan.move_back()
        return plan.events

    def _fire(self, build, start_ms: int, repeatable: bool = False) -> bool:
        if (self.struck and not repeatable) or not self._ready():
            return False
        try:
            events = build(max(start_ms, self.last_applied_t))
        except (RegionTooLargeError, AttackError):
            return False
        self._emit(Inject(tuple(events)))
        self.struck = True
        return True

    # -- event intake -----------------------------------------------------

    def _note_gesture(self, kind: str, end_t: int) -> None:
        """Track target-element edits for the element-driven trigger and
        remember the user's value for the restore step.  Element-driven
        strikes re-arm on every fresh edit: the adversary overwrites the
        user's final value."""
        if self.spec is None:
            return
        if self.spec.variant == CONFIRMATION_DRIVEN and self.struck:
            return
        region = self._target_region()
        edited = False
        if kind in ("drag", "click") and self.target_el.kind == SLIDER \
                and _region_within(region, self.target_el.rect):
            # drags and clicks on a slider both set its value
            edited = True
            self._target_edited = True
            if area(region) == 1:
                x = region.rects[0].x
                self._believed_value = slider_value_at(self.target_el, x)
            else:
                self._believed_value = None
        elif kind == "click" and self.target_el.kind == TEXT_FIELD:
            self._focus_on_target = _region_within(region, self.target_el.rect)
        elif kind == "key" and self._focus_on_target \
                and self.target_el.kind == TEXT_FIELD:
            edited = True
        if edited and self.spec.variant == ELEMENT_DRIVEN and self._ready():
            self._strike_at = end_t + self.spec.element_wait_ms

    def _track_key(self, ch: str) -> None:
        if self.target_el is None or self.target_el.kind != TEXT_FIELD \
                or not self._focus_on_target:
            return
        if ch in self.target_el.clear_keys:
            self._believed_text = ""
        elif len(ch) == 1 and ch.isprintable():
            if self.target_el.value_domain is not None and ch not in "0123456789.":
                return
            self._believed_text += ch
        self._believed_value = self._believed_text

    def feed(self, e: InputEvent) -> list[Decision]:
        mark = len(self.decisions)
        p = e.payload
        # a scheduled element-driven strike fires in the quiet gap before the
        # next user event; an incoming press pre-empts the wait, because the
        # press could be the user's confirmation click
        if self._strike_at is not None and not self.est.in_gesture \
                and (e.t_ms >= self._strike_at or isinstance(p, ButtonDown)):
            if self._fire(self._element_strike,
                          min(self._strike_at, e.t_ms), repeatable=True):
                self._strike_at = None
        if self._blocking:
            # swallowing the user's confirmation click
            self._emit(Block(e))
            if isinstance(p, ButtonUp):
                self._blocking = False
                self._fire(self._confirmation_strike, e.t_ms)
            return self.decisions[mark:]
        if isinstance(p, ButtonDown) and self.spec is not None \
                and self.spec.variant == CONFIRMATION_DRIVEN \
                and not self.struck and not self.est.in_gesture \
                and self._ready() and self.confirm_el is not None \
                and _region_within(self._target_region(), self.confirm_el.rect):
            # the click about to happen is the user's confirmation
            self._emit(Block(e))
            self._blocking = True
            return self.decisions[mark:]
        if e.t_ms < self.last_applied_t:
            shifted = e.shifted(self.last_applied_t - e.t_ms)
            self.decisions.append(Delay(e, self.last_applied_t - e.t_ms))
            gesture = self.est.observe(shifted)
            self.last_applied_t = max(self.last_applied_t, shifted.t_ms)
            applied_t = shifted.t_ms
        else:
            self.decisions.append(Pass(e))
            gesture = self.est.observe(e)
            self.last_applied_t = max(self.last_applied_t, e.t_ms)
            applied_t = e.t_ms
        if gesture == "key" and isinstance(p, Key):
            self._note_gesture("key", applied_t)
            self._track_key(p.char)
        elif gesture in ("click", "drag"):
            self._note_gesture(gesture, applied_t)
        return self.decisions[mark:]

    def finish(self) -> list[Decision]:
        """Flush a pending element-driven strike after the last user event."""
        mark = len(self.decisions)
        if self._strike_at is not None and not self.est.in_gesture:
            if self._fire(self._element_strike,
                          max(self._strike_at, self.last_applied_t),
                          repeatable=True):
                self._strike_at = None
        return self.decisions[mark:]

    def decision_log(self) -> str:
        lines: list[str] = []
        for d in self.decisions:
            lines.extend(decision_to_lines(d))
        return "\n".join(lines) + ("\n" if lines else "")


class OutcomeTracker:
    """Replays the decided event stream through the terminal oracle and
    accumulates the attack outcome measures on the value timeline."""

    def __init__(self, model: UiModel, spec: Optional[AttackSpec],
                 target_el: Optional[UiElement],
                 boot: Optional[TerminalState] = None):
        self.model = model
        self.oracle = boot if boot is not None else boot_state(model)
        self.target_el = target_el
        self.injected_count = 0
        self.visible_ms = 0
        self.success = False
        self._prev_t: Optional[int] = None
        self._mismatch = False
        self._malicious = self._norm(spec.malicious_value) if spec is not None else None
        self._user_value = self._norm(None)

    def _norm(self, value) -> Optional[float]:
        if self.target_el is None or self.target_el.value_domain is None:
            return None
        return parse_field_value(self.target_el, value)

    def step(self, e: InputEvent, injected: bool) -> None:
        if self._prev_t is None:
            self._prev_t = e.t_ms
        if self._mismatch and e.t_ms > self._prev_t:
            self.visible_ms += e.t_ms - self._prev_t
        self._prev_t = max(self._prev_t, e.t_ms)
        target = self.target_el
        before = self._norm(self.oracle.values.get(target.id)) if target else None
        self.oracle = apply_event(self.model, self.oracle, e)
        if injected:
            self.injected_count += 1
        if target is None:
            return
        shown = self._norm(self.oracle.values.get(target.id))
        if not injected and shown != before:
            self._user_value = shown  # the user sees their own edits
        self._mismatch = shown != self._user_value
        if self._malicious is not None \
                and self.oracle.committed.get(target.id) == self._malicious:
            self.success = True

    def apply_decisions(self, decisions: list[Decision]) -> None:
        for d in decisions:
            injected = isinstance(d, Inject)
            for ev in applied_events(d):
                self.step(ev, injected)

    def outcome(self, launched: bool) -> AttackOutcome:
        return AttackOutcome(
            launched=launched,
            success=bool(launched and self.success),
            visible_ms=self.visible_ms,
            injected_event_count=self.injected_count,
        )


def run_session(model: UiModel, trace: Trace, spec: Optional[AttackSpec],
                boot: Optional[TerminalState] = None,
                cfg: Optional[EstimatorConfig] = None,
                ) -> tuple[AttackOutcome, str, list[InputEvent]]:
    """Drive a trace through the interposer and the decided stream through
    the terminal oracle; returns the outcome, the decision log, and the
    applied event stream."""
    session = InterposerSession(model, spec, cfg)
    tracker = OutcomeTracker(model, spec, session.target_el, boot)
    for e in trace.events:
        tracker.apply_decisions(session.feed(e))
    tracker.apply_decisions(session.finish())
    launched = any(isinstance(d, Inject) for d in session.decisions)
    applied = [ev for d in session.decisions for ev in applied_events(d)]
    return tracker.outcome(launched), session.decision_log(), applied


def run_attack(model: UiModel, trace: Trace, spec: AttackSpec,
               boot: Optional[TerminalState] = None) -> AttackOutcome:
    outcome, _, _ = run_session(model, trace, spec, boot)
    return outcome
